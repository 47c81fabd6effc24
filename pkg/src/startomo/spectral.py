"""Fourier machinery: field transforms and per-frequency linear systems.

For each transverse frequency q the data and image coefficients satisfy
|Phi> = A(q) |mu> with A = D + sum of separable terms. Slanted rays each
contribute one symmetric separable term s_k alpha_k |a_k><a_k|; a vertical
ray (u_y = 0) is the beta -> 0 limit, which collapses to a modified diagonal
plus a rank-two coupling between the n = 0 mode and the 1/kappa_n profile.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward import DataField, DataGrid
from .geometry import StarGeometry
from .phantoms import ImageGrid

__all__ = [
    "ResonantFrequencyError",
    "CoefficientTable",
    "SpectralSystem",
    "ReducedSystem",
    "field_to_coefficients",
    "coefficients_to_image",
    "boundary_average",
    "assemble",
    "projection_reduce",
]

RESONANCE_TOL = 1e-12


class ResonantFrequencyError(ValueError):
    """q puts a lattice harmonic on a ray's characteristic frequency."""

    def __init__(self, ray, harmonic):
        self.ray = ray
        self.harmonic = harmonic
        super().__init__(
            f"resonant frequency: beta_{ray} + kappa_{harmonic} vanishes; "
            "perturb q by half a grid step")


@dataclass
class CoefficientTable:
    """Complex coefficients X_n(q_m) on the (harmonic, frequency) lattice.

    Rows follow ``harmonics`` (signed n ascending), columns follow ``q``
    (signed, ascending); ``window`` is the y-window width fixing the q step.
    """

    values: np.ndarray
    harmonics: np.ndarray
    q: np.ndarray
    strip_width: float
    window: float

    @property
    def n_max(self) -> int:
        return int(self.harmonics[-1])

    @property
    def kappa(self) -> np.ndarray:
        return 2 * np.pi * self.harmonics / self.strip_width

    def column(self, m_index: int) -> np.ndarray:
        return self.values[:, m_index]


def _z_transform(values, grid: DataGrid, boundary: bool):
    """Trapezoid-rule z-transform via an (n_z + 1)-point DFT.

    With the boundary rows present the trapezoid rule is exact for all
    lattice harmonics; slot 0 carries the boundary average.
    """
    n_z = grid.n_z
    slots = np.empty((values.shape[0], n_z + 1), values.dtype)
    if boundary:
        slots[:, 0] = 0.5 * (values[:, 0] + values[:, -1])
        slots[:, 1:] = values[:, 1:-1]
    else:
        slots[:, 0] = 0.0
        slots[:, 1:] = values
    return grid.h * np.fft.fft(slots, axis=1)


def field_to_coefficients(data) -> CoefficientTable:
    """Transform a DataField (or ImageGrid) to Fourier coefficients.

    z uses the trapezoid rule (boundary rows included when present), y the
    rectangle rule over the window; both are plain DFTs on the lattice.
    """
    if isinstance(data, DataField):
        grid = data.grid
        zpart = _z_transform(data.values, grid, boundary=True)
    elif isinstance(data, ImageGrid):
        grid = DataGrid(data.strip_width, data.N, 1, data.N)
        zpart = _z_transform(data.values, grid, boundary=False)
    else:
        raise TypeError("expected a DataField or ImageGrid")
    n_y = grid.n_y
    c = (n_y - 1) // 2
    m = np.arange(n_y)
    phase = np.exp(2j * np.pi * m * c / n_y)
    full = grid.h * phase[None, :] * np.fft.fft(zpart, axis=0).T
    n_max = grid.n_max
    n_z1 = grid.n_z + 1
    rows = np.concatenate([np.arange(n_z1 - n_max, n_z1), np.arange(0, n_max + 1)])
    cols = np.concatenate([np.arange(n_y - c, n_y), np.arange(0, c + 1)])
    table = full[np.ix_(rows, cols)]
    harmonics = np.arange(-n_max, n_max + 1)
    return CoefficientTable(table, harmonics, grid.q_coords(),
                            grid.strip_width, grid.window)


def coefficients_to_image(table: CoefficientTable, N: int,
                          oversample: int | None = None) -> ImageGrid:
    """Synthesize an N x N interior image from a coefficient table.

    Harmonics fold modulo the image lattice, so a table holding more modes
    than the image band still contributes correctly to the sample values.
    The imaginary residue left after taking the real part is recorded on the
    returned grid.
    """
    if N % 2 == 0:
        raise ValueError("image size N must be odd")
    L = table.strip_width
    n_y = len(table.q)
    c = (n_y - 1) // 2
    h_img = L / (N + 1)
    if oversample is None:
        step = table.window / n_y
        oversample = int(round(h_img / step))
        if abs(oversample * step - h_img) > 1e-9 * h_img:
            raise ValueError("table q-grid is not commensurate with the image lattice")
    fold = np.zeros((N + 1, n_y), complex)
    for i, n in enumerate(table.harmonics):
        fold[int(n) % (N + 1), :] += table.values[i, :]
    zvals = np.fft.ifft(fold * (N + 1), axis=0) / L
    m = np.arange(n_y)
    zfft = np.zeros_like(zvals)
    zfft[:, np.arange(-c, c + 1) % n_y] = zvals
    phase = np.exp(-2j * np.pi * m * c / n_y)
    yvals = np.fft.ifft(zfft * phase[None, :] * n_y, axis=1) / table.window
    iprime = np.arange(-(N - 1) // 2, (N - 1) // 2 + 1)
    idx = iprime * oversample + c
    if idx[0] < 0 or idx[-1] >= n_y:
        raise ValueError("table window narrower than the requested image")
    block = yvals[1:N + 1, :][:, idx].T
    real = np.real(block)
    scale = np.max(np.abs(real)) + 1e-300
    return ImageGrid(N, L, real, imag_residual=float(np.max(np.abs(np.imag(block))) / scale))


def boundary_average(data: DataField):
    """Boundary-row average Delta(y) and its y-transform over the q grid."""
    grid = data.grid
    delta = 0.5 * (data.values[:, 0] + data.values[:, -1])
    n_y = grid.n_y
    c = (n_y - 1) // 2
    m = np.arange(n_y)
    phase = np.exp(2j * np.pi * m * c / n_y)
    spec = grid.h * phase * np.fft.fft(delta)
    cols = np.concatenate([np.arange(n_y - c, n_y), np.arange(0, c + 1)])
    return delta, spec[cols]


@dataclass
class SpectralSystem:
    """The per-q system |Phi> = (D + sum_r |b_r><a_r|) |mu> on |n| <= n_max.

    ``diagonal`` holds d_n (with the vertical-ray limit at n = 0);
    ``pairs`` lists the separable terms as (b, a) vectors with the matrix
    convention b outer conj(a) (the profile vectors are real here). ``alpha``
    and ``beta`` store the per-ray scalars (alpha = 0 and beta = 0 for
    vertical rays).
    """

    geometry: StarGeometry
    q: float
    n_max: int
    diagonal: np.ndarray
    pairs: list
    beta: np.ndarray
    alpha: np.ndarray
    rhs: np.ndarray | None = None
    ray_terms: list = field(default_factory=list)

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def kappa(self) -> np.ndarray:
        return 2 * np.pi * self.harmonics / self.geometry.strip_width

    def apply(self, mu: np.ndarray) -> np.ndarray:
        """Matrix action D mu + sum_r b_r <a_r, mu>."""
        out = self.diagonal * mu
        for b, a in self.pairs:
            out = out + b * (np.conj(a) @ mu)
        return out

    def dense(self) -> np.ndarray:
        A = np.diag(self.diagonal)
        for b, a in self.pairs:
            A = A + np.outer(b, np.conj(a))
        return A


def assemble(geometry: StarGeometry, q: float, n_max: int,
             rhs: np.ndarray | None = None) -> SpectralSystem:
    """Build the spectral system at frequency q.

    Raises ResonantFrequencyError when a slanted ray satisfies
    beta_k + kappa_n ~ 0 within the truncation; the caller should perturb q
    by half a grid step. Rays with beta = 0 (vertical rays at any q, and
    every ray at q = 0) take their exact limiting form: the separable term
    collapses to a rank-two coupling between the mean mode and the 1/kappa
    profile, and the n = 0 diagonal entry becomes s_k L / (2 |u_kz|). At
    q = 0 this reproduces the analytic limiting system solved by solve_q0.
    """
    L = geometry.strip_width
    harmonics = np.arange(-n_max, n_max + 1)
    kappa = 2 * np.pi * harmonics / L
    i0 = n_max
    d = np.zeros(2 * n_max + 1, complex)
    pairs = []
    ray_terms = []
    beta_all = geometry.beta(q)
    alpha_all = np.zeros(geometry.K, complex)
    for k in range(geometry.K):
        s, uz = geometry.weights[k], geometry.u_z[k]
        if geometry.vertical[k] or q == 0.0:
            nz = harmonics != 0
            d[nz] += 1j * s / (uz * kappa[nz])
            d[i0] += s * L / (2 * abs(uz))
            w = np.zeros(2 * n_max + 1)
            w[nz] = 1.0 / kappa[nz]
            e0 = np.zeros(2 * n_max + 1)
            e0[i0] = 1.0
            c0 = -1j * s / uz
            pairs.append((c0 * w, e0))
            pairs.append((c0 * e0, w.astype(float)))
            beta_all[k] = 0.0
            ray_terms.append(("vertical", k))
        else:
            beta = beta_all[k]
            gaps = np.abs(beta + kappa)
            if np.min(gaps) < RESONANCE_TOL * 2 * np.pi / L:
                raise ResonantFrequencyError(k, int(harmonics[np.argmin(gaps)]))
            a = 1.0 / (beta + kappa)
            alpha = np.exp(1j * beta * geometry.exit_z[k]) \
                * (np.exp(-1j * beta * L) - 1.0) / (L * uz)
            alpha_all[k] = alpha
            d += 1j * s / (uz * (beta + kappa))
            pairs.append((s * alpha * a, a))
            ray_terms.append(("slanted", k))
    return SpectralSystem(geometry, q, n_max, d, pairs, beta_all, alpha_all,
                          rhs=rhs, ray_terms=ray_terms)


@dataclass
class ReducedSystem:
    """Projection-augmented system: known mu_0 folded into the right side.

    Rows run over all harmonics |n| <= n_max (2 n_max + 1 equations), the
    unknowns are mu_n for n != 0 (2 n_max equations' worth), one more
    equation than unknowns.
    """

    system: SpectralSystem
    psi: np.ndarray
    mu0: complex

    @property
    def n_rows(self) -> int:
        return 2 * self.system.n_max + 1

    @property
    def n_unknowns(self) -> int:
        return 2 * self.system.n_max

    def column_mask(self) -> np.ndarray:
        return self.system.harmonics != 0


def projection_reduce(system: SpectralSystem, mu0: complex) -> ReducedSystem:
    """Subtract the known mu_0 column from the right-hand side.

    psi_n = Phi_n - mu_0 * A[n, 0]; the remaining unknowns are mu_n, n != 0.
    Requires an assembled rhs and q != 0.
    """
    if system.rhs is None:
        raise ValueError("assemble the system with a right-hand side first")
    if system.q == 0:
        raise ValueError("q = 0 is handled by the analytic solver")
    i0 = system.n_max
    col0 = np.zeros(2 * system.n_max + 1, complex)
    col0[i0] = system.diagonal[i0]
    for b, a in system.pairs:
        col0 += b * np.conj(a[i0])
    return ReducedSystem(system, system.rhs - mu0 * col0, mu0)
