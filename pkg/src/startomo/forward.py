"""Forward synthesis of star-transform and pairwise measurement data.

Data fields are sampled on a planning grid that covers every vertex whose
rays can touch the phantom support: the y-window is adaptive, the z-step may
subdivide the image step so the measured Fourier band is wider and cleaner
than the image band. Boundary rows z = 0 and z = L are always included.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CoefficientMatrix, StarGeometry
from .oscint import segment_exp, segment_exp_z
from .phantoms import Phantom, Rectangle

__all__ = [
    "DataGrid",
    "DataField",
    "PairwiseField",
    "plan_grid",
    "ray_integral",
    "star_transform",
    "pairwise_fields",
    "add_poisson_noise",
    "combine_pairs",
    "analytic_data_coefficients",
]


@dataclass(frozen=True)
class DataGrid:
    """Sampling lattice for measurement data.

    ``base_n`` is the image-grid size the data targets; ``oversample`` is the
    integer step-refinement factor, so the data step is L/(oversample*(base_n+1)).
    The y-window holds ``n_y`` columns centered on y = 0.
    """

    strip_width: float
    base_n: int
    oversample: int
    n_y: int

    @property
    def h(self) -> float:
        return self.strip_width / (self.oversample * (self.base_n + 1))

    @property
    def n_z(self) -> int:
        """Interior z-sample count (boundary rows excluded)."""
        return self.oversample * (self.base_n + 1) - 1

    @property
    def n_max(self) -> int:
        """Largest z-harmonic measurable on this lattice."""
        return (self.n_z - 1) // 2

    @property
    def window(self) -> float:
        """y-window width used by the Fourier transform."""
        return self.n_y * self.h

    def y_coords(self) -> np.ndarray:
        return (np.arange(self.n_y) - (self.n_y - 1) // 2) * self.h

    def z_coords(self) -> np.ndarray:
        """All z rows including the boundaries."""
        return np.arange(self.n_z + 2) * self.h

    def q_coords(self) -> np.ndarray:
        c = (self.n_y - 1) // 2
        return 2 * np.pi * np.arange(-c, c + 1) / self.window


@dataclass
class DataField:
    """Sampled scalar data on a DataGrid, boundary rows included.

    values[i, j] is the sample at (y_i, z_j) with j = 0 the source-side
    boundary row and j = n_z + 1 the detector-side row.
    """

    grid: DataGrid
    values: np.ndarray


@dataclass
class PairwiseField:
    """One pairwise measurement phi_jk (j < k) on a DataGrid."""

    grid: DataGrid
    j: int
    k: int
    values: np.ndarray
    clamped: int = 0


def plan_grid(phantom: Phantom, geometry: StarGeometry, base_n: int,
              oversample: int = 1) -> DataGrid:
    """Choose the sampling lattice for a phantom/geometry pair.

    The y-window covers every vertex whose star can intersect the phantom
    support (support half-width plus maximum ray slope times L, plus margin);
    the column count is then bumped until no lattice frequency is resonant,
    i.e. no beta_k(q_m) + kappa_n vanishes for a slanted ray.
    """
    if base_n % 2 == 0:
        raise ValueError("image grid size must be odd")
    L = geometry.strip_width
    h_img = L / (base_n + 1)
    h = h_img / oversample
    y_cov = phantom.support_y() + geometry.max_slope * L + 2 * h_img
    n_y = max(int(np.ceil(2 * y_cov / h)) | 1, base_n * oversample)
    n_z = oversample * (base_n + 1) - 1
    kappa = 2 * np.pi * np.arange(-(n_z - 1) // 2, (n_z - 1) // 2 + 1) / L
    slanted = [k for k in range(geometry.K) if not geometry.vertical[k]]
    for _ in range(200):
        c = (n_y - 1) // 2
        q = 2 * np.pi * np.arange(1, c + 1) / (n_y * h)
        clean = True
        for k in slanted:
            beta = q[:, None] * geometry.u_y[k] / geometry.u_z[k]
            if np.min(np.abs(np.abs(beta) - np.abs(kappa[None, :]))) < 1e-9 * 2 * np.pi / L:
                clean = False
                break
        if clean:
            return DataGrid(L, base_n, oversample, n_y)
        n_y += 2
    raise RuntimeError("could not find a resonance-free y-window")


def _ray_fields(phantom: Phantom, geometry: StarGeometry, grid: DataGrid):
    """Per-ray integral fields I_k on the full lattice."""
    Y, Z = np.meshgrid(grid.y_coords(), grid.z_coords(), indexing="ij")
    fields = []
    for k in range(geometry.K):
        uy, uz = geometry.u_y[k], geometry.u_z[k]
        ell = (geometry.exit_z[k] - Z) / uz
        total = np.zeros_like(Y)
        for p in phantom.primitives:
            total += p.amplitude * p.chord(Y, Z, uy, uz, ell)
        fields.append(total)
    return fields


def ray_integral(phantom: Phantom, geometry: StarGeometry, k: int, vertex):
    """Single ray integral I_k from a vertex inside the closed strip."""
    y, z = vertex
    if not (0 <= z <= geometry.strip_width):
        raise ValueError("vertex outside the strip")
    from .geometry import exit_distance
    ell = exit_distance(geometry, k, z)
    from .phantoms import line_integral
    return line_integral(phantom, (y, z), (geometry.u_y[k], geometry.u_z[k]), ell)


def star_transform(phantom: Phantom, geometry: StarGeometry, base_n: int,
                   oversample: int = 1, grid: DataGrid | None = None) -> DataField:
    """Sample the star transform sum_k s_k I_k on a planned grid."""
    if grid is None:
        grid = plan_grid(phantom, geometry, base_n, oversample)
    fields = _ray_fields(phantom, geometry, grid)
    vals = np.zeros((grid.n_y, grid.n_z + 2))
    for k in range(geometry.K):
        vals += geometry.weights[k] * fields[k]
    return DataField(grid, vals)


def _eta_field(phantom: Phantom, grid: DataGrid):
    if not phantom.scatter_contrast:
        return 0.0
    Y, Z = np.meshgrid(grid.y_coords(), grid.z_coords(), indexing="ij")
    eta = np.zeros_like(Y)
    for p in phantom.scatter_contrast:
        eta += p.amplitude * p.contains(Y, Z)
    return eta


def pairwise_fields(phantom: Phantom, geometry: StarGeometry, base_n: int,
                    oversample: int = 1, grid: DataGrid | None = None,
                    eta: float | np.ndarray | None = None):
    """All K(K-1)/2 pairwise fields phi_jk = I_j + I_k + eta.

    ``eta`` overrides the phantom's scattering-contrast field; pass 0 for a
    uniform scattering background.
    """
    if geometry.K < 2:
        raise ValueError("pairwise measurements need at least two rays")
    if grid is None:
        grid = plan_grid(phantom, geometry, base_n, oversample)
    rays = _ray_fields(phantom, geometry, grid)
    if eta is None:
        eta = _eta_field(phantom, grid)
    out = []
    for j in range(geometry.K):
        for k in range(j + 1, geometry.K):
            out.append(PairwiseField(grid, j, k, rays[j] + rays[k] + eta))
    return out


def add_poisson_noise(pair: PairwiseField, events: int, seed: int) -> PairwiseField:
    """Counting noise: draw M ~ Poisson(nint(events * e^{-phi})), phi' = -ln(M/events).

    Zero draws are redrawn up to 100 times, then clamped to one count; the
    number of clamped samples is recorded on the returned field. The stream
    is a pure function of (seed, pair indices) and independent of evaluation
    order.
    """
    if events < 1:
        raise ValueError("the event parameter must be a positive integer")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(pair.j, pair.k)))
    mbar = np.rint(events * np.exp(-pair.values))
    counts = rng.poisson(mbar)
    clamped = 0
    zero = counts == 0
    for _ in range(100):
        if not np.any(zero):
            break
        counts[zero] = rng.poisson(mbar[zero])
        zero = counts == 0
    if np.any(zero):
        clamped = int(np.sum(zero))
        counts[zero] = 1
    noisy = -np.log(counts / events)
    return PairwiseField(pair.grid, pair.j, pair.k, noisy, clamped=clamped)


def combine_pairs(pairs, coefficients) -> DataField:
    """Linear recombination Phi = sum_{j<k} c_jk phi_jk of pairwise fields."""
    if isinstance(coefficients, CoefficientMatrix):
        c = coefficients.c
    else:
        c = np.asarray(coefficients, float)
    have = {(p.j, p.k) for p in pairs}
    K = c.shape[0]
    need = {(j, k) for j in range(K) for k in range(j + 1, K) if c[j, k] != 0.0}
    missing = need - have
    if missing:
        raise ValueError(f"missing pairwise fields for index pairs {sorted(missing)}")
    grid = pairs[0].grid
    vals = np.zeros((grid.n_y, grid.n_z + 2))
    for p in pairs:
        if c[p.j, p.k] != 0.0:
            vals += c[p.j, p.k] * p.values
    return DataField(grid, vals)


def analytic_data_coefficients(phantom: Phantom, geometry: StarGeometry, q, n):
    """Exact Fourier coefficients Phi_n(q) of the star-transform data.

    Available for rectangle-only phantoms, where the per-ray z-integrals have
    elementary closed forms. Serves as a high-accuracy oracle for the sampled
    transform chain.
    """
    for p in phantom.primitives:
        if not isinstance(p, Rectangle):
            raise TypeError("analytic data coefficients support rectangle primitives only")
    n = np.atleast_1d(np.asarray(n))
    L = geometry.strip_width
    kappa = 2 * np.pi * n / L
    out = np.zeros(len(n), complex)
    for p in phantom.primitives:
        cy, cz = p.center
        wy, wz = p.half_widths
        a, b = cz - wz, cz + wz
        gy = p.amplitude * segment_exp(-q, cy - wy, cy + wy)
        ray_sum = np.zeros(len(n), complex)
        for k in range(geometry.K):
            s, uz = geometry.weights[k], geometry.u_z[k]
            beta = geometry.beta(q)[k]
            gam = kappa + beta
            if uz > 0:
                if abs(beta) > 1e-9:
                    inner = (np.exp(1j * beta * b) * segment_exp(-gam, a, b)
                             - segment_exp(-kappa, a, b)) / (1j * beta)
                else:
                    inner = b * segment_exp(-gam, a, b) - segment_exp_z(-gam, a, b)
                term = segment_exp(-gam, 0.0, a) * segment_exp(beta, a, b) + inner
            else:
                if abs(beta) > 1e-9:
                    inner = (segment_exp(-kappa, a, b)
                             - np.exp(1j * beta * a) * segment_exp(-gam, a, b)) / (1j * beta)
                else:
                    inner = segment_exp_z(-gam, a, b) - a * segment_exp(-gam, a, b)
                term = -(inner + segment_exp(-gam, b, L) * segment_exp(beta, a, b))
            ray_sum += (s / uz) * term
        out += gy * ray_sum
    return out
