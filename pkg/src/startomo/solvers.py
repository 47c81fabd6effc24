"""Inversion of diagonal-plus-separable systems and image reconstruction.

Three routes: a recursively updated Tikhonov pseudo-inverse (works for
rectangular systems, always regularized), direct inversion through a
reduction to R unknowns (R = number of separable terms) with accelerated
harmonic series, and the analytic q = 0 solution. ``reconstruct`` runs the
per-frequency solves over a data field and synthesizes the image.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .forward import DataField
from .geometry import StarGeometry
from .phantoms import ImageGrid
from .spectral import (CoefficientTable, ReducedSystem, ResonantFrequencyError,
                       SpectralSystem, assemble, boundary_average,
                       coefficients_to_image, field_to_coefficients,
                       projection_reduce)
from .stability import sigma_moments

__all__ = [
    "SolverError",
    "DiagPlusSeparable",
    "PseudoInverseState",
    "ReductionCoefficients",
    "DirectSolution",
    "ReconstructionResult",
    "recursive_pinv",
    "apply_pinv",
    "series_mjk",
    "direct_solve",
    "solve_q0",
    "reconstruct",
]


class SolverError(RuntimeError):
    """A per-frequency solve could not be completed."""


# --------------------------------------------------------------------------
# generic diagonal-plus-separable operators


@dataclass
class DiagPlusSeparable:
    """N x M operator D + sum_r b_r conj(a_r)^T with a sparse diagonal D.

    ``diag_rows``/``diag_cols`` place the diagonal values (at most one entry
    per row and per column); they default to the top-aligned diagonal.
    """

    shape: tuple
    diag: np.ndarray
    pairs: list
    diag_rows: np.ndarray | None = None
    diag_cols: np.ndarray | None = None

    def __post_init__(self):
        nd = len(self.diag)
        if self.diag_rows is None:
            self.diag_rows = np.arange(nd)
        if self.diag_cols is None:
            self.diag_cols = np.arange(nd)
        N, M = self.shape
        for b, a in self.pairs:
            if len(b) != N or len(a) != M:
                raise ValueError("separable vectors do not match the operator shape")

    @classmethod
    def from_spectral(cls, system: SpectralSystem) -> "DiagPlusSeparable":
        n = 2 * system.n_max + 1
        return cls((n, n), system.diagonal.copy(), list(system.pairs))

    @classmethod
    def from_reduced(cls, reduced: ReducedSystem) -> "DiagPlusSeparable":
        system = reduced.system
        mask = reduced.column_mask()
        rows = np.where(mask)[0]
        pairs = [(b.astype(complex), a[mask].astype(complex))
                 for b, a in system.pairs]
        return cls((reduced.n_rows, reduced.n_unknowns),
                   system.diagonal[mask], pairs,
                   diag_rows=rows, diag_cols=np.arange(reduced.n_unknowns))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.shape[0], np.result_type(self.diag, x, complex))
        out[self.diag_rows] = self.diag * x[self.diag_cols]
        for b, a in self.pairs:
            out = out + b * (np.conj(a) @ x)
        return out

    def to_dense(self, dtype=complex) -> np.ndarray:
        A = np.zeros(self.shape, dtype)
        A[self.diag_rows, self.diag_cols] = self.diag
        for b, a in self.pairs:
            A = A + np.outer(np.asarray(b, dtype), np.conj(np.asarray(a, dtype)))
        return A


@dataclass
class PseudoInverseState:
    """State of the Tikhonov pseudo-inverse recursion after all update steps.

    The small-side Gram inverse is carried through the recursion; the
    large-side one follows from the identity S_N = (I - D S_M D*) / lam^2 and
    is materialized on demand. ``step_log`` records the positive quantities
    (P_k, Q_k, script-D_k) of every step.
    """

    shape: tuple
    lam: float
    _D: np.ndarray
    _SM: np.ndarray
    _pinv: np.ndarray
    _mirrored: bool
    step_log: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.step_log)

    @property
    def pinv(self) -> np.ndarray:
        """The M x N Tikhonov pseudo-inverse."""
        return self._pinv.conj().T if self._mirrored else self._pinv

    @property
    def S_M(self) -> np.ndarray:
        if not self._mirrored:
            return self._SM
        return self._big_side()

    @property
    def S_N(self) -> np.ndarray:
        if self._mirrored:
            return self._SM
        return self._big_side()

    def _big_side(self) -> np.ndarray:
        D = self._D
        n = D.shape[0]
        return (np.eye(n, dtype=D.dtype) - D @ (self._SM @ D.conj().T)) / self.lam**2

    def pinv_forms(self):
        """Both closed forms D* S_N and S_M D*, in the original orientation."""
        left = self._D.conj().T @ self._big_side()
        right = self._SM @ self._D.conj().T
        if self._mirrored:
            left, right = right.conj().T, left.conj().T
        return left, right


def _ld(x, dtype):
    real = np.longdouble if dtype == np.clongdouble else float
    return np.asarray(x, dtype=real if np.isrealobj(x) else dtype)


def recursive_pinv(A: DiagPlusSeparable, lam: float,
                   dtype=complex) -> PseudoInverseState:
    """Tikhonov pseudo-inverse by rank-one recursion over the separable terms.

    Starts from the diagonal part (whose regularized inverse is elementary)
    and folds in one separable term per step. The recursion maintains the
    Gram inverse of the smaller side only; that keeps every intermediate
    well-scaled for full-column-rank systems. Pass ``dtype=np.clongdouble``
    for extended-precision accumulation.

    Requires lam > 0; the step quantities P, Q and the denominator are
    positive by construction and are recorded in ``step_log``.
    """
    if lam <= 0:
        raise SolverError("the recursion requires lam > 0")
    N, M = A.shape
    mirrored = N < M
    if mirrored:
        D0 = np.zeros((M, N), dtype)
        D0[A.diag_cols, A.diag_rows] = np.conj(A.diag)
        pairs = [(np.asarray(a, dtype), np.asarray(b, dtype)) for b, a in A.pairs]
    else:
        D0 = np.zeros((N, M), dtype)
        D0[A.diag_rows, A.diag_cols] = np.asarray(A.diag, dtype)
        pairs = [(np.asarray(b, dtype), np.asarray(a, dtype)) for b, a in A.pairs]

    lam_w = _ld(lam, dtype)
    colnorm = np.sum(np.abs(D0) ** 2, axis=0)
    SM = np.diag(1.0 / (colnorm + lam_w**2)).astype(dtype)
    D = D0
    Dp = SM @ D.conj().T
    log = []
    for b, a in pairs:
        v = D.conj().T @ b
        gamma = 1.0 + np.conj(a) @ (Dp @ b)
        Q = float(np.real(np.conj(a) @ (SM @ a)))
        P = float(np.real(np.conj(b) @ b - np.conj(v) @ (SM @ v)) / lam_w**2)
        den = float(np.abs(gamma) ** 2 + lam_w**2 * P * Q)
        terms = [(gamma, a, v), (np.conj(gamma), v, a),
                 (lam_w**2 * P, a, a), (-Q, v, v)]
        corr = np.zeros_like(SM)
        for coef, p, qv in terms:
            corr += (coef / den) * np.outer(SM @ p, (SM @ qv).conj())
        SM_new = SM - corr
        Dp = Dp - corr @ D.conj().T + np.outer(SM_new @ a, np.conj(b))
        SM = SM_new
        D = D + np.outer(b, np.conj(a))
        log.append((P, Q, den))
    return PseudoInverseState((N, M), lam, D, SM, Dp, mirrored, log)


def apply_pinv(state: PseudoInverseState, rhs: np.ndarray) -> np.ndarray:
    """mu = A^+ rhs."""
    if len(rhs) != state.shape[0]:
        raise SolverError(
            f"right-hand side length {len(rhs)} != row count {state.shape[0]}")
    return state.pinv @ np.asarray(rhs, state.pinv.dtype)


# --------------------------------------------------------------------------
# harmonic series for the direct method


def _d_far(geometry: StarGeometry, q: float, kappa: np.ndarray) -> np.ndarray:
    """Diagonal values at nonzero harmonics (generic formula)."""
    out = np.zeros(kappa.shape, complex)
    beta = geometry.beta(q)
    beta[geometry.vertical] = 0.0
    for k in range(geometry.K):
        out += 1j * geometry.weights[k] / (geometry.u_z[k] * (beta[k] + kappa))
    return out


def _d_zero(geometry: StarGeometry, q: float) -> complex:
    """Diagonal value at n = 0 with the vertical-ray limit."""
    d0 = 0.0 + 0.0j
    for k in range(geometry.K):
        s, uz = geometry.weights[k], geometry.u_z[k]
        if geometry.vertical[k]:
            d0 += s * geometry.strip_width / (2 * abs(uz))
        else:
            d0 += 1j * s / (uz * geometry.beta(q)[k])
    return d0


def _profile_zero(kind):
    if kind[0] == "a":
        return 1.0 / kind[1]
    if kind[0] == "w":
        return 0.0
    return 1.0  # e0


def _bilinear_dinv(geometry: StarGeometry, q: float, x_kind, y_kind,
                   n_sum: int) -> complex:
    """<x| D^{-1} |y> summed over all harmonics, tail-accelerated.

    Profiles: ("a", beta) with entries 1/(beta + kappa_n), ("w",) with
    entries 1/kappa_n vanishing at n = 0, ("e0",) the n = 0 unit vector.
    The paired tail terms approach tau / kappa_n^2 with
    tau = 2i[(beta_x + beta_y) Sigma_1 + q Sigma_2] / Sigma_1^2; subtracting
    the asymptote and adding its closed-form sum L^2 tau / 24 leaves a
    remainder decaying like 1/n^4.
    """
    d0 = _d_zero(geometry, q)
    if x_kind[0] == "e0" or y_kind[0] == "e0":
        return _profile_zero(x_kind) * _profile_zero(y_kind) / d0
    L = geometry.strip_width
    sig = sigma_moments(geometry)
    bx = x_kind[1] if x_kind[0] == "a" else 0.0
    by = y_kind[1] if y_kind[0] == "a" else 0.0
    n = np.arange(1, n_sum + 1)
    kap = 2 * np.pi * n / L
    dp = _d_far(geometry, q, kap)
    dm = _d_far(geometry, q, -kap)
    t = 1.0 / ((bx + kap) * dp * (by + kap)) + 1.0 / ((bx - kap) * dm * (by - kap))
    tau = 2j * ((bx + by) * sig.sigma1 + q * sig.sigma2) / sig.sigma1**2
    head = 0.0 if (x_kind[0] == "w" or y_kind[0] == "w") else 1.0 / (bx * by * d0)
    return head + tau * L**2 / 24.0 + complex(np.sum(t - tau / kap**2))


def series_mjk(geometry: StarGeometry, q: float, j: int, k: int,
               n_sum: int) -> complex:
    """Accelerated matrix element <a_j| D^{-1} |a_k> for slanted rays.

    Preconditions: Sigma_1 != 0, q != 0, n_sum >= 1, and rays j, k not
    vertical (vertical rays enter the reduction through their own profiles).
    """
    sig = sigma_moments(geometry)
    scale = float(np.sum(np.abs(geometry.weights) / np.abs(geometry.u_z)))
    if abs(sig.sigma1) <= 1e-9 * scale:
        raise SolverError("series acceleration requires Sigma_1 != 0")
    if q == 0:
        raise SolverError("q = 0 is handled by the analytic solver")
    if n_sum < 1:
        raise SolverError("n_sum must be at least 1")
    if geometry.vertical[j] or geometry.vertical[k]:
        raise SolverError("rays parallel to the z-axis have no beta; "
                          "use the assembled separable terms instead")
    beta = geometry.beta(q)
    return _bilinear_dinv(geometry, q, ("a", beta[j]), ("a", beta[k]), n_sum)


# --------------------------------------------------------------------------
# direct solver


@dataclass
class ReductionCoefficients:
    """The R x R reduced system (I + M) x = R of the direct method."""

    matrix: np.ndarray
    rhs: np.ndarray
    solution: np.ndarray
    condition: float


@dataclass
class DirectSolution:
    """Solution of one per-q system by the separable reduction.

    ``coefficients`` holds mu_n on the truncation window; ``at`` evaluates
    the zero-padded solution at arbitrary harmonics (zero-padded mode only).
    """

    system: SpectralSystem
    reduction: ReductionCoefficients
    coefficients: np.ndarray
    mode: str
    _descs: list
    _n_sum: int

    def at(self, harmonics) -> np.ndarray:
        """Evaluate mu_n at arbitrary integer harmonics."""
        if self.mode != "zero-padded":
            raise SolverError("harmonic extension needs the zero-padded mode")
        system = self.system
        g = system.geometry
        harmonics = np.atleast_1d(np.asarray(harmonics, int))
        kap = 2 * np.pi * harmonics / g.strip_width
        phi = np.zeros(len(harmonics), complex)
        inside = np.abs(harmonics) <= system.n_max
        phi[inside] = system.rhs[harmonics[inside] + system.n_max]
        acc = phi.astype(complex)
        for (coef, bkind, _), xr in zip(self._descs, self.reduction.solution):
            acc -= xr * coef * _profile_vals(bkind, harmonics, kap)
        d = np.empty(len(harmonics), complex)
        nz = harmonics != 0
        d[nz] = _d_far(g, system.q, kap[nz])
        d[~nz] = _d_zero(g, system.q)
        return acc / d


def _profile_vals(kind, harmonics, kappa):
    vals = np.zeros(len(harmonics), complex)
    nz = harmonics != 0
    if kind[0] == "a":
        vals = 1.0 / (kind[1] + kappa)
    elif kind[0] == "w":
        vals[nz] = 1.0 / kappa[nz]
    else:
        vals[~nz] = 1.0
    return vals


def _pair_descriptors(system: SpectralSystem):
    """(coefficient, b-profile, a-profile) for every separable term."""
    g = system.geometry
    descs = []
    for kind, k in system.ray_terms:
        s, uz = g.weights[k], g.u_z[k]
        if kind == "vertical":
            c0 = -1j * s / uz
            descs.append((c0, ("w",), ("e0",)))
            descs.append((c0, ("e0",), ("w",)))
        else:
            beta = system.beta[k]
            descs.append((s * system.alpha[k], ("a", beta), ("a", beta)))
    return descs


def direct_solve(system: SpectralSystem, n_sum: int = 400,
                 mode: str = "truncated") -> DirectSolution:
    """Solve the per-q system by reducing to the separable amplitudes.

    ``truncated`` inverts the (2 n_max + 1)-square window matrix exactly (the
    same operator the recursive path pseudo-inverts); ``zero-padded`` treats
    the system as infinite with the unmeasured data set to zero, computing
    the reduction through the accelerated harmonic series. The right-hand
    side must be attached to the system.
    """
    if system.rhs is None:
        raise SolverError("assemble the system with a right-hand side first")
    if mode not in ("truncated", "zero-padded"):
        raise SolverError(f"unknown direct mode {mode!r}")
    g = system.geometry
    descs = _pair_descriptors(system)
    R = len(descs)
    harmonics = system.harmonics
    kappa = system.kappa
    d = system.diagonal
    dmax = np.max(np.abs(d))
    if np.min(np.abs(d)) < 1e-12 * dmax:
        raise SolverError("near-zero diagonal value; the frequency slice is flagged")
    profiles = [_profile_vals(desc[2], harmonics, kappa) for desc in descs]
    if mode == "truncated":
        M = np.empty((R, R), complex)
        for r in range(R):
            for c in range(R):
                bvals = _profile_vals(descs[c][1], harmonics, kappa)
                M[r, c] = descs[c][0] * np.sum(profiles[r] * bvals / d)
    else:
        M = np.empty((R, R), complex)
        for r in range(R):
            for c in range(R):
                M[r, c] = descs[c][0] * _bilinear_dinv(
                    g, system.q, descs[r][2], descs[c][1], n_sum)
    rhs_red = np.array([np.sum(p * system.rhs / d) for p in profiles])
    if R == 0:
        return DirectSolution(system, ReductionCoefficients(M, rhs_red,
                                                            rhs_red, 1.0),
                              system.rhs / d, mode, descs, n_sum)
    lhs = np.eye(R) + M
    cond = float(np.linalg.cond(lhs))
    if not np.isfinite(cond) or cond > 1e14:
        raise SolverError(f"singular reduced system (condition number {cond:.3g})")
    x = np.linalg.solve(lhs, rhs_red)
    acc = system.rhs.astype(complex).copy()
    for (coef, bkind, _), xr in zip(descs, x):
        acc -= xr * coef * _profile_vals(bkind, harmonics, kappa)
    coeffs = acc / d
    return DirectSolution(system, ReductionCoefficients(M, rhs_red, x, cond),
                          coeffs, mode, descs, n_sum)


# --------------------------------------------------------------------------
# q = 0


def solve_q0(geometry: StarGeometry, phi_column: np.ndarray,
             harmonics: np.ndarray, delta0: complex | None = None,
             mu0: complex | None = None) -> np.ndarray:
    """Analytic solution at q = 0.

    mu_0 = 2 Delta(0) / Sigma_0 (or an externally supplied value), then
    mu_n = mu_0 - i kappa_n Phi_n / Sigma_1. Sigma_1 = 0 is fatal; Sigma_0 = 0
    is fatal only when no external mu_0 is given.
    """
    sig = sigma_moments(geometry)
    scale = float(np.sum(np.abs(geometry.weights) / np.abs(geometry.u_z)))
    if abs(sig.sigma1) <= 1e-9 * scale:
        raise SolverError("symmetric geometry (Sigma_1 = 0): the q = 0 slice "
                          "is not invertible")
    L = geometry.strip_width
    if mu0 is None:
        if delta0 is None:
            raise SolverError("need the boundary average Delta(0) or an external mu_0")
        if abs(sig.sigma0) <= 1e-9 * scale:
            raise SolverError("Sigma_0 = 0 and no external mu_0 supplied")
        amp = abs(2.0 / (L * sig.sigma0))
        if amp > 100.0 / L:
            warnings.warn(f"q = 0 mean-value amplification factor {amp:.3g} "
                          "is large; the slice is poorly conditioned",
                          stacklevel=2)
        mu0 = 2.0 * delta0 / sig.sigma0
    kappa = 2 * np.pi * np.asarray(harmonics) / L
    out = np.full(len(harmonics), complex(mu0), complex)
    nz = np.asarray(harmonics) != 0
    out[nz] = mu0 - 1j * kappa[nz] * phi_column[nz] / sig.sigma1
    return out


# --------------------------------------------------------------------------
# full reconstruction


@dataclass
class ReconstructionResult:
    image: ImageGrid
    diagnostics: dict


def reconstruct(data: DataField, geometry: StarGeometry, method: str = "direct",
                lam: float = 0.0, n_max: int | None = None, n_sum: int = 400,
                image_n: int | None = None, mode: str = "truncated",
                use_projection: bool = False, mu0=None,
                dtype=complex, threads: int | None = None) -> ReconstructionResult:
    """Invert a sampled data field into an image.

    Per-frequency solves use the analytic formula at q = 0 and the chosen
    solver elsewhere; the synthesis uses the image band in both axes
    (|n| <= (N-1)/2 and |q| <= pi/h), which is also the default solve band.
    Resonant frequencies are retried half a grid step away; failed slices are
    zero-filled and reported in the diagnostics rather than aborting.

    ``mu0`` may be a callable q -> mu_0(q) (projection data); with
    ``use_projection`` the overdetermined reduced system is solved by the
    recursive pseudo-inverse (lam > 0 required).

    The per-frequency solves are independent; ``threads`` (default from the
    STARTOMO_THREADS environment variable, else 1) fans them out over a
    thread pool. The assembled result does not depend on completion order.
    """
    if method not in ("direct", "recursive"):
        raise SolverError(f"unknown method {method!r}")
    if threads is None:
        threads = int(os.environ.get("STARTOMO_THREADS", "1"))
    table = field_to_coefficients(data)
    N_img = image_n if image_n is not None else data.grid.base_n
    n_use = n_max if n_max is not None else (N_img - 1) // 2
    n_use = min(n_use, table.n_max)
    L = geometry.strip_width
    h_img = L / (N_img + 1)
    q_cap = np.pi / h_img * (1 + 1e-12)
    sel = np.abs(table.harmonics) <= n_use
    harmonics = table.harmonics[sel]
    delta0 = None
    if mu0 is None:
        _, delta_spec = boundary_average(data)
        delta0 = delta_spec[len(table.q) // 2]
    lam_eff = lam
    solved = np.zeros((len(harmonics), len(table.q)), complex)
    cond_log = {}
    flagged = []

    def solve_column(qv, column):
        nonlocal lam_eff
        if qv == 0.0:
            external = complex(mu0(0.0)) if callable(mu0) else None
            return solve_q0(geometry, column, harmonics, delta0=delta0,
                            mu0=external)
        system = assemble(geometry, qv, n_use, rhs=column)
        if use_projection or (callable(mu0) and method == "recursive"):
            if not callable(mu0):
                raise SolverError("projection solving needs mu0 as a callable q -> mu_0")
            if lam <= 0:
                raise SolverError("the projection-augmented solve requires lam > 0")
            reduced = projection_reduce(system, complex(mu0(qv)))
            op = DiagPlusSeparable.from_reduced(reduced)
            state = recursive_pinv(op, lam, dtype=dtype)
            rest = apply_pinv(state, reduced.psi)
            out = np.empty(len(harmonics), complex)
            out[reduced.column_mask()] = rest
            out[~reduced.column_mask()] = reduced.mu0
            return out
        if method == "direct":
            if lam > 0:
                return _regularized_direct(system, lam, n_sum, mode)
            sol = direct_solve(system, n_sum=n_sum, mode=mode)
            cond_log[qv] = sol.reduction.condition
            return sol.coefficients
        if lam_eff <= 0:
            lam_eff = 1e-12 * float(np.max(np.abs(system.diagonal)))
            warnings.warn("recursive method with lam = 0 mapped to "
                          f"lam = {lam_eff:.3g}", stacklevel=2)
        op = DiagPlusSeparable.from_spectral(system)
        state = recursive_pinv(op, lam_eff, dtype=dtype)
        return apply_pinv(state, column)

    def run_column(mi):
        qv = table.q[mi]
        column = table.values[sel, mi]
        try:
            solved[:, mi] = solve_column(qv, column)
        except ResonantFrequencyError:
            try:
                dq = 0.5 * (table.q[1] - table.q[0])
                solved[:, mi] = solve_column(qv + dq, column)
            except (ResonantFrequencyError, SolverError) as exc:
                flagged.append((float(qv), str(exc)))
        except SolverError as exc:
            flagged.append((float(qv), str(exc)))

    todo = [mi for mi in range(len(table.q)) if abs(table.q[mi]) <= q_cap]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_column, todo))
        flagged.sort()
    else:
        for mi in todo:
            run_column(mi)

    out_table = CoefficientTable(solved, harmonics, table.q, L, table.window)
    image = coefficients_to_image(out_table, N_img)
    diagnostics = {
        "flagged": flagged,
        "condition": cond_log,
        "n_max": int(n_use),
        "q_cap": float(q_cap),
        "imag_residual": image.imag_residual,
    }
    return ReconstructionResult(image, diagnostics)


def _regularized_direct(system: SpectralSystem, lam: float, n_sum: int,
                        mode: str) -> np.ndarray:
    """Tikhonov normal equations solved by the same separable reduction.

    A*A + lam^2 keeps the diagonal-plus-separable structure with twice the
    number of separable terms, so the K-system machinery applies unchanged
    on the truncation window.
    """
    if mode != "truncated":
        raise SolverError("regularized direct solving works on the truncation window")
    d = system.diagonal
    rhs = np.conj(d) * system.rhs
    pairs = []
    for b, a in system.pairs:
        rhs += a * (np.conj(b) @ system.rhs)
        pairs.append((np.conj(d) * b, a))
        pairs.append((a, np.conj(d) * b))
        for b2, a2 in system.pairs:
            pairs.append((a * (np.conj(b) @ b2), a2))
    diag = np.abs(d) ** 2 + lam**2
    R = len(pairs)
    profiles = [np.conj(a) for _, a in pairs]
    M = np.empty((R, R), complex)
    for r in range(R):
        for c in range(R):
            M[r, c] = np.sum(profiles[r] * pairs[c][0] / diag)
    rhs_red = np.array([np.sum(p * rhs / diag) for p in profiles])
    lhs = np.eye(R) + M
    cond = float(np.linalg.cond(lhs))
    if not np.isfinite(cond) or cond > 1e14:
        raise SolverError(f"singular regularized reduction (condition {cond:.3g})")
    x = np.linalg.solve(lhs, rhs_red)
    acc = rhs.astype(complex)
    for (b, _), xr in zip(pairs, x):
        acc -= xr * b
    return acc / diag
