"""Vector coefficient schemes and purely local divergence reconstruction.

With two-component coefficients c_jk whose column sums are sigma_k u_k, the
combined field Phi = sum_{j<k} c_jk phi_jk satisfies
Phi = sum_k sigma_k u_k I_k, so mu = -(1/zeta) div Phi with zeta = sum sigma_k.
Only first derivatives of the data are needed; the reconstruction is local.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import DataGrid
from .geometry import GeometryError, StarGeometry
from .phantoms import ImageGrid

__all__ = [
    "VectorScheme",
    "VectorField",
    "solve_sigmas",
    "vector_combine",
    "divergence_reconstruct",
]


@dataclass(frozen=True)
class VectorScheme:
    """Vector coefficients c_jk (K x K x 2), scalars sigma_k, zeta = sum sigma_k."""

    c: np.ndarray
    sigma: np.ndarray
    zeta: float

    def __post_init__(self):
        c, sigma = self.c, self.sigma
        K = len(sigma)
        if np.max(np.abs(c.sum(axis=(0, 1)))) > 1e-9:
            raise GeometryError("vector coefficients must sum to zero")
        if np.max(np.abs(c - np.swapaxes(c, 0, 1))) > 1e-12:
            raise GeometryError("vector coefficients must be symmetric")
        if np.max(np.abs(c[np.arange(K), np.arange(K)])) > 0:
            raise GeometryError("vector coefficients must have zero diagonal")


def solve_sigmas(geometry: StarGeometry, zero_set=()) -> VectorScheme:
    """Find scalars with sum_k sigma_k u_k = 0 and build the vector scheme.

    The free rays (outside ``zero_set``) get the least-norm sigma subject to
    the closure constraint and the normalization zeta = number of free rays,
    so an equilateral three-ray star yields sigma = (1, 1, 1). The scheme is
    the pairwise-sum pattern c_jk = (sigma_j u_j + sigma_k u_k) / (K - 2)
    among free rays, or the hub pattern when ``zero_set`` names one ray: the
    hub row carries c_hub,k = sigma_k u_k and all other pairs vanish.
    """
    zero_set = tuple(sorted(set(int(i) for i in zero_set)))
    free = [k for k in range(geometry.K) if k not in zero_set]
    if len(free) < 3:
        raise GeometryError("need at least three rays with free coefficients")
    U = geometry.unit_vectors[free].T  # 2 x F
    F = len(free)
    ones = np.ones(F)
    # minimize |sigma|^2 subject to U sigma = 0 and 1.sigma = F
    C = np.vstack([U, ones])
    KKT = np.block([[np.eye(F), C.T], [C, np.zeros((3, 3))]])
    rhs = np.concatenate([np.zeros(F), [0.0, 0.0, float(F)]])
    try:
        sol = np.linalg.solve(KKT, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
    sigma_free = sol[:F]
    if np.max(np.abs(U @ sigma_free)) > 1e-9 or abs(np.sum(sigma_free) - F) > 1e-6:
        raise GeometryError("no closure solution with nonzero zeta exists "
                            "for this ray arrangement")
    sigma = np.zeros(geometry.K)
    sigma[free] = sigma_free
    zeta = float(np.sum(sigma))
    K = geometry.K
    c = np.zeros((K, K, 2))
    su = sigma[:, None] * geometry.unit_vectors
    if len(zero_set) == 1:
        hub = zero_set[0]
        for k in free:
            c[hub, k] = su[k]
            c[k, hub] = su[k]
    elif zero_set:
        raise GeometryError("at most one ray may be excluded from the scheme")
    else:
        for j in range(K):
            for k in range(j + 1, K):
                c[j, k] = (su[j] + su[k]) / (K - 2)
                c[k, j] = c[j, k]
    scheme = VectorScheme(c, sigma, zeta)
    # condition (iv): column sums reproduce sigma_k u_k
    colsums = scheme.c.sum(axis=0)
    if np.max(np.abs(colsums - su)) > 1e-9:
        raise GeometryError("scheme construction failed the column-sum condition")
    return scheme


@dataclass
class VectorField:
    """Two-component data field on a DataGrid (components indexed [y, z])."""

    grid: DataGrid
    y_component: np.ndarray
    z_component: np.ndarray


def vector_combine(pairs, scheme: VectorScheme) -> VectorField:
    """Vector data field Phi = sum_{j<k} c_jk phi_jk."""
    have = {(p.j, p.k): p for p in pairs}
    K = len(scheme.sigma)
    grid = pairs[0].grid
    fy = np.zeros((grid.n_y, grid.n_z + 2))
    fz = np.zeros_like(fy)
    for j in range(K):
        for k in range(j + 1, K):
            cy, cz = scheme.c[j, k]
            if cy == 0.0 and cz == 0.0:
                continue
            if (j, k) not in have:
                raise ValueError(f"missing pairwise field ({j}, {k})")
            vals = have[(j, k)].values
            fy += cy * vals
            fz += cz * vals
    return VectorField(grid, fy, fz)


def divergence_reconstruct(vector_field: VectorField, zeta: float,
                           image_n: int | None = None) -> ImageGrid:
    """mu = -(1/zeta) div Phi by central differences on the data lattice.

    Interior nodes use second-order central differences; the window edges
    fall back to one-sided first-order differences. The divergence is then
    decimated onto the image lattice.
    """
    if abs(zeta) < 1e-12:
        raise GeometryError("zeta is zero; the scheme cannot be inverted")
    grid = vector_field.grid
    h = grid.h
    fy, fz = vector_field.y_component, vector_field.z_component
    div = np.zeros_like(fy)
    div[1:-1, :] += (fy[2:, :] - fy[:-2, :]) / (2 * h)
    div[0, :] += (fy[1, :] - fy[0, :]) / h
    div[-1, :] += (fy[-1, :] - fy[-2, :]) / h
    div[:, 1:-1] += (fz[:, 2:] - fz[:, :-2]) / (2 * h)
    div[:, 0] += (fz[:, 1] - fz[:, 0]) / h
    div[:, -1] += (fz[:, -1] - fz[:, -2]) / h
    mu = -div / zeta
    N = image_n if image_n is not None else grid.base_n
    s = grid.oversample
    center = (grid.n_y - 1) // 2
    iy = np.arange(-(N - 1) // 2, (N - 1) // 2 + 1) * s + center
    iz = np.arange(1, N + 1) * s
    return ImageGrid(N, grid.strip_width, mu[np.ix_(iy, iz)])
