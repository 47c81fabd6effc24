"""Star geometries and scalar coefficient schemes.

A star is a set of K rays with unit directions u_k = (sin theta_k, cos theta_k)
and nonzero weights s_k, all emanating from a common vertex that is scanned
over the strip 0 <= z <= L. Angles are measured from the positive z-axis,
counter-clockwise positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "StarGeometry",
    "CoefficientMatrix",
    "make_geometry",
    "validate_coefficients",
    "default_scheme",
    "exit_distance",
]

# rays closer to horizontal than this are rejected (exit distance would
# exceed ~1e9 * L)
MIN_UZ = 1e-9

# |u_y| below this is treated as exactly vertical by the spectral machinery
VERTICAL_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid star geometry or coefficient scheme."""


@dataclass(frozen=True)
class StarGeometry:
    """K ray directions, weights and the strip width.

    Attributes
    ----------
    theta : ndarray
        Ray angles in radians, measured from the positive z-axis (CCW).
    weights : ndarray
        Nonzero ray weights s_k.
    strip_width : float
        Width L of the strip 0 <= z <= L.
    """

    theta: np.ndarray
    weights: np.ndarray
    strip_width: float

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, float))
        weights = np.atleast_1d(np.asarray(self.weights, float))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "weights", weights)
        if theta.ndim != 1 or theta.shape != weights.shape or len(theta) < 1:
            raise GeometryError("need equal-length angle and weight lists, K >= 1")
        if self.strip_width <= 0:
            raise GeometryError("strip width must be positive")
        if np.any(np.abs(np.cos(theta)) < MIN_UZ):
            bad = np.where(np.abs(np.cos(theta)) < MIN_UZ)[0]
            raise GeometryError(
                f"ray(s) {bad.tolist()} are parallel to the strip (|cos theta| < {MIN_UZ:g})")
        if np.any(weights == 0.0):
            raise GeometryError("ray weights must be nonzero")
        theta.setflags(write=False)
        weights.setflags(write=False)

    @property
    def K(self) -> int:
        return len(self.theta)

    @property
    def u_y(self) -> np.ndarray:
        """y-components sin(theta_k) of the unit directions."""
        return np.sin(self.theta)

    @property
    def u_z(self) -> np.ndarray:
        """z-components cos(theta_k) of the unit directions."""
        return np.cos(self.theta)

    @property
    def unit_vectors(self) -> np.ndarray:
        """(K, 2) array of (u_y, u_z) pairs."""
        return np.column_stack([self.u_y, self.u_z])

    @property
    def exit_z(self) -> np.ndarray:
        """Boundary coordinate xi_k: L for upward rays, 0 for downward."""
        return np.where(self.u_z > 0, self.strip_width, 0.0)

    @property
    def vertical(self) -> np.ndarray:
        """Boolean mask of rays parallel to the z-axis (u_y == 0)."""
        return np.abs(self.u_y) < VERTICAL_TOL

    @property
    def max_slope(self) -> float:
        """Largest |u_y / u_z| over the rays."""
        return float(np.max(np.abs(self.u_y / self.u_z)))

    def beta(self, q: float) -> np.ndarray:
        """Per-ray spatial-frequency shifts q * u_y / u_z."""
        return q * self.u_y / self.u_z


def make_geometry(angles, weights, strip_width=1.0) -> StarGeometry:
    """Build and validate a star geometry.

    Parameters
    ----------
    angles : sequence of float
        Ray angles theta_k in radians from the positive z-axis.
    weights : sequence of float
        Nonzero weights s_k, one per ray.
    strip_width : float
        Strip width L > 0.
    """
    return StarGeometry(np.asarray(angles, float), np.asarray(weights, float),
                        float(strip_width))


def exit_distance(geometry: StarGeometry, k: int, z) -> np.ndarray | float:
    """Distance from a vertex at height z to where ray k leaves the strip.

    Equals (xi_k - z) / u_kz and is nonnegative for z in [0, L].
    """
    z = np.asarray(z, float)
    if np.any(z < 0) or np.any(z > geometry.strip_width):
        raise GeometryError("vertex height outside the strip")
    out = (geometry.exit_z[k] - z) / geometry.u_z[k]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CoefficientMatrix:
    """Symmetric pairwise-combination coefficients c_jk.

    Column sums give the star-transform weights s_k. A scheme with zero total
    sum (sum_jk c_jk = 0) cancels any common additive term shared by all
    pairwise measurements (the scattering contrast).
    """

    c: np.ndarray
    eta_excluding: bool = field(default=False)

    @property
    def K(self) -> int:
        return self.c.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Star weights s_k = sum_j c_jk."""
        return self.c.sum(axis=0)


def validate_coefficients(c, require_eta_exclusion=True) -> CoefficientMatrix:
    """Check a pairwise coefficient matrix and derive the star weights.

    Conditions: zero diagonal, symmetry, nonzero column sums, and (when
    ``require_eta_exclusion``) zero total sum. Failures report which
    condition broke.
    """
    c = np.asarray(c, float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise GeometryError("coefficient matrix must be square")
    if np.any(np.diag(c) != 0.0):
        raise GeometryError("coefficient condition failed: nonzero diagonal entries")
    if not np.array_equal(c, c.T):
        raise GeometryError("coefficient condition failed: matrix not symmetric")
    s = c.sum(axis=0)
    scale = np.max(np.abs(c)) + 1e-300
    if np.any(np.abs(s) <= 1e-12 * scale):
        raise GeometryError("coefficient condition failed: zero column sum "
                            f"(columns {np.where(np.abs(s) <= 1e-12 * scale)[0].tolist()})")
    total = float(c.sum())
    excluding = abs(total) <= 1e-12 * scale * c.size
    if require_eta_exclusion and not excluding:
        raise GeometryError(
            f"coefficient condition failed: total sum {total:g} != 0, so a shared "
            "additive term would leak into the combination")
    return CoefficientMatrix(c, eta_excluding=excluding)


# built-in contrast-cancelling tables for K = 3 and K = 4
_ZERO_SUM_TABLES = {
    3: np.array([[0., 1., 1.],
                 [1., 0., -2.],
                 [1., -2., 0.]]),
    4: np.array([[0., 1., 1., -1.],
                 [1., 0., -1., -1.],
                 [1., -1., 0., 1.],
                 [-1., -1., 1., 0.]]),
}


def default_scheme(K: int, kind: str = "uniform") -> CoefficientMatrix:
    """Built-in combination schemes.

    ``uniform`` is the cyclic scheme giving s_k = 1 for every ray (valid when
    the scattering contrast is uniform); ``zero-sum`` returns the built-in
    contrast-cancelling tables (K = 3 or 4 only).
    """
    if kind == "uniform":
        if K < 2:
            raise GeometryError("uniform scheme needs K >= 2")
        c = np.zeros((K, K))
        for k in range(K):
            j = (k + 1) % K
            c[k, j] += 0.5
            c[j, k] += 0.5
        return validate_coefficients(c, require_eta_exclusion=False)
    if kind == "zero-sum":
        if K not in _ZERO_SUM_TABLES:
            raise GeometryError(f"no built-in zero-sum table for K = {K}")
        return validate_coefficients(_ZERO_SUM_TABLES[K])
    raise GeometryError(f"unknown scheme kind {kind!r}")
