"""Invertibility diagnostics for star geometries.

Low spatial frequencies are governed by the weighted moments Sigma_0 and
Sigma_1; high frequencies by the zeros of the angular symbol
f(theta) = sum_k s_k / cos(theta - theta_k). A geometry whose symbol has no
real zeros inverts stably at high frequency; even ray counts and half-plane
ray arrangements always produce zeros.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import StarGeometry

__all__ = [
    "SigmaMoments",
    "StabilityReport",
    "sigma_moments",
    "f_theta",
    "f_theta_samples",
    "count_zeros",
    "halfplane_confined",
    "classify",
]

SINGULARITY_TOL = 1e-12
SAMPLES_PER_INTERVAL = 4096
BISECTION_TOL = 1e-10


@dataclass(frozen=True)
class SigmaMoments:
    """Weighted direction moments controlling low-frequency inversion."""

    sigma0: float
    sigma1: float
    sigma2: float


@dataclass(frozen=True)
class StabilityReport:
    sigma: SigmaMoments
    zero_count: int
    zero_locations: tuple
    K_odd: bool
    halfplane_confined: bool
    low_q_stable: bool
    high_q_stable: bool


def sigma_moments(geometry: StarGeometry) -> SigmaMoments:
    """Sigma_0 = sum s_k/|u_kz|, Sigma_1 = sum s_k/u_kz, Sigma_2 = -sum s_k u_ky/u_kz^2."""
    s, uy, uz = geometry.weights, geometry.u_y, geometry.u_z
    return SigmaMoments(float(np.sum(s / np.abs(uz))),
                        float(np.sum(s / uz)),
                        float(-np.sum(s * uy / uz**2)))


def f_theta(geometry: StarGeometry, theta):
    """Angular symbol f(theta) = sum_k s_k / cos(theta - theta_k).

    Raises on angles within 1e-12 of a singularity theta_k +- pi/2 (mod pi);
    the result is finite everywhere else.
    """
    theta = np.asarray(theta, float)
    cosines = np.cos(theta[..., None] - geometry.theta)
    if np.any(np.abs(cosines) < SINGULARITY_TOL):
        raise ValueError("theta coincides with a singular direction theta_k +- pi/2")
    out = np.sum(geometry.weights / cosines, axis=-1)
    return float(out) if out.ndim == 0 else out


def f_theta_samples(geometry: StarGeometry, n: int = 2000):
    """(theta, f(theta)) sampled over [0, pi] for plotting, NaN at singularities."""
    theta = np.linspace(0.0, np.pi, n)
    cosines = np.cos(theta[:, None] - geometry.theta)
    near = np.any(np.abs(cosines) < 1e-9, axis=1)
    vals = np.full(n, np.nan)
    ok = ~near
    vals[ok] = np.sum(geometry.weights / cosines[ok], axis=1)
    return theta, vals


def _singular_angles(geometry: StarGeometry) -> np.ndarray:
    """Singularities of f in [0, pi), one per ray direction mod pi."""
    return np.unique(np.mod(geometry.theta + np.pi / 2, np.pi))


def count_zeros(geometry: StarGeometry):
    """Count and locate sign-change zeros of f over [0, pi).

    The interval is split at the singular angles; each open subinterval is
    sampled densely and sign changes are refined by bisection. Tangential
    (non-crossing) zeros are not detected.
    """
    sing = _singular_angles(geometry)
    edges = np.concatenate([[0.0], sing, [np.pi]])
    locations = []
    pad = 1e-9
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 3 * pad:
            continue
        grid = np.linspace(lo + pad, hi - pad, SAMPLES_PER_INTERVAL)
        vals = f_theta(geometry, grid)
        signs = np.sign(vals)
        flips = np.where(signs[:-1] * signs[1:] < 0)[0]
        for i in flips:
            a, b = grid[i], grid[i + 1]
            fa = vals[i]
            while b - a > BISECTION_TOL:
                m = 0.5 * (a + b)
                fm = f_theta(geometry, m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            locations.append(0.5 * (a + b))
        # exact zeros landing on grid points
        for i in np.where(signs == 0)[0]:
            locations.append(grid[i])
    locations = sorted(np.mod(locations, np.pi))
    return len(locations), tuple(locations)


def halfplane_confined(geometry: StarGeometry) -> bool:
    """True iff all vectors s_k u_k fit in one closed half-plane.

    Equivalent to the largest cyclic gap between the direction angles of the
    s_k u_k being at least pi.
    """
    angles = np.mod(geometry.theta + np.where(geometry.weights < 0, np.pi, 0.0),
                    2 * np.pi)
    angles = np.sort(angles)
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
    return bool(np.max(gaps) >= np.pi - 1e-12)


def classify(geometry: StarGeometry) -> StabilityReport:
    """Full stability report: moments, symbol zeros and the necessary conditions."""
    sig = sigma_moments(geometry)
    nz, locations = count_zeros(geometry)
    scale = float(np.sum(np.abs(geometry.weights) / np.abs(geometry.u_z)))
    tol = 1e-9 * scale
    return StabilityReport(
        sigma=sig,
        zero_count=nz,
        zero_locations=locations,
        K_odd=geometry.K % 2 == 1,
        halfplane_confined=halfplane_confined(geometry),
        low_q_stable=abs(sig.sigma0) > tol and abs(sig.sigma1) > tol,
        high_q_stable=nz == 0,
    )
