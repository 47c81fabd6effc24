"""Analytic attenuation phantoms and exact line integrals through them.

Phantoms are sums of constant-amplitude primitives (axis-aligned rectangles
and rotated ellipses) added on top of a zero background; values are the
deviation delta-mu from the known background, so they may be negative.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .oscint import segment_exp

__all__ = [
    "Rectangle",
    "Ellipse",
    "Phantom",
    "ImageGrid",
    "make_square_phantom",
    "make_shepp_logan",
    "point_value",
    "line_integral",
    "rasterize",
    "fourier_coefficients",
    "SQUARE_HALF_SIDE_FRACTION",
]

# half-side of the standard square phantom, as a fraction of L; the value
# 21.5/126 keeps the edges exactly between the nodes of every grid whose
# step divides L/126, so rasterization never samples on a jump
SQUARE_HALF_SIDE_FRACTION = 21.5 / 126.0

# canonical head-phantom ellipses: (x0, y0, semi_x, semi_y, angle_deg, amplitude)
# with the high-contrast amplitudes; interior values span [1, 2]
_HEAD_ELLIPSES = [
    (0.0, 0.0, 0.69, 0.92, 0.0, 2.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98),
    (0.22, 0.0, 0.11, 0.31, -18.0, -0.02),
    (-0.22, 0.0, 0.16, 0.41, 18.0, -0.02),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.01),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.01),
    (0.0, -0.1, 0.046, 0.046, 0.0, 0.01),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.01),
    (0.0, -0.605, 0.023, 0.023, 0.0, 0.01),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.01),
]


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle: center (y, z), half-widths, additive amplitude."""

    center: tuple
    half_widths: tuple
    amplitude: float

    def __post_init__(self):
        if self.half_widths[0] <= 0 or self.half_widths[1] <= 0:
            raise ValueError("rectangle half-widths must be positive")

    def contains(self, y, z):
        cy, cz = self.center
        wy, wz = self.half_widths
        return (np.abs(y - cy) <= wy) & (np.abs(z - cz) <= wz)

    def chord(self, oy, oz, uy, uz, length):
        """Length of the ray segment [0, length] inside the rectangle."""
        cy, cz = self.center
        wy, wz = self.half_widths
        return _slab_chord(oy, oz, uy, uz, length,
                           (cy - wy, cy + wy), (cz - wz, cz + wz))

    def support_y(self):
        return self.center[0] - self.half_widths[0], self.center[0] + self.half_widths[0]

    def support_z(self):
        return self.center[1] - self.half_widths[1], self.center[1] + self.half_widths[1]


@dataclass(frozen=True)
class Ellipse:
    """Rotated ellipse: center (y, z), semi-axes, CCW angle from the y-axis."""

    center: tuple
    semi_axes: tuple
    angle: float
    amplitude: float

    def __post_init__(self):
        if self.semi_axes[0] <= 0 or self.semi_axes[1] <= 0:
            raise ValueError("ellipse semi-axes must be positive")

    def _local(self, y, z):
        cy, cz = self.center
        c, s = np.cos(self.angle), np.sin(self.angle)
        dy, dz = y - cy, z - cz
        return (c * dy + s * dz) / self.semi_axes[0], (-s * dy + c * dz) / self.semi_axes[1]

    def contains(self, y, z):
        p, r = self._local(y, z)
        return p * p + r * r <= 1.0

    def chord(self, oy, oz, uy, uz, length):
        """Length of the ray segment [0, length] inside the ellipse."""
        p0, r0 = self._local(oy, oz)
        c, s = np.cos(self.angle), np.sin(self.angle)
        dp = (c * uy + s * uz) / self.semi_axes[0]
        dr = (-s * uy + c * uz) / self.semi_axes[1]
        # |(p0, r0) + t (dp, dr)|^2 = 1
        a = dp * dp + dr * dr
        b = 2 * (p0 * dp + r0 * dr)
        c0 = p0 * p0 + r0 * r0 - 1.0
        disc = b * b - 4 * a * c0
        hit = disc > 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t1 = np.where(hit, (-b - sq) / (2 * a), 0.0)
        t2 = np.where(hit, (-b + sq) / (2 * a), 0.0)
        lo = np.clip(t1, 0.0, length)
        hi = np.clip(t2, 0.0, length)
        return np.where(hit, hi - lo, 0.0)

    def support_y(self):
        cy = self.center[0]
        ext = np.hypot(self.semi_axes[0] * np.cos(self.angle),
                       self.semi_axes[1] * np.sin(self.angle))
        return cy - ext, cy + ext

    def support_z(self):
        cz = self.center[1]
        ext = np.hypot(self.semi_axes[0] * np.sin(self.angle),
                       self.semi_axes[1] * np.cos(self.angle))
        return cz - ext, cz + ext


def _slab_chord(oy, oz, uy, uz, length, ybounds, zbounds):
    tlo = np.zeros(np.broadcast(oy, oz).shape)
    thi = np.broadcast_to(np.asarray(length, float), tlo.shape).copy()
    for coord, u, (lo, hi) in ((oy, uy, ybounds), (oz, uz, zbounds)):
        if abs(u) < 1e-14:
            inside = (coord >= lo) & (coord <= hi)
            thi = np.where(inside, thi, -1.0)
        else:
            t1 = (lo - coord) / u
            t2 = (hi - coord) / u
            tlo = np.maximum(tlo, np.minimum(t1, t2))
            thi = np.minimum(thi, np.maximum(t1, t2))
    return np.maximum(thi - tlo, 0.0)


@dataclass(frozen=True)
class Phantom:
    """List of primitives inside the strip 0 < z < L, plus optional contrast field.

    ``scatter_contrast`` holds the primitives of the log scattering-contrast
    field eta, used only when synthesizing pairwise measurements.
    """

    primitives: tuple
    strip_width: float
    background: float = 0.0
    scatter_contrast: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.background < 0:
            raise ValueError("background attenuation must be nonnegative")
        for p in self.primitives:
            zlo, zhi = p.support_z()
            if zlo <= 0 or zhi >= self.strip_width:
                raise ValueError("primitive support must lie strictly inside the strip")

    def support_y(self) -> float:
        """Half-width of the union of primitive supports in y (0 if empty)."""
        if not self.primitives and not self.scatter_contrast:
            return 0.0
        exts = [max(abs(p.support_y()[0]), abs(p.support_y()[1]))
                for p in list(self.primitives) + list(self.scatter_contrast)]
        return float(max(exts))


@dataclass
class ImageGrid:
    """N x N samples at the interior nodes of the strip.

    Node (i, j) sits at y = (i - (N-1)/2) h, z = (j + 1) h with h = L/(N+1);
    values[i, j] is indexed [y, z].
    """

    N: int
    strip_width: float
    values: np.ndarray
    imag_residual: float = 0.0

    @property
    def h(self) -> float:
        return self.strip_width / (self.N + 1)

    def y_coords(self) -> np.ndarray:
        return (np.arange(self.N) - (self.N - 1) / 2) * self.h

    def z_coords(self) -> np.ndarray:
        return np.arange(1, self.N + 1) * self.h


def make_square_phantom(strip_width=1.0) -> Phantom:
    """Square of amplitude 5/L and side ~L/3 centered in the strip."""
    L = strip_width
    half = SQUARE_HALF_SIDE_FRACTION * L
    return Phantom((Rectangle((0.0, L / 2), (half, half), 5.0 / L),), L)


def make_shepp_logan(strip_width=1.0) -> Phantom:
    """Ten-ellipse head phantom scaled into the strip.

    Amplitudes are affinely rescaled so the attained interior values span
    [1/L, 5/L]: background-disc amplitude a*A1 + b, others a*A, with the
    affine map sending the canonical interior range [1, 2] to [1/L, 5/L].
    """
    L = strip_width
    scale = 0.45 * L / 0.92
    a, b = 4.0 / L, -3.0 / L
    prims = []
    for i, (x0, y0, sx, sy, deg, amp) in enumerate(_HEAD_ELLIPSES):
        amplitude = a * amp + (b if i == 0 else 0.0)
        prims.append(Ellipse((x0 * scale, L / 2 + y0 * scale),
                             (sx * scale, sy * scale),
                             np.deg2rad(deg), amplitude))
    return Phantom(tuple(prims), L)


def point_value(phantom: Phantom, y, z):
    """Sum of amplitudes of the primitives containing (y, z)."""
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    out = np.zeros(np.broadcast(y, z).shape)
    for p in phantom.primitives:
        out += p.amplitude * p.contains(y, z)
    return float(out) if out.ndim == 0 else out


def line_integral(phantom: Phantom, origin, direction, length):
    """Exact integral of the phantom along origin + direction * [0, length].

    ``direction`` must be a unit vector; the result is the sum over
    primitives of amplitude times chord length.
    """
    uy, uz = direction
    if abs(uy * uy + uz * uz - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    oy, oz = origin
    total = 0.0
    for p in phantom.primitives:
        total = total + p.amplitude * p.chord(np.asarray(oy, float), np.asarray(oz, float),
                                              uy, uz, np.asarray(length, float))
    return total


def rasterize(phantom: Phantom, N: int) -> ImageGrid:
    """Point-sample the phantom on the N x N interior grid (N odd)."""
    if N % 2 == 0:
        raise ValueError("grid size N must be odd")
    h = phantom.strip_width / (N + 1)
    y = (np.arange(N) - (N - 1) / 2) * h
    z = np.arange(1, N + 1) * h
    Y, Z = np.meshgrid(y, z, indexing="ij")
    return ImageGrid(N, phantom.strip_width, point_value(phantom, Y, Z))


def fourier_coefficients(phantom: Phantom, q, n):
    """Exact Fourier coefficients mu_n(q) of the phantom.

    Computes int dy e^{-iqy} int_0^L dz e^{-i kappa_n z} mu(y, z) in closed
    form (separable product for rectangles, a Bessel form for ellipses).
    """
    from scipy.special import j1

    n = np.atleast_1d(np.asarray(n))
    kappa = 2 * np.pi * n / phantom.strip_width
    out = np.zeros(len(n), complex)
    for p in phantom.primitives:
        if isinstance(p, Rectangle):
            cy, cz = p.center
            wy, wz = p.half_widths
            gy = segment_exp(-q, cy - wy, cy + wy)
            gz = segment_exp(-kappa, cz - wz, cz + wz)
            out += p.amplitude * gy * gz
        elif isinstance(p, Ellipse):
            cy, cz = p.center
            ay, az = p.semi_axes
            c, s = np.cos(p.angle), np.sin(p.angle)
            k1 = ay * (q * c + kappa * s)
            k2 = az * (-q * s + kappa * c)
            rho = np.hypot(k1, k2)
            small = rho < 1e-12
            safe = np.where(small, 1.0, rho)
            shape = np.where(small, np.pi * ay * az,
                             2 * np.pi * ay * az * j1(safe) / safe)
            out += p.amplitude * np.exp(-1j * (q * cy + kappa * cz)) * shape
        else:
            raise TypeError(f"unsupported primitive {type(p).__name__}")
    return out
