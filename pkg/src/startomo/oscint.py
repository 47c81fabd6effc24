"""Stable closed forms for short oscillatory segment integrals."""
from __future__ import annotations

import numpy as np

__all__ = ["phase_avg", "phase_avg_ramp", "segment_exp", "segment_exp_z"]


def phase_avg(x):
    """(e^{ix} - 1)/(ix), series for small |x|."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    exact = (np.exp(1j * safe) - 1.0) / (1j * safe)
    series = 1.0 + 1j * x / 2.0 - x**2 / 6.0 - 1j * x**3 / 24.0
    return np.where(small, series, exact)


def phase_avg_ramp(x):
    """int_0^1 s e^{ixs} ds, series for small |x|."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    exact = np.exp(1j * safe) / (1j * safe) + (np.exp(1j * safe) - 1.0) / safe**2
    series = 0.5 + 1j * x / 3.0 - x**2 / 8.0 - 1j * x**3 / 30.0
    return np.where(small, series, exact)


def segment_exp(c, lo, hi):
    """int_lo^hi e^{icz} dz for scalar or array c."""
    w = hi - lo
    c = np.asarray(c)
    return w * np.exp(1j * c * lo) * phase_avg(c * w)


def segment_exp_z(c, lo, hi):
    """int_lo^hi z e^{icz} dz for scalar or array c."""
    w = hi - lo
    c = np.asarray(c)
    return np.exp(1j * c * lo) * (lo * w * phase_avg(c * w) + w**2 * phase_avg_ramp(c * w))
