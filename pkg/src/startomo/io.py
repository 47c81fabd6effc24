"""File formats: CSV for grids/fields/tables, binary PGM for images.

All floating-point text is written with 17 significant digits so identical
runs produce byte-identical files.
"""
from __future__ import annotations

import numpy as np

from .forward import DataField, DataGrid
from .phantoms import ImageGrid

__all__ = [
    "write_image_csv",
    "read_image_csv",
    "write_image_pgm",
    "write_field_csv",
    "read_field_csv",
    "write_curve_csv",
    "write_table_csv",
    "read_mu0_csv",
]

# display mapping: linear on mu*L in [-2, 6], clipped to black/white outside
PGM_LO, PGM_HI = -2.0, 6.0


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_image_csv(path, image: ImageGrid):
    """Row-major CSV with a one-line header (version, N, strip width)."""
    with open(path, "w", newline="") as f:
        f.write(f"# startomo-image v1,N={image.N},L={_fmt(image.strip_width)}\n")
        for row in image.values:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def read_image_csv(path) -> ImageGrid:
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("# startomo-image v1"):
            raise ValueError(f"not an image CSV: {path}")
        parts = dict(p.split("=") for p in header.split(",")[1:])
        values = np.loadtxt(f, delimiter=",", ndmin=2)
    return ImageGrid(int(parts["N"]), float(parts["L"]), values)


def write_image_pgm(path, image: ImageGrid):
    """8-bit binary graymap of mu*L, clipped to the display range."""
    scaled = image.values * image.strip_width
    gray = np.clip((scaled - PGM_LO) / (PGM_HI - PGM_LO), 0.0, 1.0)
    # rows are z from top (z = L) to bottom, columns y
    pixels = np.rint(255 * gray.T[::-1, :]).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode())
        f.write(pixels.tobytes())


def write_field_csv(path, field: DataField):
    """Data-field CSV with a two-line header (grid metadata, boundary flag)."""
    g = field.grid
    with open(path, "w", newline="") as f:
        f.write(f"# startomo-field v1,L={_fmt(g.strip_width)},base_n={g.base_n},"
                f"oversample={g.oversample},n_y={g.n_y}\n")
        f.write("# boundary-rows=included\n")
        for row in field.values:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def read_field_csv(path) -> DataField:
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("# startomo-field v1"):
            raise ValueError(f"not a data-field CSV: {path}")
        parts = dict(p.split("=") for p in header.split(",")[1:])
        f.readline()
        values = np.loadtxt(f, delimiter=",", ndmin=2)
    grid = DataGrid(float(parts["L"]), int(parts["base_n"]),
                    int(parts["oversample"]), int(parts["n_y"]))
    if values.shape != (grid.n_y, grid.n_z + 2):
        raise ValueError(f"field shape {values.shape} does not match its header")
    return DataField(grid, values)


def write_curve_csv(path, xs, ys, labels=("x", "y")):
    """Two-column CSV, NaN-safe (for f(theta) plots and error sweeps)."""
    with open(path, "w", newline="") as f:
        f.write(f"# {labels[0]},{labels[1]}\n")
        for x, y in zip(xs, ys):
            f.write(f"{_fmt(x)},{_fmt(y)}\n")


def write_table_csv(path, table):
    """Coefficient table as (n, q, Re, Im) rows."""
    with open(path, "w", newline="") as f:
        f.write("# n,q,re,im\n")
        for i, n in enumerate(table.harmonics):
            for mi, q in enumerate(table.q):
                v = table.values[i, mi]
                f.write(f"{int(n)},{_fmt(q)},{_fmt(v.real)},{_fmt(v.imag)}\n")


def read_mu0_csv(path):
    """Ballistic-channel CSV (q, Re mu_0, Im mu_0) -> interpolating callable."""
    rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    qs = rows[:, 0]
    vals = rows[:, 1] + 1j * rows[:, 2] if rows.shape[1] > 2 else rows[:, 1] + 0j
    order = np.argsort(qs)
    qs, vals = qs[order], vals[order]

    def mu0(q):
        re = np.interp(q, qs, vals.real)
        im = np.interp(q, qs, vals.imag)
        return complex(re, im)

    return mu0
