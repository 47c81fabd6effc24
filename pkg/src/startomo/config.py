"""Experiment configuration: a strict TOML schema.

Unknown keys are rejected so typos fail loudly; every run is fully
determined by the file plus the noise seed.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .geometry import StarGeometry, default_scheme, make_geometry, validate_coefficients
from .phantoms import Ellipse, Phantom, Rectangle, make_shepp_logan, make_square_phantom

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    geometry: StarGeometry
    phantom: Phantom
    grid_n: int = 125
    data_oversample: int = 8
    noise_events: int | None = None
    noise_seed: int = 0
    method: str = "direct"
    lam: float = 0.0
    n_sum: int = 400
    use_projection: bool = False
    scheme_kind: str = "uniform"
    scheme_coefficients: np.ndarray | None = None
    outputs: dict = field(default_factory=dict)

    def scheme(self):
        if self.scheme_coefficients is not None:
            return validate_coefficients(self.scheme_coefficients,
                                         require_eta_exclusion=False)
        return default_scheme(self.geometry.K, self.scheme_kind)


def _take(section: dict, name: str, keys: dict):
    """Pop known keys with defaults; reject anything left over."""
    out = {}
    for key, default in keys.items():
        out[key] = section.pop(key, default)
    if section:
        raise ConfigError(f"unknown key(s) in [{name}]: {sorted(section)}")
    return out


_REQUIRED = object()


def _require(value, name, key):
    if value is _REQUIRED:
        raise ConfigError(f"missing required key {key!r} in [{name}]")
    return value


def parse_config(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    geo_sec = dict(doc.pop("geometry", {}))
    geo = _take(geo_sec, "geometry", {"rays": _REQUIRED, "strip_width": 1.0})
    rays = _require(geo["rays"], "geometry", "rays")
    try:
        angles = [float(r["theta_over_pi"]) * np.pi for r in rays]
        weights = [float(r["weight"]) for r in rays]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"each ray needs theta_over_pi and weight: {exc}") from exc
    unknown_ray_keys = set().union(*(set(r) for r in rays)) - {"theta_over_pi", "weight"}
    if unknown_ray_keys:
        raise ConfigError(f"unknown ray key(s): {sorted(unknown_ray_keys)}")
    L = float(geo["strip_width"])
    geometry = make_geometry(angles, weights, L)

    ph_sec = dict(doc.pop("phantom", {}))
    ph = _take(ph_sec, "phantom", {"kind": "square", "primitives": None,
                                   "contrast": None})
    phantom = _build_phantom(ph, L)

    grid_sec = dict(doc.pop("grid", {}))
    grid = _take(grid_sec, "grid", {"n": 125, "data_oversample": 8})
    if int(grid["n"]) % 2 == 0:
        raise ConfigError("grid n must be odd")

    noise_sec = dict(doc.pop("noise", {}))
    noise = _take(noise_sec, "noise", {"events": None, "seed": 0})

    rec_sec = dict(doc.pop("reconstruction", {}))
    rec = _take(rec_sec, "reconstruction",
                {"method": "direct", "lambda": 0.0, "n_sum": 400,
                 "use_projection": False})
    if rec["method"] not in ("direct", "recursive", "local"):
        raise ConfigError(f"unknown reconstruction method {rec['method']!r}")

    sch_sec = dict(doc.pop("scheme", {}))
    sch = _take(sch_sec, "scheme", {"kind": "uniform", "coefficients": None})

    out_sec = dict(doc.pop("output", {}))
    outputs = _take(out_sec, "output",
                    {"image_csv": None, "image_pgm": None, "report": None,
                     "diagnostics": None, "data_csv": None})

    if doc:
        raise ConfigError(f"unknown section(s): {sorted(doc)}")

    coeffs = None
    if sch["coefficients"] is not None:
        coeffs = np.asarray(sch["coefficients"], float)
    return ExperimentConfig(
        geometry=geometry,
        phantom=phantom,
        grid_n=int(grid["n"]),
        data_oversample=int(grid["data_oversample"]),
        noise_events=None if noise["events"] is None else int(noise["events"]),
        noise_seed=int(noise["seed"]),
        method=rec["method"],
        lam=float(rec["lambda"]),
        n_sum=int(rec["n_sum"]),
        use_projection=bool(rec["use_projection"]),
        scheme_kind=sch["kind"],
        scheme_coefficients=coeffs,
        outputs={k: v for k, v in outputs.items() if v is not None},
    )


def _build_phantom(ph: dict, L: float) -> Phantom:
    kind = ph["kind"]
    if kind == "square":
        base = make_square_phantom(L)
    elif kind == "shepp-logan":
        base = make_shepp_logan(L)
    elif kind == "custom":
        if not ph["primitives"]:
            raise ConfigError("custom phantom needs a primitives list")
        base = Phantom(tuple(_primitive(p) for p in ph["primitives"]), L)
    else:
        raise ConfigError(f"unknown phantom kind {kind!r}")
    if ph["contrast"]:
        contrast = tuple(_primitive(p) for p in ph["contrast"])
        base = Phantom(base.primitives, L, scatter_contrast=contrast)
    return base


def _primitive(spec: dict):
    spec = dict(spec)
    shape = spec.pop("shape", None)
    try:
        if shape == "rectangle":
            return Rectangle(tuple(spec.pop("center")),
                             tuple(spec.pop("half_widths")),
                             float(spec.pop("amplitude")))
        if shape == "ellipse":
            return Ellipse(tuple(spec.pop("center")),
                           tuple(spec.pop("semi_axes")),
                           np.deg2rad(float(spec.pop("angle_deg", 0.0))),
                           float(spec.pop("amplitude")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad primitive spec: {exc}") from exc
    finally:
        if shape in ("rectangle", "ellipse") and spec:
            raise ConfigError(f"unknown primitive key(s): {sorted(spec)}")
    raise ConfigError(f"unknown primitive shape {shape!r}")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(doc)
