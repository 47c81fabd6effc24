"""Command-line interface: analyze, phantom, forward, reconstruct, reproduce-table1."""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import io as sio
from .config import ConfigError, ExperimentConfig, load_config
from .forward import (add_poisson_noise, combine_pairs, pairwise_fields,
                      plan_grid, star_transform)
from .geometry import GeometryError, make_geometry
from .localrec import divergence_reconstruct, solve_sigmas, vector_combine
from .phantoms import rasterize
from .solvers import SolverError, reconstruct
from .stability import classify, f_theta_samples

EXIT_CODES = {"config": 2, "geometry": 3, "solver": 4, "io": 5}

# the six published test geometries: (angles/pi, weights)
TABLE1_CASES = {
    "1a": ([1.0, 0.25], [1.0, 1.0]),
    "1b": ([0.82, 0.23], [1.0, 1.0]),
    "2a": ([1.0, 0.25, -0.25], [1.0, 1.0, 1.0]),
    "2b": ([1.0, 0.25, -1.0 / 6.0], [1.0, 1.0, 1.0]),
    "3a": ([0.25, 1.1, -0.2], [1.0, 1.0, -2.0]),
    "3b": ([0.25, 1.1, 0.8], [1.0, 1.0, -2.0]),
}


def case_geometry(name: str, strip_width: float = 1.0):
    over_pi, weights = TABLE1_CASES[name]
    return make_geometry([t * np.pi for t in over_pi], weights, strip_width)


def _fail(category: str, message: str) -> int:
    print(f"error: {category}: {message}", file=sys.stderr)
    return EXIT_CODES[category]


def _geometry_from_args(args):
    if args.case:
        return case_geometry(args.case)
    if args.config:
        return load_config(args.config).geometry
    raise ConfigError("pass --case or --config to choose a geometry")


def stability_text(name, geometry) -> str:
    rep = classify(geometry)
    lines = [
        f"geometry: {name}",
        f"rays K = {geometry.K} (odd: {rep.K_odd})",
        f"Sigma0 = {rep.sigma.sigma0:.6g}",
        f"Sigma1 = {rep.sigma.sigma1:.6g}",
        f"Sigma2 = {rep.sigma.sigma2:.6g}",
        f"symbol zeros in [0, pi): {rep.zero_count}"
        + (f" at theta/pi = {[round(t / np.pi, 6) for t in rep.zero_locations]}"
           if rep.zero_locations else ""),
        f"weighted rays confined to a half-plane: {rep.halfplane_confined}",
        f"low-frequency stable (Sigma0 != 0 and Sigma1 != 0): {rep.low_q_stable}",
        f"high-frequency stable (no symbol zeros): {rep.high_q_stable}",
    ]
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    geometry = _geometry_from_args(args)
    text = stability_text(args.case or args.config, geometry)
    print(text)
    if args.ftheta_csv:
        theta, vals = f_theta_samples(geometry, 2000)
        sio.write_curve_csv(args.ftheta_csv, theta / np.pi, vals,
                            labels=("theta_over_pi", "f"))
    if args.report:
        with open(args.report, "w") as f:
            f.write(text + "\n")
    return 0


def cmd_phantom(args) -> int:
    cfg = load_config(args.config)
    grid = rasterize(cfg.phantom, cfg.grid_n)
    if args.out_csv:
        sio.write_image_csv(args.out_csv, grid)
    if args.out_pgm:
        sio.write_image_pgm(args.out_pgm, grid)
    print(f"phantom rasterized at N = {cfg.grid_n}, "
          f"value range [{grid.values.min():.6g}, {grid.values.max():.6g}]")
    return 0


def _make_data(cfg: ExperimentConfig):
    """Forward data per the configuration (noiseless or Poisson-noisy)."""
    grid = plan_grid(cfg.phantom, cfg.geometry, cfg.grid_n, cfg.data_oversample)
    if cfg.noise_events is None and not cfg.phantom.scatter_contrast \
            and cfg.method != "local":
        return star_transform(cfg.phantom, cfg.geometry, cfg.grid_n, grid=grid), None
    pairs = pairwise_fields(cfg.phantom, cfg.geometry, cfg.grid_n, grid=grid)
    if cfg.noise_events is not None:
        pairs = [add_poisson_noise(p, cfg.noise_events, cfg.noise_seed)
                 for p in pairs]
    scheme = cfg.scheme()
    return combine_pairs(pairs, scheme), pairs


def cmd_forward(args) -> int:
    cfg = load_config(args.config)
    if args.noise is not None:
        cfg.noise_events = args.noise
    if args.seed is not None:
        cfg.noise_seed = args.seed
    data, _ = _make_data(cfg)
    out = args.out or cfg.outputs.get("data_csv")
    if not out:
        raise ConfigError("no output path: pass --out or set output.data_csv")
    sio.write_field_csv(out, data)
    print(f"wrote {out} ({data.grid.n_y} x {data.grid.n_z + 2} samples)")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = load_config(args.config)
    for name, value in (("method", args.method), ("lam", getattr(args, "lambda")),
                        ("n_sum", args.nsum)):
        if value is not None:
            setattr(cfg, name, value)
    if args.noise is not None:
        cfg.noise_events = args.noise
    if args.seed is not None:
        cfg.noise_seed = args.seed
    if args.use_projection:
        cfg.use_projection = True
    res = run(cfg, data_csv=args.data, n_max=args.nmax,
              mu0_csv=args.ballistic,
              out_csv=args.out_csv or cfg.outputs.get("image_csv"),
              out_pgm=args.out_pgm or cfg.outputs.get("image_pgm"))
    flagged = res["diagnostics"].get("flagged", []) if res["diagnostics"] else []
    print(f"reconstruction done in {res['seconds']:.2f} s; "
          f"{len(flagged)} flagged frequency slice(s)")
    return 0


def run(cfg: ExperimentConfig, data_csv=None, n_max=None, mu0_csv=None,
        out_csv=None, out_pgm=None):
    """End-to-end experiment: forward data, inversion, artifact files."""
    t0 = time.perf_counter()
    if cfg.method == "local":
        grid = plan_grid(cfg.phantom, cfg.geometry, cfg.grid_n, cfg.data_oversample)
        pairs = pairwise_fields(cfg.phantom, cfg.geometry, cfg.grid_n, grid=grid)
        if cfg.noise_events is not None:
            pairs = [add_poisson_noise(p, cfg.noise_events, cfg.noise_seed)
                     for p in pairs]
        scheme = solve_sigmas(cfg.geometry)
        image = divergence_reconstruct(vector_combine(pairs, scheme), scheme.zeta)
        diagnostics = None
    else:
        if data_csv:
            data = sio.read_field_csv(data_csv)
        else:
            data, _ = _make_data(cfg)
        mu0 = sio.read_mu0_csv(mu0_csv) if mu0_csv else None
        result = reconstruct(data, cfg.geometry, method=cfg.method, lam=cfg.lam,
                             n_max=n_max, n_sum=cfg.n_sum,
                             use_projection=cfg.use_projection, mu0=mu0)
        image, diagnostics = result.image, result.diagnostics
    if out_csv:
        sio.write_image_csv(out_csv, image)
    if out_pgm:
        sio.write_image_pgm(out_pgm, image)
    if cfg.outputs.get("report"):
        with open(cfg.outputs["report"], "w") as f:
            f.write(stability_text("configured geometry", cfg.geometry) + "\n")
    if cfg.outputs.get("diagnostics") and diagnostics is not None:
        with open(cfg.outputs["diagnostics"], "w") as f:
            f.write("# q,condition\n")
            for q, c in sorted(diagnostics["condition"].items()):
                f.write(f"{q:.17g},{c:.17g}\n")
            for q, msg in diagnostics["flagged"]:
                f.write(f"# flagged {q:.17g}: {msg}\n")
    return {"image": image, "diagnostics": diagnostics,
            "seconds": time.perf_counter() - t0}


def cmd_table1(args) -> int:
    print(f"{'case':>4s} {'Sigma0':>8s} {'Sigma1':>8s} {'NZ':>3s}")
    for name in ("1a", "1b", "2a", "2b", "3a", "3b"):
        rep = classify(case_geometry(name))
        print(f"{name:>4s} {rep.sigma.sigma0:8.2f} {rep.sigma.sigma1:8.2f} "
              f"{rep.zero_count:3d}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="startomo",
        description="Forward simulation and inversion of star-transform data "
                    "on a strip. File formats: startomo-image v1 and "
                    "startomo-field v1 CSVs (17 significant digits), "
                    "8-bit binary PGM clipped to mu*L in [-2, 6].")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="stability diagnostics for a geometry")
    pa.add_argument("--case", choices=sorted(TABLE1_CASES))
    pa.add_argument("--config", help="TOML experiment file providing [geometry]")
    pa.add_argument("--ftheta-csv", help="write (theta/pi, f) samples over [0, pi]")
    pa.add_argument("--report", help="write the report to a text file")
    pa.set_defaults(func=cmd_analyze)

    pp = sub.add_parser("phantom", help="rasterize the configured phantom")
    pp.add_argument("--config", required=True)
    pp.add_argument("--out-csv")
    pp.add_argument("--out-pgm")
    pp.set_defaults(func=cmd_phantom)

    pf = sub.add_parser("forward", help="generate forward data")
    pf.add_argument("--config", required=True)
    pf.add_argument("--noise", type=int, help="Poisson event parameter")
    pf.add_argument("--seed", type=int)
    pf.add_argument("--out", help="data-field CSV path")
    pf.set_defaults(func=cmd_forward)

    pr = sub.add_parser("reconstruct", help="invert data into an image")
    pr.add_argument("--config", required=True)
    pr.add_argument("--data", help="read the data field from a CSV instead of "
                                   "synthesizing it")
    pr.add_argument("--method", choices=["direct", "recursive", "local"])
    pr.add_argument("--lambda", type=float, dest="lambda")
    pr.add_argument("--nmax", type=int, help="solve band override")
    pr.add_argument("--nsum", type=int)
    pr.add_argument("--noise", type=int)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--use-projection", action="store_true",
                    help="fold known mu_0(q) into the system (needs --ballistic)")
    pr.add_argument("--ballistic", help="CSV of (q, Re mu0, Im mu0)")
    pr.add_argument("--out-csv")
    pr.add_argument("--out-pgm")
    pr.set_defaults(func=cmd_reconstruct)

    pt = sub.add_parser("reproduce-table1",
                        help="print the six-case stability table")
    pt.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", str(exc))
    except GeometryError as exc:
        return _fail("geometry", str(exc))
    except SolverError as exc:
        return _fail("solver", str(exc))
    except OSError as exc:
        return _fail("io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
