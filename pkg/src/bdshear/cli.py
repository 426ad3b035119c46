"""Command-line front end: ``bdshear {synth,transform,bounds,bench,check,export}``.

Every command reads a JSON configuration (``--config``), optionally seeded
with a bundled cartoon (``--bundled``), validates it against the command's
schema and writes its outputs to the ``out`` directory.

Exit codes: 0 ok, 1 configuration error, 2 model-class violation, 3 data
mismatch, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .cartoon import ImageGrid, cartoon_from_dict, rasterize
from .configs import BUNDLED, bundled_cartoon
from .errors import (
    CartoonError,
    CGNotConverged,
    DomainError,
    EquivalenceViolated,
    GridMismatch,
    NonConvergent,
    NotAFrame,
    ShearletError,
)
from .schemas import SCHEMAS

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

SYSTEM_DEFAULTS = {"n": 256, "j_max": 4, "c": 1.0, "m_flat": [6, 5], "r": 10, "extent": None, "generator_cache": None}


class ConfigError(Exception):
    pass


# --- configuration -------------------------------------------------------------------


def validate(command: str, config: dict) -> None:
    """Validate against the command's schema; the message names the offending field."""
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(f"{pointer}: {err.message}")


def load_config(args) -> dict:
    config: dict = {}
    if args.bundled:
        if args.bundled not in BUNDLED:
            raise ConfigError(f"/bundled: unknown bundled configuration {args.bundled!r}")
        config["cartoon"] = bundled_cartoon(args.bundled)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            config.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if args.out:
        config["out"] = args.out
    if args.seed is not None:
        config["seed"] = args.seed
    validate(args.command, config)
    return config


def _out_dir(config: dict) -> Path:
    out = Path(config.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _existing(path: str, field: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"/{field}: file {p} does not exist")
    return p


def _cartoon(config: dict):
    if "cartoon" in config:
        return cartoon_from_dict(config["cartoon"])
    return cartoon_from_dict(io.read_json(_existing(config["cartoon_file"], "cartoon_file")))


def _domain(config: dict):
    from .geometry import domain_from_dict

    if "domain" in config:
        return domain_from_dict(config["domain"])
    if "domain_file" in config:
        return domain_from_dict(io.read_json(_existing(config["domain_file"], "domain_file")))
    return None


def _system_params(config: dict) -> dict:
    params = dict(SYSTEM_DEFAULTS)
    params.update(config.get("system", {}))
    if params["j_max"] > 0 and 2 ** params["j_max"] > params["n"] // 8:
        raise ConfigError(f"/system/j_max: 2^j_max must not exceed n/8 = {params['n'] // 8}")
    return params


def _system(config: dict, threads: int | None):
    from .generators import cached_generator_set
    from .system import ShearletSystem

    p = _system_params(config)
    gen = cached_generator_set(p["m_flat"][0], p["m_flat"][1], p["r"], p["generator_cache"])
    return ShearletSystem(gen, p["n"], p["j_max"], p["c"], p["extent"], workers=threads)


def _grid(config: dict, n: int) -> ImageGrid:
    if "grid" in config:
        return ImageGrid.load(_existing(config["grid"], "grid"))
    f = _cartoon(config)
    return rasterize(f, n, config.get("supersample", 4))


# --- commands -----------------------------------------------------------------------


def cmd_synth(config: dict, threads: int | None) -> int:
    """Rasterize a cartoon; write ``grid.grd1`` and ``certificate.json``."""
    out = _out_dir(config)
    f = _cartoon(config)
    n = config.get("n", config.get("system", {}).get("n", SYSTEM_DEFAULTS["n"]))
    grid = rasterize(f, n, config.get("supersample", 4))
    grid.save(out / "grid.grd1")
    cert = dict(f.certificate)
    cert["flags"] = {k: ("PASS" if cert[k] else "FAIL") for k in ("c2_ok", "nested_ok", "unit_ok")}
    io.write_json(out / "certificate.json", cert)
    print(io.dumps_json(cert))
    return EXIT_OK


def cmd_transform(config: dict, threads: int | None) -> int:
    """Analyze a grid; write ``coefficients.shc1`` and ``stats.json``."""
    from .system import CoefficientTable, write_shc1

    out = _out_dir(config)
    sys_ = _system(config, threads)
    grid = _grid(config, sys_.n)
    if grid.n != sys_.n:
        raise GridMismatch(f"grid size {grid.n} does not match system size {sys_.n}")
    table = CoefficientTable.from_system(sys_, sys_.analyze_array(grid.samples))
    write_shc1(out / "coefficients.shc1", table, sys_)
    slices = []
    for sl in sys_.slices:
        block = table.values[sl.offset : sl.offset + sl.size]
        slices.append({"cone": sl.cone.name, "j": sl.j, "k": sl.k, "count": sl.size,
                       "max_abs": float(np.max(np.abs(block))) if sl.size else 0.0})
    stats = {"count": len(table), "max_abs": float(np.max(np.abs(table.values))), "norm2": table.norm2(),
             "system": sys_.params(), "slices": slices}
    io.write_json(out / "stats.json", stats)
    print(io.dumps_json({k: stats[k] for k in ("count", "max_abs", "norm2")}))
    return EXIT_OK


def _maybe_project(sys_, config: dict):
    from .frames import project_system

    omega = _domain(config)
    if omega is None and config.get("project") and ("cartoon" in config or "cartoon_file" in config):
        omega = _cartoon(config).omega
    return sys_ if omega is None else project_system(sys_, omega)


def cmd_bounds(config: dict, threads: int | None) -> int:
    """Estimate frame bounds; write ``bounds.json``."""
    from .frames import estimate_bounds

    out = _out_dir(config)
    sys_ = _maybe_project(_system(config, threads), config)
    t0 = time.perf_counter()
    fb = estimate_bounds(sys_, trials=config.get("trials", 1), tol=config.get("tol", 1e-3), seed=config.get("seed", 0))
    report = fb.to_dict()
    report["seconds"] = time.perf_counter() - t0
    io.write_json(out / "bounds.json", report)
    print(io.dumps_json({k: report[k] for k in ("A", "B", "ratio")}))
    return EXIT_OK


def _bounds_from_file(path: Path):
    from .frames import FrameBounds

    d = io.read_json(path)
    params = {k: d.get(k) for k in ("n", "j_max", "c", "extent")}
    return FrameBounds(float(d["A"]), float(d["B"]), d.get("iterations", {}), float(d.get("tol", 0.0)), params)


def cmd_bench(config: dict, threads: int | None) -> int:
    """N-term decay benchmark; write ``decay.csv``, ``decay.json`` and ``decay.dat``."""
    from .approx import decay_curve, fit_rate, log_spaced_N
    from .frames import estimate_bounds

    out = _out_dir(config)
    base = _system(config, threads)
    sys_ = _maybe_project(base, config)
    grid = _grid(config, base.n)
    if grid.n != base.n:
        raise GridMismatch(f"grid size {grid.n} does not match system size {base.n}")
    if "N_list" in config:
        N_list = np.array(sorted(set(config["N_list"])))
    else:
        lo, hi = config.get("N_range", [64, 4096])
        N_list = log_spaced_N(lo, hi, config.get("per_octave", 2))
    reconstruct = config.get("reconstruct", True)
    bounds = None
    if "bounds_file" in config:
        bounds = _bounds_from_file(_existing(config["bounds_file"], "bounds_file"))
        if bounds.params.get("n") not in (None, base.n):
            raise GridMismatch(f"bounds were estimated for n = {bounds.params['n']}, system has n = {base.n}")
    elif reconstruct:
        bounds = estimate_bounds(sys_, tol=config.get("tol", 1e-3), seed=config.get("seed", 0))
    report = decay_curve(grid, sys_, N_list, bounds, tol_cg=config.get("tol_cg", 1e-6), reconstruct=reconstruct)
    lo, hi = config.get("fit_range", [int(N_list[0]), int(N_list[-1])])
    fit_rate(report, lo, hi, "tail")
    if reconstruct:
        fit_rate(report, lo, hi, "recon")
    report.write_csv(out / "decay.csv")
    report.write_dat(out / "decay.dat")
    report.write_json(out / "decay.json")
    print(io.dumps_json({k: v.to_dict() for k, v in report.fits.items()}))
    return EXIT_OK


def cmd_check(config: dict, threads: int | None) -> int:
    """Envelope, counting and corner-scaling checks; write CSV reports and ``check.json``."""
    from .theorycheck import (
        check_decay_envelopes,
        corner_counts,
        corner_scaling,
        cross_shear_exponent,
        max_coefficient_slope,
    )

    out = _out_dir(config)
    sys_ = _system(config, threads)
    f = _cartoon(config)
    theta = sys_.analyze_array(rasterize(f, sys_.n, config.get("supersample", 4)).samples)
    j_range = config.get("j_range", list(range(2, sys_.j_max + 1)))
    domains = tuple(d for d in (f.B, f.omega) if d is not None)
    summary: dict = {"system": sys_.params(), "j_range": j_range}
    env = check_decay_envelopes(f, sys_, domains, j_range, coefficients=theta,
                                edge_domains=(f.B,) if f.B is not None else None)
    env.write_csv(out / "envelopes.csv")
    summary["envelopes"] = env.to_dict()
    try:
        summary["envelopes"]["steep_slope"] = max_coefficient_slope(env)[0]
    except ValueError:
        summary["envelopes"]["steep_slope"] = None
    try:
        summary["envelopes"]["cross_shear_exponent"] = cross_shear_exponent(env, config.get("cross_shear_scale", max(j_range)))[0]
    except ValueError:
        summary["envelopes"]["cross_shear_exponent"] = None
    if f.B is not None and f.B.corners and f.B.kind == "piecewise":
        counts = corner_counts(sys_, f.B, j_range)
        counts.write_csv(out / "counts.csv")
        summary["counts"] = counts.to_dict()
        eps = config.get("eps_list")
        if eps is None:
            mags = np.sort(np.abs(theta[theta != 0]))
            eps = [float(q) for q in np.quantile(mags, [0.999, 0.99, 0.9, 0.5])] if len(mags) else [1e-3, 1e-4]
            eps = sorted(set(eps), reverse=True)
        summary["corner_scaling"] = corner_scaling(f, sys_, eps, j_range, coefficients=theta).to_dict()
    io.write_json(out / "check.json", summary)
    print(io.dumps_json({"envelopes": summary["envelopes"], "counts": summary.get("counts")}))
    return EXIT_OK


def cmd_export(config: dict, threads: int | None) -> int:
    """Export a grid to PGM, the configuration schemas, or the generator cache."""
    from .generators import cached_generator_set

    did = False
    if "grid" in config:
        grid = ImageGrid.load(_existing(config["grid"], "grid"))
        target = Path(config.get("pgm", Path(config.get("out", ".")) / "grid.pgm"))
        target.parent.mkdir(parents=True, exist_ok=True)
        io.write_pgm16(target, grid.samples)
        did = True
    if "schemas" in config:
        d = Path(config["schemas"])
        d.mkdir(parents=True, exist_ok=True)
        for name, schema in SCHEMAS.items():
            (d / f"{name}.schema.json").write_text(json.dumps(schema, indent=2) + "\n")
        did = True
    if "generators" in config:
        p = _system_params(config)
        cached_generator_set(p["m_flat"][0], p["m_flat"][1], p["r"], config["generators"])
        did = True
    if not did:
        raise ConfigError("/: nothing to export (give grid, schemas or generators)")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "transform": cmd_transform,
    "bounds": cmd_bounds,
    "bench": cmd_bench,
    "check": cmd_check,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdshear", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.strip().splitlines()[0], description=fn.__doc__)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--bundled", choices=sorted(BUNDLED), help="use a bundled cartoon as the 'cartoon' entry")
        p.add_argument("--out", help="output directory (overrides 'out')")
        p.add_argument("--seed", type=int, help="seed for randomized trials (default 0)")
        p.add_argument("--threads", type=int, help="cap on FFT worker threads")
    return parser


def _fail(code: int, exc: Exception, extra: dict | None = None) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if extra:
        payload.update(extra)
    print(io.dumps_json(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
    try:
        config = load_config(args)
        return COMMANDS[args.command](config, args.threads)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (CartoonError, DomainError) as exc:
        extra = {"measured": getattr(exc, "measured", None)}
        return _fail(EXIT_MODEL, exc, extra)
    except GridMismatch as exc:
        return _fail(EXIT_DATA, exc)
    except (NotAFrame, CGNotConverged, NonConvergent, EquivalenceViolated) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except ShearletError as exc:
        return _fail(EXIT_NUMERIC, exc)


if __name__ == "__main__":
    sys.exit(main())
