"""Command-line front end: classify | solve | iterate | verify | perpetuity.

One JSON config file describes a problem (measure, forcing term, grids,
solver settings, seed); flags override config values.  Outputs are CSV (or
JSON with ``--format json``) files with a provenance comment, plus JSON
verdicts on stdout.  Identical config + seed + flags give byte-identical
outputs.

Exit codes: 0 ok, 1 parse error, 2 invalid measure, 3 critical regime,
4 inadmissible forcing term, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .closedform import ClosedFormFn, fn_from_json
from .errors import (
    CriticalRegime,
    InvalidMeasure,
    NonzeroMeanInhomogeneity,
    RandRefineError,
)
from .gridfn import GridFn
from .measure import Regime, classify_regime, measure_from_json
from .perpetuity import estimate_cdf, estimate_charfn
from .picard import differentiate, picard_iterate
from .spectrum import (
    EXACT,
    MonteCarloStrategy,
    invert_spectrum,
    solve_spectrum,
    symmetric_grid,
)
from .verify import residual_time

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVALID_MEASURE = 2
EXIT_CRITICAL = 3
EXIT_BAD_FORCING = 4
EXIT_NUMERIC = 5


class ConfigError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _load_config(path: str) -> tuple[dict, str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg, hashlib.sha256(raw).hexdigest()[:12]


def _measure_from(cfg: dict):
    if "measure" not in cfg:
        raise ConfigError("config lacks a 'measure' entry")
    return measure_from_json(json.dumps(cfg["measure"]))


def _forcing_from(cfg: dict) -> ClosedFormFn:
    if "g" not in cfg:
        raise ConfigError("config lacks a 'g' entry")
    return fn_from_json(json.dumps(cfg["g"]))


def _seed(cfg: dict, args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _write_table(
    out_dir: Path,
    name: str,
    header: list[str],
    columns: list[np.ndarray],
    provenance: str,
    fmt: str,
):
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = list(zip(*columns))
    if fmt == "json":
        payload = {
            "provenance": provenance,
            "columns": header,
            "rows": [[float(v) for v in row] for row in rows],
        }
        text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
        path = out_dir / f"{name}.json"
    else:
        lines = [f"# {provenance}", ",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
        path = out_dir / f"{name}.csv"
    path.write_bytes(text.encode("utf-8"))
    return path


def _provenance(config_hash: str, seed: int) -> str:
    return f"randrefine {__version__} seed={seed} config={config_hash}"


def _strategy(cfg: dict, args, seed: int):
    solver = cfg.get("solver", {})
    name = getattr(args, "strategy", None) or solver.get("strategy", "exact")
    if name == "exact":
        return EXACT
    if name == "mc":
        samples = getattr(args, "samples", None) or solver.get("samples", 100_000)
        return MonteCarloStrategy(sample_count=int(samples), seed=seed)
    raise ConfigError(f"unknown strategy {name!r}")


def _x_grid(cfg: dict):
    grid = cfg.get("grid", {})
    x_max = float(grid.get("x_max", 40.0))
    points = int(grid.get("x_points", 4097))
    if points % 2 == 1:
        return symmetric_grid(x_max, points)
    return np.linspace(-x_max, x_max, points)


def _t_grid(cfg: dict):
    grid = cfg.get("grid", {})
    t_min = float(grid.get("t_min", -10.0))
    t_max = float(grid.get("t_max", 10.0))
    step = float(grid.get("t_step", 1e-3))
    n = int(round((t_max - t_min) / step)) + 1
    return np.linspace(t_min, t_max, n)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    cfg, _ = _load_config(args.config)
    measure = _measure_from(cfg)
    report = classify_regime(measure)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=1))
    return EXIT_CRITICAL if report.regime is Regime.CRITICAL else EXIT_OK


def cmd_solve(args) -> int:
    cfg, config_hash = _load_config(args.config)
    measure = _measure_from(cfg)
    g = _forcing_from(cfg)
    seed = _seed(cfg, args)
    solver = cfg.get("solver", {})
    report = classify_regime(measure)
    if args.mass is not None:
        mass = args.mass
    elif "mass" in solver:
        mass = float(solver["mass"])
    else:
        mass = 0.0 if report.regime is Regime.LOG_CONTRACTIVE else 1.0
    eps = args.eps if args.eps is not None else float(solver.get("eps", 1e-10))
    n_max = args.n_max if args.n_max is not None else int(solver.get("n_max", 60))

    xs = _x_grid(cfg)
    ts = _t_grid(cfg)
    spec = solve_spectrum(
        measure, g, mass, xs,
        strategy=_strategy(cfg, args, seed),
        eps=eps, n_max=n_max, regime_report=report,
    )
    recovered = invert_spectrum(spec, ts)

    prov = _provenance(config_hash, seed)
    out = Path(args.out_dir)
    _write_table(out, "spectrum", ["x", "re", "im"],
                 [xs, spec.values.real, spec.values.imag], prov, args.format)
    _write_table(out, "solution", ["t", "f"],
                 [recovered.nodes, recovered.values], prov, args.format)

    verdict = residual_time(measure, recovered, g).to_dict()
    verdict["series_terms"] = spec.truncation.terms_used
    verdict["series_converged"] = spec.truncation.converged
    print(json.dumps(verdict, sort_keys=True, indent=1))
    return EXIT_OK


def cmd_iterate(args) -> int:
    cfg, config_hash = _load_config(args.config)
    measure = _measure_from(cfg)
    g = _forcing_from(cfg)
    seed = _seed(cfg, args)
    it = cfg.get("iterate", {})
    window = tuple(args.window) if args.window else tuple(it.get("window", (-10.0, 10.0)))
    step = args.step if args.step is not None else float(it.get("step", 1e-3))
    tol = args.tol if args.tol is not None else float(it.get("tol", 1e-9))
    max_iter = args.max_iter if args.max_iter is not None else int(it.get("max_iter", 500))

    result = picard_iterate(measure, g, window, step, tol, max_iter)
    deriv = differentiate(result.cdf)

    prov = _provenance(config_hash, seed)
    _write_table(Path(args.out_dir), "cdf", ["t", "F", "f_candidate"],
                 [result.cdf.nodes, result.cdf.values, deriv.values],
                 prov, args.format)
    print(json.dumps(
        {
            "iterations": result.iterations,
            "final_delta": result.final_delta,
            "converged": result.converged,
        },
        sort_keys=True, indent=1,
    ))
    return EXIT_OK


def _load_solution(path: str):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"solution file {path} does not exist")
    if p.suffix == ".json":
        return fn_from_json(p.read_text(encoding="utf-8"))
    ts, vs = [], []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line[0].isalpha():
            continue
        parts = line.split(",")
        ts.append(float(parts[0]))
        vs.append(float(parts[1]))
    if len(ts) < 2:
        raise ConfigError("solution CSV needs at least two rows of t,f")
    t = np.asarray(ts)
    step = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(np.diff(t) - step)) > 1e-9 * abs(step):
        raise ConfigError("solution CSV grid must be uniform")
    return GridFn(float(t[0]), float(t[-1]), float(step), np.asarray(vs), 0.0, 0.0)


def cmd_verify(args) -> int:
    cfg, _ = _load_config(args.config)
    measure = _measure_from(cfg)
    g = _forcing_from(cfg)
    candidate = _load_solution(args.solution)
    report = residual_time(measure, candidate, g)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=1))
    return EXIT_OK


def cmd_perpetuity(args) -> int:
    cfg, config_hash = _load_config(args.config)
    measure = _measure_from(cfg)
    seed = _seed(cfg, args)
    pcfg = cfg.get("perpetuity", {})
    what = args.what or pcfg.get("what", "auto")
    if what == "auto":
        regime = classify_regime(measure).regime
        what = "charfn" if regime is Regime.LOG_EXPANSIVE else "cdf"
    samples = args.samples or int(pcfg.get("samples", 100_000))
    depth = args.depth if args.depth is not None else pcfg.get("depth")

    prov = _provenance(config_hash, seed)
    out = Path(args.out_dir)
    if what == "charfn":
        x_max = float(pcfg.get("x_max", 10.0))
        points = int(pcfg.get("x_points", 201))
        xs = symmetric_grid(x_max, points) if points % 2 else np.linspace(-x_max, x_max, points)
        est = estimate_charfn(measure, xs, samples, depth=depth, rng_seed=seed)
        _write_table(out, "charfn", ["x", "re", "im", "stderr"],
                     [est.charfn_x, est.charfn_values.real,
                      est.charfn_values.imag, est.charfn_stderr],
                     prov, args.format)
    elif what == "cdf":
        t_min = float(pcfg.get("t_min", -10.0))
        t_max = float(pcfg.get("t_max", 10.0))
        points = int(pcfg.get("t_points", 2001))
        ts = np.linspace(t_min, t_max, points)
        est = estimate_cdf(measure, ts, samples, depth=depth, rng_seed=seed)
        _write_table(out, "perpetuity_cdf", ["t", "phi"],
                     [est.cdf_t, est.cdf_values], prov, args.format)
    else:
        raise ConfigError(f"unknown perpetuity output {what!r}")
    print(json.dumps({"samples": samples, "depth": est.depth}, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randrefine",
        description="Solve, simulate and verify refinement identities "
                    "with random affine maps.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="JSON problem description")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=".")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("classify", help="regime report as JSON")
    common(p)
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("solve", help="spectral solve + inversion")
    common(p)
    p.add_argument("--mass", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--strategy", choices=("exact", "mc"), default=None)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("iterate", help="CDF-level fixed-point iteration")
    common(p)
    p.add_argument("--window", type=float, nargs=2, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.set_defaults(handler=cmd_iterate)

    p = sub.add_parser("verify", help="residual verdict for a candidate solution")
    common(p)
    p.add_argument("solution", help="candidate: .json closed form or .csv t,f grid")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("perpetuity", help="Monte Carlo charfn / limit CDF")
    common(p)
    p.add_argument("--what", choices=("charfn", "cdf", "auto"), default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.set_defaults(handler=cmd_perpetuity)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidMeasure as exc:
        print(f"invalid measure: {exc}", file=sys.stderr)
        return EXIT_INVALID_MEASURE
    except CriticalRegime as exc:
        print(f"critical regime: {exc}", file=sys.stderr)
        return EXIT_CRITICAL
    except NonzeroMeanInhomogeneity as exc:
        print(f"inadmissible forcing term: {exc}", file=sys.stderr)
        return EXIT_BAD_FORCING
    except RandRefineError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
