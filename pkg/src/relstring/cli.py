"""Command-line runner.

Exit codes: 0 success, 1 failed acceptance check, 2 bad configuration,
3 scenario could not be built, 4 numerical failure (the error class name is
printed on standard error).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import scenarios as sc
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .curves import PiecewiseLinearLoop, SplineLoop, uniform_grid
from .dalembert import ConstraintMode, DAlembertPair, decompose, detect_collapse, evaluate_state
from .diagnostics import DiagnosticsReport, diagnose
from .errors import BadEps, BadParams, NotConvex, RelStringError

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_SCENARIO = 3
EXIT_NUMERIC = 4


class ConfigError(Exception):
    pass


class ScenarioError(Exception):
    pass


def fmt(value: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(value))


def _json_number(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _json_number(obj.item())
    return _json_number(obj)


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _parse_pairs(items: list[str], what: str) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"{what} must look like name=value, got {item!r}")
        out[key.strip()] = _parse_value(value.strip())
    return out


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None
    parameters: dict
    input: str | None
    grid: int
    t0: float
    t1: float
    frames: int
    out: str
    format: str = "csv"
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)

    def __post_init__(self):
        if (self.scenario is None) == (self.input is None):
            raise ConfigError("give exactly one of --scenario and --input")
        if self.grid < 8:
            raise ConfigError("--grid must be at least 8")
        if self.frames < 1:
            raise ConfigError("--frames must be at least 1")
        if not self.t0 <= self.t1:
            raise ConfigError("--t0 must not exceed --t1")
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")

    def times(self) -> np.ndarray:
        if self.frames == 1:
            return np.array([self.t0])
        return np.linspace(self.t0, self.t1, self.frames)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"] = self.tolerances.as_dict()
        return d


def read_sampled_curve(path: str | Path) -> tuple[SplineLoop, SplineLoop | None]:
    """Read ``s, x1..xn[, v1..vn]`` from CSV; the period is the grid extent
    plus one spacing."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ConfigError(f"{path}: no data rows")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "s":
        raise ConfigError(f"{path}: first column must be 's'")
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    vcols = [i for i, h in enumerate(header) if h.startswith("v")]
    if not xcols or (vcols and len(vcols) != len(xcols)):
        raise ConfigError(f"{path}: need columns x1..xn and optionally v1..vn")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    s = data[:, 0]
    steps = np.diff(s)
    if len(s) < 4 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
        raise ConfigError(f"{path}: s must be a uniform increasing grid")
    if abs(s[0]) > 1e-12 * steps.mean():
        raise ConfigError(f"{path}: s must start at 0")
    period = float(s[-1] + steps.mean())
    curve = SplineLoop(data[:, xcols], period)
    velocity = SplineLoop(data[:, vcols], period) if vcols else None
    return curve, velocity


def build_pair(config: RunConfig) -> tuple[DAlembertPair, dict, dict]:
    """Pair, scenario parameters and expected facts for a run."""
    if config.scenario is not None:
        try:
            scenario = sc.build(config.scenario, **config.parameters)
        except (KeyError, TypeError, ValueError, BadParams, BadEps, NotConvex) as exc:
            raise ScenarioError(f"{type(exc).__name__}: {exc}") from exc
        return scenario.pair, scenario.spec.parameters, scenario.spec.expected
    from .gauge import conformal_normalize

    curve, velocity = read_sampled_curve(config.input)
    # resample densely so the output spline is not the accuracy bottleneck;
    # gauge checks on sampled data use the spline tolerance
    n = max(config.grid, 4 * len(curve.samples), 1024)
    tol = config.tolerances.with_overrides({"gauge": config.tolerances.sampled_gauge})
    new_curve, new_velocity, report = conformal_normalize(curve, velocity, n, tol)
    pair = decompose(new_curve, new_velocity, tol)
    return pair, {"input": str(config.input)}, {"period": report.energy_parameter}


def _frame_columns(dim: int) -> list[str]:
    cols = ["x"]
    for name in ("gamma", "gammat", "gammax"):
        cols += [f"{name}_{i + 1}" for i in range(dim)]
    return cols


def _frame_table(pair: DAlembertPair, t: float, n: int) -> np.ndarray:
    state = evaluate_state(pair, t, n)
    return np.column_stack([state.x, state.gamma, state.gamma_t, state.gamma_x])


def _threads() -> int:
    raw = os.environ.get("RELSTRING_THREADS", "")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"RELSTRING_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError("RELSTRING_THREADS must be at least 1")
    return value


def _write_table(path: Path, columns: list[str], rows, fmt_kind: str) -> None:
    if fmt_kind == "csv":
        with open(path, "w", newline="") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
    else:
        records = [{c: _json_number(float(v)) for c, v in zip(columns, row)} for row in rows]
        with open(path, "w") as fh:
            json.dump(records, fh, indent=1)
            fh.write("\n")


def run(config: RunConfig) -> Path:
    pair, params, expected = build_pair(config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    times = config.times()
    n = config.grid
    ext = config.format

    def job(t):
        return _frame_table(pair, t, n), diagnose(pair, t, n, config.tolerances)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(job, times))

    columns = _frame_columns(pair.dim)
    for k, (table, _) in enumerate(results):
        _write_table(out / f"frames_{k:04d}.{ext}", columns, table, ext)
    _write_table(out / f"diagnostics.{ext}", DiagnosticsReport.columns(), [r.row() for _, r in results], ext)

    manifest = {
        "version": __version__,
        "config": config.as_dict(),
        "scenario_parameters": params,
        "expected": expected,
        "period": pair.period,
        "mode": pair.mode.value,
        "dimension": pair.dim,
        "times": list(times),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _load_polyline(spec: dict) -> PiecewiseLinearLoop:
    try:
        return PiecewiseLinearLoop(spec["breakpoints"], spec["slopes"], spec.get("origin"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad polyline: {exc}") from exc


def wiggly(path: str, ks: list[int], eta: float | None, grid: int, out: str | None, stream=None) -> list[dict]:
    """Approximate a sub-unit-speed polyline pair by smooth unit-speed pairs
    and print the convergence table."""
    from .wiggly import SmoothingParams, approximate_string, evolution_sup_distance, zigzag

    stream = sys.stdout if stream is None else stream
    with open(path) as fh:
        data = json.load(fh)
    if "a" in data:
        a = _load_polyline(data["a"])
        b = _load_polyline(data.get("b", data["a"]))
    else:
        a = b = _load_polyline(data)
    try:
        target = DAlembertPair(a, b, ConstraintMode.SUB_UNIT)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    E = target.period
    times = uniform_grid(E, 16)
    settings = [SmoothingParams.auto(k, zigzag(a, k), zigzag(b, k), eta=eta) for k in ks]
    rows = []
    print("k,bound,eta,ell,sup_distance", file=stream)
    for k, params in zip(ks, settings):
        pair = approximate_string(a, b, k, params)
        dist = evolution_sup_distance(pair, target, times, grid)
        bound = E / k + 2 * params.eta
        rows.append({"k": k, "bound": bound, "eta": params.eta, "ell": params.ell, "sup_distance": dist})
        print(f"{k},{fmt(bound)},{fmt(params.eta)},{fmt(params.ell)},{fmt(dist)}", file=stream)
        if out is not None:
            outdir = Path(out)
            outdir.mkdir(parents=True, exist_ok=True)
            x = uniform_grid(E, grid)
            dim = pair.dim
            cols = ["x"] + [f"a_{i + 1}" for i in range(dim)] + [f"b_{i + 1}" for i in range(dim)]
            _write_table(outdir / f"wiggly_k{k:03d}.csv", cols, np.column_stack([x, pair.a(x), pair.b(x)]), "csv")
    return rows


def profile(name: str, params: dict, fractions: list[float], grid: int, stream=None) -> list[dict]:
    """Ratios ``|gamma - p| / (t_bar - t)`` before the collapse of a scenario."""
    from .convexity2d import collapse_profile
    from .errors import NoCollapseAtTbar

    stream = sys.stdout if stream is None else stream
    try:
        scenario = sc.build(name, **params)
    except (KeyError, TypeError, ValueError, BadParams, BadEps, NotConvex) as exc:
        raise ScenarioError(f"{type(exc).__name__}: {exc}") from exc
    t_bar = scenario.spec.expected.get("collapse_time")
    if t_bar is None:
        raise ScenarioError(f"scenario {name!r} has no collapse time")
    pair = scenario.pair
    check = detect_collapse(pair, t_bar, grid)
    if not check.collapsed:
        raise NoCollapseAtTbar(f"slice at t={t_bar:g} has radius {check.max_deviation:.3e}")
    scale = pair.period if name != "square" else scenario.spec.parameters["L"]
    times = [t_bar - f * scale for f in fractions]
    rows = []
    print("delta,max_ratio,min_ratio,spread,deviation_over_delta", file=stream)
    for s in collapse_profile(pair, t_bar, check.point, times, grid):
        rows.append({"delta": s.delta, "max_ratio": s.max_ratio, "min_ratio": s.min_ratio, "spread": s.spread})
        print(f"{fmt(s.delta)},{fmt(s.max_ratio)},{fmt(s.min_ratio)},{fmt(s.spread)},{fmt(s.deviation / s.delta)}",
              file=stream)
    return rows


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relstring", description="Closed relativistic string evolution.")
    parser.add_argument("--version", action="version", version=f"relstring {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve a scenario or sampled curve and write frames")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="registered scenario name")
    src.add_argument("--input", help="CSV with header s,x1..xn[,v1..vn]")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--out", default="relstring_out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")

    w = sub.add_parser("wiggly", help="smooth unit-speed approximations of a polyline pair")
    w.add_argument("input", help="JSON polyline: breakpoints, slopes, origin (or keys a and b)")
    w.add_argument("--k", type=_csv_list(int), default=[2, 4, 8, 16])
    w.add_argument("--eta", type=float, default=None)
    w.add_argument("--grid", type=int, default=512)
    w.add_argument("--out", default=None, help="directory for smoothed pair samples")

    f = sub.add_parser("profile", help="collapse profile ratios of a scenario")
    f.add_argument("--scenario", default="oval")
    f.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    f.add_argument("--fractions", type=_csv_list(float), default=[0.04, 0.02, 0.01])
    f.add_argument("--grid", type=int, default=1024)

    sub.add_parser("verify", help="run the acceptance suite")
    sub.add_parser("list-scenarios", help="print scenario names")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            tol = DEFAULT_TOLERANCES.with_overrides(_parse_pairs(args.tol, "--tol"))
            config = RunConfig(
                scenario=args.scenario,
                parameters=_parse_pairs(args.param, "--param"),
                input=args.input,
                grid=args.grid,
                t0=args.t0,
                t1=args.t1,
                frames=args.frames,
                out=args.out,
                format=args.format,
                tolerances=tol,
            )
            run(config)
        elif args.command == "wiggly":
            wiggly(args.input, args.k, args.eta, args.grid, args.out)
        elif args.command == "profile":
            profile(args.scenario, _parse_pairs(args.param, "--param"), args.fractions, args.grid)
        elif args.command == "verify":
            from .acceptance import run_all

            results = run_all()
            return 0 if all(r.passed for r in results) else EXIT_FAIL
        elif args.command == "list-scenarios":
            for name in sc.scenario_names():
                print(name)
    except (ConfigError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"relstring: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"relstring: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"relstring: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except RelStringError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
