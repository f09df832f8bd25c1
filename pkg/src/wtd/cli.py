"""Command-line front end: ``wtd {simulate, iet-run, lyapunov, fit, reproduce}``.

Exit codes: 0 success, 1 internal error, 2 configuration or domain error,
3 insufficient data.  Every artifact gets a ``<artifact>.manifest.json``
beside it (config echo, code version, wall time).  Artifacts themselves
depend only on the config and seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from fractions import Fraction
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import analysis, billiard, errors, iet as iet_mod, renorm

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3
REPRODUCE_BAND = (0.5, 0.8)
REQUIRED = {
    "simulate": ("a", "b", "t_max", "out"),
    "iet-run": ("definition", "n", "out"),
    "lyapunov": ("definition", "out"),
    "fit": ("input", "kind", "out"),
    "reproduce": (),
}
SIMULATE_COLUMNS = ("t", "d_now", "d_max", "avg_d")

DOMAIN_ERRORS = (errors.OutOfDomain, errors.ConfigError, errors.Reducible,
                 errors.NonPositiveLength, errors.OutOfRange, errors.SingularPoint,
                 errors.SingularAt, errors.ConnectionEncountered, errors.Degenerate,
                 errors.GridMismatch, errors.SingularTrajectory, errors.NumericalDegeneracy,
                 errors.Timeout)


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise errors.ConfigError(message)


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be lo:hi, got {text!r}")
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError(f"window needs 0 < lo < hi, got {text!r}")
    return lo, hi


def _count(text: str) -> int:
    v = float(text)
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(v)


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _point(text: str):
    return Fraction(text) if "/" in text else float(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wtd", description="Wind-tree billiards, interval exchanges and "
                "renormalization exponents.")
    p.add_argument("--version", action="version", version=f"%(prog)s {version()}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    # required options are checked after a --config file is merged

    s = sub.add_parser("simulate", help="distance series of wind-tree trajectories (CSV)")
    s.add_argument("--a", type=float, help="obstacle width in (0, 1)")
    s.add_argument("--b", type=float, help="obstacle height in (0, 1)")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, help="direction angle in (0, pi/2)")
    g.add_argument("--n-directions", type=_count,
                   help="seeded uniform directions; the CSV holds the pointwise median")
    s.add_argument("--t-max", type=float, help="time horizon")
    s.add_argument("--seed", type=_seed, default=0, help="RNG key (default 0)")
    s.add_argument("--free", action="store_true", help="disable reflections")
    s.add_argument("--out", help="output CSV")

    s = sub.add_parser("iet-run", help="return cycles of an IET orbit (CSV)")
    s.add_argument("--def", dest="definition", help="IET definition (JSON)")
    s.add_argument("--x", type=_point, default=0.0, help="base point, decimal or p/q (default 0)")
    s.add_argument("--n", type=_count, help="number of returns")
    s.add_argument("--grid-ratio", type=float, default=analysis.GRID_RATIO,
                   help="geometric row spacing in n (default 1.05)")
    s.add_argument("--every", action="store_true", help="one row per return")
    s.add_argument("--out", help="output CSV")

    s = sub.add_parser("lyapunov", help="Zorich-renormalization growth rates (JSON)")
    s.add_argument("--def", dest="definition", help="IET definition (JSON)")
    s.add_argument("--steps", type=_count, default=20000, help="Zorich steps (default 20000)")
    s.add_argument("--seed", type=_seed, default=0,
                   help="draws f when the definition has no cocycle (default 0)")
    s.add_argument("--out", help="output JSON")

    s = sub.add_parser("fit", help="log-log exponent of a series (JSON)")
    s.add_argument("--in", dest="input", help="series CSV with a header row")
    s.add_argument("--kind",
                   help="cyclesum, pairingabs, maxdistance or avgdistance")
    s.add_argument("--window", type=_window, default=None,
                   help="lo:hi (default: last two decades)")
    s.add_argument("--seed", type=_seed, default=0, help="bootstrap RNG key (default 0)")
    s.add_argument("--out", help="output JSON")

    s = sub.add_parser("reproduce", help="median diffusion exponents over seeded directions")
    s.add_argument("--a", type=float, default=0.5, help="obstacle width (default 0.5)")
    s.add_argument("--b", type=float, default=0.5, help="obstacle height (default 0.5)")
    s.add_argument("--t-max", type=float, default=1e7, help="time horizon (default 1e7)")
    s.add_argument("--n-directions", type=_count, default=64, help="directions (default 64)")
    s.add_argument("--window", type=_window, default=None,
                   help="fit window lo:hi (default t_max/1e3:t_max)")
    s.add_argument("--seed", type=_seed, default=7, help="RNG key (default 7)")
    s.add_argument("--free", action="store_true", help="disable reflections")
    s.add_argument("--out", default="exponents.json", help="output JSON (default exponents.json)")

    for sp in sub.choices.values():
        sp.add_argument("--config", help="JSON file of option values; unknown keys are rejected")
    return p


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace,
                  argv: list[str]) -> argparse.Namespace:
    """Merge a ``--config`` file (options given on the command line win) and
    check that every required option is set."""
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise errors.ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        if data.pop("subcommand", args.subcommand) != args.subcommand:
            raise errors.ConfigError("config file is for another subcommand")
        sp = parser._subparsers._group_actions[0].choices[args.subcommand]
        known = {}
        for a in sp._actions:
            if a.dest in ("help", "config"):
                continue
            known[a.dest] = a
            for o in a.option_strings:
                known[o.lstrip("-").replace("-", "_")] = a
        unknown = set(data) - set(known)
        if unknown:
            raise errors.ConfigError(f"unknown config keys: {sorted(unknown)}")
        given = {a.dest for a in sp._actions for o in a.option_strings
                 if any(x == o or x.startswith(o + "=") for x in argv)}
        for k, v in data.items():
            act = known[k]
            if act.dest in given:
                continue
            if isinstance(act, argparse._StoreTrueAction):
                if not isinstance(v, bool):
                    raise errors.ConfigError(f"{k} must be true or false")
            elif v is not None and act.type is not None:
                text = ":".join(map(str, v)) if isinstance(v, list) else str(v)
                try:
                    v = act.type(text)
                except (argparse.ArgumentTypeError, ValueError) as e:
                    raise errors.ConfigError(f"bad value for {k}: {e}")
            setattr(args, act.dest, v)
    missing = [k for k in REQUIRED[args.subcommand] if getattr(args, k, None) is None]
    if missing:
        raise errors.ConfigError(f"missing options: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    if args.subcommand == "simulate" and (args.theta is None) == (args.n_directions is None):
        raise errors.ConfigError("exactly one of --theta and --n-directions is required")
    return args


# ---------------------------------------------------------------------------
# output helpers


def _schema(name: str) -> dict:
    return json.loads(resources.files("wtd").joinpath("data", "schemas", f"{name}.schema.json")
                      .read_text())


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


def write_json(path: Path, payload: dict, schema: str) -> None:
    import jsonschema

    payload = _clean(payload)
    jsonschema.validate(payload, _schema(schema))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_manifest(artifact: Path, args: argparse.Namespace, wall: float, extra=None) -> None:
    config = {k: _clean(v) for k, v in sorted(vars(args).items()) if k != "config"}
    payload = {"artifact": artifact.name, "config": config, "version": version(),
               "wall_time_s": wall}
    if extra:
        payload.update(extra)
    write_json(artifact.with_name(artifact.name + ".manifest.json"), payload, "manifest")


def _file_hash(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> tuple[Path, dict]:
    params = billiard.validate_params(args.a, args.b)
    if args.t_max <= billiard.T0:
        raise errors.OutOfDomain(f"t_max must exceed {billiard.T0}")
    reflect = not args.free
    out = Path(args.out)
    if args.theta is not None:
        if not 0 < args.theta < math.pi / 2:
            raise errors.OutOfDomain("theta must lie in (0, pi/2)")
        rng = np.random.Generator(np.random.Philox(key=args.seed))
        state = billiard.random_start(params, args.theta, rng)
        stats = billiard.advance(state, params, args.t_max, reflections=reflect)
        rows = zip(stats.t, stats.d_now, stats.d_max, stats.avg_d)
        extra = {"events": stats.events, "theta": args.theta}
    else:
        lo = args.t_max / 1e3 if args.t_max / 1e3 >= 10 * billiard.T0 else 10 * billiard.T0
        est = billiard.estimate_diffusion_exponents(
            params, args.n_directions, args.t_max, args.seed, (lo, args.t_max),
            reflections=reflect, keep_stats=True)
        mats = [d.stats.samples for d in est.directions]
        m = min(len(s) for s in mats)
        stack = np.stack([s[:m] for s in mats])
        cols = [billiard.SAMPLE_COLUMNS.index(c) for c in SIMULATE_COLUMNS]
        med = np.median(stack[:, :, cols], axis=0)
        rows = med.tolist()
        extra = {"directions": [{"index": d.index, "theta": d.theta, "events": d.events,
                                 "resampled": d.resampled} for d in est.directions],
                 "failed": est.failed}
    write_csv(out, SIMULATE_COLUMNS, rows)
    return out, extra


def cmd_iet_run(args) -> tuple[Path, dict]:
    it, coc = iet_mod.load_definition(args.definition)
    if coc is None:
        coc = iet_mod.Cocycle.constant(it.alphabet)
    x = args.x
    k, d = it.k, coc.d
    # per-letter indicator columns ride along with f, giving exact counts
    values = {a: tuple(coc.values[a]) + tuple(int(a == b) for b in it.alphabet)
              for a in it.alphabet}
    aug = iet_mod.Cocycle(d + k, values)
    ratio = None if args.every else args.grid_ratio
    if ratio is not None and ratio <= 1:
        raise errors.ConfigError("grid ratio must exceed 1")
    header = (["n"] + [f"count_{a}" for a in it.alphabet] + [f"pairing_{i}" for i in range(d)]
              + ["cycle_sum"])
    rows = []
    total = 0
    nxt = 1
    stopped = None
    try:
        for bl in iet_mod.pairing_blocks(it, x, args.n, aug):
            p = bl.pairings
            cs = np.cumsum(np.abs(p[:, :d]).max(axis=1)) + total
            end = bl.start + len(p)
            if ratio is None:
                idx = np.arange(len(p))
            else:
                sel = []
                while nxt <= end:
                    sel.append(nxt)
                    nxt = max(nxt + 1, int(round(nxt * ratio)))
                if end == args.n and (not sel or sel[-1] != end):
                    sel.append(end)
                idx = np.array(sel, dtype=np.int64) - bl.start - 1
            for i in idx:
                rows.append([bl.start + 1 + int(i)] + p[i, d:].tolist() + p[i, :d].tolist()
                            + [int(cs[i])])
            total = int(cs[-1])
    except errors.SingularAt as e:
        stopped = str(e)
    out = Path(args.out)
    write_csv(out, header, rows)
    extra = {"definition_sha256": _file_hash(args.definition), "stopped": stopped}
    if stopped:
        extra["error"] = f"SingularAt: {stopped}; partial output written"
    return out, extra


def _random_cocycle(it, seed: int) -> iet_mod.Cocycle:
    rng = np.random.Generator(np.random.Philox(key=seed))
    while True:
        v = rng.integers(-3, 4, size=it.k)
        if np.gcd.reduce(np.abs(v)) == 1:
            return iet_mod.Cocycle.from_values({a: int(c) for a, c in zip(it.alphabet, v)})


def cmd_lyapunov(args) -> tuple[Path, dict]:
    it, coc = iet_mod.load_definition(args.definition)
    drawn = coc is None
    if drawn:
        coc = _random_cocycle(it, args.seed)
    res = renorm.lyapunov_ratio(it, coc, args.steps)
    payload = {
        "lambda_f": res.lambda_f_components,
        "lambda_top": res.lambda_top,
        "ratio": res.ratio,
        "ratio_components": res.ratio_components,
        "stderr": res.stderr,
        "beta": res.beta,
        "steps": res.steps,
        "rauzy_steps": res.rauzy_steps,
        "projected": res.projected,
        "log_scale": res.log_scale,
        "cocycle": {a: list(v) for a, v in coc.values.items()},
        "cocycle_drawn": drawn,
        "seed": args.seed,
        "definition_sha256": _file_hash(args.definition),
    }
    out = Path(args.out)
    write_json(out, payload, "lyapunov")
    return out, {}


_KIND_COLUMNS = {
    analysis.SeriesKind.CYCLE_SUM: ("cycle_sum", "value"),
    analysis.SeriesKind.MAX_DISTANCE: ("d_max", "value"),
    analysis.SeriesKind.AVG_DISTANCE: ("avg_d", "value"),
    analysis.SeriesKind.PAIRING_ABS: ("pairing_abs", "value"),
}


def read_series(path: str, kind: analysis.SeriesKind) -> analysis.DiffusionSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise errors.InsufficientData(f"{path} has no data rows")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as e:
        raise errors.ConfigError(f"non-numeric entry in {path}: {e}")
    if data.ndim != 2 or data.shape[1] != len(header):
        raise errors.ConfigError(f"ragged CSV {path}")
    x = data[:, 0]
    col = next((header.index(c) for c in _KIND_COLUMNS[kind] if c in header), None)
    if col is None and kind == analysis.SeriesKind.PAIRING_ABS:
        pc = [i for i, h in enumerate(header) if h.startswith("pairing_")]
        if pc:
            y = np.abs(data[:, pc]).max(axis=1)
            return analysis.DiffusionSeries(x, y, kind)
    if col is None:
        if len(header) == 2:
            col = 1
        else:
            raise errors.ConfigError(f"no column for kind {kind.value} in {header}")
    return analysis.DiffusionSeries(x, data[:, col], kind)


def cmd_fit(args) -> tuple[Path, dict]:
    try:
        kind = analysis.SeriesKind.parse(args.kind)
    except ValueError as e:
        raise errors.ConfigError(str(e))
    try:
        series = read_series(args.input, kind)
    except ValueError as e:
        if isinstance(e, errors.WtdError):
            raise
        raise errors.ConfigError(str(e))
    fit = analysis.fit_exponent(series, args.window, seed=args.seed)
    out = Path(args.out)
    payload = fit.as_dict()
    payload["input_sha256"] = _file_hash(args.input)
    write_json(out, payload, "fit")
    return out, {}


def cmd_reproduce(args) -> tuple[Path, dict]:
    params = billiard.validate_params(args.a, args.b)
    window = args.window or (args.t_max / 1e3, args.t_max)
    est = billiard.estimate_diffusion_exponents(params, args.n_directions, args.t_max,
                                                args.seed, window, reflections=not args.free)
    lo, hi = REPRODUCE_BAND
    payload = est.as_dict()
    payload["n_completed"] = payload.pop("n_directions")
    payload.update({
        "a": args.a, "b": args.b, "t_max": args.t_max, "n_directions": args.n_directions,
        "window": list(window), "seed": args.seed, "reflections": not args.free,
        "band": [lo, hi],
        "max_pass": bool(lo <= est.max_exp <= hi),
        "avg_pass": bool(lo <= est.avg_exp <= hi),
    })
    payload["pass"] = payload["max_pass"] and payload["avg_pass"]
    out = Path(args.out)
    write_json(out, payload, "exponents")
    return out, {}


COMMANDS = {"simulate": cmd_simulate, "iet-run": cmd_iet_run, "lyapunov": cmd_lyapunov,
            "fit": cmd_fit, "reproduce": cmd_reproduce}


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    t0 = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, args, argv)
        out, extra = COMMANDS[args.subcommand](args)
        write_manifest(out, args, time.perf_counter() - t0, extra)
        if extra.get("error"):
            print(f"wtd: {extra['error']}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except errors.InsufficientData as e:
        print(f"wtd: insufficient data: {e}", file=sys.stderr)
        return EXIT_DATA
    except DOMAIN_ERRORS as e:
        print(f"wtd: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        print(f"wtd: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"wtd: invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        print(f"wtd: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
