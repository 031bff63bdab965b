"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 impossible post-selection,
4 I/O failure. Every option can also come from ``--config FILE`` (a JSON
object whose keys mirror the long option names); explicit flags win.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import montecarlo, pigeonhole, weakcoupling
from .errors import (
    ImpossiblePostselectionError,
    PigeonsimError,
    UndefinedWeakValueError,
)
from .qstate import RegisterShape, basis_state, fourier_basis, plus_state, tensor
from .tolerances import max_dim

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IMPOSSIBLE = 3
EXIT_IO = 4

COMMANDS = ("pigeonhole", "patterns", "general", "montecarlo", "deflection", "spectra")
DEFAULT_LAMBDAS = (1e-3, 2e-3, 5e-3, 1e-2)
PATTERN_LIMITS = (5, 3)  # exhaustive outcome enumeration up to N=5, M=3


class InputError(ValueError):
    pass


def _sig15(obj: Any) -> Any:
    """Round floats to 15 significant digits; non-finite floats become null."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.15g}")
    if isinstance(obj, (np.floating,)):
        return _sig15(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _sig15(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sig15(v) for v in obj]
    return obj


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.15g}"
    return str(x)


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _int_list(text, what: str) -> list[int]:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).replace(" ", "").split(",") if t != ""]
    try:
        return [int(t) for t in items]
    except (TypeError, ValueError):
        raise InputError(f"{what} must be a comma-separated list of integers, got {text!r}") from None


def _float_list(text, what: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).replace(" ", "").split(",") if t != ""]
    try:
        return [float(t) for t in items]
    except (TypeError, ValueError):
        raise InputError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def _pair(text) -> tuple[int, int] | None:
    if text is None:
        return None
    vals = _int_list(text, "--pair")
    if len(vals) != 2:
        raise InputError(f"--pair needs two particle labels, got {text!r}")
    return vals[0], vals[1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pigeonsim",
        description="Pre- and post-selected ensembles and the quantum pigeonhole effect.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        p.add_argument("--config", help="JSON file with default values for any option")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--out", help="output file (a .json side file is written next to CSV output)")
        if scenario:
            p.add_argument("--n", type=int, help="number of particles")
            p.add_argument("--m", type=int, help="number of boxes")
            p.add_argument("--outcome", help="final outcome per particle, e.g. 0,0,0")

    p = sub.add_parser("pigeonhole", help="same/different pattern for one post-selection")
    common(p)
    p.add_argument(
        "--pre",
        help="pre-selection: 'plus' (default), 'basis:k1,k2,..' or 'fourier:m1,m2,..'",
    )

    p = sub.add_parser("patterns", help="patterns for every final outcome")
    common(p)

    p = sub.add_parser("general", help="N particles in M boxes, outcome (0,...,0)")
    common(p)

    p = sub.add_parser("montecarlo", help="sampled sequential measurements vs exact oracle")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--measure", action="append", metavar="I,J",
        help="intermediate same/different measurement on a pair (repeatable, in order)",
    )
    p.add_argument("--workers", type=int, help="threads used for sampling")

    for name, helptext in (
        ("deflection", "pointer shift against coupling strength"),
        ("spectra", "pointer line shapes read as spectral lines"),
    ):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--lambdas", help="comma-separated coupling strengths")
        p.add_argument("--sigma", type=float)
        p.add_argument("--pair", help="pair to report, e.g. 1,2")
        p.add_argument("--no-postselect", action="store_true", default=None,
                       help="trace out the arms instead of post-selecting")
        if name == "spectra":
            p.add_argument("--points", type=int, help="samples per line shape")
            p.add_argument("--xmin", type=float)
            p.add_argument("--xmax", type=float)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    opts = {}
    if args.config:
        text = Path(args.config).read_text()
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        opts[key] = value
    return opts


def _scenario(opts: dict, default_n=3, default_m=2) -> pigeonhole.Scenario:
    n = int(opts.get("n", default_n))
    m = int(opts.get("m", default_m))
    if n < 2:
        raise InputError("need at least 2 particles")
    outcome = _int_list(opts.get("outcome"), "--outcome")
    return pigeonhole.build_scenario(n, m, outcome)


def _pre_state(spec, shape: RegisterShape):
    if spec is None or spec == "plus":
        return tensor([plus_state(shape.num_boxes)] * shape.num_particles)
    kind, _, rest = str(spec).partition(":")
    idx = _int_list(rest, "--pre")
    if len(idx) != shape.num_particles:
        raise InputError(f"--pre needs {shape.num_particles} entries, got {len(idx)}")
    if kind == "basis":
        return tensor([basis_state(shape.num_boxes, k) for k in idx])
    if kind == "fourier":
        basis = fourier_basis(shape.num_boxes)
        if any(not 0 <= k < shape.num_boxes for k in idx):
            raise InputError(f"--pre fourier indices must lie in 0..{shape.num_boxes - 1}")
        return tensor([basis[k] for k in idx])
    raise InputError(f"unknown --pre {spec!r}")


def _pattern_rows(s: pigeonhole.Scenario):
    pattern = pigeonhole.correlation_pattern(s)
    amps = {pair: abs(pigeonhole.pair_amplitude(s, *pair)) for pair in s.shape.pairs()}
    return pattern, amps


def cmd_pigeonhole(opts: dict):
    s = _scenario(opts)
    if opts.get("pre") not in (None, "plus"):
        s = pigeonhole.Scenario(s.shape, _pre_state(opts["pre"], s.shape), s.post, s.outcome)
    pattern, amps = _pattern_rows(s)
    report = {
        "command": "pigeonhole",
        "scenario": {**s.describe(), "pre": opts.get("pre", "plus")},
        "pattern": pattern.to_json(),
        "residuals": {
            "pair_amplitudes": [{"pair": list(p), "abs_amplitude": a} for p, a in amps.items()],
            "max_abs_amplitude": max(amps.values()),
            "roots_of_unity_residual": pigeonhole.roots_of_unity_residual(s.shape.num_boxes),
        },
    }
    rows = [
        [f"{i}-{j}", r.verdict.value, r.p_same, amps[(i, j)]]
        for (i, j), r in pattern.pairs.items()
    ]
    return report, _csv(["pair", "verdict", "p_same", "abs_amplitude"], rows)


def cmd_patterns(opts: dict):
    n = int(opts.get("n", 3))
    m = int(opts.get("m", 2))
    if n < 2:
        raise InputError("need at least 2 particles")
    if n > PATTERN_LIMITS[0] or m > PATTERN_LIMITS[1]:
        raise InputError(
            f"exhaustive enumeration is limited to N <= {PATTERN_LIMITS[0]}, M <= {PATTERN_LIMITS[1]}"
        )
    patterns = pigeonhole.all_patterns(n, m)
    report = {
        "command": "patterns",
        "num_particles": n,
        "num_boxes": m,
        "outcomes": [
            {"outcome": list(o), "pattern": p.to_json()} for o, p in patterns.items()
        ],
    }
    rows = [
        ["-".join(map(str, o)), f"{i}-{j}", r.verdict.value, r.p_same]
        for o, p in patterns.items()
        for (i, j), r in p.pairs.items()
    ]
    return report, _csv(["outcome", "pair", "verdict", "p_same"], rows)


def general_grid(max_n: int = 6) -> list[tuple[int, int]]:
    cap = max_dim()
    return [(n, m) for n in range(3, max_n + 1) for m in range(2, n) if m**n <= cap]


def cmd_general(opts: dict):
    if "n" in opts or "m" in opts:
        n = int(opts.get("n", 3))
        m = int(opts.get("m", 2))
        if n < 2:
            raise InputError("need at least 2 particles")
        grid = [(n, m)]
    else:
        grid = general_grid()
    reports = [pigeonhole.verify_general(n, m) for n, m in grid]
    report = {"command": "general", "reports": [r.to_json() for r in reports]}
    rows = [
        [r.num_particles, r.num_boxes, r.pair_same_prob_max, r.pair_amplitude_max,
         r.roots_of_unity_residual, str(r.holds).lower()]
        for r in reports
    ]
    header = ["n", "m", "pair_same_prob_max", "pair_amplitude_max", "roots_of_unity_residual", "holds"]
    return report, _csv(header, rows)


def _montecarlo_config(opts: dict) -> montecarlo.RunConfig:
    data = {
        "n": int(opts.get("n", 3)),
        "m": int(opts.get("m", 2)),
        "outcome": _int_list(opts.get("outcome"), "--outcome"),
        "samples": int(opts.get("samples", 100_000)),
        "seed": int(opts.get("seed", 0)),
    }
    if data["n"] < 2:
        raise InputError("need at least 2 particles")
    if "measure" in opts:
        data["intermediate"] = [_pair(x) for x in opts["measure"]]
    else:
        data["intermediate"] = opts.get("intermediate", [])
    for key in ("rng", "block_size"):
        if key in opts:
            data[key] = opts[key]
    return montecarlo.RunConfig.from_dict(data)


def cmd_montecarlo(opts: dict):
    cfg = _montecarlo_config(opts)
    table = montecarlo.run_ensemble(cfg, workers=opts.get("workers"))
    oracle = montecarlo.compare_to_oracle(cfg, table)
    report = {
        "command": "montecarlo",
        "config": {
            "n": cfg.scenario.shape.num_particles,
            "m": cfg.scenario.shape.num_boxes,
            "outcome": list(cfg.scenario.outcome),
            "intermediate": [list(m.labels) for m in cfg.intermediate],
            "samples": cfg.samples,
            "seed": cfg.seed,
            "rng": montecarlo.RNG_ALGORITHM,
            "block_size": cfg.block_size,
        },
        "selected_fraction": table.selected_count / cfg.samples,
        "oracle": oracle.to_json(),
    }
    return report, table.to_csv()


def _lambdas(opts: dict) -> list[float]:
    return _float_list(opts.get("lambdas", list(DEFAULT_LAMBDAS)), "--lambdas")


def cmd_deflection(opts: dict):
    s = _scenario(opts)
    lams = _lambdas(opts)
    sigma = float(opts.get("sigma", 1.0))
    post = None if opts.get("no_postselect") else s.post
    scan = weakcoupling.deflection_scan(s.pre, post, lams, sigma, pair=_pair(opts.get("pair")))
    report = {
        "command": "deflection",
        "scenario": s.describe(),
        "first_order_coefficient": weakcoupling.first_order_check(s.pre, s.post),
        **scan.to_json(),
    }
    rows = [
        [r["lambda"], r["pair"], r["mean_shift"], r["width_change"], r["max_covariance"],
         r["success_probability"], r["regime"]]
        for r in scan.rows()
    ]
    header = ["lambda", "pair", "mean_shift", "width_change", "max_covariance",
              "success_probability", "regime"]
    return report, _csv(header, rows)


def cmd_spectra(opts: dict):
    s = _scenario(opts)
    lams = _lambdas(opts)
    sigma = float(opts.get("sigma", 1.0))
    if not sigma > 0:
        raise InputError("--sigma must be positive")
    points = int(opts.get("points", 201))
    if points < 2:
        raise InputError("--points must be at least 2")
    xmin = float(opts.get("xmin", -5 * sigma))
    xmax = float(opts.get("xmax", 5 * sigma))
    if not xmax > xmin:
        raise InputError("--xmax must exceed --xmin")
    xs = np.linspace(xmin, xmax, points)
    post = None if opts.get("no_postselect") else s.post
    focus = _pair(opts.get("pair"))
    pairs = [tuple(sorted(focus))] if focus else s.shape.pairs()
    reference = weakcoupling.PointerState.gaussian(0.0, sigma).density(xs)
    lines, rows = [], []
    for lam in lams:
        if lam < 0:
            raise InputError("coupling strengths must be non-negative")
        res = weakcoupling.postselect(weakcoupling.evolve(s.pre, lam, sigma), post)
        for pair in pairs:
            if pair not in res.pairs:
                raise InputError(f"unknown pair {pair}")
            dens = res.density(pair, xs)
            lines.append({
                "lambda": lam,
                "pair": list(pair),
                "line_shift": res.mean_shift[pair],
                "width_change": res.width_change[pair],
                "max_density_deviation": float(np.max(np.abs(dens - reference))),
            })
            rows += [[lam, f"{pair[0]}-{pair[1]}", x, d, r] for x, d, r in zip(xs, dens, reference)]
    report = {
        "command": "spectra",
        "scenario": s.describe(),
        "sigma": sigma,
        "postselected": post is not None,
        "lines": lines,
    }
    return report, _csv(["lambda", "pair", "x", "density", "unshifted_density"], rows)


HANDLERS = {
    "pigeonhole": cmd_pigeonhole,
    "patterns": cmd_patterns,
    "general": cmd_general,
    "montecarlo": cmd_montecarlo,
    "deflection": cmd_deflection,
    "spectra": cmd_spectra,
}

# commands whose natural artefact is a table; the JSON report goes to a side file
TABLE_FIRST = {"montecarlo", "deflection", "spectra"}


def _emit(command: str, opts: dict, report: dict, table: str, stdout) -> None:
    text_json = json.dumps(_sig15(report), indent=2) + "\n"
    fmt = opts.get("format") or ("csv" if command in TABLE_FIRST else "json")
    out = opts.get("out")
    if out is None:
        stdout.write(table if fmt == "csv" else text_json)
        return
    path = Path(out)
    if command in TABLE_FIRST:
        path.write_text(table)
        path.with_suffix(".json").write_text(text_json)
    else:
        path.write_text(table if fmt == "csv" else text_json)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _merge_config(args)
        report, table = HANDLERS[args.command](opts)
        _emit(args.command, opts, report, table, stdout)
    except (ImpossiblePostselectionError, UndefinedWeakValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IMPOSSIBLE
    except OSError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (ValueError, TypeError, KeyError, PigeonsimError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        stderr.write(f"error: {msg}\n")
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
