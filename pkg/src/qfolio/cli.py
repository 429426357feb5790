"""Command-line front end.

Subcommands::

    qfolio stats     PRICES.csv          -> stats.json
    qfolio frontier  STATS.json          -> frontier.csv, named.json
    qfolio qubo      STATS.json          -> qubo.json, ising.json
    qfolio solve     QUBO_OR_ISING.json  -> result.json, histogram.csv
    qfolio sweep     QUBO_OR_ISING.json  -> sweep.csv
    qfolio fixtures                      -> bundled example inputs

Every run also writes ``run_manifest_<subcommand>.json`` into the output
directory. Exit codes: 0 success, 2 usage or input error, 3 internal
invariant violation. ``--threads`` (or ``QFOLIO_THREADS``) caps worker threads
and never changes any output.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import markowitz as mk
from . import qaoa
from . import qubo_ising as qi
from . import statevector as sv
from .errors import InputError, InvariantViolation
from .market_data import TRADING_DAYS, bundled_path, compute_returns, compute_stats, load_prices, load_stats
from .seeding import derive_seed

logger = logging.getLogger("qfolio")

MANIFEST_SCHEMA_ID = "qfolio.run_manifest/1"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(out_dir: Path, name: str, text: str) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8", newline="")
    return name


def _write_manifest(args, out_dir: Path, inputs: dict, params: dict, outputs: list, details: dict | None = None):
    manifest = {
        "schema": MANIFEST_SCHEMA_ID,
        "tool": "qfolio",
        "version": __version__,
        "subcommand": args.command,
        "seed": params.pop("seed", None),
        "inputs": {k: {"path": str(p), "sha256": _sha256(Path(p))} for k, p in inputs.items()},
        "parameters": params,
        "outputs": outputs,
        "details": details or {},
    }
    _write(out_dir, f"run_manifest_{args.command}.json", _dump_json(manifest))


def _parse_rf_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad risk-free list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty risk-free list")
    return values


def parse_layers(text: str) -> list[int]:
    """``"1..20"`` (inclusive), ``"4"`` or ``"1,2,4,8"``."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad layer range {text!r}") from None
    if not values:
        raise InputError(f"empty layer range {text!r}")
    if any(v < 1 for v in values):
        raise InputError("layer counts must be >= 1")
    return values


def cmd_stats(args, threads: int) -> int:
    prices = load_prices(args.prices, on_missing=args.on_missing)
    stats = compute_stats(compute_returns(prices), period_scale=args.period)
    out = Path(args.out)
    outputs = [_write(out, "stats.json", _dump_json(stats.to_dict()))]
    _write_manifest(
        args, out, {"prices": args.prices},
        {"period_scale": args.period, "on_missing": args.on_missing},
        outputs,
        {"tickers": list(stats.tickers), "num_dates": len(prices.dates),
         "first_date": prices.dates[0].isoformat(), "last_date": prices.dates[-1].isoformat()},
    )
    return 0


def cmd_frontier(args, threads: int) -> int:
    stats = load_stats(args.stats)
    report = mk.sample_portfolios(stats, n=args.samples, seed=args.seed, risk_free=args.rf, threads=threads)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ret", "vol"] + [f"sharpe@{mk.rf_label(rf)}" for rf in report.risk_free])
    sharpes = [report.sharpe(rf) for rf in report.risk_free]
    for i in range(len(report)):
        writer.writerow([repr(float(report.rets[i])), repr(float(report.vols[i]))]
                        + [repr(float(s[i])) for s in sharpes])
    out = Path(args.out)
    outputs = [_write(out, "frontier.csv", buf.getvalue()),
               _write(out, "named.json", _dump_json(report.named_dict()))]
    _write_manifest(
        args, out, {"stats": args.stats},
        {"seed": args.seed, "samples": args.samples, "risk_free": list(report.risk_free),
         "envelope_bins": mk.ENVELOPE_BINS},
        outputs,
    )
    return 0


def cmd_qubo(args, threads: int) -> int:
    stats = load_stats(args.stats)
    problem = qi.build_portfolio_qubo(stats, b=args.b, budget=args.budget, alpha=args.alpha, matrix_kind=args.matrix)
    ising = qi.qubo_to_ising(problem)
    out = Path(args.out)
    outputs = [_write(out, "qubo.json", _dump_json(problem.to_dict())),
               _write(out, "ising.json", _dump_json(ising.to_dict()))]
    _write_manifest(
        args, out, {"stats": args.stats},
        {"b": args.b, "budget": args.budget, "alpha": args.alpha, "matrix_kind": args.matrix},
        outputs,
        {"penalty_enabled": args.alpha > 0, "labels": list(problem.labels)},
    )
    return 0


def _labels(problem) -> tuple[str, ...]:
    return problem.labels or tuple(f"x{i + 1}" for i in range(problem.n))


def cmd_solve(args, threads: int) -> int:
    problem = qi.load_problem(args.problem)
    ising = qi.as_ising(problem)
    labels = _labels(problem)
    n = problem.n
    out = Path(args.out)
    params = {"seed": args.seed, "method": args.method}
    details = {}
    if args.method == "brute":
        if isinstance(problem, qi.QuboProblem):
            res = qi.brute_force_solve(problem)
            best, value = res.best_index, res.best_value
        else:
            best, value = qi.ground_state(ising)
        probs = np.zeros(1 << n)
        probs[best] = 1.0
        result = {
            "method": "brute",
            "n": n,
            "bitstring": qi.bitstring(best, n),
            "selected": qi.selected_labels(labels, best, n),
            "energy": value,
        }
        counts = None
    else:
        energies = qi.diagonal_energies(ising)
        res = qaoa.optimize(
            ising, args.layers, restarts=args.restarts, seed=args.seed, budget=args.budget,
            init=args.init, threads=threads, energies=energies,
        )
        probs = res.state_probs
        result = {"method": "qaoa", "n": n, "labels": list(labels), **res.to_dict(),
                  "selected": qi.selected_labels(labels, res.argmax_index, n)}
        counts = None
        if args.shots:
            counts = sv.sample_probabilities(probs, n, args.shots, derive_seed(args.seed, "shots"))
        params.update({"layers": args.layers, "restarts": args.restarts,
                       "budget": args.budget if args.budget is not None else qaoa.EVALS_PER_PARAM * 2 * args.layers,
                       "init": args.init, "shots": args.shots})
        details = {"evals": res.evals, "budget_exhausted": res.budget_exhausted}
    outputs = [_write(out, "result.json", _dump_json(result)),
               _write(out, "histogram.csv", sv.histogram_csv(probs, n, counts))]
    _write_manifest(args, out, {"problem": args.problem}, params, outputs, details)
    return 0


def cmd_sweep(args, threads: int) -> int:
    layers = parse_layers(args.layers)
    ising = qi.as_ising(qi.load_problem(args.problem))
    rows = qaoa.layer_sweep(
        ising, layers, restarts=args.restarts, seed=args.seed, budget_per_param=args.budget_per_param,
        warm_start=not args.no_warm_start, threads=threads,
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(qaoa.SWEEP_HEADER)
    for row in rows:
        writer.writerow(row.csv_row())
    out = Path(args.out)
    outputs = [_write(out, "sweep.csv", buf.getvalue())]
    details = {
        "ground_energy": rows[0].result.ground_energy,
        "ground_bitstring": qi.bitstring(rows[0].result.ground_index, ising.n),
        "per_layer": [
            {"p": r.p, "evals": r.evals, "budget_exhausted": r.result.budget_exhausted,
             "padded_energy": r.padded_energy, "padded_delta": r.padded_delta}
            for r in rows
        ],
    }
    _write_manifest(
        args, out, {"problem": args.problem},
        {"seed": args.seed, "layers": layers, "restarts": args.restarts,
         "budget_per_param": args.budget_per_param, "warm_start": not args.no_warm_start},
        outputs, details,
    )
    return 0


def cmd_fixtures(args, threads: int) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("example_stats.json", "prices_synthetic.csv"):
        shutil.copyfile(bundled_path(name), out / name)
        print(out / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfolio", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker thread cap (default: $QFOLIO_THREADS or 1); never changes results")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeded=False):
        p.add_argument("-o", "--out", default=".", help="output directory (default: current)")
        if seeded:
            p.add_argument("--seed", type=int, default=qaoa.DEFAULT_SEED)

    p = sub.add_parser("stats", help="price CSV -> returns statistics")
    p.add_argument("prices")
    p.add_argument("--period", type=int, default=TRADING_DAYS, help="periods per year (default 250)")
    p.add_argument("--on-missing", choices=("drop", "error"), default="drop")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("frontier", help="Monte Carlo efficient frontier")
    p.add_argument("stats")
    p.add_argument("--samples", type=int, default=mk.DEFAULT_SAMPLES)
    p.add_argument("--rf", type=_parse_rf_list, default=list(mk.DEFAULT_RISK_FREE),
                   help="comma-separated risk-free rates (default 0.015,0.028,0.10)")
    common(p, seeded=True)
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("qubo", help="build the selection QUBO and its Ising form")
    p.add_argument("stats")
    p.add_argument("--b", type=float, default=qi.DEFAULT_RISK_AVERSION, help="risk aversion (default 0.5)")
    p.add_argument("--budget", type=int, default=qi.DEFAULT_BUDGET, help="assets to select (default 2)")
    p.add_argument("--alpha", type=float, default=qi.DEFAULT_PENALTY, help="budget penalty (default 1.0)")
    p.add_argument("--matrix", choices=("covariance", "correlation"), default=qi.DEFAULT_MATRIX)
    common(p)
    p.set_defaults(func=cmd_qubo)

    p = sub.add_parser("solve", help="solve by enumeration or QAOA")
    p.add_argument("problem", help="qubo.json or ising.json")
    p.add_argument("--method", choices=("brute", "qaoa"), default="qaoa")
    p.add_argument("--layers", type=int, default=20)
    p.add_argument("--restarts", type=int, default=qaoa.DEFAULT_RESTARTS)
    p.add_argument("--budget", type=int, default=None, help="evaluations per restart (default 400*layers)")
    p.add_argument("--init", choices=("linear_ramp", "random"), default="linear_ramp")
    p.add_argument("--shots", type=int, default=0, help="add sampled counts to histogram.csv")
    common(p, seeded=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="QAOA energy and ground probability versus layer count")
    p.add_argument("problem", help="qubo.json or ising.json")
    p.add_argument("--layers", default="1..20", help="inclusive range 'a..b' or a comma list")
    p.add_argument("--restarts", type=int, default=qaoa.DEFAULT_RESTARTS)
    p.add_argument("--budget-per-param", type=int, default=qaoa.EVALS_PER_PARAM)
    p.add_argument("--no-warm-start", action="store_true")
    common(p, seeded=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fixtures", help="copy the bundled example inputs")
    common(p)
    p.set_defaults(func=cmd_fixtures)
    return parser


def _thread_count(cli_value) -> int:
    value = cli_value if cli_value is not None else os.environ.get("QFOLIO_THREADS", 1)
    try:
        value = int(value)
    except ValueError:
        raise InputError(f"bad thread count {value!r}") from None
    if value < 1:
        raise InputError("thread count must be >= 1")
    return value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, _thread_count(args.threads))
    except FileNotFoundError as exc:
        print(f"qfolio: error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"qfolio: error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"qfolio: internal invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
