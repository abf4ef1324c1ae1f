"""Reproducible experiment runner.

Every subcommand is fully determined by its flags: identical configurations
produce byte-identical result files (the wall-clock field aside).  Trials
fan out over a process pool when --workers exceeds 1 without changing any
reported number, because each trial owns a stream derived from (seed,
subcommand, trial index).

JSON results carry schema 1: config echo, per-trial rows, aggregates
recomputable from the rows, oracle ground truth where available, and the
wall clock.  --csv additionally writes the per-trial rows as CSV.  Exit
codes: 0 success, 2 usage error, 3 capability error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import boolfn, ensembles, spectra, testers
from .errors import ArityError, CapabilityError
from .qstate import CopyLedger, RngStream

SCHEMA_VERSION = 1


class UsageError(ValueError):
    pass


def parse_function(spec: str, n: int | None) -> boolfn.BooleanFunction:
    """Resolve --function: a builtin name, name:coordinate, or @path."""
    if spec.startswith("@"):
        f = boolfn.load_table(spec[1:])
        if n is not None and f.n != n:
            raise UsageError(f"file function has arity {f.n}, --n says {n}")
        return f
    name, _, arg = spec.partition(":")
    try:
        if name in ("dictator", "antidictator") and arg:
            return boolfn.builtin(name, n, i=int(arg))
        if arg:
            raise UsageError(f"unexpected argument {arg!r} for builtin {name!r}")
        return boolfn.builtin(name, n)
    except (ValueError, ArityError) as exc:
        raise UsageError(str(exc)) from exc


def _trial_stream(config: dict, trial: int) -> RngStream:
    return RngStream(int(config["seed"])).child(config["subcommand"], trial)


def _verdict_row(trial: int, verdict: testers.TesterVerdict) -> dict:
    return {
        "trial": trial,
        "decision": verdict.decision,
        "statistic": verdict.statistic,
        "copies": verdict.copies_used,
        "aborted_iterations": verdict.aborted_iterations,
    }


# ---------------------------------------------------------------------------
# Per-trial workers (top level so the process pool can pickle them)
# ---------------------------------------------------------------------------

def run_trial(args: tuple[dict, int]) -> dict:
    config, trial = args
    sub = config["subcommand"]
    stream = _trial_stream(config, trial)

    if sub == "test-monotonicity":
        f = parse_function(config["function"], config["n"])
        v = testers.test_monotonicity(f, config["epsilon"], config["delta"], stream)
        return _verdict_row(trial, v)

    if sub == "test-symmetry":
        f = parse_function(config["function"], config["n"])
        v = testers.test_symmetry(f, config["epsilon"], config["delta"], stream)
        return _verdict_row(trial, v)

    if sub == "test-triangle-freeness":
        f = parse_function(config["function"], config["n"])
        v = testers.test_triangle_freeness(
            f, config["epsilon_tilde"], config["delta"], stream,
            epsilon=config.get("epsilon"),
        )
        return _verdict_row(trial, v)

    if sub == "test-mm":
        which = config["which"]
        half = config["n"]
        gen = stream.child("instance").generator()
        if which == "f1":
            f = ensembles.sample_mm_pair(half, "F1", gen)
            certified = 0.0
        elif which == "f2":
            f = ensembles.sample_mm_pair(half, "F2", gen)
            certified = None
        elif which == "f2-balanced":
            h = ensembles.balanced_h(half, gen)
            f = boolfn.builtin("mm_dual", h=h)
            certified = ensembles.mm_distance_lower_bound(h)
        else:
            raise UsageError(f"unknown ensemble {which!r}")
        v = testers.test_mm(f, config["delta"], stream.child("tester"))
        row = _verdict_row(trial, v)
        row["certified_distance"] = certified
        return row

    if sub == "intersection2":
        n = config["n"]
        gen = stream.child("instance").generator()
        size = 1 << n
        a = gen.random(size) < 0.5
        b = gen.random(size) < 0.5
        f = boolfn.builtin("pair", n, a=a, b=b)
        exact = float(np.count_nonzero(a & b)) / size
        ledger = CopyLedger()
        est = testers.estimate_intersection2(
            f, config["epsilon"], config["delta"], stream.child("estimator"),
            ledger=ledger,
        )
        return {
            "trial": trial,
            "estimate": est,
            "exact": exact,
            "error": abs(est - exact),
            "within_epsilon": bool(abs(est - exact) <= config["epsilon"]),
            "copies": ledger.consumed,
        }

    if sub == "baseline-triangle":
        f = parse_function(config["function"], config["n"])
        q = config["q"]
        count = testers.classical_triangle_baseline(f, q, stream)
        return {"trial": trial, "q": q, "witness_count": count, "witnessed": count > 0}

    raise UsageError(f"subcommand {sub!r} has no per-trial worker")


def _run_trials(config: dict, trials: int, workers: int) -> list[dict]:
    tasks = [(config, t) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_trial, tasks))
    return [run_trial(task) for task in tasks]


# ---------------------------------------------------------------------------
# Subcommand drivers
# ---------------------------------------------------------------------------

def _tester_aggregates(rows: list[dict]) -> dict:
    finite = [r["statistic"] for r in rows if not math.isnan(r["statistic"])]
    return {
        "accept_rate": sum(r["decision"] == "accept" for r in rows) / len(rows),
        "mean_statistic": sum(finite) / len(finite) if finite else None,
        "mean_copies": sum(r["copies"] for r in rows) / len(rows),
    }


def _oracle_info(sub: str, config: dict) -> dict | None:
    if sub not in ("test-monotonicity", "test-symmetry", "test-triangle-freeness"):
        return None
    f = parse_function(config["function"], config["n"])
    info: dict = {}
    if sub == "test-monotonicity":
        info["is_monotone"] = boolfn.is_monotone(f)
        info["violation_probability"] = boolfn.monotone_violation_probability(f)
        info["fourier_statistic"] = boolfn.fourier_monotonicity_statistic(f)
        if f.n <= boolfn.MONOTONE_ENUM_MAX_ARITY:
            info["exact_distance"] = boolfn.exact_distance_to_monotone(f).epsilon
    elif sub == "test-symmetry":
        info["is_symmetric"] = boolfn.is_symmetric(f)
        info["violation_probability"] = boolfn.symmetry_violation_probability(f)
        info["exact_distance"] = boolfn.exact_distance_to_symmetric(f).epsilon
    else:
        info["is_triangle_free"] = boolfn.is_triangle_free(f)
        info["triangle_density"] = boolfn.triangle_density(f)
        if f.n <= boolfn.CLASS_ENUM_MAX_ARITY:
            info["exact_distance"] = boolfn.exact_distance_to_class(
                f, boolfn.is_triangle_free
            ).epsilon
    return info


def run_config(config: dict) -> dict:
    """Execute one experiment configuration and return the result record."""
    sub = config["subcommand"]
    started = time.monotonic()

    if sub in (
        "test-monotonicity",
        "test-symmetry",
        "test-triangle-freeness",
        "test-mm",
        "intersection2",
        "baseline-triangle",
    ):
        if sub == "baseline-triangle":
            rows = []
            for q in config["qs"]:
                per_q = dict(config, q=q)
                rows.extend(_run_trials(per_q, config["trials"], config["workers"]))
            by_q = {}
            for r in rows:
                by_q.setdefault(r["q"], []).append(r["witnessed"])
            aggregates = {
                "witness_rate_by_q": {
                    str(q): sum(v) / len(v) for q, v in sorted(by_q.items())
                },
                "union_bound_by_q": {
                    str(q): min(1.0, q**3 / 2.0 ** config["n"])
                    for q in sorted(by_q)
                },
            }
            oracle = None
        else:
            rows = _run_trials(config, config["trials"], config["workers"])
            if sub == "intersection2":
                aggregates = {
                    "within_epsilon_rate": sum(r["within_epsilon"] for r in rows) / len(rows),
                    "mean_error": sum(r["error"] for r in rows) / len(rows),
                    "mean_copies": sum(r["copies"] for r in rows) / len(rows),
                }
            else:
                aggregates = _tester_aggregates(rows)
            oracle = _oracle_info(sub, config)
        return _record(config, rows, aggregates, oracle, started)

    if sub == "twin-spectrum":
        rng = RngStream(config["seed"]).child(sub)
        matching = ensembles.build_layer_matching(config["n"], config["m"], rng)
        params = spectra.CountParams.from_matching(matching)
        t = config["t"]
        closed = spectra.closed_form_trace_norm(params, t)
        report = {
            "achieved_m": matching.achieved_m,
            "epsilon": matching.epsilon,
            "closed_form_trace_norm": closed,
            "star_term": spectra.distinguishability_star_term(params, t),
        }
        dim = 1 << (matching.n * t)
        if dim <= spectra.dim_cap(None):
            brute = spectra.trace_norm(spectra.build_difference_matrix(matching, t))
            report["bruteforce_trace_norm"] = brute
            report["agreement"] = abs(brute - closed)
            census = spectra.component_census(matching, t)
            report["census"] = [
                {"type_size": row.type_size, "components": row.components,
                 "part_sizes": list(row.part_sizes)}
                for row in census
            ]
        return _record(config, [report], {}, None, started)

    if sub == "three-fold-check":
        rng = RngStream(config["seed"]).child(sub)
        report = spectra.distinct_projector_report(
            config["n"], config["t"], mode=config["mode"],
            trials=config["trials"], rng=rng,
        )
        return _record(config, [report], {}, None, started)

    if sub == "ensemble-distinguish":
        rng = RngStream(config["seed"]).child(sub)
        matching = ensembles.build_layer_matching(config["n"], config["m"], rng)
        params = spectra.CountParams.from_matching(matching)
        eps = matching.epsilon
        rows = []
        for t in range(1, config["t_max"] + 1):
            norm = spectra.closed_form_trace_norm(params, t)
            rows.append({
                "t": t,
                "star_term": spectra.distinguishability_star_term(params, t),
                "closed_form_trace_norm": norm,
                "helstrom_success": min(1.0, 0.5 + norm / 4.0),
            })
        aggregates = {
            "achieved_m": matching.achieved_m,
            "epsilon": eps,
            "t_one_over_eps": math.ceil(1.0 / eps) if eps else None,
            "t_two_over_eps": math.ceil(2.0 / eps) if eps else None,
        }
        return _record(config, rows, aggregates, None, started)

    if sub == "oracle":
        f = parse_function(config["function"], config["n"])
        info = {
            "n": f.n,
            "hex": boolfn.to_hex(f) if f.n >= 2 else None,
            "is_monotone": boolfn.is_monotone(f),
            "is_symmetric": boolfn.is_symmetric(f),
            "is_triangle_free": boolfn.is_triangle_free(f),
            "monotone_violation_probability": boolfn.monotone_violation_probability(f),
            "fourier_monotonicity_statistic": boolfn.fourier_monotonicity_statistic(f),
            "symmetry_violation_probability": boolfn.symmetry_violation_probability(f),
            "triangle_density": boolfn.triangle_density(f),
            "total_influence": boolfn.total_influence(boolfn.walsh_transform(f)),
            "symmetric_distance": boolfn.exact_distance_to_symmetric(f).epsilon,
        }
        if f.n <= boolfn.MONOTONE_ENUM_MAX_ARITY:
            info["monotone_distance"] = boolfn.exact_distance_to_monotone(f).epsilon
        if f.n <= boolfn.CLASS_ENUM_MAX_ARITY:
            info["triangle_free_distance"] = boolfn.exact_distance_to_class(
                f, boolfn.is_triangle_free
            ).epsilon
        return _record(config, [info], {}, None, started)

    raise UsageError(f"unknown subcommand {sub!r}")


def _record(config, rows, aggregates, oracle, started) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "subcommand": config["subcommand"],
        "config": config,
        "trials": rows,
        "aggregates": aggregates,
        "oracle": oracle,
        "wall_clock_s": round(time.monotonic() - started, 6),
    }


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, trials_default: int | None = None) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON output path (default stdout)")
    p.add_argument("--csv", default=None, help="optional per-trial CSV path")
    p.add_argument("--workers", type=int, default=1)
    if trials_default is not None:
        p.add_argument("--trials", type=int, default=trials_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qptlab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name in ("test-monotonicity", "test-symmetry"):
        p = sub.add_parser(name)
        p.add_argument("--function", required=True)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--epsilon", type=float, required=True)
        p.add_argument("--delta", type=float, required=True)
        _add_common(p, trials_default=100)

    p = sub.add_parser("test-triangle-freeness")
    p.add_argument("--function", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--epsilon-tilde", dest="epsilon_tilde", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=None,
                   help="post-selection attempt scale (defaults to epsilon-tilde)")
    _add_common(p, trials_default=100)

    p = sub.add_parser("test-mm")
    p.add_argument("--n", type=int, required=True, help="half arity; functions live on 2n bits")
    p.add_argument("--which", choices=("f1", "f2", "f2-balanced"), required=True)
    p.add_argument("--delta", type=float, default=1.0 / 3.0)
    _add_common(p, trials_default=100)

    p = sub.add_parser("intersection2")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    _add_common(p, trials_default=100)

    p = sub.add_parser("twin-spectrum")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("three-fold-check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--mode", choices=("auto", "enumerate", "formula", "sampled"),
                   default="auto")
    p.add_argument("--trials", type=int, default=0, help="samples for --mode sampled")
    _add_common(p)

    p = sub.add_parser("ensemble-distinguish")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t-max", dest="t_max", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("baseline-triangle")
    p.add_argument("--function", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--q", default="8,16,32,64", help="comma-separated sample counts")
    _add_common(p, trials_default=1000)

    p = sub.add_parser("oracle")
    p.add_argument("--function", required=True)
    p.add_argument("--n", type=int, default=None)
    _add_common(p)

    return parser


def _config_from_args(args: argparse.Namespace) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("out", "csv")}
    if config["subcommand"] == "baseline-triangle":
        config["qs"] = [int(q) for q in str(config.pop("q")).split(",") if q]
        if any(q < 3 for q in config["qs"]):
            raise UsageError("all q values must be >= 3")
    return config


def write_outputs(record: dict, out_path: str | None, csv_path: str | None) -> None:
    text = json.dumps(record, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if csv_path:
        rows = record["trials"]
        if rows:
            with open(csv_path, "w", newline="", encoding="ascii") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
                writer.writeheader()
                writer.writerows(rows)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        record = run_config(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3
    write_outputs(record, args.out, args.csv)
    return 0


if __name__ == "__main__":
    sys.exit(main())
