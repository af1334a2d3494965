"""Command-line entry point.

Exit codes: 0 success, 1 malformed input, 2 enumeration cap (or the 64-bit
profit range) exceeded, 3 verification mismatch.
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import io
from .instance_gen import ConfigError, GenConfig, generate_synthetic, manifest_row, write_manifest
from .master import available_backends
from .metrics import opportunity_gap, price_of_competition, report_row, service_quality, write_report
from .model import BudgetError, simulate_outcome
from .sat import FormulaError, parse_formula, reduce_eafa3sat
from .solver import brute_force_oracle, monopolistic_heuristic, solve, solve_cooperative
from .space import CapExceeded

EXIT_OK, EXIT_INPUT, EXIT_CAP, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def parse_seeds(text: str) -> list[int]:
    """``1..5`` (inclusive), ``1,4,9`` or a mix of both."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise UsageError(f"no seeds in {text!r}")
    return seeds


def _record(args, inst, sol, started: float) -> dict:
    rec = {
        "instance": inst.name,
        "instancePath": str(Path(args.instance).resolve()),
        "wallTimeMs": round((time.perf_counter() - started) * 1000, 3),
    }
    rec.update(sol.to_json(include_trace=False))
    return rec


def _emit(args, rec: dict) -> None:
    if getattr(args, "out", None):
        io.write_json(args.out, rec)
    else:
        print(json.dumps(rec, indent=2))


def cmd_gen(args) -> int:
    cfg_obj = io.read_json(args.config) if args.config else {}
    if args.seed is not None:
        cfg_obj["seed"] = args.seed
    base = GenConfig.from_json(cfg_obj)
    seeds = parse_seeds(args.seeds) if args.seeds else [base.seed]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in seeds:
        cfg = GenConfig.from_json({**base.to_json(), "seed": seed})
        inst = generate_synthetic(cfg)
        fname = f"{inst.name}.json"
        io.save_instance(out / fname, inst)
        rows.append(manifest_row(cfg, inst, fname))
    write_manifest(out / "manifest.csv", rows)
    print(f"wrote {len(rows)} instances to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = io.load_instance(args.instance)
    started = time.perf_counter()
    sol = solve(inst, args.variant, args.cuts, args.mode, both_cuts=args.both_cuts, cap=args.cap,
                milp_backend=args.backend)
    rec = _record(args, inst, sol, started)
    _emit(args, rec)
    if args.trace:
        io.write_json(args.trace, [c.to_json() for c in sol.trace])
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = io.load_instance(args.instance)
    started = time.perf_counter()
    sol = brute_force_oracle(inst, args.variant, cap=args.cap)
    rec = _record(args, inst, sol, started)
    rec["source"] = "oracle"
    _emit(args, rec)
    return EXIT_OK


def cmd_coop(args) -> int:
    inst = io.load_instance(args.instance)
    started = time.perf_counter()
    _emit(args, _record(args, inst, solve_cooperative(inst, cap=args.cap), started))
    return EXIT_OK


def cmd_monopoly(args) -> int:
    inst = io.load_instance(args.instance)
    started = time.perf_counter()
    rec = _record(args, inst, monopolistic_heuristic(inst, args.truth, cap=args.cap), started)
    rec["truth"] = args.truth
    _emit(args, rec)
    return EXIT_OK


def _load_records(folder: Path) -> list[dict]:
    recs = []
    for path in sorted(folder.glob("*.json")):
        obj = io.read_json(path)
        if isinstance(obj, dict) and "leaderProfit" in obj and "variant" in obj:
            recs.append(obj)
    return recs


def cmd_metrics(args) -> int:
    folder = Path(args.solutions)
    if not folder.is_dir():
        raise UsageError(f"{folder} is not a directory")
    by_instance: dict[str, list[dict]] = {}
    for rec in _load_records(folder):
        by_instance.setdefault(rec["instance"], []).append(rec)
    rows = []
    for name, recs in sorted(by_instance.items()):
        exact = {r["variant"]: r for r in recs if r["variant"] in ("optimistic", "pessimistic")}
        for r in recs:
            if r["variant"] == "monopolistic-heuristic" and r.get("truth") in exact:
                best, _ = io.solution_profits(exact[r["truth"]])
                got, _ = io.solution_profits(r)
                rows.append(report_row(name, f"opportunityGap[{r['truth']}]", opportunity_gap(best, got)))
        coop = next((r for r in recs if r["variant"] == "cooperative"), None)
        if coop is not None:
            joint = sum(io.solution_profits(coop))
            for variant, r in sorted(exact.items()):
                lead, foll = io.solution_profits(r)
                rows.append(report_row(name, f"priceOfCompetition[{variant}]",
                                       price_of_competition(joint, lead, foll)))
        for r in recs:
            path = r.get("instancePath")
            if not path or not Path(path).exists():
                continue
            inst = io.load_instance(path)
            outcome = simulate_outcome(inst, io.schedule_from_json(r["yStar"]), io.schedule_from_json(r["zStar"]))
            avg, pct = service_quality(outcome, inst)
            rows.append(report_row(name, f"avgCaptures[{r['variant']}]", avg))
            rows.append(report_row(name, f"demandCapturedPct[{r['variant']}]", pct))
    write_report(args.out, rows)
    summary: dict[str, list[float]] = {}
    for row in rows:
        if row["decimal"] != "NA":
            summary.setdefault(row["metric"], []).append(float(row["decimal"]))
    for metric, vals in sorted(summary.items()):
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        print(f"{metric}: mean {statistics.mean(vals):.4f} std {sd:.4f} (n={len(vals)})")
    return EXIT_OK


def cmd_reduce_sat(args) -> int:
    formula = parse_formula(Path(args.formula).read_text())
    inst, pi = reduce_eafa3sat(formula)
    obj = io.instance_to_json(inst)
    obj["threshold"] = io.fraction_to_json(pi)
    if args.out:
        io.write_json(args.out, obj)
    print(f"threshold {pi}")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = io.load_instance(args.instance)
    modes = ["search"] + (["model"] if available_backends() else [])
    ok = True
    for variant in ("optimistic", "pessimistic"):
        truth = brute_force_oracle(inst, variant, cap=args.cap).leader_profit
        for cuts in ("tailored", "tightened"):
            for mode in modes:
                got = solve(inst, variant, cuts, mode, cap=args.cap).leader_profit
                status = "ok" if got == truth else "MISMATCH"
                ok &= got == truth
                print(f"{variant:11s} {cuts:9s} {mode:6s} {got} (oracle {truth}) {status}")
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdflp", description="Competitive facility location with cumulative demand.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_cap(sp):
        sp.add_argument("--cap", type=int, default=None,
                        help="max schedules per player (default: $CDFLP_CAP or 20000)")
        return sp

    g = sub.add_parser("gen", help="generate synthetic instances")
    g.add_argument("--config", help="GenConfig JSON (defaults used when omitted)")
    g.add_argument("--seeds", help="e.g. 1..5 or 1,3,7")
    g.add_argument("--seed", type=int, help="override the config seed")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    s = with_cap(sub.add_parser("solve", help="exact bilevel solve"))
    s.add_argument("--instance", required=True)
    s.add_argument("--variant", choices=["optimistic", "pessimistic"], default="optimistic")
    s.add_argument("--cuts", choices=["tailored", "tightened"], default="tightened")
    s.add_argument("--mode", choices=["search", "model"], default="search")
    s.add_argument("--backend", default=None, help="MILP back-end for --mode model")
    s.add_argument("--both-cuts", action="store_true", help="add both cut families per rejected candidate")
    s.add_argument("--out")
    s.add_argument("--trace", help="write every generated cut to this JSON file")
    s.set_defaults(func=cmd_solve)

    o = with_cap(sub.add_parser("oracle", help="brute-force bilevel optimum"))
    o.add_argument("--instance", required=True)
    o.add_argument("--variant", choices=["optimistic", "pessimistic"], default="optimistic")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    c = with_cap(sub.add_parser("coop", help="joint-profit optimum"))
    c.add_argument("--instance", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_coop)

    m = with_cap(sub.add_parser("monopoly", help="plan ignoring the follower, then face its reaction"))
    m.add_argument("--instance", required=True)
    m.add_argument("--truth", choices=["optimistic", "pessimistic"], default="optimistic")
    m.add_argument("--out")
    m.set_defaults(func=cmd_monopoly)

    r = sub.add_parser("metrics", help="metric report from a folder of solution files")
    r.add_argument("--solutions", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_metrics)

    x = sub.add_parser("reduce-sat", help="gadget instance from an exists-forall 3CNF formula")
    x.add_argument("--formula", required=True)
    x.add_argument("--out")
    x.set_defaults(func=cmd_reduce_sat)

    v = with_cap(sub.add_parser("verify", help="oracle vs both cut families and modes"))
    v.add_argument("--instance", required=True)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CapExceeded, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (io.FormatError, ConfigError, FormulaError, BudgetError, UsageError, OSError, ValueError,
            KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
