"""Command-line front end: compute measures, rerun canned checks, scan states.

Exit codes: 0 on success (and on expected-value match for `reproduce`),
1 when a reproduction or scan finds a mismatch or violation, 2 on usage
errors. Values print in bits with six decimals; report files carry enough
provenance (seed, config, optimizer parameters) to replay any number.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import monogamy
from .discord import MeasureKind, evaluate
from .optimizer import OptimizerConfig
from .partition import Partition, xi_set
from .qstate import load_state, make_named_state, sample_random_state, save_state

XI_FIVE_PARTY_SMALL = (
    "A|B|CD|E - A|B",
    {"CD|E", "A|CD|E", "B|CD|E", "A|CD", "A|E", "B|E", "A|C", "A|D", "B|C", "B|D"},
)
XI_FIVE_PARTY_LARGE = (
    "A|B|C|D|E - A|C",
    {
        "B|D|E", "B|D", "B|E", "D|E", "A|B", "A|D", "A|E", "B|C", "C|D", "C|E",
        "A|B|D", "A|BD", "AB|D", "A|B|E", "A|BE", "AB|E", "A|D|E", "A|DE", "AD|E",
        "B|C|D", "B|CD", "BC|D", "B|C|E", "B|CE", "BC|E", "B|D|E", "B|DE", "BD|E",
        "C|D|E", "C|DE", "CD|E", "A|B|D|E", "B|C|D|E", "AB|DE", "BC|DE", "A|BDE",
        "ABD|E", "B|CDE", "BCD|E", "A|B|DE", "AB|D|E", "A|BD|E", "BC|D|E",
        "B|CD|E", "B|C|DE",
    },
)
XI_FOUR_PARTY_TRIPLE = (
    "A|B|C|D - A|B|C",
    {"A|B|D", "A|C|D", "B|C|D", "A|D", "B|D", "C|D"},
)
XI_FOUR_PARTY_PAIR = (
    "A|B|C|D - A|B",
    {"C|D", "A|C|D", "B|C|D", "A|C", "A|D", "B|C", "B|D"},
)

REPRODUCE_TARGETS = (
    "gqd_counterexample",
    "gqd_incompatibility",
    "xi_listings",
    "fourpartite_discorrelation",
)


def _parse_state(text):
    head, _, rest = text.partition(":")
    if head == "named":
        name, _, param_text = rest.partition(":")
        params = [float(x) for x in param_text.split(",") if x] if param_text else []
        return make_named_state(name, params), text
    if head == "file":
        return load_state(rest), text
    if head == "sampler":
        spec = dict(kv.split("=", 1) for kv in rest.split(",") if kv)
        if "dims" in spec:
            dims = [int(x) for x in spec["dims"].split("x")]
        else:
            dims = [2] * int(spec.get("n", 3))
        rank = int(spec.get("rank", int(np.prod(dims))))
        seed = int(spec.get("seed", 0))
        return sample_random_state(dims, rank, seed), text
    raise ValueError(f"state source must be named:, file: or sampler:, got {text!r}")


CONFIG_KEYS = ("restarts", "grid", "max_iters", "f_tol", "seed", "threads")


def _config(args, parser=None):
    """Optimizer settings from flags, falling back to a JSON config file.

    An explicit flag wins over the file; the file wins over built-in
    defaults.
    """
    if getattr(args, "config", None):
        with open(args.config) as f:
            doc = json.load(f)
        unknown = set(doc) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        for key, value in doc.items():
            if parser is not None and getattr(args, key) == parser.get_default(key):
                setattr(args, key, value)
    return OptimizerConfig(
        restarts=args.restarts,
        grid_points_per_angle=args.grid,
        max_iters=args.max_iters,
        f_tol=args.f_tol,
        seed=args.seed,
    )


def _threads(args):
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("QDISCORD_THREADS", "1"))


def cmd_compute(args):
    rho, source = _parse_state(args.state)
    cfg = args.cfg
    t0 = time.time()
    res = evaluate(rho, MeasureKind(args.measure), args.partition, cfg)
    wall = time.time() - t0
    print(f"{res.value:.6f}")
    if args.out:
        doc = {
            "state": source,
            "measure": res.kind.value,
            "partition": str(res.partition),
            "ordering": res.ordering_note,
            "value": res.value,
            "clamped": res.clamped,
            "config": {
                "restarts": cfg.restarts,
                "grid_points_per_angle": cfg.grid_points_per_angle,
                "max_iters": cfg.max_iters,
                "f_tol": cfg.f_tol,
                "seed": cfg.seed,
            },
            "opt": {
                "params": [float(x) for x in res.opt.params],
                "iterations": res.opt.iterations,
                "restart_index": res.opt.restart_index,
                "spread": res.opt.spread,
                "grid_certified": res.opt.grid_certified,
            },
            "wall_time": wall,
        }
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
    return 0


def _xi_text(pair):
    spec, expected = pair
    p_text, q_text = [s.strip() for s in spec.split("-")]
    universe = sorted(set(p_text.replace("|", "")))
    p = Partition.parse(p_text, universe)
    q = Partition.parse(q_text, universe)
    got = {str(g) for g in xi_set(p, q)}
    return spec, expected, got


def _diff_report(spec, expected, got):
    ok = got == expected
    print(f"Xi({spec}): {len(got)} members, expected {len(expected)} -> {'match' if ok else 'MISMATCH'}")
    if not ok:
        extra = sorted(got - expected)
        missing = sorted(expected - got)
        if extra:
            print(f"  unexpected: {', '.join(extra)}")
        if missing:
            print(f"  missing:    {', '.join(missing)}")
    return ok


def cmd_reproduce(args):
    cfg = args.cfg
    ok = True
    if args.target == "xi_listings":
        for pair in (XI_FIVE_PARTY_SMALL, XI_FIVE_PARTY_LARGE):
            ok &= _diff_report(*_xi_text(pair))
    elif args.target == "fourpartite_discorrelation":
        for pair in (XI_FOUR_PARTY_TRIPLE, XI_FOUR_PARTY_PAIR):
            ok &= _diff_report(*_xi_text(pair))
    elif args.target == "gqd_counterexample":
        rho = make_named_state("paper_cx_1p11")
        vals = {
            text: evaluate(rho, MeasureKind.GQD, text, cfg).value
            for text in ("A|B|C", "A|B", "A|C", "B|C")
        }
        for text, v in vals.items():
            print(f"D[{text.replace('|', ':')}] = {v:.6f}")
        checks = [
            ("D[A:B:C] in [0.199, 0.209]", 0.199 <= vals["A|B|C"] <= 0.209),
            ("D[A:B]   in [0.199, 0.209]", 0.199 <= vals["A|B"] <= 0.209),
            ("|D[A:B:C] - D[A:B]| <= 2e-3", abs(vals["A|B|C"] - vals["A|B"]) <= 2e-3),
            ("D[A:C] <= 1e-4", vals["A|C"] <= 1e-4),
            ("|D[B:C] - D[A:B]| <= 2e-3", abs(vals["B|C"] - vals["A|B"]) <= 2e-3),
        ]
        for label, passed in checks:
            print(f"  {'ok ' if passed else 'FAIL'} {label}")
            ok &= passed
        report = monogamy.check_discorrelated(rho, MeasureKind.GQD, "A|B|C", "A|B", cfg)
        verdict = report.condition_satisfied
        print(f"dis-correlated condition satisfied: {verdict}")
        ok &= verdict is False  # the measure is expected to break it here
    elif args.target == "gqd_incompatibility":
        rho = make_named_state("paper_cx_p11")
        v_ab_c = evaluate(rho, MeasureKind.GQD, "AB|C", cfg).value
        v_a_c = evaluate(rho, MeasureKind.GQD, "A|C", cfg).value
        print(f"D[AB:C] = {v_ab_c:.6f}")
        print(f"D[A:C]  = {v_a_c:.6f}")
        checks = [
            ("D[AB:C] <= 1e-4", v_ab_c <= 1e-4),
            ("D[A:C] >= 0.05", v_a_c >= 0.05),
        ]
        for label, passed in checks:
            print(f"  {'ok ' if passed else 'FAIL'} {label}")
            ok &= passed
    else:
        print(f"unknown target {args.target!r}", file=sys.stderr)
        return 2
    return 0 if ok else 1


CSV_COLUMNS = ["state_id", "measure", "check", "value", "margin", "verdict", "spread", "wall_time"]


def cmd_scan(args):
    cfg = args.cfg
    dims = [int(x) for x in args.dims.split(",")]
    threads = _threads(args)
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    summary = {"suite": args.suite, "samples": args.samples, "dims": dims, "seed": args.seed}
    violations = 0
    worst = float("inf")

    if args.suite in ("mqd_assumptions", "gqd_assumptions"):
        kind = MeasureKind.MQD if args.suite.startswith("mqd") else MeasureKind.GQD
        scan = monogamy.scan_assumptions(
            args.samples, dims, kind, cfg, seed=args.seed, rank=args.rank,
            out_dir=os.path.join(args.out_dir, "violations"), threads=threads,
        )
        for r in scan.rows:
            rows.append(
                dict(state_id=r["state_id"], measure=kind.value, check=r["assumption"],
                     value="", margin=f"{r['margin']:.9f}",
                     verdict="ok" if r["margin"] >= -1e-9 else "negative",
                     spread="", wall_time="")
            )
        summary["assumptions"] = {
            name: {
                "n": s.n,
                "min_margin": s.min_margin,
                "mean_margin": s.mean_margin,
                "violations": s.violations,
                "violating_ids": s.violating_ids,
            }
            for name, s in sorted(scan.stats.items())
        }
        violations = sum(s.violations for s in scan.stats.values())
        worst = scan.worst()
    elif args.suite in ("prop1", "prop3", "prop4", "thm1", "gqd_bound_eq26"):
        def one(i):
            rho = sample_random_state(dims, args.rank or int(np.prod(dims)), args.seed + i)
            t0 = time.time()
            checks = monogamy.check_proposition(rho, args.suite + (".*" if args.suite.startswith(("prop", "thm")) else ""), cfg)
            return rho, checks, time.time() - t0

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(args.samples)))
        else:
            results = [one(i) for i in range(args.samples)]
        for i, (rho, checks, wall) in enumerate(results):
            state_id = f"sample{i:04d}"
            bad = False
            for c in checks:
                rows.append(
                    dict(state_id=state_id, measure="mqd" if args.suite != "gqd_bound_eq26" else "gqd",
                         check=c.name, value=f"{c.lhs:.9f}", margin=f"{c.margin:.9f}",
                         verdict=c.verdict, spread="", wall_time=f"{wall:.3f}")
                )
                worst = min(worst, c.margin)
                if c.verdict == monogamy.VIOLATED:
                    violations += 1
                    bad = True
            if bad:
                vdir = os.path.join(args.out_dir, "violations")
                os.makedirs(vdir, exist_ok=True)
                save_state(rho, os.path.join(vdir, f"{state_id}.json"))
    else:
        print(f"unknown suite {args.suite!r}", file=sys.stderr)
        return 2

    csv_path = os.path.join(args.out_dir, "rows.csv")
    with open(csv_path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    summary["violations"] = violations
    summary["worst_margin"] = worst if worst != float("inf") else None
    with open(os.path.join(args.out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    print(f"{len(rows)} checks, {violations} violations, worst margin "
          f"{'n/a' if worst == float('inf') else f'{worst:.3e}'}")
    return 0 if violations == 0 else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="qdiscord", description=__doc__)
    ap.add_argument("--restarts", type=int, default=24)
    ap.add_argument("--grid", type=int, default=13, help="grid points per angle for the pre-scan")
    ap.add_argument("--max-iters", type=int, default=2000)
    ap.add_argument("--f-tol", type=float, default=1e-7)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for scans (default: QDISCORD_THREADS or 1)")
    ap.add_argument("--config", help="JSON file with default optimizer settings")
    sub = ap.add_subparsers(dest="command", required=True)

    p_compute = sub.add_parser("compute", help="compute one measure value")
    p_compute.add_argument("--state", required=True, help="named:NAME[:p1,p2] | file:PATH | sampler:n=3,rank=8,seed=0")
    p_compute.add_argument("--measure", required=True, choices=[k.value for k in MeasureKind])
    p_compute.add_argument("--partition", required=True, help='block text such as "A|BC|D"')
    p_compute.add_argument("--out", help="write a JSON report here")
    p_compute.set_defaults(func=cmd_compute)

    p_rep = sub.add_parser("reproduce", help="rerun a canned experiment and diff expected values")
    p_rep.add_argument("target", choices=REPRODUCE_TARGETS)
    p_rep.set_defaults(func=cmd_reproduce)

    p_scan = sub.add_parser("scan", help="run a check suite over sampled states")
    p_scan.add_argument("--suite", required=True,
                        choices=["prop1", "prop3", "prop4", "thm1", "gqd_bound_eq26",
                                 "mqd_assumptions", "gqd_assumptions"])
    p_scan.add_argument("--samples", type=int, default=100)
    p_scan.add_argument("--dims", default="2,2,2")
    p_scan.add_argument("--rank", type=int, default=None)
    p_scan.add_argument("--out-dir", default="scan-out")
    p_scan.set_defaults(func=cmd_scan)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.cfg = _config(args, parser)
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
