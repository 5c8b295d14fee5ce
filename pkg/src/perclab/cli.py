"""Command-line interface for the experiment harness.

Subcommands mirror the experiment kinds (sample, crossing, arms, qn,
metrics, volume, walk, gh) plus fit and report.  Global flags: --seed,
--workers, --out; PERC_LAB_WORKERS sets the default worker count.
"""

import argparse
import json
import sys

from .harness import (ExperimentPlan, default_workers, fit_exponent,
                      fit_record, plan_from_file, read_records, run,
                      write_records)


def _add_common(p, default_out):
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: PERC_LAB_WORKERS or cpus)")
    p.add_argument("--out", default=default_out, help="output JSONL path")
    p.add_argument("--plan", default=None,
                   help="JSON plan file overriding the flags")


def _plan_or_flags(args, kind, sizes, samples, **options):
    if args.plan:
        return plan_from_file(args.plan)
    return ExperimentPlan(kind=kind, sizes=tuple(sizes), samples=samples,
                          base_seed=args.seed, output_path=args.out,
                          metric_kind=getattr(args, "metric", "both"),
                          p=getattr(args, "p", 0.25),
                          strict=getattr(args, "strict", False),
                          options=options)


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="perclab",
        description="Critical-percolation experiments on the triangular lattice")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("sample", help="write a configuration file (PERC1)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("crossing", help="crossing-probability experiment")
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 32, 128])
    p.add_argument("--samples", type=int, default=100_000)
    _add_common(p, "crossing.jsonl")

    p = sub.add_parser("arms", help="arm-probability experiment")
    p.add_argument("--sizes", type=int, nargs="+", required=True,
                   help="outer radii R")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--r", type=int, default=1, help="inner radius")
    p.add_argument("--sigma", default="O", help="color word, e.g. OCOC")
    p.add_argument("--half", action="store_true", help="half-plane arms")
    _add_common(p, "arms.jsonl")

    p = sub.add_parser("qn", help="normalizing-quantile estimation")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--metric", choices=["geo", "res", "both"], default="both")
    p.add_argument("--samples", type=int, default=400,
                   help="conditional samples per size")
    p.add_argument("--strict", action="store_true")
    _add_common(p, "qn.jsonl")

    p = sub.add_parser("metrics", help="distance-sample experiment")
    p.add_argument("--sizes", type=int, nargs="+", default=[32, 64])
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--pairs", type=int, default=5)
    _add_common(p, "metrics.jsonl")

    p = sub.add_parser("volume", help="box-counting volume experiment")
    p.add_argument("--sizes", type=int, nargs="+", default=[512])
    p.add_argument("--samples", type=int, default=400)
    _add_common(p, "volume.jsonl")

    p = sub.add_parser("walk", help="random-walk experiment on environments")
    p.add_argument("--sizes", type=int, nargs="+", default=[32],
                   help="window radii r")
    p.add_argument("--samples", type=int, default=200,
                   help="environments per radius")
    p.add_argument("--r-factor", type=int, default=128)
    p.add_argument("--t-max", type=int, default=512)
    _add_common(p, "walk.jsonl")

    p = sub.add_parser("gh", help="GH convergence diagnostic")
    p.add_argument("--sizes", type=int, nargs="+", default=[32, 64])
    p.add_argument("--samples", type=int, default=20, help="seed pairs")
    _add_common(p, "gh.jsonl")

    p = sub.add_parser("fit", help="log-log exponent fit over records")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", default="arm")
    p.add_argument("--x", default="R")
    p.add_argument("--y", default="p")
    p.add_argument("--window", type=float, nargs=2, default=None)
    p.add_argument("--label", default="fit")
    p.add_argument("--out", default=None)

    p = sub.add_parser("report", help="evaluate acceptance criteria")
    p.add_argument("--dir", required=True)
    p.add_argument("--json", default=None, help="write machine verdicts here")
    p.add_argument("--skip-inline", action="store_true",
                   help="skip the self-contained oracle checks")

    args = ap.parse_args(argv)

    if args.cmd == "sample":
        from .config import sample, write_config
        write_config(sample(args.n, args.seed, args.p), args.out)
        print(f"wrote {args.out}")
        return 0

    if args.cmd in ("crossing", "metrics", "volume", "gh"):
        plan = _plan_or_flags(args, args.cmd, args.sizes, args.samples,
                              **({"pairs_per_config": args.pairs}
                                 if args.cmd == "metrics" else {}))
        path = run(plan, workers=args.workers or default_workers())
        print(f"wrote {path}")
        return 0

    if args.cmd == "arms":
        plan = _plan_or_flags(args, "arms", args.sizes, args.samples,
                              families=[[args.r, args.sigma, args.half]])
        path = run(plan, workers=args.workers or default_workers())
        print(f"wrote {path}")
        return 0

    if args.cmd == "qn":
        plan = _plan_or_flags(args, "qn", args.n, args.samples)
        path = run(plan, workers=args.workers or default_workers())
        print(f"wrote {path}")
        return 0

    if args.cmd == "walk":
        plan = _plan_or_flags(args, "walk", args.sizes, args.samples,
                              R_factor=args.r_factor, t_max=args.t_max)
        path = run(plan, workers=args.workers or default_workers())
        print(f"wrote {path}")
        return 0

    if args.cmd == "fit":
        records = read_records(args.input, kind=args.kind)
        if args.kind == "arm":
            records = [{"R": r["R"], "p": r["hits"] / r["samples"]}
                       for r in records if r["hits"] > 0]
        fit = fit_exponent(records, args.x, args.y,
                           tuple(args.window) if args.window else None)
        rec = fit_record(fit, args.label)
        line = json.dumps(rec, sort_keys=True)
        if args.out:
            with open(args.out, "a") as fh:
                fh.write(line + "\n")
        print(line)
        return 0

    if args.cmd == "report":
        from .report import acceptance_report, render_report
        verdicts, all_pass = acceptance_report(args.dir,
                                               skip_inline=args.skip_inline)
        print(render_report(verdicts, out_json=args.json))
        return 0 if all_pass else 1

    raise AssertionError(f"unhandled command {args.cmd}")


if __name__ == "__main__":
    sys.exit(main())
