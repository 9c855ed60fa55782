"""``bench`` command line: run matrices, leak tests and timing formulas."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .adversary import leak_test
from .analysis import simulate_eager_time, simulate_parallel_time
from .bench import run_matrix
from .errors import OramError
from .pager import BACKENDS, PagerConfig
from .workloads import branch_secret


def _cmd_run(args) -> int:
    report = run_matrix(args.config, args.out, seed=args.seed, threads=args.threads,
                        clock=args.clock, parallel_cells=args.parallel_cells)
    for row in report.rows:
        k = "-" if row["K"] is None else row["K"]
        t = "-" if row["threads"] is None else row["threads"]
        print(f"{row['workload']:<16} {row['backend']:<9} K={k:<3} T={t:<3} "
              f"faults={row['faults']:<6} writes={row['slot_writes']:<7} "
              f"slowdown={row['slowdown_vs_baseline']:.3f}")
    overhead = report.thread_overhead()
    if overhead:
        print("thread spawn share of parallel ORAM time:",
              ", ".join(f"K={k}: {v:.2f}%" for k, v in overhead.items()))
    print(f"reports written to {args.out}")
    return 0


def _cmd_leak(args) -> int:
    secrets = tuple(int(s) for s in args.secrets.split(","))
    if len(secrets) != 2:
        raise SystemExit("--secrets takes exactly two comma-separated values")
    backends = BACKENDS if args.backend == "all" else (args.backend,)
    for b in backends:
        cfg = PagerConfig(resident_limit=args.resident, page_size=args.page_size, backend=b,
                          k=args.k, threads=args.threads, seed=args.seed)
        print(leak_test(branch_secret, secrets, cfg).to_json())
    return 0


def _cmd_simulate(args) -> int:
    if args.formula == "parallel":
        if len(args.args) != 3:
            raise SystemExit("parallel takes --args TOTAL ORAM_TIME SPEEDUP")
        value = simulate_parallel_time(*args.args)
    else:
        if len(args.args) != 1:
            raise SystemExit("eager takes --args TOTAL plus --gaps/--refreshes")
        value = simulate_eager_time(args.args[0], args.gaps, args.refreshes)
    print(json.dumps({"formula": args.formula, "result": value}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark matrix")
    run.add_argument("--config", help="JSON matrix config (defaults to the built-in sweep)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int, help="parallel worker count (default T = K)")
    run.add_argument("--clock", choices=("virtual", "wall"))
    run.add_argument("--parallel-cells", action="store_true",
                     help="run matrix cells concurrently (timings become unreliable)")
    run.set_defaults(func=_cmd_run)

    leak = sub.add_parser("leak", help="branch-secret distinguishability test")
    leak.add_argument("--secrets", default="1,2")
    leak.add_argument("--backend", default="all", choices=BACKENDS + ("all",))
    leak.add_argument("--resident", type=int, default=2,
                      help="resident-set size in pages (FIFO needs < 3 to leak here)")
    leak.add_argument("--k", type=int, default=3)
    leak.add_argument("--threads", type=int)
    leak.add_argument("--page-size", type=int, default=4096)
    leak.add_argument("--seed", type=int, default=0)
    leak.set_defaults(func=_cmd_leak)

    sim = sub.add_parser("simulate", help="evaluate a timing-projection formula")
    sim.add_argument("--formula", required=True, choices=("parallel", "eager"))
    sim.add_argument("--args", type=float, nargs="+", required=True)
    sim.add_argument("--gaps", type=float, nargs="*", default=[])
    sim.add_argument("--refreshes", type=float, nargs="*", default=[])
    sim.set_defaults(func=_cmd_simulate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
