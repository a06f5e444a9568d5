#!/usr/bin/env python3
"""Full V1-V4 evaluation on a simulated (or supplied) corpus.

Prints the per-setting table and per-domain cells, and optionally writes
the JSON report.

    python scripts/run_protocol.py --seed 0 --runs 20 --out results/protocol.json
"""

import argparse
import json
import time

from humanal import formats
from humanal.harness import ALL_SETTINGS, SplitSetting, run_experiment, summarize
from humanal.simulator import generate_corpus


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", help="corpus directory (default: simulate with --sim-seed)")
    ap.add_argument("--sim-seed", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0, help="experiment seed")
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--settings", default="all")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", help="write report JSON here")
    args = ap.parse_args()

    if args.corpus:
        corpus, truth = formats.read_corpus(args.corpus), formats.read_sim_truth(args.corpus)
    else:
        corpus, truth = generate_corpus(seed=args.sim_seed)
    settings = SplitSetting.parse(args.settings) if args.settings != "all" else list(ALL_SETTINGS)

    start = time.perf_counter()
    report = run_experiment(corpus, settings, runs=args.runs, seed=args.seed, sim_truth=truth,
                            workers=args.workers)
    print(summarize(report))
    print()
    print(f"{'cell':<10}{'baseline':>10}{'HumanAL':>10}{'oracle':>10}{'skipped':>9}")
    for c in report.cells:
        oracle = "n/a" if c.oracle is None else f"{c.oracle:.3f}"
        print(f"{c.setting + '/' + c.domain:<10}{c.baseline:>10.3f}{c.humanal:>10.3f}"
              f"{oracle:>10}{c.skipped:>9}")
    print(f"\n{len(report.run_results)} runs in {time.perf_counter() - start:.1f} s")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(formats.dumps(report.to_dict()))
        print(f"report written to {args.out}")


if __name__ == "__main__":
    main()
