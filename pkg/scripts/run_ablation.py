#!/usr/bin/env python3
"""Isolate and drop each feature set in one setting.

    python scripts/run_ablation.py --setting V4 --runs 20
    python scripts/run_ablation.py --peer-informative   # balanced generator, 30 annotators/domain
"""

import argparse
import dataclasses

from humanal import formats
from humanal.harness import SplitSetting, ablation
from humanal.simulator import SimConfig, generate_corpus


def peer_informative_config(n_annotators: int = 30) -> SimConfig:
    base = SimConfig()
    return dataclasses.replace(base, domains=tuple(
        dataclasses.replace(d, n_annotators=n_annotators, match_rate=0.5) for d in base.domains))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", help="corpus directory (default: simulate)")
    ap.add_argument("--peer-informative", action="store_true",
                    help="simulate the balanced generator used for the directional checks")
    ap.add_argument("--sim-seed", type=int, default=11)
    ap.add_argument("--setting", default="V4")
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--modes", default="isolate,drop")
    args = ap.parse_args()

    if args.corpus:
        corpus = formats.read_corpus(args.corpus)
    else:
        cfg = peer_informative_config() if args.peer_informative else SimConfig()
        corpus, _ = generate_corpus(cfg, seed=args.sim_seed)
    (setting,) = SplitSetting.parse(args.setting)

    rows = []
    for i, mode in enumerate(m.strip() for m in args.modes.split(",")):
        rows += ablation(corpus, mode, setting, runs=args.runs, seed=args.seed, include_full=(i == 0))
    print(formats.ablation_csv(rows), end="")


if __name__ == "__main__":
    main()
