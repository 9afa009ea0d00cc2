#!/usr/bin/env python3
"""Train plain CTC against its regularized variants and compare peakedness.

Runs each objective over a set of seeds on one shared dataset, prints a
per-seed table plus seed means, and tallies how often each variant beats
the CTC baseline on test error rate, emit confidence, and emission
duration. Records land in the output directory as JSON.

Usage:
    python scripts/compare_objectives.py --preset desk --seeds 0,1,2,3,4
    python scripts/compare_objectives.py --objectives ctc,cr_ctc \
        --set cr.alpha=0.1 --set train.epochs=30
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ctckit import config as cfgmod
from ctckit.dataset import generate_dataset
from ctckit.harness import default_out_dir, run_experiment


def parse_args() -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="desk", choices=sorted(cfgmod.PRESETS))
    ap.add_argument("--config", default=None, help="key = value config file")
    ap.add_argument("--set", dest="assignments", action="append", default=[],
                    metavar="KEY=VALUE", help="override a single config key")
    ap.add_argument("--objectives", default="ctc,cr_ctc,sr_ctc")
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--out-dir", default=None)
    return ap.parse_args()


def main() -> int:
    args = parse_args()
    flat = cfgmod.resolve(preset=args.preset, file=args.config,
                          assignments=args.assignments)
    objectives = [o.strip() for o in args.objectives.split(",") if o.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    out_dir = args.out_dir or default_out_dir()

    dataset = generate_dataset(cfgmod.data_config(flat))
    print(f"dataset: {len(dataset.train)} train / {len(dataset.dev)} dev / "
          f"{len(dataset.test)} test, writing records to {out_dir}")

    header = (f"{'objective':10s} {'seed':>4s} {'test_greedy':>11s} "
              f"{'test_prefix':>11s} {'dur':>6s} {'blank_p':>8s} "
              f"{'nonblank_p':>10s} {'wall_s':>7s}")
    print(header)
    records: dict[str, list] = {}
    for objective in objectives:
        for seed in seeds:
            rec, _ = run_experiment(objective, flat, seed=seed,
                                    dataset=dataset, out_dir=out_dir)
            records.setdefault(objective, []).append(rec)
            print(f"{objective:10s} {seed:4d} {rec.test_greedy_ter:11.4f} "
                  f"{rec.test_prefix_ter:11.4f} "
                  f"{rec.peak['mean_nonblank_duration']:6.2f} "
                  f"{rec.peak['mean_blank_emit_prob']:8.4f} "
                  f"{rec.peak['mean_nonblank_emit_prob']:10.4f} "
                  f"{rec.wall_clock_s:7.1f}")

    def mean(recs, pick):
        return sum(pick(r) for r in recs) / len(recs)

    print("\nseed means:")
    for objective, recs in records.items():
        print(f"{objective:10s}      {mean(recs, lambda r: r.test_greedy_ter):11.4f} "
              f"{mean(recs, lambda r: r.test_prefix_ter):11.4f} "
              f"{mean(recs, lambda r: r.peak['mean_nonblank_duration']):6.2f} "
              f"{mean(recs, lambda r: r.peak['mean_blank_emit_prob']):8.4f} "
              f"{mean(recs, lambda r: r.peak['mean_nonblank_emit_prob']):10.4f}")

    if "ctc" in records:
        base = {r.seed: r for r in records["ctc"]}
        for objective, recs in records.items():
            if objective == "ctc":
                continue
            paired = [(r, base[r.seed]) for r in recs if r.seed in base]
            if not paired:
                continue
            n = len(paired)
            wins = sum(r.test_prefix_ter < b.test_prefix_ter for r, b in paired)
            softer = sum(
                r.peak["mean_blank_emit_prob"] < b.peak["mean_blank_emit_prob"]
                and r.peak["mean_nonblank_emit_prob"] < b.peak["mean_nonblank_emit_prob"]
                for r, b in paired)
            longer = sum(
                r.peak["mean_nonblank_duration"] >= b.peak["mean_nonblank_duration"]
                for r, b in paired)
            print(f"\n{objective} vs ctc over {n} seeds: "
                  f"lower prefix error {wins}/{n}, "
                  f"softer emissions {softer}/{n}, "
                  f"duration >= baseline {longer}/{n}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
