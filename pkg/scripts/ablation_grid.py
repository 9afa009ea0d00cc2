#!/usr/bin/env python3
"""Run the one-at-a-time ablation grid and write one CSV per axis.

Each axis perturbs a single config key away from the base configuration
(consistency weight, distance, target mode, frame filter, time and
frequency masking scale, objective). Every non-objective cell trains the
paired-view consistency objective so the axis actually bites.

Usage:
    python scripts/ablation_grid.py --preset smoke --axes alpha,distance
    python scripts/ablation_grid.py --seeds 0,1,2 --set train.epochs=20
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ctckit import config as cfgmod
from ctckit.dataset import generate_dataset
from ctckit.harness import SWEEP_AXES, default_out_dir, sweep, write_sweep_csv


def parse_args() -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="smoke", choices=sorted(cfgmod.PRESETS))
    ap.add_argument("--config", default=None, help="key = value config file")
    ap.add_argument("--set", dest="assignments", action="append", default=[],
                    metavar="KEY=VALUE", help="override a single config key")
    ap.add_argument("--axes", default=",".join(SWEEP_AXES),
                    help=f"comma list from: {', '.join(SWEEP_AXES)}")
    ap.add_argument("--seeds", default="0")
    ap.add_argument("--out-dir", default=None)
    return ap.parse_args()


def main() -> int:
    args = parse_args()
    flat = cfgmod.resolve(preset=args.preset, file=args.config,
                          assignments=args.assignments)
    axes = [a.strip() for a in args.axes.split(",") if a.strip()]
    seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip())
    out_dir = args.out_dir or default_out_dir()
    os.makedirs(out_dir, exist_ok=True)

    dataset = generate_dataset(cfgmod.data_config(flat))
    for axis in axes:
        rows = sweep(flat, axes=[axis], seeds=seeds, dataset=dataset)
        path = os.path.join(out_dir, f"sweep_{axis}.csv")
        write_sweep_csv(rows, path)
        print(f"{axis}: {len(rows)} rows -> {path}")
        for row in rows:
            print(f"  {row['value']!s:>16s} seed {row['seed']}: "
                  f"prefix {row['test_prefix_ter']:.4f} "
                  f"greedy {row['test_greedy_ter']:.4f} "
                  f"dur {row['mean_nonblank_duration']:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
