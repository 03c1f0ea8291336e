#!/usr/bin/env python3
"""Reproduce the four default sweeps with simulation columns into results/.

Usage: python scripts/run_all_sweeps.py [--trials N] [--seed N] [--outdir D]

The default grids mirror the shipped figure settings: two-user payloads
(300, 1000) over -5..10 dB, the packet-interval sweep at 0 dB, the two-user
block-fading sweep at K=1000, and the threshold-optimization grid.
"""

import argparse
import time
from pathlib import Path

from cwf.config import default_config
from cwf.sweeps import run_fading_sweep, run_queue_sweep, run_thm1_sweep, run_waterfill_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20240801)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    outdir = Path(args.outdir)
    runners = {
        "thm1_sweep": run_thm1_sweep,
        "queue_sweep": run_queue_sweep,
        "fading_sweep": run_fading_sweep,
        "waterfill_sweep": run_waterfill_sweep,
    }
    for kind, runner in runners.items():
        cfg = default_config(kind).override(trials=args.trials, seed=args.seed)
        out = outdir / f"{kind}.csv"
        start = time.time()
        runner(cfg, out)
        print(f"{kind:16s} -> {out}  ({time.time() - start:.1f}s)")


if __name__ == "__main__":
    main()
