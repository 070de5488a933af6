#!/usr/bin/env python3
"""Benchmark grid strategies against serial execution and emit speedup tables.

Times both the propagator-factor build and a short trajectory at each
(dimension, strategy) cell, strictly sequentially, and writes raw timings
(JSONL) plus one speedup CSV per task into --outdir. Ratios are wall-time
relative to the serial kernel; absolute numbers depend entirely on the host.
"""

import argparse
import os
import sys

from tcmgrid.cli import main as tcmgrid_main


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results/bench")
    parser.add_argument("--dimensions", default="16,64,256")
    parser.add_argument("--strategies", default="serial,grid(2),grid(4),grid(8)")
    parser.add_argument("--tasks", default="taylor,evolution")
    parser.add_argument("--repetitions", type=int, default=3)
    parser.add_argument("--steps", type=int, default=5, help="evolution steps per cell")
    parser.add_argument(
        "--use-tcm",
        action="store_true",
        help="time model Hamiltonians instead of seeded synthetic inputs",
    )
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    argv = [
        "bench",
        "--dimensions", args.dimensions,
        "--strategies", args.strategies,
        "--tasks", args.tasks,
        "--repetitions", str(args.repetitions),
        "--steps", str(args.steps),
        "--records", os.path.join(args.outdir, "records.jsonl"),
        "--table-prefix", os.path.join(args.outdir, "speedup"),
    ]
    if args.use_tcm:
        argv.append("--use-tcm")
    return tcmgrid_main(argv)


if __name__ == "__main__":
    sys.exit(main())
