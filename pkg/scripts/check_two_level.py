#!/usr/bin/env python3
"""Check the single-atom case against its closed-form solution.

With one atom the model is an exact two-level exchange: starting from the
excited atom, the one-photon probability is P_1(t) = sin^2(g t / hbar).
This script simulates a full period and prints the worst deviation; it exits
nonzero if the deviation exceeds the documented 1e-4 budget.
"""

import argparse
import math
import sys

import numpy as np

from tcmgrid import EvolutionConfig, GridStrategy, ModelParams, run_trajectory

TOLERANCE = 1e-4


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--coupling", type=float, default=1.0)
    parser.add_argument("--dt", type=float, default=0.001)
    parser.add_argument("--strategy", default="serial", help="'serial' or 'grid(q)'")
    args = parser.parse_args()

    params = ModelParams.uniform(1, args.coupling)
    period = 2 * math.pi * params.hbar / args.coupling
    steps = math.ceil(period / args.dt)
    record = run_trajectory(
        params,
        EvolutionConfig(dt=args.dt, steps=steps, strategy=GridStrategy.parse(args.strategy)),
    )
    expected = np.sin(args.coupling * record.times / params.hbar) ** 2
    err = float(np.max(np.abs(record.photon_probs[:, 1] - expected)))

    print(f"steps={steps} dt={args.dt} coupling={args.coupling}")
    print(f"max |P_1(t) - sin^2(g t / hbar)| = {err:.3e} (budget {TOLERANCE:.0e})")
    if err > TOLERANCE:
        print("FAIL: deviation exceeds budget", file=sys.stderr)
        return 1
    print("PASS")
    return 0


if __name__ == "__main__":
    sys.exit(main())
