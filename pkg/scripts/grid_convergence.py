#!/usr/bin/env python3
"""Grid refinement study: end-of-horizon values and halving ratios.

The discretization is first order, so each halving of the step should cut
the change in V(T, .) by roughly half.
"""

import argparse

import numpy as np

from smpstop import (
    CostModel,
    Exponential,
    SemiMarkovKernel,
    SMPModel,
    StateSpace,
    TimeGrid,
    solve_value,
)


def two_state():
    return SMPModel(
        states=StateSpace(("a", "b")),
        kernel=SemiMarkovKernel(
            np.array([[0.0, 1.0], [1.0, 0.0]]),
            ((None, Exponential(2.0)), (Exponential(1.0), None)),
        ),
        costs=CostModel(np.array([2.0, 0.1]), np.array([0.3, 1.0])),
        horizon=1.0,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--min-steps", type=int, default=64)
    parser.add_argument("--doublings", type=int, default=6)
    args = parser.parse_args()

    model = two_state()
    steps = [args.min_steps * 2**i for i in range(args.doublings + 1)]
    ends = {}
    print(f"{'K':>7}  {'V(T, a)':>14}  {'V(T, b)':>14}  {'sweeps':>6}")
    for k in steps:
        v, report = solve_value(model, TimeGrid(model.horizon, k), tol=1e-10)
        ends[k] = v.values[-1].copy()
        print(f"{k:>7}  {ends[k][0]:>14.9f}  {ends[k][1]:>14.9f}  {report.iterations:>6}")

    print("\nhalving ratios |V_2K - V_K| / |V_K - V_K/2| (per state max):")
    for prev, mid, nxt in zip(steps, steps[1:], steps[2:]):
        first = np.abs(ends[mid] - ends[prev]).max()
        second = np.abs(ends[nxt] - ends[mid]).max()
        ratio = second / first if first else float("nan")
        print(f"  K = {prev:>6} -> {mid:>6} -> {nxt:>6}: {ratio:.3f}")


if __name__ == "__main__":
    main()
