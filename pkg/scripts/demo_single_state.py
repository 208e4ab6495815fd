#!/usr/bin/env python3
"""End-to-end demo on the single-state benchmark.

A unit-rate exponential self-loop with running cost 1, terminal cost 0.5,
and horizon 1 has the closed-form value min(s, 0.5) and stop boundary at
s = 0.5, so every number printed here can be checked by hand.
"""

import argparse

import numpy as np

from smpstop import (
    AlwaysStop,
    CostModel,
    Exponential,
    NeverStop,
    RegionRule,
    SemiMarkovKernel,
    SMPModel,
    StateSpace,
    TimeGrid,
    contraction_factor,
    estimate_value,
    iteration_budget,
    solve_value,
    stopping_region,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid", type=int, default=1024)
    parser.add_argument("--paths", type=int, default=20000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    model = SMPModel(
        states=StateSpace(("a",)),
        kernel=SemiMarkovKernel(np.array([[1.0]]), ((Exponential(1.0),),)),
        costs=CostModel(np.array([1.0]), np.array([0.5])),
        horizon=1.0,
    )
    grid = TimeGrid(model.horizon, args.grid)

    print(f"beta = {contraction_factor(model):.6f}")
    budget = iteration_budget(model, 0.01)
    print(f"iteration budget for eps = 0.01: N = {budget.n_iter} (M = {budget.bound})")

    v, report = solve_value(model, grid, tol=1e-10)
    region = stopping_region(v, model)
    exact = np.minimum(grid.nodes, 0.5)
    print(f"solved in {report.iterations} sweeps, residual {report.residual:.2e}")
    print(f"max |V - min(s, 0.5)| = {np.abs(v.values[:, 0] - exact).max():.2e}")
    print(f"stop boundary at s = {region.boundary[0]:.6f} (closed form: 0.5)")

    print(f"\nMonte-Carlo from x0 = a with {args.paths} paths, seed {args.seed}:")
    for name, rule in (("optimal", RegionRule(region)), ("always", AlwaysStop()), ("never", NeverStop())):
        mc = estimate_value(model, rule, "a", args.paths, args.seed)
        print(f"  {name:>8}: mean {mc.mean:.6f}  SE {mc.std_err:.2e}  stopped before T: {mc.stopped_before_frac:.3f}")
    print(f"  dp value: {v.values[-1, 0]:.6f}")


if __name__ == "__main__":
    main()
