import numpy as np
import pytest
from hypothesis import settings

from smpstop import (
    CostModel,
    DeterministicMarkovPolicy,
    Exponential,
    PointMass,
    SemiMarkovKernel,
    SMPModel,
    StateSpace,
    Uniform,
    Weibull,
)

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


def single_state_model(c=1.0, g=0.5, horizon=1.0, dist=None) -> SMPModel:
    """One state looping on itself; rate-1 exponential sojourns by default."""
    return SMPModel(
        states=StateSpace(("a",)),
        kernel=SemiMarkovKernel(np.array([[1.0]]), ((dist if dist is not None else Exponential(1.0),),)),
        costs=CostModel(np.array([float(c)]), np.array([float(g)])),
        horizon=horizon,
    )


def two_state_model() -> SMPModel:
    """Two states swapping with exponential sojourns of different rates."""
    return SMPModel(
        states=StateSpace(("a", "b")),
        kernel=SemiMarkovKernel(
            np.array([[0.0, 1.0], [1.0, 0.0]]),
            ((None, Exponential(2.0)), (Exponential(1.0), None)),
        ),
        costs=CostModel(np.array([2.0, 0.1]), np.array([0.3, 1.0])),
        horizon=1.0,
    )


@pytest.fixture
def m1() -> SMPModel:
    return single_state_model()


@pytest.fixture
def m2() -> SMPModel:
    return two_state_model()


def _random_dist(rng: np.random.Generator, horizon: float):
    kind = rng.choice(("exp", "weibull", "uniform", "point"))
    if kind == "exp":
        return Exponential(rate=float(rng.uniform(0.5, 3.0)))
    if kind == "weibull":
        return Weibull(shape=float(rng.uniform(0.8, 2.5)), scale=float(rng.uniform(0.3, 1.5) * horizon))
    if kind == "uniform":
        a = float(rng.uniform(0.0, 0.4) * horizon)
        return Uniform(a=a, b=a + float(rng.uniform(0.2, 1.6) * horizon))
    return PointMass(d=float(rng.uniform(0.1, 1.6) * horizon))


def make_random_model(rng: np.random.Generator, n_states: int | None = None, horizon: float | None = None) -> SMPModel:
    """Random model with mixed sojourn kinds and jump mass within the horizon <= 0.7.

    Every state routes at least 30% of its jump probability through an edge
    whose sojourn atom sits beyond the horizon, which keeps the contraction
    factor away from 1 and regularity trivially satisfied.
    """
    n = int(n_states if n_states is not None else rng.integers(1, 6))
    horizon = float(horizon if horizon is not None else rng.uniform(0.5, 2.0))
    P = np.zeros((n, n))
    sojourn: list[list] = [[None] * n for _ in range(n)]
    for x in range(n):
        anchor = int(rng.integers(0, n))
        weights = rng.uniform(0.5, 1.5, size=n)
        weights[anchor] = 0.0
        p_anchor = float(rng.uniform(0.3, 0.5)) if weights.sum() > 0 else 1.0
        row = np.zeros(n)
        if weights.sum() > 0:
            row = (1.0 - p_anchor) * weights / weights.sum()
        row[anchor] = p_anchor
        P[x] = row / row.sum()
        sojourn[x][anchor] = PointMass(d=horizon * float(rng.uniform(1.2, 1.9)))
        for y in range(n):
            if y != anchor and P[x, y] > 0:
                sojourn[x][y] = _random_dist(rng, horizon)
    return SMPModel(
        states=StateSpace(tuple(f"s{i}" for i in range(n))),
        kernel=SemiMarkovKernel(P, tuple(tuple(r) for r in sojourn)),
        costs=CostModel(rng.uniform(0.0, 3.0, size=n), rng.uniform(0.05, 2.0, size=n)),
        horizon=horizon,
    )


def make_random_policy(rng: np.random.Generator, n_base: int, grid) -> DeterministicMarkovPolicy:
    """Random admissible decision table that continues at zero remaining horizon.

    Half of the draws are i.i.d. coin flips per node, half are per-state
    threshold policies (stop from a random node onward, possibly never).
    """
    steps = grid.steps
    table = np.zeros((steps + 1, n_base + 1), dtype=np.int8)
    table[:, n_base] = 1
    if rng.random() < 0.5:
        table[1:, :n_base] = (rng.random((steps, n_base)) < 0.5).astype(np.int8)
    else:
        for x in range(n_base):
            first = int(rng.integers(1, steps + 2))
            if first <= steps:
                table[first:, x] = 1
    return DeterministicMarkovPolicy(grid=grid, table=table)
