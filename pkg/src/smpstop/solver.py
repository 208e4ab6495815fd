"""Value iteration for the stopping recursion, stopping regions, and accuracy budgets.

The one-step recursion on base states is

    new(s, x) = min( c(x) * integral_0^s (1 - Q(t, E|x)) dt
                     + sum_y sum_{0 < t <= s} value(s - t, y) dQ(t, y|x),
                     g(x) )

discretized on a uniform grid with the jump mass of each step assigned to
its right endpoint. Iterating from zero increases pointwise to the minimal
expected cost over all stopping rules; the set where the value meets g is
the region in which stopping is optimal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import KernelGrid, TimeGrid, convolve_values, discretize_kernel
from .model import SMPModel, StateSpace, contraction_factor
from .smdp import SolveReport, build_smdp, default_max_iter, solve_smdp, stop_tolerance

__all__ = [
    "ContractionError",
    "ValueGrid",
    "StoppingRegion",
    "EpsBudget",
    "EpsRegionResult",
    "apply_G",
    "solve_value",
    "stopping_region",
    "iteration_budget",
    "eps_region",
    "exactness_gap",
    "cross_check",
    "write_value_csv",
    "read_value_csv",
    "write_region_csv",
    "read_region_csv",
]


class ContractionError(RuntimeError):
    """Jump mass within the horizon reaches 1, so no geometric budget exists."""


@dataclass
class ValueGrid:
    """Value function table on grid nodes for every base state."""

    grid: TimeGrid
    values: np.ndarray

    def value(self, s: float, x: int) -> float:
        return float(self.values[self.grid.index_of(s), x])


@dataclass
class StoppingRegion:
    """Grid subset where stopping is optimal; excludes zero remaining horizon.

    ``boundary[x]`` is the earliest member node time when the section of
    state x is an up-set reaching the horizon, else None.
    """

    grid: TimeGrid
    member: np.ndarray
    boundary: tuple[float | None, ...]

    def contains(self, s: float, x: int) -> bool:
        """Membership at remaining horizon s via the nearest node at or below s."""
        if s <= 0.0:
            return False
        return bool(self.member[self.grid.floor_index(s), x])


@dataclass(frozen=True)
class EpsBudget:
    """Iteration count sufficient for an eps-accurate value under contraction."""

    eps: float
    beta: float
    bound: float
    n_iter: int


@dataclass
class EpsRegionResult:
    region: "StoppingRegion"
    iterate: ValueGrid
    refined: ValueGrid
    budget: EpsBudget


def _g_sweep(model: SMPModel, kg: KernelGrid, values: np.ndarray) -> np.ndarray:
    cont = model.costs.rate[None, :] * kg.survival.T + convolve_values(kg, values)
    return np.minimum(cont, model.costs.terminal[None, :])


def apply_G(v: ValueGrid, model: SMPModel, kg: KernelGrid | None = None) -> ValueGrid:
    """One sweep of the stopping recursion: min(continuation cost, stop payoff)."""
    if kg is None:
        kg = discretize_kernel(model.kernel, v.grid)
    return ValueGrid(grid=v.grid, values=_g_sweep(model, kg, v.values))


def solve_value(
    model: SMPModel,
    grid: TimeGrid,
    tol: float = 1e-9,
    max_iter: int | None = None,
) -> tuple[ValueGrid, SolveReport]:
    """Iterate the stopping recursion from zero up to the value function.

    Iterates are pointwise nondecreasing and bounded by min(g(x), s * max c).
    The loop stops when the sup-norm successive difference drops to ``tol``;
    budget exhaustion is flagged in the report and the last iterate is still
    returned. The fixed-point residual is re-verified with one extra sweep.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = default_max_iter(model, tol)
    kg = discretize_kernel(model.kernel, grid)
    values = np.zeros((grid.steps + 1, len(model.states)))
    diffs: list[float] = []
    converged = False
    for _ in range(max_iter):
        nxt = _g_sweep(model, kg, values)
        diff = float(np.max(np.abs(nxt - values)))
        diffs.append(diff)
        values = nxt
        if diff <= tol:
            converged = True
            break
    residual = float(np.max(np.abs(_g_sweep(model, kg, values) - values)))
    report = SolveReport(
        iterations=len(diffs),
        final_diff=diffs[-1] if diffs else 0.0,
        residual=residual,
        converged=converged,
        sup_diffs=tuple(diffs),
    )
    return ValueGrid(grid=grid, values=values), report


def stopping_region(v: ValueGrid, model: SMPModel, eta: float = 1e-6) -> StoppingRegion:
    """Nodes where the value meets the stop payoff within eta * (1 + g(x)).

    Zero remaining horizon is never a member. A per-state boundary time is
    reported only when membership, scanned over the grid, is an up-set that
    reaches the horizon.
    """
    g = model.costs.terminal
    member = v.values >= (g - stop_tolerance(g, eta))[None, :]
    member[0, :] = False
    nodes = v.grid.nodes
    boundary: list[float | None] = []
    for x in range(len(model.states)):
        hits = np.flatnonzero(member[:, x])
        if hits.size and member[hits[0] :, x].all():
            boundary.append(float(nodes[hits[0]]))
        else:
            boundary.append(None)
    return StoppingRegion(grid=v.grid, member=member, boundary=tuple(boundary))


def iteration_budget(model: SMPModel, eps: float) -> EpsBudget:
    """Exact iteration count N = ceil((log(eps (1-beta)) - log(M+1)) / log beta).

    M = T * max c + max g bounds every iterate, and successive differences
    shrink geometrically at rate beta = sup_x Q(T, E|x); N iterations leave
    a tail of at most eps. Kernels with beta >= 1 have no such budget and
    raise ContractionError. The count is floored at one sweep.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    beta = contraction_factor(model)
    if beta >= 1.0:
        raise ContractionError(f"sup_x Q(T, E|x) = {beta:.12g}; the budget needs a value below 1")
    m_bound = model.horizon * float(model.costs.rate.max()) + float(model.costs.terminal.max())
    if beta == 0.0:
        n_iter = 1
    else:
        raw = (math.log(eps * (1.0 - beta)) - math.log(m_bound + 1.0)) / math.log(beta)
        n_iter = max(1, math.ceil(raw))
    return EpsBudget(eps=eps, beta=beta, bound=m_bound, n_iter=n_iter)


def eps_region(model: SMPModel, grid: TimeGrid, eps: float, eta: float = 1e-6) -> EpsRegionResult:
    """Run exactly the budgeted number of sweeps from zero and read off the region.

    The region collects the nodes where one further sweep of the recursion
    already returns the stop payoff. Stopping by hitting this region is
    eps-optimal; when the payoff margin outside it exceeds eps (see
    ``exactness_gap``) the region coincides with the optimal one.
    """
    budget = iteration_budget(model, eps)
    kg = discretize_kernel(model.kernel, grid)
    values = np.zeros((grid.steps + 1, len(model.states)))
    for _ in range(budget.n_iter):
        values = _g_sweep(model, kg, values)
    iterate = ValueGrid(grid=grid, values=values)
    refined = ValueGrid(grid=grid, values=_g_sweep(model, kg, values))
    region = stopping_region(refined, model, eta)
    return EpsRegionResult(region=region, iterate=iterate, refined=refined, budget=budget)


def exactness_gap(model: SMPModel, region: StoppingRegion, refined: ValueGrid) -> float:
    """Smallest stop-payoff margin g(x) - value outside the region; +inf if empty.

    A gap above eps certifies that the eps-region already equals the optimal
    stopping region.
    """
    outside = ~region.member
    outside[0, :] = False
    if not outside.any():
        return float("inf")
    margins = (model.costs.terminal[None, :] - refined.values)[outside]
    return float(margins.min())


def cross_check(model: SMPModel, grid: TimeGrid, tol: float = 1e-9) -> float:
    """Max discrepancy on base states between the two-action solve and the recursion.

    The two computations are algebraically identical node for node, so any
    visible discrepancy indicates an implementation fault.
    """
    u, _ = solve_smdp(build_smdp(model), grid, tol=tol)
    v, _ = solve_value(model, grid, tol=tol)
    return float(np.max(np.abs(u.values[:, : len(model.states)] - v.values)))


# ---------------------------------------------------------------------------
# CSV artifacts


def write_value_csv(v: ValueGrid, states: StateSpace, path) -> None:
    """Rows (s, state, value) for every node and state, 12 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("s,state,value\n")
        nodes = v.grid.nodes
        for k in range(v.grid.steps + 1):
            for x, label in enumerate(states.labels):
                fh.write(f"{nodes[k]:.12g},{label},{v.values[k, x]:.12g}\n")


def read_value_csv(path) -> tuple[np.ndarray, tuple[str, ...], np.ndarray]:
    """Read back (nodes, labels, values) from a value CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    labels = tuple(dict.fromkeys(r["state"] for r in rows))
    index = {s: i for i, s in enumerate(labels)}
    nodes = sorted(dict.fromkeys(float(r["s"]) for r in rows))
    node_index = {s: k for k, s in enumerate(nodes)}
    values = np.full((len(nodes), len(labels)), np.nan)
    for r in rows:
        values[node_index[float(r["s"])], index[r["state"]]] = float(r["value"])
    return np.array(nodes), labels, values


def write_region_csv(region: StoppingRegion, states: StateSpace, path) -> None:
    """Rows (s, state, stop) with stop in {0, 1} for every node and state."""
    with open(path, "w", newline="") as fh:
        fh.write("s,state,stop\n")
        nodes = region.grid.nodes
        for k in range(region.grid.steps + 1):
            for x, label in enumerate(states.labels):
                fh.write(f"{nodes[k]:.12g},{label},{int(region.member[k, x])}\n")


def read_region_csv(path) -> tuple[np.ndarray, tuple[str, ...], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    labels = tuple(dict.fromkeys(r["state"] for r in rows))
    index = {s: i for i, s in enumerate(labels)}
    nodes = sorted(dict.fromkeys(float(r["s"]) for r in rows))
    node_index = {s: k for k, s in enumerate(nodes)}
    member = np.zeros((len(nodes), len(labels)), dtype=bool)
    for r in rows:
        member[node_index[float(r["s"])], index[r["state"]]] = r["stop"] == "1"
    return np.array(nodes), labels, member
