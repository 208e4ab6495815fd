"""Two-action stop/continue decision process attached to a semi-Markov model.

The state space gains an absorbing rest state. Continuing runs the original
kernel and pays the running cost; stopping pays the terminal cost and parks
the process in the rest state with a sojourn longer than any horizon, so no
further cost can accrue. Value iteration on this process computes the
minimal expected cost over all stop/continue strategies, the argmin yields
an optimal decision table, and a fixed table can be evaluated the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import TimeGrid, KernelGrid, convolve_values, discretize_kernel
from .model import SMPModel, contraction_factor, kernel_mass

__all__ = [
    "CONTINUE",
    "STOP",
    "SMDPModel",
    "SMDPValueGrid",
    "DeterministicMarkovPolicy",
    "SolveReport",
    "build_smdp",
    "check_smdp_regularity",
    "apply_T_action",
    "apply_T",
    "solve_smdp",
    "extract_optimal_policy",
    "evaluate_policy",
    "default_max_iter",
    "stop_tolerance",
]

CONTINUE: int = 0
STOP: int = 1


@dataclass(frozen=True)
class SMDPModel:
    """Stop/continue decision model over the extended state space E + {rest}.

    Base states are indexed 0..n-1 as in the underlying model; the rest
    state has index n. Base states admit both actions, the rest state only
    the stop action. Costs and the controlled kernel are rule-based:

    * continue in x: running cost c(x), jumps by the underlying kernel;
    * stop in x: one-off terminal cost g(x), then a jump to the rest state
      with a sojourn point mass at horizon + 1 (never inside the horizon);
    * the rest state costs nothing and keeps stopping.
    """

    base: SMPModel

    @property
    def n_base(self) -> int:
        return len(self.base.states)

    @property
    def rest_state(self) -> int:
        return self.n_base

    @property
    def n_states(self) -> int:
        return self.n_base + 1

    def actions(self, x: int) -> tuple[int, ...]:
        return (STOP,) if x == self.rest_state else (CONTINUE, STOP)

    def cost_rate(self, x: int, a: int) -> float:
        if x != self.rest_state and a == CONTINUE:
            return float(self.base.costs.rate[x])
        return 0.0

    def terminal_cost(self, x: int, a: int) -> float:
        if x != self.rest_state and a == STOP:
            return float(self.base.costs.terminal[x])
        return 0.0

    def controlled_mass(self, x: int, a: int, t: float) -> float:
        """Jump probability of the controlled kernel within [0, t]."""
        if a == STOP:
            return 1.0 if t >= self.base.horizon + 1.0 else 0.0
        if x == self.rest_state:
            raise ValueError("continue is not admissible in the rest state")
        return kernel_mass(self.base.kernel, x, t)


def build_smdp(model: SMPModel) -> SMDPModel:
    """Attach the stop action and the absorbing rest state to a validated model."""
    return SMDPModel(base=model)


def check_smdp_regularity(sm: SMDPModel, delta: float, eps: float) -> bool:
    """Regularity of the controlled kernel, tested at delta-hat = min(delta, 1/2).

    Stop rows carry no mass before horizon + 1, so only continuation rows
    can violate the bound.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d_hat = min(delta, 0.5)
    bound = 1.0 - eps
    if sm.controlled_mass(sm.rest_state, STOP, d_hat) > bound:  # identically zero
        return False
    return all(sm.controlled_mass(x, CONTINUE, d_hat) <= bound for x in range(sm.n_base))


@dataclass
class SMDPValueGrid:
    """Values on grid nodes for every extended state; the rest column stays zero."""

    grid: TimeGrid
    values: np.ndarray

    def value(self, s: float, x: int) -> float:
        return float(self.values[self.grid.index_of(s), x])


@dataclass(frozen=True)
class DeterministicMarkovPolicy:
    """Action table on grid nodes; the last column is the rest state.

    ``zero_at_origin`` pins the action at zero remaining horizon to
    continue on base states. Policies with that property are exactly the
    ones whose induced stopping rules never fire once the horizon is spent.
    """

    grid: TimeGrid
    table: np.ndarray
    zero_at_origin: bool = True

    def __post_init__(self):
        tab = np.array(self.table, dtype=np.int8)
        if tab.ndim != 2 or tab.shape[0] != self.grid.steps + 1 or tab.shape[1] < 2:
            raise ValueError("policy table shape does not match the grid")
        if not np.isin(tab, (CONTINUE, STOP)).all():
            raise ValueError("policy actions must be 0 (continue) or 1 (stop)")
        if (tab[:, -1] != STOP).any():
            raise ValueError("the rest state admits only the stop action")
        if self.zero_at_origin and (tab[0, :-1] != CONTINUE).any():
            raise ValueError("policy must continue at zero remaining horizon")
        tab.flags.writeable = False
        object.__setattr__(self, "table", tab)

    def action(self, s: float, x: int) -> int:
        """Action at remaining horizon s, read from the nearest node at or below s."""
        return int(self.table[self.grid.floor_index(s), x])


@dataclass(frozen=True)
class SolveReport:
    """Iteration diagnostics of a fixed-point solve."""

    iterations: int
    final_diff: float
    residual: float
    converged: bool
    sup_diffs: tuple[float, ...]


def stop_tolerance(terminal: np.ndarray, eta: float) -> np.ndarray:
    """Per-state tolerance eta * (1 + g(x)) for value-equals-stop-payoff tests."""
    return eta * (1.0 + terminal)


def default_max_iter(model: SMPModel, tol: float) -> int:
    # ~10x the geometric-convergence bound when it exists, floored to guard
    # kernels with jump mass near 1 within the horizon
    beta = contraction_factor(model)
    if 0.0 < beta < 1.0:
        m_bound = model.horizon * float(model.costs.rate.max()) + float(model.costs.terminal.max())
        raw = (math.log(tol * (1.0 - beta)) - math.log(m_bound + 1.0)) / math.log(beta)
        return max(1000, 10 * max(1, math.ceil(raw)))
    return 1000


def _continuation(sm: SMDPModel, kg: KernelGrid, values: np.ndarray) -> np.ndarray:
    """Continue-action values on base states for all nodes: c * survival + convolution."""
    n = sm.n_base
    v_base = np.ascontiguousarray(values[:, :n])
    return sm.base.costs.rate[None, :] * kg.survival.T + convolve_values(kg, v_base)


def _t_sweep(sm: SMDPModel, kg: KernelGrid, values: np.ndarray, tie_break: str = "stop") -> np.ndarray:
    cont = _continuation(sm, kg, values)
    stop = np.broadcast_to(sm.base.costs.terminal[None, :], cont.shape)
    out = np.empty_like(values)
    if tie_break == "stop":
        out[:, : sm.n_base] = np.where(stop <= cont, stop, cont)
    elif tie_break == "continue":
        out[:, : sm.n_base] = np.where(cont <= stop, cont, stop)
    else:
        raise ValueError(f"unknown tie_break {tie_break!r}")
    out[:, sm.n_base] = 0.0
    return out


def _policy_sweep(sm: SMDPModel, kg: KernelGrid, table: np.ndarray, values: np.ndarray) -> np.ndarray:
    cont = _continuation(sm, kg, values)
    stop = np.broadcast_to(sm.base.costs.terminal[None, :], cont.shape)
    out = np.empty_like(values)
    out[:, : sm.n_base] = np.where(table[:, : sm.n_base] == STOP, stop, cont)
    out[:, sm.n_base] = 0.0
    return out


def apply_T_action(
    sm: SMDPModel,
    v: SMDPValueGrid,
    x: int,
    a: int,
    s: float,
    kg: KernelGrid | None = None,
) -> float:
    """One-step cost of action a at (s, x) continuing with value v.

    This is the running cost over the censored sojourn, plus the terminal
    cost if no jump occurs within s, plus the expected continuation value at
    the post-jump state and remaining horizon. Inadmissible actions cost
    +inf, so they never win a minimization.
    """
    if a not in sm.actions(x):
        return float("inf")
    grid = v.grid
    k = grid.index_of(s)
    if a == STOP:
        # no jump inside the horizon and no running cost; the rest state is free
        return sm.terminal_cost(x, STOP) * (1.0 - sm.controlled_mass(x, STOP, s))
    if kg is None:
        kg = discretize_kernel(sm.base.kernel, grid)
    conv = 0.0
    if k > 0:
        weights = kg.jump_mass[x, :, 1 : k + 1]
        future = v.values[k - 1 :: -1, : sm.n_base]
        conv = float(np.einsum("yj,jy->", weights, future))
    return sm.cost_rate(x, CONTINUE) * float(kg.survival[x, k]) + conv


def apply_T(sm: SMDPModel, v: SMDPValueGrid, kg: KernelGrid | None = None) -> SMDPValueGrid:
    """Pointwise minimum of the action operators over admissible actions."""
    if kg is None:
        kg = discretize_kernel(sm.base.kernel, v.grid)
    return SMDPValueGrid(grid=v.grid, values=_t_sweep(sm, kg, v.values))


def solve_smdp(
    sm: SMDPModel,
    grid: TimeGrid,
    tol: float = 1e-9,
    max_iter: int | None = None,
    tie_break: str = "stop",
) -> tuple[SMDPValueGrid, SolveReport]:
    """Iterate the minimum-cost operator from zero up to its least fixed point.

    Iterates are pointwise nondecreasing. The loop stops when the sup-norm
    successive difference drops to ``tol`` (or the budget runs out, flagged
    in the report); the fixed-point residual is re-verified afterwards with
    one extra sweep. Values do not depend on ``tie_break``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = default_max_iter(sm.base, tol)
    kg = discretize_kernel(sm.base.kernel, grid)
    values = np.zeros((grid.steps + 1, sm.n_states))
    diffs: list[float] = []
    converged = False
    for _ in range(max_iter):
        nxt = _t_sweep(sm, kg, values, tie_break)
        diff = float(np.max(np.abs(nxt - values)))
        diffs.append(diff)
        values = nxt
        if diff <= tol:
            converged = True
            break
    residual = float(np.max(np.abs(_t_sweep(sm, kg, values, tie_break) - values)))
    report = SolveReport(
        iterations=len(diffs),
        final_diff=diffs[-1] if diffs else 0.0,
        residual=residual,
        converged=converged,
        sup_diffs=tuple(diffs),
    )
    return SMDPValueGrid(grid=grid, values=values), report


def extract_optimal_policy(sm: SMDPModel, u: SMDPValueGrid, eta: float = 1e-6) -> DeterministicMarkovPolicy:
    """Stop wherever the solved value already equals the stop payoff.

    Equality is tested with tolerance eta * (1 + g(x)); ties prefer
    stopping. At zero remaining horizon the policy always continues, so the
    result induces a stopping rule that never fires with the horizon spent.
    """
    n = sm.n_base
    g = sm.base.costs.terminal
    threshold = g - stop_tolerance(g, eta)
    table = np.zeros((u.grid.steps + 1, sm.n_states), dtype=np.int8)
    table[:, :n] = np.where(u.values[:, :n] >= threshold[None, :], STOP, CONTINUE)
    table[0, :n] = CONTINUE
    table[:, n] = STOP
    return DeterministicMarkovPolicy(grid=u.grid, table=table)


def evaluate_policy(
    sm: SMDPModel,
    policy: DeterministicMarkovPolicy,
    tol: float = 1e-9,
    max_iter: int | None = None,
) -> tuple[SMDPValueGrid, SolveReport]:
    """Expected cost of following a fixed decision table, on the policy's grid."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = default_max_iter(sm.base, tol)
    grid = policy.grid
    kg = discretize_kernel(sm.base.kernel, grid)
    values = np.zeros((grid.steps + 1, sm.n_states))
    diffs: list[float] = []
    converged = False
    for _ in range(max_iter):
        nxt = _policy_sweep(sm, kg, policy.table, values)
        diff = float(np.max(np.abs(nxt - values)))
        diffs.append(diff)
        values = nxt
        if diff <= tol:
            converged = True
            break
    residual = float(np.max(np.abs(_policy_sweep(sm, kg, policy.table, values) - values)))
    report = SolveReport(
        iterations=len(diffs),
        final_diff=diffs[-1] if diffs else 0.0,
        residual=residual,
        converged=converged,
        sup_diffs=tuple(diffs),
    )
    return SMDPValueGrid(grid=grid, values=values), report
