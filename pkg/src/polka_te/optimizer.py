"""Flow-splitting objectives and forecast-driven path selection.

Three ways to split one demand across two candidate paths: cheapest
total cost (greedy fill of the lower-cost path), balanced load
(equalize utilization), and lowest queueing delay (scalar minimization
of the M/M/1-style delay sum).  Path selection ranks whole candidate
paths either by their forecast bandwidth over a horizon or by latency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class Objective(str, Enum):
    MIN_COST = "min_cost"
    MIN_MAX_UTILIZATION = "min_max_utilization"
    MIN_DELAY = "min_delay"
    MAX_PREDICTED_BANDWIDTH = "max_predicted_bandwidth"
    MIN_LATENCY = "min_latency"


@dataclass(frozen=True)
class PathSpec:
    """One candidate path as the splitter sees it."""

    ref: object
    capacity: float
    unit_cost: float = 0.0
    latency_ms: float = 0.0

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("path capacity must be > 0")
        if self.unit_cost < 0:
            raise ValueError("unit cost must be >= 0")


@dataclass(frozen=True)
class DemandSpec:
    demand: float
    paths: "tuple[PathSpec, ...]"

    def __post_init__(self):
        if self.demand < 0:
            raise ValueError("demand must be >= 0")
        if len(self.paths) < 2:
            raise ValueError("need at least two candidate paths")


@dataclass
class SplitDecision:
    """How one demand is divided across paths; allocations sum to the demand."""

    allocations: "dict[object, float]"
    objective_value: float


class InfeasibleDemandError(ValueError):
    def __init__(self, demand: float, max_feasible: float):
        super().__init__(
            f"demand {demand} exceeds the feasible total {max_feasible}"
        )
        self.demand = demand
        self.max_feasible = max_feasible


def _check_two_paths(spec: DemandSpec):
    if len(spec.paths) != 2:
        raise ValueError("this splitter handles exactly two paths")
    return spec.paths


def split_min_cost(spec: DemandSpec) -> SplitDecision:
    """Minimize unit_cost . x subject to x1 + x2 = demand, 0 <= x <= capacity.

    Greedy fill of the cheaper path is optimal for this two-variable LP.
    Equal costs degenerate to "anything feasible"; capacity-proportional
    is returned so the choice stays deterministic and spreads load.
    """
    p1, p2 = _check_two_paths(spec)
    h = spec.demand
    cap_total = p1.capacity + p2.capacity
    if h > cap_total:
        raise InfeasibleDemandError(h, cap_total)
    if p1.unit_cost == p2.unit_cost:
        x1 = h * p1.capacity / cap_total
    elif p1.unit_cost < p2.unit_cost:
        x1 = min(h, p1.capacity)
    else:
        x1 = h - min(h, p2.capacity)
    x2 = h - x1
    value = p1.unit_cost * x1 + p2.unit_cost * x2
    return SplitDecision({p1.ref: x1, p2.ref: x2}, value)


def split_min_max_util(spec: DemandSpec) -> SplitDecision:
    """Minimize max_i(x_i / c_i): equalized utilization across the paths.

    Works for any path count: with x_i = h * c_i / sum(c), every path runs
    at the same utilization h / sum(c), which no other feasible split can
    beat (some path would have to rise above it).
    """
    h = spec.demand
    cap_total = sum(p.capacity for p in spec.paths)
    if h > cap_total:
        raise InfeasibleDemandError(h, cap_total)
    util = h / cap_total
    allocations = {p.ref: util * p.capacity for p in spec.paths}
    return SplitDecision(allocations, util)


def _delay_objective(x1: float, h: float, c: float) -> float:
    x2 = h - x1
    return x1 / (c - x1) + 2.0 * x2 / (c - x2)


def split_min_delay(spec: DemandSpec, epsilon_fraction: float = 1e-6,
                    tol: float = 1e-6) -> SplitDecision:
    """Minimize x1/(c-x1) + 2*x2/(c-x2) with a shared capacity c.

    The objective diverges at x = c, so feasibility is the open interval:
    both allocations stay below c - eps.  Golden-section search over the
    surviving interval for x1; the objective is strictly convex there.
    """
    p1, p2 = _check_two_paths(spec)
    if p1.capacity != p2.capacity:
        raise ValueError("the delay objective assumes one shared capacity")
    c = p1.capacity
    h = spec.demand
    eps = epsilon_fraction * c
    if h >= 2 * (c - eps):
        raise InfeasibleDemandError(h, 2 * (c - eps))
    lo = max(0.0, h - (c - eps))
    hi = min(h, c - eps)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x_l = b - inv_phi * (b - a)
    x_r = a + inv_phi * (b - a)
    f_l = _delay_objective(x_l, h, c)
    f_r = _delay_objective(x_r, h, c)
    while b - a > tol:
        if f_l <= f_r:
            b, x_r, f_r = x_r, x_l, f_l
            x_l = b - inv_phi * (b - a)
            f_l = _delay_objective(x_l, h, c)
        else:
            a, x_l, f_l = x_l, x_r, f_r
            x_r = a + inv_phi * (b - a)
            f_r = _delay_objective(x_r, h, c)
    x1 = (a + b) / 2.0
    return SplitDecision({p1.ref: x1, p2.ref: h - x1},
                         _delay_objective(x1, h, c))


@dataclass(frozen=True)
class PathCandidate:
    """A whole path offered to select_path, with its forecast and latency."""

    ref: object
    forecast: "tuple[float, ...]" = ()
    latency_ms: float = 0.0


def _ref_key(ref: object):
    # numeric path ids order numerically, everything else by text
    if isinstance(ref, (int, float)):
        return (0, ref, "")
    return (1, 0, str(ref))


def select_path(candidates: "Sequence[PathCandidate]", objective: Objective,
                aggregate: str = "min") -> PathCandidate:
    """Pick the best whole path under a selection objective.

    MAX_PREDICTED_BANDWIDTH ranks paths by the worst step of their
    forecast horizon (pessimistic; "mean" aggregation is available),
    MIN_LATENCY by configured latency.  Ties break toward the smaller
    path ref so reruns pick the same path.
    """
    if not candidates:
        raise ValueError("no candidate paths")
    if objective == Objective.MAX_PREDICTED_BANDWIDTH:
        lengths = {len(c.forecast) for c in candidates}
        if len(lengths) != 1 or lengths == {0}:
            raise ValueError("candidates need forecasts of one common length")
        agg = min if aggregate == "min" else (lambda v: sum(v) / len(v))
        return min(candidates, key=lambda c: (-agg(c.forecast), _ref_key(c.ref)))
    if objective == Objective.MIN_LATENCY:
        return min(candidates, key=lambda c: (c.latency_ms, _ref_key(c.ref)))
    raise ValueError(f"{objective} is a splitting objective, not path selection")
