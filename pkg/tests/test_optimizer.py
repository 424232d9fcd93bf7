import random

import numpy as np
import pytest

from polka_te.optimizer import (
    DemandSpec,
    InfeasibleDemandError,
    Objective,
    PathCandidate,
    PathSpec,
    SplitDecision,
    select_path,
    split_min_cost,
    split_min_delay,
    split_min_max_util,
)


def two_paths(c1, c2, cost1=0.0, cost2=0.0):
    return (PathSpec("p1", c1, cost1), PathSpec("p2", c2, cost2))


# -- brute-force grid oracles -------------------------------------------------

def grid_best(spec: DemandSpec, objective, resolution=0.01):
    """Scan x1 over a grid and return the best objective value found."""
    p1, p2 = spec.paths
    h = spec.demand
    best = None
    steps = int(round(h / resolution))
    for k in range(steps + 1):
        x1 = min(k * resolution, h)
        x2 = h - x1
        if x1 > p1.capacity or x2 > p2.capacity:
            continue
        value = objective(x1, x2)
        if best is None or value < best:
            best = value
    return best


def cost_objective(spec):
    p1, p2 = spec.paths
    return lambda x1, x2: p1.unit_cost * x1 + p2.unit_cost * x2


def util_objective(spec):
    p1, p2 = spec.paths
    return lambda x1, x2: max(x1 / p1.capacity, x2 / p2.capacity)


def delay_objective(c):
    def f(x1, x2):
        if x1 >= c or x2 >= c:
            return float("inf")
        return x1 / (c - x1) + 2.0 * x2 / (c - x2)
    return f


def check_split(spec, decision: SplitDecision):
    total = sum(decision.allocations.values())
    assert total == pytest.approx(spec.demand, abs=1e-9)
    for path in spec.paths:
        x = decision.allocations[path.ref]
        assert -1e-9 <= x <= path.capacity + 1e-9


class TestMinCost:
    def test_cheap_path_absorbs_all(self):
        spec = DemandSpec(5.0, two_paths(10, 10, 1.0, 2.0))
        decision = split_min_cost(spec)
        assert decision.allocations == {"p1": 5.0, "p2": 0.0}
        assert decision.objective_value == 5.0

    def test_overflow_to_expensive_path(self):
        spec = DemandSpec(15.0, two_paths(10, 10, 1.0, 2.0))
        decision = split_min_cost(spec)
        assert decision.allocations == {"p1": 10.0, "p2": 5.0}
        assert decision.objective_value == 20.0
        oracle = grid_best(spec, cost_objective(spec))
        assert decision.objective_value == pytest.approx(oracle, abs=1e-2)

    def test_equal_costs_proportional(self):
        spec = DemandSpec(9.0, two_paths(20, 10, 2.0, 2.0))
        decision = split_min_cost(spec)
        assert decision.allocations["p1"] == pytest.approx(6.0)
        assert decision.allocations["p2"] == pytest.approx(3.0)
        assert decision.objective_value == pytest.approx(9.0 * 2.0)

    def test_infeasible_carries_max(self):
        with pytest.raises(InfeasibleDemandError) as err:
            split_min_cost(DemandSpec(25.0, two_paths(10, 10, 1.0, 2.0)))
        assert err.value.max_feasible == 20.0

    def test_oracle_sweep(self):
        rng = random.Random(100)
        for _ in range(100):
            c1, c2 = rng.uniform(2, 30), rng.uniform(2, 30)
            spec = DemandSpec(rng.uniform(0, c1 + c2),
                              two_paths(c1, c2, rng.uniform(0, 5), rng.uniform(0, 5)))
            decision = split_min_cost(spec)
            check_split(spec, decision)
            oracle = grid_best(spec, cost_objective(spec))
            assert decision.objective_value <= oracle + 1e-2


class TestMinMaxUtil:
    def test_symmetric(self):
        decision = split_min_max_util(DemandSpec(10.0, two_paths(10, 10)))
        assert decision.allocations == {"p1": 5.0, "p2": 5.0}
        assert decision.objective_value == 0.5

    def test_weighted(self):
        decision = split_min_max_util(DemandSpec(9.0, two_paths(20, 10)))
        assert decision.allocations["p1"] == pytest.approx(6.0)
        assert decision.allocations["p2"] == pytest.approx(3.0)
        assert decision.objective_value == pytest.approx(0.3)

    def test_zero_demand(self):
        decision = split_min_max_util(DemandSpec(0.0, two_paths(10, 10)))
        assert decision.allocations == {"p1": 0.0, "p2": 0.0}
        assert decision.objective_value == 0.0

    def test_equal_utilization_when_interior(self):
        decision = split_min_max_util(DemandSpec(13.0, two_paths(17, 5)))
        u1 = decision.allocations["p1"] / 17
        u2 = decision.allocations["p2"] / 5
        assert abs(u1 - u2) < 1e-9

    def test_oracle_sweep(self):
        rng = random.Random(200)
        for _ in range(100):
            c1, c2 = rng.uniform(2, 30), rng.uniform(2, 30)
            spec = DemandSpec(rng.uniform(0, c1 + c2), two_paths(c1, c2))
            decision = split_min_max_util(spec)
            check_split(spec, decision)
            oracle = grid_best(spec, util_objective(spec))
            assert decision.objective_value <= oracle + 1e-2

    def test_k_path_generalization(self):
        rng = random.Random(300)
        for _ in range(40):
            k = rng.randint(2, 4)
            caps = [rng.uniform(2, 30) for _ in range(k)]
            h = rng.uniform(0, sum(caps))
            spec = DemandSpec(h, tuple(PathSpec(f"p{i}", caps[i]) for i in range(k)))
            decision = split_min_max_util(spec)
            assert sum(decision.allocations.values()) == pytest.approx(h, abs=1e-9)
            # grid oracle on the max-utilization level
            best = None
            for trial in range(2000):
                split = [rng.uniform(0, caps[i]) for i in range(k)]
                scale = h / sum(split) if sum(split) else 0.0
                split = [s * scale for s in split]
                if any(s > caps[i] + 1e-12 for i, s in enumerate(split)):
                    continue
                level = max(s / caps[i] for i, s in enumerate(split))
                best = level if best is None else min(best, level)
            if best is not None:
                assert decision.objective_value <= best + 1e-2


class TestMinDelay:
    def test_shared_capacity_example(self):
        spec = DemandSpec(5.0, two_paths(10, 10))
        decision = split_min_delay(spec)
        # fine-grid oracle pins the stationary point near 3.787
        f = delay_objective(10.0)
        xs = np.arange(0.0, 5.0 + 1e-9, 1e-5)
        vals = [f(x, 5.0 - x) for x in xs]
        x_star = xs[int(np.argmin(vals))]
        assert x_star == pytest.approx(3.787, abs=1e-3)
        assert decision.allocations["p1"] == pytest.approx(x_star, abs=1e-3)
        assert decision.allocations["p2"] == pytest.approx(5.0 - x_star, abs=1e-3)

    def test_zero_demand(self):
        decision = split_min_delay(DemandSpec(0.0, two_paths(10, 10)))
        assert decision.allocations == {"p1": 0.0, "p2": 0.0}
        assert decision.objective_value == 0.0

    def test_tiny_demand_prefers_first_path(self):
        decision = split_min_delay(DemandSpec(0.1, two_paths(10, 10)))
        assert decision.allocations["p1"] > decision.allocations["p2"]

    def test_infeasible_near_double_capacity(self):
        with pytest.raises(InfeasibleDemandError):
            split_min_delay(DemandSpec(20.0, two_paths(10, 10)))

    def test_strict_interior(self):
        spec = DemandSpec(19.0, two_paths(10, 10))
        decision = split_min_delay(spec)
        assert decision.allocations["p1"] <= 10 - 1e-7
        assert decision.allocations["p2"] <= 10 - 1e-7
        assert np.isfinite(decision.objective_value)

    def test_oracle_sweep(self):
        rng = random.Random(400)
        for _ in range(100):
            c = rng.uniform(5, 30)
            h = rng.uniform(0, 1.9 * c)
            spec = DemandSpec(h, two_paths(c, c))
            decision = split_min_delay(spec)
            check_split(spec, decision)
            f = delay_objective(c)
            eps = 1e-6 * c
            best = None
            steps = int(round(h / 0.01))
            for k in range(steps + 1):
                x1 = min(k * 0.01, h)
                if x1 > c - eps or (h - x1) > c - eps:
                    continue
                value = f(x1, h - x1)
                best = value if best is None else min(best, value)
            if best is not None:
                assert decision.objective_value <= best + 1e-2


class TestSelectPath:
    def c(self, ref, forecast=(), latency=0.0):
        return PathCandidate(ref, tuple(forecast), latency)

    def test_dominant_forecast(self):
        winner = select_path(
            [self.c(1, [30.0] * 10), self.c(2, [12.0] * 10)],
            Objective.MAX_PREDICTED_BANDWIDTH)
        assert winner.ref == 1

    def test_worst_step_rules(self):
        winner = select_path(
            [self.c(1, [30.0] * 9 + [5.0]), self.c(2, [12.0] * 10)],
            Objective.MAX_PREDICTED_BANDWIDTH)
        assert winner.ref == 2

    def test_mean_aggregation_flag(self):
        winner = select_path(
            [self.c(1, [30.0] * 9 + [5.0]), self.c(2, [12.0] * 10)],
            Objective.MAX_PREDICTED_BANDWIDTH, aggregate="mean")
        assert winner.ref == 1

    def test_min_latency(self):
        winner = select_path([self.c(1, latency=23.0), self.c(2, latency=4.0)],
                             Objective.MIN_LATENCY)
        assert winner.ref == 2

    def test_scaling_invariance(self):
        base = [self.c(1, [10.0, 8.0, 9.0]), self.c(2, [7.0, 11.0, 12.0]),
                self.c(3, [9.0, 9.0, 9.0])]
        ref = select_path(base, Objective.MAX_PREDICTED_BANDWIDTH).ref
        for scale in (0.1, 3.0, 250.0):
            scaled = [self.c(c.ref, [scale * v for v in c.forecast]) for c in base]
            assert select_path(scaled, Objective.MAX_PREDICTED_BANDWIDTH).ref == ref

    def test_tie_breaks_by_ref(self):
        winner = select_path(
            [self.c(2, [5.0] * 3), self.c(1, [5.0] * 3)],
            Objective.MAX_PREDICTED_BANDWIDTH)
        assert winner.ref == 1

    def test_tie_break_orders_ids_numerically(self):
        winner = select_path(
            [self.c(10, [5.0] * 3), self.c(2, [5.0] * 3)],
            Objective.MAX_PREDICTED_BANDWIDTH)
        assert winner.ref == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_path([], Objective.MIN_LATENCY)

    def test_splitting_objective_rejected(self):
        with pytest.raises(ValueError, match="splitting"):
            select_path([self.c(1, [1.0])], Objective.MIN_COST)


class TestSpecs:
    def test_bad_capacity(self):
        with pytest.raises(ValueError):
            PathSpec("p", 0.0)

    def test_bad_demand(self):
        with pytest.raises(ValueError):
            DemandSpec(-1.0, two_paths(10, 10))

    def test_needs_two_paths(self):
        with pytest.raises(ValueError):
            DemandSpec(1.0, (PathSpec("p", 10.0),))
