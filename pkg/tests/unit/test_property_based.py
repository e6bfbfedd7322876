"""Property-based tests using hypothesis for edge case generation."""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ias_lab.lab.core import centroid, euclidean_distance
from ias_lab.lab.fgka import fgka_run, kmeans_op, legal_fitness, mutation_probabilities, solution_from_labels
from ias_lab.lab.reports import format_seconds
from ias_lab.lab.scheduler import score_assignment, vm_layout
from ias_lab.lab.sim import compute_cost, gen_workload
from ias_lab.models.clustering import FgkaParams
from ias_lab.models.features import Point
from ias_lab.models.rng import RngStream
from ias_lab.models.scheduling import Assignment, Policy
from ias_lab.models.simulation import WorkloadSpec
from tests.fixtures import LabDataBuilder

pytestmark = pytest.mark.property

coordinate = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


def points_of(dim, min_size=1, max_size=12):
    return st.lists(st.tuples(*[coordinate] * dim), min_size=min_size, max_size=max_size)


class TestPropertyBased:
    """Property-based tests for numeric invariants."""

    @given(st.tuples(coordinate, coordinate), st.tuples(coordinate, coordinate), st.tuples(coordinate, coordinate))
    def test_distance_is_a_metric(self, a, b, c):
        pa, pb, pc = Point(coords=a), Point(coords=b), Point(coords=c)
        ab = euclidean_distance(pa, pb)
        assert ab == euclidean_distance(pb, pa)
        assert ab >= 0
        slack = 1e-9 * (1 + ab)
        assert euclidean_distance(pa, pc) <= ab + euclidean_distance(pb, pc) + slack

    @given(points_of(2))
    def test_centroid_inside_bounding_box(self, coords):
        c = centroid([Point(coords=p) for p in coords]).coords
        X = np.array(coords)
        assert np.all(c >= X.min(axis=0) - 1e-9)
        assert np.all(c <= X.max(axis=0) + 1e-9)

    @given(st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False), min_size=1, max_size=8))
    def test_mutation_distribution_is_proper(self, distances):
        probs = mutation_probabilities(np.array([distances]))[0]
        assert np.all(probs > 0)
        assert math.isclose(probs.sum(), 1.0, rel_tol=1e-9)
        # closer clusters are never less likely
        order = np.argsort(distances, kind="stable")
        assert np.all(np.diff(probs[order]) <= 1e-12)

    @given(st.floats(min_value=0, max_value=1e9, allow_nan=False), st.floats(min_value=0, max_value=1.0))
    def test_legal_fitness_is_positive(self, twcv_max, share):
        assert legal_fitness(share * twcv_max, twcv_max) > 0

    @given(points_of(2, min_size=2), st.data())
    @settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow])
    def test_kmeans_operator_never_increases_variation(self, coords, data):
        k = data.draw(st.integers(min_value=1, max_value=len(coords)))
        labels = data.draw(st.lists(st.integers(1, k), min_size=len(coords), max_size=len(coords)))
        points = [Point(coords=p) for p in coords]
        sol = solution_from_labels(points, labels, k)
        after = kmeans_op(sol, points)
        assert after.twcv <= sol.twcv * (1 + 1e-9) + 1e-9

    @given(st.floats(min_value=0, max_value=1e6, allow_nan=False))
    def test_cost_is_makespan_to_two_decimals(self, makespan):
        cost = compute_cost(makespan)
        assert cost == round(makespan, 2)
        assert float(format_seconds(cost)) == pytest.approx(cost, abs=5e-3)

    @given(st.integers(min_value=0, max_value=300), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=25)
    def test_workload_ids_are_unique(self, n, seed):
        tasks = gen_workload(WorkloadSpec(task_count=n), RngStream(seed=seed))
        assert len({t.id for t in tasks}) == n

    @given(st.integers(min_value=0, max_value=2**32), st.lists(st.integers(0, 3), min_size=1, max_size=8))
    @settings(max_examples=40)
    def test_swapping_sibling_vms_keeps_the_score(self, seed, slots):
        gen = np.random.default_rng(seed)
        model = LabDataBuilder.random_model(gen, scale=0.01)
        batch = [
            LabDataBuilder.task(f"t{i}", size=float(gen.uniform(1, 50)), io_rate=float(gen.uniform(0, 20)))
            for i in range(len(slots))
        ]
        vms = vm_layout(2)
        ids = [vm.vm_id for vm in vms]
        swapped_ids = ["h0-vm1", "h0-vm0", "h1-vm1", "h1-vm0"]
        a = Assignment(mapping={t.id: ids[s] for t, s in zip(batch, slots)}, policy_tag=Policy.FGKA_PP)
        b = Assignment(mapping={t.id: swapped_ids[s] for t, s in zip(batch, slots)}, policy_tag=Policy.FGKA_PP)
        assert score_assignment(a, batch, vms, model).makespan == pytest.approx(
            score_assignment(b, batch, vms, model).makespan, rel=1e-12, abs=1e-12
        )

    @given(
        st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=4, max_size=12, unique=True),
        st.integers(min_value=2, max_value=4),
        st.integers(min_value=0, max_value=2**32),
    )
    @settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    def test_fgka_best_is_legal_on_distinct_points(self, coords, k, seed):
        points = [Point(coords=p) for p in coords]
        params = FgkaParams(population_size=6, max_generations=15, stall_generations=5)
        assert fgka_run(points, k, params, RngStream(seed=seed)).best.legal
