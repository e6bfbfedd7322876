"""Tests for FGKA++ operators, the driver and the k-means++ baseline."""
import numpy as np
import pytest

from ias_lab.lab.exceptions import KTooLarge, NonPositiveFitness
from ias_lab.lab.fgka import (
    FITNESS_FLOOR,
    brute_force_twcv,
    fgka_run,
    fitness,
    fitness_context,
    kmeans_op,
    kmeanspp_baseline,
    kmeanspp_seed,
    kmeanspp_seed_indices,
    legal_fitness,
    lloyd,
    mutate,
    mutation_distribution,
    mutation_probabilities,
    outranks,
    seeding_probabilities,
    selection_indices,
    solution_from_labels,
    twcv,
)
from ias_lab.models.clustering import FgkaParams, FitnessContext, StopReason
from ias_lab.models.features import Point
from ias_lab.models.rng import RngStream
from tests.fixtures import LabDataBuilder


def blobs(rng, centers, per_cluster=6, spread=0.3):
    rows = [rng.normal(loc=c, scale=spread, size=(per_cluster, len(c))) for c in centers]
    return LabDataBuilder.points(np.vstack(rows))


class TestSolutions:
    """Test solution construction and TWCV."""

    def test_twcv_of_two_pairs(self):
        points = LabDataBuilder.points([0.0, 1.0, 10.0, 11.0])
        sol = solution_from_labels(points, [1, 1, 2, 2], 2)
        assert sol.twcv == pytest.approx(1.0)
        assert sol.centroids == ((0.5,), (10.5,))
        assert sol.sizes == (2, 2)
        assert twcv(sol, points) == pytest.approx(sol.twcv)

    def test_empty_cluster_has_no_centroid(self):
        points = LabDataBuilder.points([0.0, 2.0])
        sol = solution_from_labels(points, [1, 1], 3)
        assert sol.centroids[1] is None and sol.centroids[2] is None
        assert sol.legality == pytest.approx(1 / 3)
        assert not sol.legal

    def test_weights_move_the_centroid(self):
        points = [Point(coords=(0.0,), weight=3.0), Point(coords=(4.0,), weight=1.0)]
        sol = solution_from_labels(points, [1, 1], 1)
        assert sol.centroids == ((1.0,),)
        assert sol.twcv == pytest.approx(3 * 1.0 + 1 * 9.0)

    def test_labels_out_of_range(self):
        with pytest.raises(ValueError):
            solution_from_labels(LabDataBuilder.points([0.0, 1.0]), [1, 3], 2)

    def test_brute_force_small_case(self):
        value, labels = brute_force_twcv(LabDataBuilder.points([0.0, 1.0, 10.0, 11.0]), 2)
        assert value == pytest.approx(1.0)
        assert labels == (1, 1, 2, 2)


class TestSeeding:
    """Test k-means++ D^2 seeding."""

    def test_first_pick_is_uniform(self):
        probs = seeding_probabilities(LabDataBuilder.points([0.0, 1.0, 3.0, 7.0]), [])
        assert np.allclose(probs, 0.25)

    def test_d2_probabilities(self):
        probs = seeding_probabilities(LabDataBuilder.points([0.0, 1.0, 3.0]), [0])
        assert np.allclose(probs, [0.0, 0.1, 0.9])

    def test_nearest_chosen_centroid_counts(self):
        probs = seeding_probabilities(LabDataBuilder.points([0.0, 1.0, 3.0, 4.0]), [0, 3])
        # d^2 = 0, 1, 1, 0
        assert np.allclose(probs, [0.0, 0.5, 0.5, 0.0])

    def test_coincident_points_give_zero_mass(self):
        probs = seeding_probabilities(LabDataBuilder.points([2.0, 2.0, 2.0]), [1])
        assert np.array_equal(probs, np.zeros(3))

    def test_indices_are_distinct(self, gen):
        X = gen.normal(size=(12, 2))
        for _ in range(50):
            idx = kmeanspp_seed_indices(X, np.ones(12), 5, gen)
            assert len(set(idx.tolist())) == 5

    def test_coincident_points_fall_back_to_uniform(self, gen):
        X = np.ones((4, 2))
        idx = kmeanspp_seed_indices(X, np.ones(4), 4, gen)
        assert sorted(idx.tolist()) == [0, 1, 2, 3]

    def test_forced_first_index(self, gen):
        points = LabDataBuilder.points([0.0, 5.0, 9.0])
        seeds = kmeanspp_seed(points, 2, gen, first_index=1)
        assert seeds[0] == points[1]

    def test_k_too_large(self, gen):
        with pytest.raises(KTooLarge) as exc_info:
            kmeanspp_seed(LabDataBuilder.points([0.0, 1.0]), 3, gen)
        assert exc_info.value.context == {"k": 3, "points": 2}


class TestSelection:
    """Test roulette-wheel selection."""

    def test_frequencies_match_fitness(self, gen):
        fitness_values = [1.0, 2.0, 3.0, 4.0]
        draws = selection_indices(fitness_values, 100_000, gen)
        freq = np.bincount(draws, minlength=4) / draws.size
        assert np.allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.01)

    @pytest.mark.parametrize("values", [[1.0, 0.0], [2.0, -1.0], [1.0, float("inf")], []])
    def test_rejects_non_positive(self, gen, values):
        with pytest.raises(NonPositiveFitness):
            selection_indices(values, 3, gen)


class TestMutation:
    """Test the distance-based mutation distribution."""

    def test_closer_clusters_are_more_likely(self):
        probs = mutation_distribution(Point(coords=0.0), [Point(coords=1.0), Point(coords=3.0)])
        # 1.5*3 - 1 + 0.5 = 4 and 1.5*3 - 3 + 0.5 = 2
        assert np.allclose(probs, [2 / 3, 1 / 3])

    def test_empty_cluster_counts_as_distance_zero(self):
        probs = mutation_distribution(Point(coords=0.0), [Point(coords=2.0), None])
        assert np.allclose(probs, [0.3, 0.7])

    def test_all_equal_distances_are_uniform(self):
        probs = mutation_probabilities(np.zeros((1, 4)))
        assert np.allclose(probs, 0.25)

    def test_rows_sum_to_one(self, gen):
        probs = mutation_probabilities(gen.uniform(0, 10, size=(50, 5)))
        assert np.allclose(probs.sum(axis=1), 1.0)
        assert np.all(probs > 0)

    def test_empirical_frequencies(self, gen):
        points = LabDataBuilder.points([0.0, 10.0])
        sol = solution_from_labels(points, [1, 2], 2)
        # point 0 sits on centroid 1 and 10 away from centroid 2
        expected = 15.5 / 21.0
        draws = 10_000
        stays = sum(mutate(sol, points, gen).labels[0] == 1 for _ in range(draws))
        assert stays / draws == pytest.approx(expected, abs=0.02)

    def test_single_cluster_is_unchanged(self, gen):
        points = LabDataBuilder.points([0.0, 1.0, 2.0])
        sol = solution_from_labels(points, [1, 1, 1], 1)
        assert mutate(sol, points, gen) is sol

    def test_zero_rate_is_unchanged(self, gen):
        points = LabDataBuilder.points([0.0, 1.0, 2.0])
        sol = solution_from_labels(points, [1, 2, 2], 2)
        assert mutate(sol, points, gen, mutation_rate=0.0) is sol


class TestKMeansOperator:
    """Test the single nearest-centroid reassignment."""

    def test_never_increases_twcv(self, gen):
        for _ in range(10_000):
            n = int(gen.integers(3, 12))
            k = int(gen.integers(1, n + 1))
            points = LabDataBuilder.points(gen.normal(size=(n, 2)))
            sol = solution_from_labels(points, gen.integers(1, k + 1, size=n), k)
            after = kmeans_op(sol, points)
            assert after.twcv <= sol.twcv + 1e-9

    def test_moves_points_to_nearest_centroid(self):
        points = LabDataBuilder.points([0.0, 1.0, 9.0, 10.0])
        sol = solution_from_labels(points, [1, 2, 2, 2], 2)
        # centroids 0 and 20/3: point 1.0 is closer to 0
        assert kmeans_op(sol, points).labels == (1, 1, 2, 2)

    def test_empty_cluster_takes_no_points(self):
        points = LabDataBuilder.points([0.0, 1.0, 2.0])
        sol = solution_from_labels(points, [1, 1, 1], 2)
        assert kmeans_op(sol, points).labels == (1, 1, 1)

    def test_lloyd_history_is_monotone(self, gen):
        points = blobs(gen, [(0, 0), (5, 5), (0, 5)])
        seeds = kmeanspp_seed(points, 3, gen)
        _, history = lloyd(points, 3, seeds)
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))


class TestFitness:
    """Test legal and illegal fitness."""

    def test_legal_fitness(self):
        assert legal_fitness(1.0, 2.0) == pytest.approx(3.0)
        assert legal_fitness(2.0, 2.0) == pytest.approx(2.0)

    def test_zero_variation_uses_floor(self):
        assert legal_fitness(0.0, 0.0) == FITNESS_FLOOR

    def test_legal_solution_outranks_lower_variation_illegal_one(self):
        points = LabDataBuilder.points([0.0, 0.1, 10.0, 10.1])
        illegal = solution_from_labels(points, [1, 1, 2, 2], 3)
        legal = solution_from_labels(points, [1, 2, 2, 3], 3)
        assert not illegal.legal and legal.legal
        assert illegal.twcv < legal.twcv
        assert outranks(legal, illegal)
        assert not outranks(illegal, legal)

    def test_illegal_scales_weakest_legal(self):
        points = LabDataBuilder.points([0.0, 1.0])
        sol = solution_from_labels(points, [1, 1], 2)
        assert sol.legality == 0.5
        assert fitness(sol, FitnessContext(twcv_max=3.0, f_min_legal=4.0)) == pytest.approx(2.0)

    def test_illegal_without_legal_solutions(self):
        points = LabDataBuilder.points([0.0, 1.0])
        sol = solution_from_labels(points, [2, 2], 4)
        assert fitness(sol, FitnessContext(twcv_max=0.5)) == pytest.approx(0.25)

    def test_illegal_never_beats_weakest_legal(self):
        points = LabDataBuilder.points([0.0, 1.0, 5.0, 6.0])
        legal_good = solution_from_labels(points, [1, 1, 2, 2], 2)
        legal_bad = solution_from_labels(points, [1, 2, 1, 2], 2)
        illegal = solution_from_labels(points, [1, 1, 1, 1], 2)
        ctx = fitness_context([legal_good, legal_bad, illegal])
        assert ctx.twcv_max == pytest.approx(max(s.twcv for s in (legal_good, legal_bad, illegal)))
        assert fitness(illegal, ctx) < fitness(legal_bad, ctx) < fitness(legal_good, ctx)


class TestFgkaRun:
    """Test the FGKA++ driver."""

    def test_finds_brute_force_optimum(self):
        """N=8, K=2: the optimum is found on at least 95% of seeds."""
        hits = baseline_hits = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            points = LabDataBuilder.points(rng.normal(size=(8, 2)))
            optimum, _ = brute_force_twcv(points, 2)
            result = fgka_run(points, 2, FgkaParams(), RngStream(seed=seed))
            tol = 1e-9 * max(1.0, optimum)
            hits += result.best.twcv <= optimum + tol
            baseline_hits += kmeanspp_baseline(points, 2, RngStream(seed=seed).derive("kmeans")).twcv <= optimum + tol
        assert hits >= 48
        assert baseline_hits - hits <= 2

    def test_escapes_empty_clusters(self):
        """Starting populations reach a legal best within 20 generations."""
        params = FgkaParams(population_size=6, max_generations=20)
        legal = 0
        for seed in range(100):
            rng = np.random.default_rng(500 + seed)
            points = blobs(rng, [(0, 0), (5, 0), (0, 5)], per_cluster=4)
            legal += fgka_run(points, 3, params, RngStream(seed=seed)).best.legal
        assert legal >= 90

    def test_not_worse_than_baseline_on_average(self):
        fg, km = [], []
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            points = blobs(rng, [(0, 0), (4, 0), (0, 4)], spread=1.0)
            stream = RngStream(seed=seed)
            fg.append(fgka_run(points, 3, FgkaParams(), stream.derive("fgka")).best.twcv)
            km.append(kmeanspp_baseline(points, 3, stream.derive("kmeans")).twcv)
        assert np.mean(fg) <= np.mean(km) + 1e-9

    def test_trace_and_best(self, gen):
        points = blobs(gen, [(0, 0), (6, 6)])
        result = fgka_run(points, 2, FgkaParams(population_size=6, max_generations=12), gen)
        assert result.trace[0].generation == 0
        assert len(result.trace) == result.generations + 1
        best = [g.best_twcv for g in result.trace]
        assert all(b <= a for a, b in zip(best, best[1:]))
        assert result.best.twcv == pytest.approx(best[-1])
        assert result.best.legal
        assert result.population.size == 6

    def test_stops_on_stall(self, gen):
        points = blobs(gen, [(0, 0), (9, 9)], spread=0.1)
        params = FgkaParams(population_size=4, max_generations=200, stall_generations=3)
        result = fgka_run(points, 2, params, gen)
        assert result.stop_reason == StopReason.STALL
        assert result.generations < 200

    def test_elitism_keeps_best_in_population(self, gen):
        points = blobs(gen, [(0, 0), (3, 3), (6, 0)], spread=0.8)
        params = FgkaParams(population_size=5, max_generations=8, elitism=True)
        result = fgka_run(points, 3, params, gen)
        assert result.best in result.population.solutions

    def test_deterministic_for_a_stream(self, gen):
        points = blobs(gen, [(0, 0), (5, 5)])
        a = fgka_run(points, 2, FgkaParams(population_size=5, max_generations=6), RngStream(seed=3))
        b = fgka_run(points, 2, FgkaParams(population_size=5, max_generations=6), RngStream(seed=3))
        assert a == b

    def test_k_equals_n(self, gen):
        points = LabDataBuilder.points([0.0, 1.0, 2.0])
        result = fgka_run(points, 3, FgkaParams(population_size=3, max_generations=3), gen)
        assert result.best.twcv == pytest.approx(0.0)

    def test_k_too_large(self, gen):
        with pytest.raises(KTooLarge):
            fgka_run(LabDataBuilder.points([0.0, 1.0]), 3, FgkaParams(), gen)

    def test_requires_a_stream(self):
        with pytest.raises(ValueError):
            fgka_run(LabDataBuilder.points([0.0, 1.0]), 1, FgkaParams())


class TestBaseline:
    """Test the k-means++ baseline."""

    def test_separates_blobs(self, gen):
        points = blobs(gen, [(0, 0), (20, 20)], spread=0.2)
        sol = kmeanspp_baseline(points, 2, gen)
        first, second = set(sol.labels[:6]), set(sol.labels[6:])
        assert len(first) == 1 and len(second) == 1 and first != second

    def test_deterministic_for_a_stream(self, gen):
        points = blobs(gen, [(0, 0), (3, 3)], spread=1.0)
        assert kmeanspp_baseline(points, 2, RngStream(seed=1)) == kmeanspp_baseline(points, 2, RngStream(seed=1))
