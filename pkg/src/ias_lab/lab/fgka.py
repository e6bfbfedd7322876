"""FGKA++ genetic clustering and the plain k-means++ baseline.

A generation applies roulette-wheel selection, distance-based mutation and
one nearest-centroid (k-means) reassignment, in that order. Labels are
1-based in ``ClusterSolution`` and 0-based in the array helpers.
"""

import itertools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.clustering import (
    ClusterSolution,
    FgkaParams,
    FgkaResult,
    FitnessContext,
    GenerationStats,
    Population,
    StopReason,
)
from ..models.features import Point
from ..models.rng import RngLike, as_generator
from .core import pairwise_distances, points_to_arrays
from .exceptions import KTooLarge, NonPositiveFitness

logger = logging.getLogger(__name__)

#: Fitness of legal solutions when every solution has zero variation.
FITNESS_FLOOR = 1.0

_BRUTE_FORCE_LIMIT = 2**16


def _arrays(points: Sequence[Point]) -> Tuple[np.ndarray, np.ndarray]:
    if not points:
        raise KTooLarge("cannot cluster an empty point set", context={"points": 0})
    return points_to_arrays(points)


def _check_k(k: int, n: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge("more clusters than points", context={"k": k, "points": n})


def cluster_centroids(X: np.ndarray, w: np.ndarray, labels0: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted centroids (k, d) and sizes (k,) of a 0-based labeling.

    Rows of empty clusters are zero; check ``sizes`` before using them.
    """
    sizes = np.bincount(labels0, minlength=k)
    mass = np.bincount(labels0, weights=w, minlength=k)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels0, w[:, None] * X)
    C = np.divide(sums, mass[:, None], out=np.zeros_like(sums), where=mass[:, None] > 0)
    return C, sizes


def _twcv(X: np.ndarray, w: np.ndarray, labels0: np.ndarray, C: np.ndarray) -> float:
    diff = X - C[labels0]
    return float(np.sum(w * np.einsum("nd,nd->n", diff, diff)))


def build_solution(X: np.ndarray, w: np.ndarray, labels0: np.ndarray, k: int) -> ClusterSolution:
    """Wrap a 0-based labeling with its cached centroids, sizes and TWCV."""
    C, sizes = cluster_centroids(X, w, labels0, k)
    centroids = tuple(tuple(C[j].tolist()) if sizes[j] > 0 else None for j in range(k))
    return ClusterSolution(
        labels=tuple((labels0 + 1).tolist()),
        k=k,
        centroids=centroids,
        sizes=tuple(sizes.tolist()),
        twcv=_twcv(X, w, labels0, C),
    )


def solution_from_labels(points: Sequence[Point], labels: Sequence[int], k: int) -> ClusterSolution:
    """Build a solution from 1-based labels."""
    X, w = _arrays(points)
    labels0 = np.asarray(labels, dtype=int) - 1
    if labels0.shape != (len(points),):
        raise ValueError("one label per point is required")
    if labels0.min() < 0 or labels0.max() >= k:
        raise ValueError(f"labels must lie in [1, {k}]")
    return build_solution(X, w, labels0, k)


def twcv(sol: ClusterSolution, points: Sequence[Point]) -> float:
    """Total within-cluster variation recomputed from the labels."""
    X, w = _arrays(points)
    labels0 = np.asarray(sol.labels) - 1
    C, _ = cluster_centroids(X, w, labels0, sol.k)
    return _twcv(X, w, labels0, C)


def _nearest(X: np.ndarray, C: np.ndarray, available: Optional[np.ndarray] = None) -> np.ndarray:
    D = pairwise_distances(X, C)
    if available is not None:
        D = np.where(available[None, :], D, np.inf)
    # argmin returns the first minimum: ties go to the lowest cluster index
    return np.argmin(D, axis=1)


# --- k-means++ seeding -------------------------------------------------------


def _d2_weights(X: np.ndarray, w: np.ndarray, chosen: Sequence[int]) -> np.ndarray:
    d2 = np.full(X.shape[0], np.inf)
    for idx in chosen:
        diff = X - X[idx]
        d2 = np.minimum(d2, np.einsum("nd,nd->n", diff, diff))
    return w * d2


def seeding_probabilities(points: Sequence[Point], chosen: Sequence[int]) -> np.ndarray:
    """D^2 distribution for the next k-means++ centroid given chosen indices.

    Returns all zeros when every point coincides with a chosen centroid.
    """
    X, w = _arrays(points)
    if not chosen:
        return np.full(X.shape[0], 1.0 / X.shape[0])
    weights = _d2_weights(X, w, chosen)
    total = weights.sum()
    return weights / total if total > 0 else np.zeros_like(weights)


def kmeanspp_seed_indices(
    X: np.ndarray,
    w: np.ndarray,
    k: int,
    rng: np.random.Generator,
    *,
    first_index: Optional[int] = None,
) -> np.ndarray:
    """Indices of ``k`` distinct points chosen by D^2 sampling.

    When all remaining mass is zero (coincident points) the rest are drawn
    uniformly without replacement from the points not yet chosen.
    """
    n = X.shape[0]
    _check_k(k, n)
    chosen = [int(rng.integers(n)) if first_index is None else int(first_index)]
    d2 = _d2_weights(X, w, chosen)
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            remaining = np.setdiff1d(np.arange(n), np.asarray(chosen))
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        diff = X - X[idx]
        d2 = np.minimum(d2, w * np.einsum("nd,nd->n", diff, diff))
    return np.asarray(chosen, dtype=int)


def kmeanspp_seed(
    points: Sequence[Point],
    k: int,
    rng: RngLike,
    *,
    first_index: Optional[int] = None,
) -> List[Point]:
    """Choose ``k`` initial centroids by k-means++ seeding.

    Args:
        points: Patterns to seed from
        k: Number of centroids
        rng: Random stream or generator
        first_index: Force the first pick instead of drawing it uniformly

    Returns:
        The chosen points, in pick order

    Raises:
        KTooLarge: If ``k`` exceeds the number of points
    """
    X, w = _arrays(points)
    idx = kmeanspp_seed_indices(X, w, k, as_generator(rng), first_index=first_index)
    return [points[i] for i in idx]


# --- genetic operators -------------------------------------------------------


def selection_indices(fitness: Sequence[float], size: int, rng: RngLike) -> np.ndarray:
    """Roulette-wheel draws: ``size`` i.i.d. indices with P(p) = F_p / sum F.

    Raises:
        NonPositiveFitness: If any fitness is not a finite positive number
    """
    F = np.asarray(fitness, dtype=float)
    if F.size == 0 or not np.all(np.isfinite(F)) or np.any(F <= 0):
        raise NonPositiveFitness("selection needs finite fitness values > 0", context={"min": float(F.min()) if F.size else None})
    return as_generator(rng).choice(F.size, size=size, replace=True, p=F / F.sum())


def selection(pop: Population, rng: RngLike) -> List[ClusterSolution]:
    """Draw the next generation (before mutation) with replacement."""
    idx = selection_indices(pop.fitness, pop.size, rng)
    return [pop.solutions[i] for i in idx]


def mutation_probabilities(distances: np.ndarray) -> np.ndarray:
    """Row-wise label distribution from an (N, K) distance matrix.

    R_k is proportional to 1.5 * d_max - d_k + 0.5 where empty clusters must
    already carry distance 0 and d_max is the row maximum over all K entries.
    """
    D = np.atleast_2d(np.asarray(distances, dtype=float))
    d_max = D.max(axis=1, keepdims=True)
    numerators = 1.5 * d_max - D + 0.5
    return numerators / numerators.sum(axis=1, keepdims=True)


def mutation_distribution(x: Point, centroids: Sequence[Optional[Point]], k: Optional[int] = None) -> np.ndarray:
    """Probability over labels 1..K for re-drawing the label of ``x``.

    ``None`` entries mark empty clusters, whose distance is taken as 0.
    """
    k = len(centroids) if k is None else k
    if k < 1 or len(centroids) != k:
        raise ValueError("one centroid entry per cluster is required")
    xa = x.as_array()
    d = np.array([0.0 if c is None else float(np.linalg.norm(xa - c.as_array())) for c in centroids])
    return mutation_probabilities(d[None, :])[0]


def _mutate_labels(
    X: np.ndarray, w: np.ndarray, labels0: np.ndarray, k: int, rate: float, gen: np.random.Generator
) -> np.ndarray:
    if k == 1 or rate <= 0:
        return labels0
    C, sizes = cluster_centroids(X, w, labels0, k)
    D = np.where(sizes[None, :] > 0, pairwise_distances(X, C), 0.0)
    cum = np.cumsum(mutation_probabilities(D), axis=1)
    u_mutate = gen.random(X.shape[0])
    u_pick = gen.random(X.shape[0])
    drawn = np.minimum((u_pick[:, None] >= cum).sum(axis=1), k - 1)
    return np.where(u_mutate < rate, drawn, labels0)


def mutate(sol: ClusterSolution, points: Sequence[Point], rng: RngLike, mutation_rate: float = 1.0) -> ClusterSolution:
    """Distance-based mutation of every allele against one centroid snapshot.

    Each label is independently re-drawn with probability ``mutation_rate``
    from ``mutation_distribution`` evaluated on the pre-mutation centroids.
    """
    if sol.k == 1 or mutation_rate <= 0:
        return sol
    X, w = _arrays(points)
    labels0 = np.asarray(sol.labels) - 1
    new = _mutate_labels(X, w, labels0, sol.k, mutation_rate, as_generator(rng))
    return build_solution(X, w, new, sol.k)


def _kmeans_labels(X: np.ndarray, w: np.ndarray, labels0: np.ndarray, k: int) -> np.ndarray:
    C, sizes = cluster_centroids(X, w, labels0, k)
    return _nearest(X, C, sizes > 0)


def kmeans_op(sol: ClusterSolution, points: Sequence[Point]) -> ClusterSolution:
    """One simultaneous nearest-centroid reassignment over non-empty clusters."""
    X, w = _arrays(points)
    labels0 = np.asarray(sol.labels) - 1
    return build_solution(X, w, _kmeans_labels(X, w, labels0, sol.k), sol.k)


# --- fitness -----------------------------------------------------------------


def legal_fitness(twcv_value: float, twcv_max: float) -> float:
    """1.5 * twcv_max - twcv + 0.5 * twcv_max, floored when all variation is zero."""
    if twcv_max <= 0:
        return FITNESS_FLOOR
    return 1.5 * twcv_max - twcv_value + 0.5 * twcv_max


def fitness_context(solutions: Sequence[ClusterSolution]) -> FitnessContext:
    """Generation-wide TWCV maximum and minimum legal fitness."""
    twcv_max = max(s.twcv for s in solutions)
    legal = [legal_fitness(s.twcv, twcv_max) for s in solutions if s.legal]
    return FitnessContext(twcv_max=twcv_max, f_min_legal=min(legal) if legal else None)


def fitness(sol: ClusterSolution, context: FitnessContext) -> float:
    """Fitness of one solution; illegal ones scale the weakest legal fitness by e(S)."""
    if sol.legal:
        return legal_fitness(sol.twcv, context.twcv_max)
    base = context.f_min_legal if context.f_min_legal is not None else 1.0
    return sol.legality * base


def _evaluate(solutions: Sequence[ClusterSolution]) -> Tuple[float, ...]:
    context = fitness_context(solutions)
    return tuple(fitness(s, context) for s in solutions)


def _stats(generation: int, solutions: Sequence[ClusterSolution], best: ClusterSolution) -> GenerationStats:
    return GenerationStats(
        generation=generation,
        best_twcv=best.twcv,
        mean_twcv=float(np.mean([s.twcv for s in solutions])),
        legal_fraction=sum(1 for s in solutions if s.legal) / len(solutions),
    )


def outranks(candidate: ClusterSolution, incumbent: ClusterSolution) -> bool:
    """Whether ``candidate`` should replace ``incumbent`` as the best solution.

    Legal solutions beat illegal ones whatever their TWCV; otherwise the
    lower TWCV wins.
    """
    return (not candidate.legal, candidate.twcv) < (not incumbent.legal, incumbent.twcv)


def _best_index(solutions: Sequence[ClusterSolution]) -> int:
    return min(range(len(solutions)), key=lambda i: (not solutions[i].legal, solutions[i].twcv))


# --- drivers -----------------------------------------------------------------


def fgka_run(
    points: Sequence[Point],
    k: int,
    params: Optional[FgkaParams] = None,
    rng: RngLike = None,  # type: ignore[assignment]
) -> FgkaResult:
    """Run FGKA++ and return the best solution seen plus the run trace.

    Initialization seeds every solution with k-means++ and labels points by
    their nearest seed. Each generation then applies selection, mutation and
    the k-means operator. The best solution is the lowest-TWCV legal one
    seen; an illegal solution is kept only until a legal one appears. The
    search stops after ``max_generations`` or when the best solution has
    not improved for ``stall_generations`` generations.

    Raises:
        KTooLarge: If ``k`` exceeds the number of points
    """
    params = params or FgkaParams()
    if rng is None:
        raise ValueError("fgka_run needs an explicit random stream")
    gen = as_generator(rng)
    X, w = _arrays(points)
    _check_k(k, X.shape[0])

    solutions: List[ClusterSolution] = []
    for _ in range(params.population_size):
        seeds = kmeanspp_seed_indices(X, w, k, gen)
        solutions.append(build_solution(X, w, _nearest(X, X[seeds]), k))
    fit = _evaluate(solutions)

    best_idx = _best_index(solutions)
    best, best_fit = solutions[best_idx], fit[best_idx]
    trace = [_stats(0, solutions, best)]
    stall = 0
    generations = 0
    stop = StopReason.MAX_GENERATIONS

    for generation in range(1, params.max_generations + 1):
        picked = selection_indices(fit, params.population_size, gen)
        next_solutions = []
        for i in picked:
            labels0 = np.asarray(solutions[i].labels) - 1
            labels0 = _mutate_labels(X, w, labels0, k, params.mutation_rate, gen)
            labels0 = _kmeans_labels(X, w, labels0, k)
            next_solutions.append(build_solution(X, w, labels0, k))
        if params.elitism:
            worst = int(np.argmax([s.twcv for s in next_solutions]))
            next_solutions[worst] = best
        solutions = next_solutions
        fit = _evaluate(solutions)

        gen_best = _best_index(solutions)
        if outranks(solutions[gen_best], best):
            best, best_fit = solutions[gen_best], fit[gen_best]
            stall = 0
        else:
            stall += 1
        trace.append(_stats(generation, solutions, best))
        generations = generation
        logger.debug("FGKA++ generation %d: best twcv %.6g", generation, best.twcv)
        if stall >= params.stall_generations:
            stop = StopReason.STALL
            break

    population = Population(
        solutions=tuple(solutions),
        fitness=fit,
        generation=generations,
        best_so_far=best,
        best_fitness=best_fit,
    )
    return FgkaResult(
        best=best,
        best_fitness=best_fit,
        population=population,
        trace=tuple(trace),
        generations=generations,
        stop_reason=stop,
    )


def lloyd(
    points: Sequence[Point],
    k: int,
    initial_centroids: Sequence[Point],
    max_iters: int = 100,
) -> Tuple[ClusterSolution, List[float]]:
    """Lloyd iterations from given centroids until labels stabilize.

    Returns:
        The final solution and the TWCV after each assignment step
    """
    X, w = _arrays(points)
    _check_k(k, X.shape[0])
    C = np.array([c.coords for c in initial_centroids], dtype=float)
    labels0 = _nearest(X, C)
    sol = build_solution(X, w, labels0, k)
    history = [sol.twcv]
    for _ in range(max_iters):
        new = _kmeans_labels(X, w, labels0, k)
        if np.array_equal(new, labels0):
            break
        labels0 = new
        sol = build_solution(X, w, labels0, k)
        history.append(sol.twcv)
    return sol, history


def kmeanspp_baseline(
    points: Sequence[Point],
    k: int,
    rng: RngLike,
    max_iters: int = 100,
) -> ClusterSolution:
    """k-means++ seeding followed by Lloyd iterations.

    Raises:
        KTooLarge: If ``k`` exceeds the number of points
    """
    seeds = kmeanspp_seed(points, k, rng)
    sol, _ = lloyd(points, k, seeds, max_iters=max_iters)
    return sol


def brute_force_twcv(points: Sequence[Point], k: int) -> Tuple[float, Tuple[int, ...]]:
    """Exhaustive minimum TWCV over all K^N labelings (small inputs only)."""
    X, w = _arrays(points)
    n = X.shape[0]
    _check_k(k, n)
    if k**n > _BRUTE_FORCE_LIMIT:
        raise ValueError(f"{k}^{n} labelings is too many to enumerate")
    best_value, best_labels = np.inf, ()
    for labels in itertools.product(range(k), repeat=n):
        labels0 = np.asarray(labels)
        C, _ = cluster_centroids(X, w, labels0, k)
        value = _twcv(X, w, labels0, C)
        if value < best_value:
            best_value, best_labels = value, tuple(int(x) + 1 for x in labels)
    return float(best_value), best_labels
