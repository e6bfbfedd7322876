"""Quadratic interference model: design expansion, prediction and LM fitting.

The model is linear in its 66 coefficients, so the Jacobian of the
prediction with respect to the parameters is the design matrix itself and
stays constant over a fit. The solver is still a full Levenberg-Marquardt
loop with accept/reject steps and an adaptive damping parameter.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models import IASModel
from ..models.common import FEATURE_DIM, N_COEFFICIENTS
from ..models.features import FeatureVector
from ..models.interference import (
    WITHIN_PAIRS,
    DampingMode,
    FitReport,
    LambdaPolicy,
    LMOptions,
    ProfileSample,
    QuadraticInterferenceModel,
    TerminationReason,
)
from .exceptions import DegenerateDesign, DimensionMismatch, InsufficientData, SingularSystem

logger = logging.getLogger(__name__)

_PAIR_I = np.array([i for i, _ in WITHIN_PAIRS])
_PAIR_J = np.array([j for _, j in WITHIN_PAIRS])

# Damped systems whose condition number exceeds this are treated as singular.
_MAX_CONDITION = 1.0 / np.finfo(float).eps
_LAMBDA_MIN = np.finfo(float).tiny


def design_matrix(F1: np.ndarray, F2: np.ndarray) -> np.ndarray:
    """Expand n pairs of feature vectors into an (n, 66) regressor matrix.

    Args:
        F1: (n, 5) features of VM1
        F2: (n, 5) features of VM2

    Returns:
        Regressors in the canonical flattening order
    """
    F1 = np.atleast_2d(np.asarray(F1, dtype=float))
    F2 = np.atleast_2d(np.asarray(F2, dtype=float))
    if F1.shape != F2.shape or F1.shape[1] != FEATURE_DIM:
        raise DimensionMismatch(
            "feature blocks must both be (n, 5)",
            context={"vm1": F1.shape, "vm2": F2.shape},
        )
    n = F1.shape[0]
    cross = (F1[:, :, None] * F2[:, None, :]).reshape(n, FEATURE_DIM * FEATURE_DIM)
    return np.hstack(
        [
            np.ones((n, 1)),
            F1,
            F2,
            cross,
            F1[:, _PAIR_I] * F1[:, _PAIR_J],
            F2[:, _PAIR_I] * F2[:, _PAIR_J],
            F1 * F1,
            F2 * F2,
        ]
    )


def expand_design_row(f1: FeatureVector, f2: FeatureVector) -> np.ndarray:
    """Regressor row of length 66 for one VM pair."""
    return design_matrix(f1.as_array()[None, :], f2.as_array()[None, :])[0]


def predict(model: QuadraticInterferenceModel, f1: FeatureVector, f2: FeatureVector) -> float:
    """Predicted runtime of the application on VM1 next to VM2's load.

    No clamping is applied; a badly fitted model can predict negative values.
    """
    return float(np.dot(model.to_vector(), expand_design_row(f1, f2)))


def samples_to_arrays(samples: Sequence[ProfileSample]) -> Tuple[np.ndarray, np.ndarray]:
    """Design matrix and response vector of a profile dataset."""
    F1 = np.array([s.features_vm1.p for s in samples], dtype=float).reshape(-1, FEATURE_DIM)
    F2 = np.array([s.features_vm2.p for s in samples], dtype=float).reshape(-1, FEATURE_DIM)
    y = np.array([s.observed_runtime for s in samples], dtype=float)
    return design_matrix(F1, F2), y


def weighted_gradient(jacobian: np.ndarray, residuals: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """J^T W r, the negative gradient of 1/2 ||sqrt(W) r||^2 in the parameters."""
    return np.asarray(jacobian).T @ (np.asarray(weights) * np.asarray(residuals))


def half_weighted_sse(theta: np.ndarray, design: np.ndarray, y: np.ndarray, weights: np.ndarray) -> float:
    """1/2 ||sqrt(W) (y - X theta)||^2."""
    r = y - design @ theta
    return 0.5 * float(np.sum(weights * r * r))


def lm_step(
    jacobian: np.ndarray,
    residuals: np.ndarray,
    weights: Optional[np.ndarray],
    lam: float,
    damping_mode: DampingMode = DampingMode.DIAGONAL,
    *,
    diag_floor: float = 0.0,
) -> np.ndarray:
    """Solve the damped normal equations for the parameter update.

    [J^T W J + lam * D] h = J^T W r, with D = I (identity mode) or
    D = diag(J^T W J) (diagonal mode, entries floored at ``diag_floor``).

    Args:
        jacobian: (n, p) Jacobian of the predictions
        residuals: (n,) observed minus predicted
        weights: (n,) positive sample weights, None for all ones
        lam: Damping parameter (>= 0)
        damping_mode: Choice of D
        diag_floor: Lower bound on diagonal damping entries

    Returns:
        The update h

    Raises:
        SingularSystem: If the damped matrix is numerically singular
    """
    J = np.asarray(jacobian, dtype=float)
    r = np.asarray(residuals, dtype=float)
    if J.ndim != 2 or J.shape[0] != r.shape[0]:
        raise DimensionMismatch(
            "jacobian rows must match residual count",
            context={"jacobian": J.shape, "residuals": r.shape},
        )
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float)

    JW = J.T * w
    A = JW @ J
    g = JW @ r
    if not np.any(g):
        return np.zeros(J.shape[1])

    if DampingMode(damping_mode) is DampingMode.IDENTITY:
        D = np.eye(J.shape[1])
    else:
        D = np.diag(np.maximum(np.diag(A), diag_floor))
    M = A + lam * D

    try:
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > _MAX_CONDITION:
            raise SingularSystem("damped normal matrix is singular", context={"lambda": lam, "cond": cond})
        h = np.linalg.solve(M, g)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"damped normal matrix is singular: {e}", context={"lambda": lam}) from e
    if not np.all(np.isfinite(h)):
        raise SingularSystem("non-finite update", context={"lambda": lam})
    return h


def lm_fit(
    samples: Sequence[ProfileSample],
    init: QuadraticInterferenceModel,
    opts: Optional[LMOptions] = None,
) -> Tuple[QuadraticInterferenceModel, FitReport]:
    """Fit the quadratic model to profile samples by Levenberg-Marquardt.

    A step is accepted only if the weighted SSE strictly decreases, so the
    returned SSE never exceeds the initial one.

    Args:
        samples: Profile observations
        init: Starting coefficients
        opts: Fitting options (defaults when omitted)

    Returns:
        The fitted model and a fit report

    Raises:
        InsufficientData: Fewer samples than parameters (unless allowed)
        DegenerateDesign: Rank-deficient design and no step could be accepted
    """
    opts = opts or LMOptions()
    n = len(samples)
    p = N_COEFFICIENTS
    if n == 0:
        raise InsufficientData("no profile samples to fit", context={"samples": 0, "parameters": p})
    if n < p and not opts.allow_underdetermined:
        raise InsufficientData(
            "fewer samples than model parameters", context={"samples": n, "parameters": p}
        )

    X, y = samples_to_arrays(samples)
    if opts.weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(opts.weights, dtype=float)
        if w.shape != (n,):
            raise DimensionMismatch(
                "one weight per sample is required", context={"weights": w.shape[0], "samples": n}
            )

    rank = int(np.linalg.matrix_rank(X * np.sqrt(w)[:, None]))
    if rank < p:
        logger.warning("Design matrix is rank deficient: rank %d of %d parameters", rank, p)

    mode = DampingMode(opts.damping_mode)
    if mode is DampingMode.DIAGONAL:
        # Column scaling leaves the diagonal-damping step unchanged in exact arithmetic
        norms = np.sqrt((w[:, None] * X * X).sum(axis=0))
        scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
    else:
        scale = np.ones(p)
    J = X * scale

    A = (J.T * w) @ J
    diag_floor = 1e-12 * float(np.max(np.diag(A))) if mode is DampingMode.DIAGONAL else 0.0
    D = np.eye(p) if mode is DampingMode.IDENTITY else np.diag(np.maximum(np.diag(A), diag_floor))

    theta = init.to_vector()
    r = y - X @ theta
    sse = float(np.sum(w * r * r))
    initial_sse = sse
    history: List[float] = [sse]

    lam = opts.lambda0
    nu = 2.0
    accepted = 0
    iterations = 0
    reason = TerminationReason.MAX_ITER
    policy = LambdaPolicy(opts.lambda_policy)

    for iteration in range(1, opts.max_iter + 1):
        iterations = iteration
        g = weighted_gradient(X, r, w)
        if float(np.max(np.abs(g))) <= opts.grad_tol:
            reason = TerminationReason.GRAD_TOL
            break

        try:
            h_scaled = lm_step(J, r, w, lam, mode, diag_floor=diag_floor)
        except SingularSystem:
            lam, nu = _raise_lambda(lam, nu, opts, policy)
            if lam > opts.lambda_max:
                reason = TerminationReason.LAMBDA_OVERFLOW
                break
            continue

        h = h_scaled * scale
        if float(np.linalg.norm(h)) <= opts.step_tol:
            reason = TerminationReason.STEP_TOL
            break

        candidate = theta + h
        r_new = y - X @ candidate
        sse_new = float(np.sum(w * r_new * r_new))
        logger.debug("LM iteration %d: lambda=%.3e sse=%.6e candidate=%.6e", iteration, lam, sse, sse_new)

        if sse_new < sse:
            if policy is LambdaPolicy.GAIN_RATIO:
                g_scaled = g * scale
                predicted = float(h_scaled @ (lam * (D @ h_scaled) + g_scaled))
                rho = (sse - sse_new) / predicted if predicted > 0 else 1.0
                lam = max(lam * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3), _LAMBDA_MIN)
                nu = 2.0
            else:
                lam = max(lam / opts.lambda_down, _LAMBDA_MIN)
            theta, r, sse = candidate, r_new, sse_new
            history.append(sse)
            accepted += 1
        else:
            lam, nu = _raise_lambda(lam, nu, opts, policy)
            if lam > opts.lambda_max:
                reason = TerminationReason.LAMBDA_OVERFLOW
                break

    if rank < p and accepted == 0 and reason not in (TerminationReason.GRAD_TOL, TerminationReason.STEP_TOL):
        raise DegenerateDesign(
            "rank-deficient design and no accepted LM step",
            context={"rank": rank, "parameters": p, "samples": n},
        )

    report = FitReport(
        iterations=iterations,
        accepted_steps=accepted,
        initial_sse=initial_sse,
        final_sse=sse,
        final_lambda=lam,
        termination=reason,
        sse_history=tuple(history),
        design_rank=rank,
        n_samples=n,
    )
    logger.info(
        "LM fit finished after %d iterations (%s): sse %.6e -> %.6e",
        iterations, reason.value, initial_sse, sse,
    )
    return QuadraticInterferenceModel.from_vector(theta), report


def _raise_lambda(lam: float, nu: float, opts: LMOptions, policy: LambdaPolicy) -> Tuple[float, float]:
    if policy is LambdaPolicy.GAIN_RATIO:
        return lam * nu, nu * 2.0
    return lam * opts.lambda_up, nu


class OnlineUpdate(IASModel):
    """Result of a windowed refit."""

    model: QuadraticInterferenceModel
    window: Tuple[ProfileSample, ...]
    report: Optional[FitReport] = None


def update_online(
    model: QuadraticInterferenceModel,
    new_samples: Sequence[ProfileSample],
    opts: Optional[LMOptions] = None,
    *,
    window: Sequence[ProfileSample] = (),
    window_size: int = 1000,
) -> OnlineUpdate:
    """Refit the model over a sliding window of the most recent samples.

    The window is the previous window followed by ``new_samples``, truncated
    to the last ``window_size`` entries; the fit starts at ``model``. Per-sample
    weights in ``opts`` do not follow samples across windows and are dropped.

    Args:
        model: Current model
        new_samples: Observations collected since the last update
        opts: Fitting options
        window: Samples retained from earlier updates, oldest first
        window_size: Maximum number of samples kept

    Returns:
        The refreshed model, the new window and the fit report
    """
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    if not new_samples:
        return OnlineUpdate(model=model, window=tuple(window)[-window_size:])

    opts = opts or LMOptions()
    if opts.weights is not None:
        logger.warning("Dropping per-sample weights for a windowed refit")
        opts = opts.model_copy(update={"weights": None})

    combined = (tuple(window) + tuple(new_samples))[-window_size:]
    fitted, report = lm_fit(combined, model, opts)
    return OnlineUpdate(model=fitted, window=combined, report=report)


class OnlinePredictor:
    """Keeps the current model and its sample window between updates."""

    def __init__(
        self,
        model: QuadraticInterferenceModel,
        *,
        opts: Optional[LMOptions] = None,
        window_size: int = 1000,
    ) -> None:
        self.model = model
        self.opts = opts or LMOptions()
        self.window_size = window_size
        self.window: Tuple[ProfileSample, ...] = ()
        self.last_report: Optional[FitReport] = None

    def update(self, new_samples: Sequence[ProfileSample]) -> QuadraticInterferenceModel:
        """Fold new observations into the window and refit."""
        result = update_online(
            self.model, new_samples, self.opts, window=self.window, window_size=self.window_size
        )
        self.model, self.window = result.model, result.window
        if result.report is not None:
            self.last_report = result.report
        return self.model

    def predict(self, f1: FeatureVector, f2: FeatureVector) -> float:
        return predict(self.model, f1, f2)


def rmse(model: QuadraticInterferenceModel, samples: Sequence[ProfileSample]) -> float:
    """Root-mean-square prediction error on ``samples``."""
    if not samples:
        return 0.0
    X, y = samples_to_arrays(samples)
    r = y - X @ model.to_vector()
    return math.sqrt(float(np.mean(r * r)))
