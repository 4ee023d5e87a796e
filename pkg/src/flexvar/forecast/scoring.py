import numpy as np
from scipy.special import logsumexp

from flexvar.forecast.consts import LOG_DENSITY_FLOOR
from flexvar.model.errors import DistributionError, SpecValidationError

LOG_2PI = np.log(2.0 * np.pi)


def score_rmse(means, realized) -> float:
    """
    Root mean squared error of point forecasts.

    :param means: point forecasts
    :param realized: realizations, same shape
    :return: float
    """
    means = np.asarray(means, dtype=float)
    realized = np.asarray(realized, dtype=float)
    if means.shape != realized.shape:
        raise SpecValidationError(
            f"forecasts {means.shape} and realizations {realized.shape} differ"
        )
    if means.size == 0:
        raise SpecValidationError("cannot score an empty forecast set")
    return float(np.sqrt(np.mean((means - realized) ** 2)))


def log_predictive_density(
    means: np.ndarray,
    covs: np.ndarray,
    realized: np.ndarray,
    joint: bool = False,
):
    """
    Log density of ``realized`` under the equal-weight Gaussian mixture with
    one component per posterior draw.

    :param means: n x d component means
    :param covs: n x d x d component covariances
    :param realized: d-vector
    :param joint: score all d targets together instead of one by one
    :return: d-vector of marginal log scores, or a float when ``joint``
    """
    means = np.asarray(means, dtype=float)
    covs = np.asarray(covs, dtype=float)
    realized = np.asarray(realized, dtype=float).reshape(-1)
    if means.ndim == 1:
        means = means[:, None]
        covs = covs.reshape(-1, 1, 1)
    n, d = means.shape
    if n == 0:
        raise SpecValidationError("no predictive draws to score")
    if realized.size != d:
        raise SpecValidationError(f"expected {d} realized values")

    resid = realized - means
    if not joint:
        var = np.diagonal(covs, axis1=1, axis2=2)
        if np.any(var <= 0):
            raise DistributionError("predictive variance must be positive")
        comp = -0.5 * (LOG_2PI + np.log(var) + resid**2 / var)
        out = logsumexp(comp, axis=0) - np.log(n)
        return np.maximum(out, LOG_DENSITY_FLOOR)

    try:
        chol = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError as exc:
        raise DistributionError(
            "predictive covariance is not positive definite"
        ) from exc
    white = np.linalg.solve(chol, resid[:, :, None])[:, :, 0]
    log_det = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    comp = -0.5 * (d * LOG_2PI + log_det + (white**2).sum(axis=1))
    return float(max(logsumexp(comp) - np.log(n), LOG_DENSITY_FLOOR))


def score_lpbf(model_scores, benchmark_scores) -> np.ndarray | float:
    """
    Average log predictive Bayes factor over origins (axis 0). Origins where
    either side is missing (NaN) are left out of both averages.
    """
    model_scores = np.asarray(model_scores, dtype=float)
    benchmark_scores = np.asarray(benchmark_scores, dtype=float)
    if model_scores.shape != benchmark_scores.shape:
        raise SpecValidationError("model and benchmark scores differ in shape")
    if model_scores.size == 0:
        raise SpecValidationError("cannot score an empty forecast set")
    diff = model_scores - benchmark_scores
    keep = np.isfinite(diff)
    count = keep.sum(axis=0)
    total = np.where(keep, diff, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return float(out) if np.ndim(out) == 0 else out
