"""
Distribution kernels used by every sampler block. All take an explicit
``numpy.random.Generator``.
"""

import numpy as np
import scipy.linalg as la
from scipy import stats
from scipy.special import kve

from flexvar.model.errors import DistributionError, IllConditionedError

# below this sqrt(chi * psi) the GIG is sampled through its Gamma / inverse
# Gamma limit
GIG_LIMIT_TOL = 1e-8

MAX_CONDITION = 1e12


def _positive(name: str, *values):
    for value in values:
        arr = np.asarray(value, dtype=float)
        if arr.size and not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
            raise DistributionError(f"{name} parameters must be positive")


def sample_inverse_gamma(shape, scale, rng: np.random.Generator, size=None):
    """Density proportional to x^(-shape-1) exp(-scale / x)."""
    _positive("inverse gamma", shape, scale)
    return scale / rng.gamma(shape, 1.0, size)


def sample_beta(a, b, rng: np.random.Generator, size=None):
    _positive("beta", a, b)
    return rng.beta(a, b, size)


def sample_gig(
    lam: float,
    chi: float,
    psi: float,
    rng: np.random.Generator,
    size=None,
):
    """
    Generalized inverse Gaussian with density proportional to
    x^(lam-1) exp(-(chi / x + psi * x) / 2).

    Interior draws use scipy's ``geninvgauss`` (ratio-of-uniforms) on the
    standardized scale sqrt(chi / psi); boundary cases reduce to Gamma and
    inverse Gamma.

    :param lam: float
    :param chi: float >= 0
    :param psi: float >= 0
    :param rng: np.random.Generator
    :param size: int | tuple | None
    :return: float | np.ndarray
    """
    lam, chi, psi = float(lam), float(chi), float(psi)
    if not (np.isfinite(lam) and np.isfinite(chi) and np.isfinite(psi)):
        raise DistributionError("GIG parameters must be finite")
    if chi < 0 or psi < 0:
        raise DistributionError(f"GIG needs chi, psi >= 0, got {chi}, {psi}")
    if chi == 0 and psi == 0:
        raise DistributionError("GIG with chi = psi = 0 is not normalizable")
    if chi == 0 and lam <= 0:
        raise DistributionError(f"GIG with chi = 0 needs lam > 0, got {lam}")
    if psi == 0 and lam >= 0:
        raise DistributionError(f"GIG with psi = 0 needs lam < 0, got {lam}")

    omega = np.sqrt(chi * psi)
    if chi == 0 or (omega < GIG_LIMIT_TOL and lam > 0):
        return rng.gamma(lam, 2.0 / psi, size)
    if psi == 0 or (omega < GIG_LIMIT_TOL and lam < 0):
        return sample_inverse_gamma(-lam, chi / 2.0, rng, size)

    return stats.geninvgauss.rvs(
        lam,
        omega,
        scale=np.sqrt(chi / psi),
        size=size,
        random_state=rng,
    )


def gig_mean(lam: float, chi: float, psi: float) -> float:
    """sqrt(chi/psi) K_{lam+1}(w) / K_lam(w), w = sqrt(chi psi)."""
    w = np.sqrt(chi * psi)
    return float(np.sqrt(chi / psi) * kve(lam + 1, w) / kve(lam, w))


def sample_gaussian_regression(
    X: np.ndarray,
    y: np.ndarray,
    obs_var: np.ndarray,
    prior_var: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    One draw of b in y = X b + e, e ~ N(0, diag(obs_var)), b ~ N(0,
    diag(prior_var)).

    The posterior precision is never formed. Its square root, the data rows
    stacked on the prior rows, is equilibrated to unit column norms and
    QR-factored; the condition guard applies to the triangular factor, so
    tiny shrinkage variances alone never trip it.
    """
    prior_var = np.asarray(prior_var, dtype=float).reshape(-1)
    q = prior_var.shape[0]
    if q == 0:
        return np.zeros(0)
    X = np.asarray(X, dtype=float).reshape(-1, q)
    y = np.asarray(y, dtype=float).reshape(-1)
    obs_var = np.broadcast_to(np.asarray(obs_var, dtype=float), y.shape)
    _positive("regression prior variance", prior_var)
    _positive("regression noise variance", obs_var)
    if X.shape[0] != y.shape[0]:
        raise DistributionError("design and response lengths differ")

    z = rng.standard_normal(q)
    if X.shape[0] == 0:
        return np.sqrt(prior_var) * z

    noise_sd = np.sqrt(obs_var)
    root = np.vstack(
        [X / noise_sd[:, None], np.diag(1.0 / np.sqrt(prior_var))]
    )
    if not np.all(np.isfinite(root)):
        raise IllConditionedError("posterior precision is not finite")
    d = 1.0 / np.linalg.norm(root, axis=0)
    Q, R = la.qr(root * d, mode="economic")

    condition = np.linalg.cond(R) if q > 1 else 1.0
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise IllConditionedError(
            f"posterior precision root condition number {condition:.3e}",
            condition=condition,
        )

    rhs = Q[: y.shape[0]].T @ (y / noise_sd)
    mean = la.solve_triangular(R, rhs, lower=False)
    dev = la.solve_triangular(R, z, lower=False)
    return d * (mean + dev)


def sample_mvn(mean: np.ndarray, cov: np.ndarray, rng: np.random.Generator):
    """Draw from N(mean, cov) for a possibly singular PSD ``cov``."""
    z = rng.standard_normal(mean.shape[0])
    try:
        return mean + la.cholesky(cov, lower=True) @ z
    except la.LinAlgError:
        vals, vecs = la.eigh(cov)
        return mean + vecs @ (np.sqrt(np.clip(vals, 0.0, None)) * z)
