"""
Stochastic volatility of one equation's structural shock:

    eps_t ~ N(0, exp(h_t)),  h_t = mu + psi (h_{t-1} - mu) + varsigma nu_t.

log(eps_t^2) is linearized with a ten-component normal mixture, the path is
drawn by FFBS, then (mu, psi, varsigma^2) from their conditionals followed by
an interweaving step in the non-centered parameterization.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from flexvar.model.core import PriorConfig, SvParams
from flexvar.model.errors import SpecValidationError
from flexvar.rng.dists import sample_gaussian_regression, sample_gig
from flexvar.states.consts import (
    LOG_OFFSET,
    MAX_PSI_RETRIES,
    MIXTURE_MEANS,
    MIXTURE_VARS,
    MIXTURE_WEIGHTS,
)
from flexvar.states.ffbs import ffbs_ar1_sample

SIGMA2_BOUNDS = (1e-12, 1e6)


@dataclass(frozen=True)
class SvProblem:
    resid: np.ndarray
    h: np.ndarray
    params: SvParams
    priors: PriorConfig

    def __post_init__(self):
        resid = np.asarray(self.resid, dtype=float).reshape(-1)
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if resid.shape != h.shape:
            raise SpecValidationError("resid and h lengths differ")
        if not np.all(np.isfinite(resid)):
            raise SpecValidationError("SV residuals must be finite")
        if not (abs(self.params.psi) < 1 and self.params.sigma2 > 0):
            raise SpecValidationError("need |psi| < 1 and varsigma^2 > 0")
        object.__setattr__(self, "resid", resid)
        object.__setattr__(self, "h", h)


@dataclass
class SvResult:
    h: np.ndarray
    params: SvParams
    psi_accepted: bool
    psi_retries: int


def log_squared(resid: np.ndarray) -> np.ndarray:
    return np.log(resid * resid + LOG_OFFSET)


def sample_mixture_indicators(
    y_star: np.ndarray,
    h: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Component of each log(eps_t^2) given h_t, length T, values 0..9."""
    dev = y_star[:, None] - h[:, None] - MIXTURE_MEANS[None, :]
    logp = (
        np.log(MIXTURE_WEIGHTS)
        - 0.5 * np.log(MIXTURE_VARS)
        - 0.5 * dev * dev / MIXTURE_VARS
    )
    logp -= logsumexp(logp, axis=1, keepdims=True)
    cdf = np.cumsum(np.exp(logp), axis=1)
    u = rng.random(y_star.shape[0]) * cdf[:, -1]
    return (u[:, None] > cdf).sum(axis=1)


def _init_term(h1: float, mu: float, psi: float, sigma2: float) -> float:
    """log N(h_1; mu, sigma2 / (1 - psi^2)) up to a constant."""
    return 0.5 * np.log(1.0 - psi * psi) - (1.0 - psi * psi) * (
        h1 - mu
    ) ** 2 / (2.0 * sigma2)


def _log_psi_prior(psi: float, priors: PriorConfig) -> float:
    x = (psi + 1.0) / 2.0
    return (priors.sv_psi_a - 1.0) * np.log(x) + (
        priors.sv_psi_b - 1.0
    ) * np.log(1.0 - x)


def sample_mu(h, psi, sigma2, priors: PriorConfig, rng) -> float:
    """Conjugate Gaussian draw of mu given the path."""
    T = h.shape[0]
    X = np.concatenate([[1.0], np.full(T - 1, 1.0 - psi)])
    y = np.concatenate([[h[0]], h[1:] - psi * h[:-1]])
    obs_var = np.concatenate(
        [[sigma2 / (1.0 - psi * psi)], np.full(T - 1, sigma2)]
    )
    return float(
        sample_gaussian_regression(
            X[:, None], y, obs_var, np.array([priors.sv_mu_var]), rng
        )[0]
    )


def sample_psi(h, mu, psi, sigma2, priors: PriorConfig, rng):
    """
    Independence Metropolis-Hastings step. The proposal is the Gaussian
    implied by the AR(1) regression of h_t - mu on h_{t-1} - mu, redrawn
    until inside (-1, 1) at most MAX_PSI_RETRIES times; the acceptance
    ratio carries the Beta prior and the stationary initial density.

    :return: (psi, accepted, retries)
    """
    x = h[:-1] - mu
    y = h[1:] - mu
    sxx = float(x @ x)
    if sxx <= 0:
        return psi, False, 0
    loc = float(x @ y) / sxx
    scale = np.sqrt(sigma2 / sxx)

    proposal = None
    for retry in range(MAX_PSI_RETRIES):
        draw = loc + scale * rng.standard_normal()
        if abs(draw) < 1.0:
            proposal = draw
            break
    else:
        return psi, False, MAX_PSI_RETRIES
    retries = retry

    log_ratio = (
        _log_psi_prior(proposal, priors)
        + _init_term(h[0], mu, proposal, sigma2)
        - _log_psi_prior(psi, priors)
        - _init_term(h[0], mu, psi, sigma2)
    )
    if np.log(rng.random()) < log_ratio:
        return float(proposal), True, retries
    return psi, False, retries


def sample_sigma2(h, mu, psi, priors: PriorConfig, rng) -> float:
    """
    Exact conditional: varsigma^2 ~ GIG(a - T/2, S, 2b) under a Gamma(a, b)
    prior with S the sum of squared AR(1) innovations including the
    stationary start.
    """
    T = h.shape[0]
    resid = h[1:] - mu - psi * (h[:-1] - mu)
    S = (1.0 - psi * psi) * (h[0] - mu) ** 2 + float(resid @ resid)
    lam = priors.sv_sigma2_shape - T / 2.0
    draw = sample_gig(lam, max(S, 1e-300), 2.0 * priors.sv_sigma2_rate, rng)
    return float(np.clip(draw, *SIGMA2_BOUNDS))


def interweave(
    h: np.ndarray,
    obs: np.ndarray,
    obs_var: np.ndarray,
    params: SvParams,
    priors: PriorConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, SvParams]:
    """
    Redraw (mu, varsigma) given the standardized path (h - mu) / varsigma,
    with varsigma ~ N(0, 1 / (2 b)) (the Gamma(1/2, b) prior on varsigma^2).
    """
    sigma = np.sqrt(params.sigma2)
    h_std = (h - params.mu) / sigma
    X = np.column_stack([np.ones_like(h_std), h_std])
    prior_var = np.array(
        [priors.sv_mu_var, 1.0 / (2.0 * priors.sv_sigma2_rate)]
    )
    mu, sigma = sample_gaussian_regression(X, obs, obs_var, prior_var, rng)
    sigma2 = float(np.clip(sigma * sigma, *SIGMA2_BOUNDS))
    h_new = mu + sigma * h_std
    return h_new, SvParams(mu=float(mu), psi=params.psi, sigma2=sigma2)


def sample_sv_block(
    problem: SvProblem,
    rng: np.random.Generator,
    interweaving: bool = True,
) -> SvResult:
    """
    Indicators, path, mu, psi, varsigma^2 and (optionally) the
    non-centered redraw, in this order.

    :param problem: SvProblem
    :param rng: np.random.Generator
    :param interweaving: run the non-centered step (only valid for a
        Gamma(1/2, b) prior on varsigma^2)
    :return: SvResult
    """
    priors = problem.priors
    y_star = log_squared(problem.resid)
    comp = sample_mixture_indicators(y_star, problem.h, rng)
    obs = y_star - MIXTURE_MEANS[comp]
    obs_var = MIXTURE_VARS[comp]

    params = problem.params
    h = ffbs_ar1_sample(
        obs, obs_var, params.mu, params.psi, params.sigma2, rng
    )
    mu = sample_mu(h, params.psi, params.sigma2, priors, rng)
    psi, accepted, retries = sample_psi(
        h, mu, params.psi, params.sigma2, priors, rng
    )
    sigma2 = sample_sigma2(h, mu, psi, priors, rng)
    params = SvParams(mu=mu, psi=psi, sigma2=sigma2)

    if interweaving and priors.sv_sigma2_shape == 0.5:
        h, params = interweave(h, obs, obs_var, params, priors, rng)

    return SvResult(
        h=h, params=params, psi_accepted=accepted, psi_retries=retries
    )


def sample_sv_params(
    h: np.ndarray,
    params: SvParams,
    priors: PriorConfig,
    rng: np.random.Generator,
) -> tuple[SvParams, bool]:
    """Parameter updates only, the path held fixed."""
    mu = sample_mu(h, params.psi, params.sigma2, priors, rng)
    psi, accepted, _ = sample_psi(h, mu, params.psi, params.sigma2, priors, rng)
    sigma2 = sample_sigma2(h, mu, psi, priors, rng)
    return SvParams(mu=mu, psi=psi, sigma2=sigma2), accepted


def simulate_sv_path(
    params: SvParams,
    T: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """h_{1:T} from the stationary AR(1)."""
    h = np.empty(T)
    sd = np.sqrt(params.sigma2)
    h[0] = params.mu + sd / np.sqrt(1.0 - params.psi**2) * rng.standard_normal()
    for t in range(1, T):
        h[t] = (
            params.mu
            + params.psi * (h[t - 1] - params.mu)
            + sd * rng.standard_normal()
        )
    return h
