"""
Two-state Markov switching: log-space forward filter, backward path
simulation and the conjugate update of the transition matrix.

``P[i, l]`` is the probability of moving from state ``i`` to state ``l``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from flexvar.model.errors import SpecValidationError
from flexvar.rng.dists import sample_beta


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    p01, p10 = P[0, 1], P[1, 0]
    total = p01 + p10
    if total <= 0:
        return np.array([0.5, 0.5])
    return np.array([p10 / total, p01 / total])


@dataclass(frozen=True)
class SwitchProblem:
    loglik: np.ndarray
    P: np.ndarray
    init: np.ndarray | None = None

    def __post_init__(self):
        loglik = np.asarray(self.loglik, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if loglik.ndim != 2 or loglik.shape[1] != 2:
            raise SpecValidationError("loglik must be T x 2")
        if P.shape != (2, 2) or not np.allclose(P.sum(axis=1), 1.0):
            raise SpecValidationError("P must be a 2 x 2 stochastic matrix")
        init = self.init
        init = (
            stationary_distribution(P)
            if init is None
            else np.asarray(init, dtype=float)
        )
        object.__setattr__(self, "loglik", loglik)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "init", init)

    @property
    def T(self) -> int:
        return self.loglik.shape[0]


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def hamilton_filter(problem: SwitchProblem) -> tuple[np.ndarray, np.ndarray]:
    """
    Log filtered and log predicted state probabilities, each T x 2,
    normalized at every t.
    """
    log_P = _log(problem.P)
    log_pred = np.empty((problem.T, 2))
    log_filt = np.empty((problem.T, 2))
    current = _log(problem.init)

    for t in range(problem.T):
        log_pred[t] = current
        joint = current + problem.loglik[t]
        log_filt[t] = joint - logsumexp(joint)
        current = logsumexp(log_filt[t][:, None] + log_P, axis=0)

    return log_filt, log_pred


def smoothed_probabilities(problem: SwitchProblem) -> np.ndarray:
    """P(S_t = s | all data), T x 2."""
    log_filt, log_pred = hamilton_filter(problem)
    log_P = _log(problem.P)
    log_smooth = np.empty_like(log_filt)
    log_smooth[-1] = log_filt[-1]

    for t in range(problem.T - 2, -1, -1):
        ratio = log_smooth[t + 1] - log_pred[t + 1]
        ratio[~np.isfinite(log_pred[t + 1])] = -np.inf
        log_smooth[t] = log_filt[t] + logsumexp(log_P + ratio[None, :], axis=1)
        log_smooth[t] -= logsumexp(log_smooth[t])

    return np.exp(log_smooth)


def kim_sample_path(
    problem: SwitchProblem,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Joint draw of S_{1:T}: filter forward, then sample backwards from
    p(S_t | S_{t+1}, data up to t).

    :param problem: SwitchProblem
    :param rng: np.random.Generator
    :return: int8 path of length T
    """
    log_filt, _ = hamilton_filter(problem)
    log_P = _log(problem.P)
    u = rng.random(problem.T)
    path = np.empty(problem.T, dtype=np.int8)

    path[-1] = u[-1] < np.exp(log_filt[-1, 1])
    for t in range(problem.T - 2, -1, -1):
        cond = log_filt[t] + log_P[:, path[t + 1]]
        prob_one = np.exp(cond[1] - logsumexp(cond))
        path[t] = u[t] < prob_one

    return path


def transition_counts(path: np.ndarray) -> np.ndarray:
    """n[a, b] = number of a -> b moves over t = 2..T."""
    path = np.asarray(path, dtype=np.int64)
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (path[:-1], path[1:]), 1)
    return counts


def update_transition_probs(
    path: np.ndarray,
    priors: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    p_ii ~ Beta(e_i0 + n_ii, e_i1 + n_i,1-i).

    :param path: binary path, length >= 2
    :param priors: 2 x 2 array of Beta shapes ``e[i, l]``
    :param rng: np.random.Generator
    :return: 2 x 2 transition matrix
    """
    if len(path) < 2:
        raise SpecValidationError("transition update needs a path of length 2")
    n = transition_counts(path)
    e = np.asarray(priors, dtype=float)
    p00 = sample_beta(e[0, 0] + n[0, 0], e[0, 1] + n[0, 1], rng)
    p11 = sample_beta(e[1, 0] + n[1, 1], e[1, 1] + n[1, 0], rng)
    return np.array([[p00, 1.0 - p00], [1.0 - p11, p11]])
