"""
Forward-filtering backward-sampling for the latent random-walk factors and
for the scalar AR(1) log-volatility.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from flexvar.model.errors import FilterError, SpecValidationError
from flexvar.rng.dists import sample_mvn
from flexvar.states.consts import JOSEPH_RATIO, PSD_TOL


@dataclass(frozen=True)
class FfbsProblem:
    """
    obs_t = load_t' tau_t + e_t, e_t ~ N(0, obs_var_t);
    tau_t = tau_{t-1} + u_t, u_t ~ N(0, I), tau_0 = 0.
    """

    obs: np.ndarray
    load: np.ndarray
    obs_var: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.obs, dtype=float).reshape(-1)
        load = np.asarray(self.load, dtype=float)
        if load.ndim == 1:
            load = load[:, None]
        obs_var = np.broadcast_to(
            np.asarray(self.obs_var, dtype=float), obs.shape
        )
        if load.shape[0] != obs.shape[0] or load.shape[1] < 1:
            raise SpecValidationError("load must be T x R with R >= 1")
        if not np.all(obs_var > 0):
            raise SpecValidationError("obs_var must be strictly positive")
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "load", load)
        object.__setattr__(self, "obs_var", obs_var)

    @property
    def T(self) -> int:
        return self.obs.shape[0]

    @property
    def R(self) -> int:
        return self.load.shape[1]


def kalman_filter(problem: FfbsProblem) -> tuple[np.ndarray, np.ndarray]:
    """Filtered means (T x R) and covariances (T x R x R)."""
    T, R = problem.T, problem.R
    eye = np.eye(R)
    means = np.empty((T, R))
    covs = np.empty((T, R, R))
    m = np.zeros(R)
    C = np.zeros((R, R))

    for t in range(T):
        l = problem.load[t]
        P_pred = C + eye
        Pl = P_pred @ l
        f = l @ Pl + problem.obs_var[t]
        k = Pl / f
        m = m + k * (problem.obs[t] - l @ m)
        if problem.obs_var[t] / f < JOSEPH_RATIO:
            A = eye - np.outer(k, l)
            C = A @ P_pred @ A.T + problem.obs_var[t] * np.outer(k, k)
        else:
            C = P_pred - np.outer(k, Pl)
        C = 0.5 * (C + C.T)

        diag = np.diag(C)
        if not (np.all(np.isfinite(C)) and diag.min() > -PSD_TOL):
            raise FilterError(
                f"filtered covariance lost positive-definiteness at t={t}",
                t=t,
            )
        means[t] = m
        covs[t] = C

    return means, covs


def ffbs_sample(problem: FfbsProblem, rng: np.random.Generator) -> np.ndarray:
    """
    Joint draw of tau_{1:T} given all observations.

    :param problem: FfbsProblem
    :param rng: np.random.Generator
    :return: T x R path
    """
    means, covs = kalman_filter(problem)
    T, R = problem.T, problem.R
    eye = np.eye(R)
    path = np.empty((T, R))
    path[-1] = sample_mvn(means[-1], covs[-1], rng)

    for t in range(T - 2, -1, -1):
        C = covs[t]
        gain = la.solve(C + eye, C, assume_a="pos").T
        mean = means[t] + gain @ (path[t + 1] - means[t])
        cov = C - gain @ C
        path[t] = sample_mvn(mean, 0.5 * (cov + cov.T), rng)

    return path


def kalman_smoother(problem: FfbsProblem) -> np.ndarray:
    """Rauch-Tung-Striebel smoothed means, T x R."""
    means, covs = kalman_filter(problem)
    eye = np.eye(problem.R)
    smoothed = means.copy()
    for t in range(problem.T - 2, -1, -1):
        C = covs[t]
        gain = la.solve(C + eye, C, assume_a="pos").T
        smoothed[t] = means[t] + gain @ (smoothed[t + 1] - means[t])
    return smoothed


def ffbs_ar1_sample(
    obs: np.ndarray,
    obs_var: np.ndarray,
    mu: float,
    phi: float,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Draw h_{1:T} for obs_t = h_t + e_t, e_t ~ N(0, obs_var_t),
    h_t = mu + phi (h_{t-1} - mu) + N(0, sigma2), h_1 ~ N(mu, sigma2 /
    (1 - phi^2)).
    """
    T = obs.shape[0]
    m = np.empty(T)
    C = np.empty(T)
    a, P = mu, sigma2 / (1.0 - phi * phi)

    for t in range(T):
        f = P + obs_var[t]
        m[t] = a + P * (obs[t] - a) / f
        C[t] = P * obs_var[t] / f
        a = mu + phi * (m[t] - mu)
        P = phi * phi * C[t] + sigma2

    h = np.empty(T)
    z = rng.standard_normal(T)
    h[-1] = m[-1] + np.sqrt(C[-1]) * z[-1]
    for t in range(T - 2, -1, -1):
        P_next = phi * phi * C[t] + sigma2
        g = phi * C[t] / P_next
        mean = m[t] + g * (h[t + 1] - mu - phi * (m[t] - mu))
        var = C[t] - g * phi * C[t]
        h[t] = mean + np.sqrt(max(var, 0.0)) * z[t]

    return h
