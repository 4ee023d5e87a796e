"""
Predictive simulation from stored posterior draws. All draws are advanced
together; each one also carries the Gaussian of y_{T+H} given its simulated
path up to T+H-1, which the log scores use.
"""

from dataclasses import dataclass

import numpy as np

from flexvar.model.core import PosteriorDraws
from flexvar.model.errors import SpecValidationError
from flexvar.model.utils import lag_vector


@dataclass
class Predictive:
    """
    draws: n x H x M simulated values; means / covs: n x H x M (x M)
    conditional moments of step k given the path through k-1.
    """

    draws: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    @property
    def horizon(self) -> int:
        return self.draws.shape[1]

    def point(self) -> np.ndarray:
        """H x M predictive means."""
        return self.draws.mean(axis=0)


@dataclass
class _EquationTail:
    gamma: np.ndarray
    Lambda: np.ndarray
    omega: np.ndarray
    tau: np.ndarray
    S: np.ndarray
    P: np.ndarray
    h: np.ndarray
    sv: np.ndarray


def _tails(draws: PosteriorDraws, index: np.ndarray) -> list[_EquationTail]:
    tails = []
    for j in range(draws.spec.M):
        tails.append(
            _EquationTail(
                gamma=draws.get("gamma", j)[index],
                Lambda=draws.get("Lambda", j)[index],
                omega=draws.get("omega", j)[index],
                tau=draws.get("tau", j)[index, -1].copy(),
                S=draws.get("S", j)[index, -1].astype(np.int8),
                P=draws.get("P", j)[index],
                h=draws.get("h", j)[index, -1].copy(),
                sv=draws.get("sv", j)[index],
            )
        )
    return tails


def simulate_predictive(
    draws: PosteriorDraws,
    history: np.ndarray,
    horizon: int,
    rng: np.random.Generator,
    R_next: np.ndarray | None = None,
    shocks: bool = True,
    draw_index: np.ndarray | int | None = None,
) -> Predictive:
    """
    Iterate every stored draw ``horizon`` steps past the end of the sample:
    tau by its unit random walk, S by its transition matrix, observed
    modifiers held at ``R_next``, h by its AR(1), then gamma_tilde and the
    triangular shocks. ``shocks=False`` keeps every innovation at zero (the
    mean path).

    :param draws: PosteriorDraws
    :param history: last P (or more) rows of the data in model units
    :param horizon: int >= 1
    :param rng: np.random.Generator
    :param R_next: observed modifiers entering z at T + 1 (unlagged values at T)
    :param shocks: bool
    :param draw_index: restrict to these stored draws
    :return: Predictive
    """
    spec = draws.spec
    if horizon < 1:
        raise SpecValidationError("horizon must be at least 1")
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[0] < spec.P:
        raise SpecValidationError(f"need the last {spec.P} rows of history")
    if spec.include_obs:
        if R_next is None:
            raise SpecValidationError("observed modifiers need R_next")
        R_next = np.asarray(R_next, dtype=float).reshape(-1)

    index = (
        np.arange(draws.n_stored)
        if draw_index is None
        else np.atleast_1d(np.asarray(draw_index))
    )
    n, M, K = index.size, spec.M, spec.K
    tails = _tails(draws, index)
    paths = np.broadcast_to(history[-spec.P :], (n, spec.P, M)).copy()

    out_draws = np.empty((n, horizon, M))
    out_means = np.empty((n, horizon, M))
    out_covs = np.empty((n, horizon, M, M))
    scale = 1.0 if shocks else 0.0

    for k in range(horizon):
        x = np.stack([lag_vector(p, spec.P, spec.intercept) for p in paths])
        B = np.empty((n, M, K))
        Q = np.broadcast_to(np.eye(M), (n, M, M)).copy()
        H = np.empty((n, M))

        for j, tail in enumerate(tails):
            tail.tau = tail.tau + scale * rng.standard_normal(tail.tau.shape)
            if spec.include_ms and shocks:
                stay_one = tail.P[np.arange(n), tail.S, 1]
                tail.S = (rng.random(n) < stay_one).astype(np.int8)
            mu, psi, sigma2 = tail.sv.T
            tail.h = (
                mu
                + psi * (tail.h - mu)
                + scale * np.sqrt(sigma2) * rng.standard_normal(n)
            )

            parts = []
            if spec.include_obs:
                parts.append(np.broadcast_to(R_next, (n, R_next.size)))
            if spec.include_ms:
                parts.append(tail.S[:, None].astype(float))
            parts.append(tail.tau)
            z = np.concatenate(parts, axis=1)
            gamma_tilde = np.einsum("nvr,nr->nv", tail.Lambda, z)
            gamma_tilde += (
                scale
                * np.sqrt(tail.omega)
                * rng.standard_normal(tail.omega.shape)
            )
            coef = tail.gamma + gamma_tilde
            B[:, j] = coef[:, :K]
            Q[:, j, :j] = coef[:, K:]
            H[:, j] = np.exp(tail.h)

        mean = np.einsum("nmk,nk->nm", B, x)
        cov = Q @ (H[:, :, None] * np.swapaxes(Q, 1, 2))
        eps = scale * np.sqrt(H) * rng.standard_normal((n, M))
        y = mean + np.einsum("nij,nj->ni", Q, eps)

        out_draws[:, k] = y
        out_means[:, k] = mean
        out_covs[:, k] = cov
        paths = np.concatenate([paths[:, 1:], y[:, None, :]], axis=1)

    return Predictive(draws=out_draws, means=out_means, covs=out_covs)


def to_targets(
    pred: Predictive,
    target_map: np.ndarray | None = None,
    level_base: np.ndarray | None = None,
) -> Predictive:
    """
    Map model-unit predictions to scoring targets: cumulate differences onto
    ``level_base`` (the last observed levels) when given, then apply the
    linear ``target_map`` (n_targets x M), e.g. Nelson-Siegel loadings.
    """
    draws, means, covs = pred.draws, pred.means, pred.covs
    if level_base is not None:
        level_base = np.asarray(level_base, dtype=float)
        cum = np.cumsum(draws, axis=1)
        means = level_base + (cum - draws) + means
        draws = level_base + cum
    if target_map is not None:
        A = np.asarray(target_map, dtype=float)
        draws = draws @ A.T
        means = means @ A.T
        covs = A @ covs @ A.T
    return Predictive(draws=draws, means=means, covs=covs)


def difference_levels(levels: np.ndarray, level_base: np.ndarray):
    """Inverse of the cumulation in ``to_targets`` along the horizon axis."""
    prev = np.concatenate(
        [
            np.broadcast_to(level_base, levels[:, :1].shape),
            levels[:, :-1],
        ],
        axis=1,
    )
    return levels - prev
