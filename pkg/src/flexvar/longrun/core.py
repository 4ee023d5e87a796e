"""
Companion form of the time-t VAR, its zero-frequency spectral density and
the pairwise long-run measure phi_ij = Phi_ij / Phi_jj.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from loguru import logger

from flexvar.model.core import PosteriorDraws
from flexvar.model.errors import (
    NonStationaryError,
    NumericalError,
    SpecValidationError,
)

QUANTILES = (0.16, 0.5, 0.84)


@dataclass(frozen=True)
class CompanionSystem:
    B: np.ndarray
    J: np.ndarray
    Omega: np.ndarray

    @property
    def M(self) -> int:
        return self.J.shape[0]


def companion_form(
    beta: np.ndarray,
    Sigma: np.ndarray,
    M: int,
    P: int,
) -> CompanionSystem:
    """
    :param beta: M x MP lag coefficients (row j = equation j, lags stacked
        y_{t-1}, ..., y_{t-P}) or the same as a flat k-vector in row order;
        an intercept column must already be removed
    :param Sigma: M x M shock covariance
    :param M: int
    :param P: int
    :return: CompanionSystem
    """
    K = M * P
    beta = np.asarray(beta, dtype=float)
    if beta.size != M * K:
        raise SpecValidationError(
            f"beta has {beta.size} entries, expected M*K = {M * K}"
        )
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (M, M):
        raise SpecValidationError("Sigma must be M x M")

    B = np.zeros((K, K))
    B[:M] = beta.reshape(M, K)
    B[M:, : K - M] = np.eye(K - M)
    Omega = np.zeros((K, K))
    Omega[:M, :M] = Sigma
    J = np.eye(M, K)
    return CompanionSystem(B=B, J=J, Omega=Omega)


def spectral_density_zero(
    sys: CompanionSystem,
    t: int | None = None,
) -> np.ndarray:
    """
    J (I - B)^{-1} Omega (I - B)^{-T} J'.

    :raises NonStationaryError: spectral radius of B >= 1
    """
    radius = np.abs(np.linalg.eigvals(sys.B)).max()
    if radius >= 1.0:
        raise NonStationaryError(
            f"spectral radius {radius:.6f} >= 1 at t={t}", t=t
        )
    K = sys.B.shape[0]
    A = sys.J @ np.linalg.inv(np.eye(K) - sys.B)
    Phi = A @ sys.Omega @ A.T
    return 0.5 * (Phi + Phi.T)


def longrun_measure(Phi: np.ndarray) -> np.ndarray:
    """phi_ij = Phi_ij / Phi_jj; the diagonal is NaN."""
    Phi = np.asarray(Phi, dtype=float)
    diag = np.diagonal(Phi, axis1=-2, axis2=-1)
    if np.any(diag <= 0):
        raise NumericalError("long-run variance with nonpositive diagonal")
    phi = Phi / diag[..., None, :]
    idx = np.arange(Phi.shape[-1])
    phi[..., idx, idx] = np.nan
    return phi


def reduced_form_at(
    draws: PosteriorDraws,
    t: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Lag coefficients (n x M x MP) and Sigma_t = Q_t H_t Q_t' (n x M x M) of
    every stored draw at effective-sample period ``t``.
    """
    spec = draws.spec
    M, K, KP = spec.M, spec.K, spec.M * spec.P
    n = draws.n_stored
    beta = np.empty((n, M, KP))
    Q = np.broadcast_to(np.eye(M), (n, M, M)).copy()
    H = np.empty((n, M))
    for j in range(M):
        coef = draws.get("gamma", j) + draws.get("gamma_tilde", j)[:, t]
        beta[:, j] = coef[:, :KP]
        Q[:, j, :j] = coef[:, K:]
        H[:, j] = np.exp(draws.get("h", j)[:, t])
    Sigma = Q @ (H[:, :, None] * np.swapaxes(Q, 1, 2))
    return beta, Sigma


def _batched_phi(beta: np.ndarray, Sigma: np.ndarray):
    """phi for a stack of draws; NaN rows for nonstationary draws."""
    n, M, KP = beta.shape
    B = np.zeros((n, KP, KP))
    B[:, :M] = beta
    B[:, M:, : KP - M] = np.eye(KP - M)
    stationary = np.abs(np.linalg.eigvals(B)).max(axis=1) < 1.0
    phi = np.full((n, M, M), np.nan)
    if stationary.any():
        A = np.linalg.inv(np.eye(KP) - B[stationary])[:, :M, :M]
        Phi = A @ Sigma[stationary] @ np.swapaxes(A, 1, 2)
        phi[stationary] = longrun_measure(0.5 * (Phi + np.swapaxes(Phi, 1, 2)))
    return phi, stationary


@dataclass
class LongrunSummary:
    dates: np.ndarray
    labels: tuple[str, ...]
    q16: np.ndarray
    median: np.ndarray
    q84: np.ndarray
    n_dropped: np.ndarray
    n_draws: int

    def to_frame(self) -> pd.DataFrame:
        """One row per (t, i, j) with i != j."""
        M = len(self.labels)
        rows = []
        for t, date in enumerate(self.dates):
            for i in range(M):
                for j in range(M):
                    if i == j:
                        continue
                    rows.append(
                        {
                            "date": date,
                            "t": t,
                            "i": self.labels[i],
                            "j": self.labels[j],
                            "median": self.median[t, i, j],
                            "q16": self.q16[t, i, j],
                            "q84": self.q84[t, i, j],
                            "n_dropped": int(self.n_dropped[t]),
                        }
                    )
        return pd.DataFrame(rows)


def longrun_paths(draws: PosteriorDraws) -> LongrunSummary:
    """
    Posterior median and 68% band of phi_ij,t. Nonstationary (draw, t) cells
    are left out of the quantiles and counted; if every draw is
    nonstationary at t the row is NaN.
    """
    spec = draws.spec
    T, M = draws.T_eff, spec.M
    bands = np.full((len(QUANTILES), T, M, M), np.nan)
    n_dropped = np.zeros(T, dtype=np.int64)

    for t in range(T):
        beta, Sigma = reduced_form_at(draws, t)
        phi, stationary = _batched_phi(beta, Sigma)
        n_dropped[t] = int((~stationary).sum())
        if stationary.any():
            bands[:, t] = np.quantile(phi[stationary], QUANTILES, axis=0)

    gaps = int((n_dropped == draws.n_stored).sum())
    if gaps:
        logger.warning(f"{gaps} periods without a stationary draw")
    return LongrunSummary(
        dates=draws.dates,
        labels=draws.labels,
        q16=bands[0],
        median=bands[1],
        q84=bands[2],
        n_dropped=n_dropped,
        n_draws=draws.n_stored,
    )
