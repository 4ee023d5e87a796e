from dataclasses import dataclass

import numpy as np
import pandas as pd

from flexvar.model.core import EquationState, ModelSpec, SvParams
from flexvar.shrinkage.core import HorseshoeState
from flexvar.states.consts import LOG_OFFSET

RIDGE_PENALTY = 1.0
INIT_OMEGA = 0.01
INIT_SMOOTHING = 5


def build_equation_regressors(
    j: int,
    X: np.ndarray,
    u: np.ndarray,
) -> np.ndarray:
    """Rows m'_jt = (x'_t, eps_1t, ..., eps_{j-1}t); j is zero-based."""
    if j == 0:
        return X
    return np.hstack([X, u[:, :j]])


def modifier_matrix(
    spec: ModelSpec,
    R_obs: np.ndarray | None,
    S: np.ndarray,
    tau: np.ndarray,
) -> np.ndarray:
    """z_jt stacked over t: observed modifiers, switching indicator, tau."""
    parts = []
    if spec.include_obs:
        parts.append(R_obs)
    if spec.include_ms:
        parts.append(S[:, None].astype(float))
    parts.append(tau)
    return np.hstack(parts)


def loading_design(
    m: np.ndarray,
    Z: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
) -> np.ndarray:
    """Columns (m_t, z_t,c * m_t,i for each sampled Lambda[i, c])."""
    return np.hstack([m, m[:, rows] * Z[:, cols]])


def marginal_variance(
    m: np.ndarray,
    omega: np.ndarray,
    h: np.ndarray,
) -> np.ndarray:
    """m'_t diag(omega) m_t + exp(h_t): noise of y once gamma_tilde is
    integrated out given z."""
    return (m * m) @ omega + np.exp(h)


def smoothed_log_variance(resid: np.ndarray) -> np.ndarray:
    smoothed = (
        pd.Series(resid * resid)
        .rolling(INIT_SMOOTHING, center=True, min_periods=1)
        .mean()
        .to_numpy()
    )
    return np.log(smoothed + LOG_OFFSET)


def ridge_fit(m: np.ndarray, y: np.ndarray) -> np.ndarray:
    gram = m.T @ m + RIDGE_PENALTY * np.eye(m.shape[1])
    return np.linalg.solve(gram, m.T @ y)


def init_equation(
    spec: ModelSpec,
    j: int,
    m: np.ndarray,
    y: np.ndarray,
) -> tuple[EquationState, np.ndarray]:
    """
    Warm start of equation ``j``: ridge gamma, log-volatility from smoothed
    squared residuals, tau = 0, S = 0, omega = 0.01 (0 for static
    specifications), unit horseshoe scales, transition matrix at its prior
    means. Returns the state and the residuals.
    """
    T, v = m.shape
    R = spec.R_for(j)
    e = spec.priors.transition
    p00 = e[0, 0] / e[0].sum()
    p11 = e[1, 0] / e[1].sum()

    gamma = ridge_fit(m, y)
    resid = y - m @ gamma
    h = smoothed_log_variance(resid)
    omega = np.zeros(v) if spec.static else np.full(v, INIT_OMEGA)

    eq = EquationState(
        j=j,
        gamma=gamma,
        Lambda=np.zeros((v, R)),
        omega=omega,
        tau=np.zeros((T, spec.delta_for(j))),
        S=np.zeros(T, dtype=np.int8),
        P=np.array([[p00, 1.0 - p00], [1.0 - p11, p11]]),
        h=h,
        sv=SvParams(mu=float(h.mean()), psi=0.5, sigma2=0.1),
        hs={
            "constants": HorseshoeState.single_group(v),
            "loadings": HorseshoeState.init(spec.loading_index(j)[1]),
            "sqrt_omega": HorseshoeState.single_group(v),
        },
        gamma_tilde=np.zeros((T, v)),
        eta=np.zeros((T, v)),
    )
    return eq, resid


@dataclass
class NormalizedModifiers:
    z: np.ndarray
    Lambda: np.ndarray
    shift: np.ndarray
    lo: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray


def normalize_modifiers(
    z: np.ndarray,
    Lambda: np.ndarray,
) -> NormalizedModifiers:
    """
    Min-max map of each modifier column to [0, 1] with loadings rescaled so
    that Lambda z = Lambda_n z_n + shift. Constant columns are flagged and
    left as they are.

    :param z: T x R modifier summaries
    :param Lambda: v x R loadings
    :return: NormalizedModifiers
    """
    z = np.asarray(z, dtype=float)
    Lambda = np.asarray(Lambda, dtype=float)
    lo = z.min(axis=0)
    scale = z.max(axis=0) - lo
    degenerate = scale <= 0
    lo = np.where(degenerate, 0.0, lo)
    scale = np.where(degenerate, 1.0, scale)
    return NormalizedModifiers(
        z=(z - lo) / scale,
        Lambda=Lambda * scale,
        shift=Lambda @ lo,
        lo=lo,
        scale=scale,
        degenerate=degenerate,
    )
