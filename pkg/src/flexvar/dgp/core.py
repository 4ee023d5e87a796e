"""
Synthetic panels from any ModelSpec with known generating parameters.
"""

from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
import pandas as pd

from flexvar.model.core import DataPanel, EquationState, ModelSpec, SvParams
from flexvar.model.errors import SpecValidationError
from flexvar.shrinkage.core import HorseshoeState
from flexvar.states.markov import stationary_distribution
from flexvar.states.sv import simulate_sv_path

# truth draws of half-Cauchy scales are capped here for stable data
SCALE_TRUNCATION = 10.0
MODIFIER_AR = 0.9
START_DATE = "1970-01"


@dataclass
class EquationTruth:
    """Generating parameters of one equation; paths may be left empty."""

    gamma: np.ndarray
    Lambda: np.ndarray
    omega: np.ndarray
    P: np.ndarray = field(
        default_factory=lambda: np.array([[10.0, 1.0], [10.0, 1.0]]) / 11.0
    )
    sv: SvParams = field(default_factory=lambda: SvParams(0.0, 0.5, 0.1))
    hs: dict[str, HorseshoeState] = field(default_factory=dict)
    tau: np.ndarray | None = None
    S: np.ndarray | None = None
    h: np.ndarray | None = None
    eta: np.ndarray | None = None
    gamma_tilde: np.ndarray | None = None


@dataclass
class TruthRecord:
    """
    Everything used to generate a panel. ``u`` holds the structural shocks,
    so the time-t covariance is Q_t diag(exp(h_t)) Q_t' with the
    covariance coefficients read from ``gamma + gamma_tilde``.
    """

    spec: ModelSpec
    equations: list[EquationTruth]
    R_obs: np.ndarray | None = None
    u: np.ndarray | None = None

    def __post_init__(self):
        spec = self.spec
        if len(self.equations) != spec.M:
            raise SpecValidationError(f"need {spec.M} equation truths")
        for j, eq in enumerate(self.equations):
            v, R = spec.v(j), spec.R_for(j)
            if eq.gamma.shape != (v,) or eq.omega.shape != (v,):
                raise SpecValidationError(
                    f"equation {j}: gamma and omega must have {v} entries"
                )
            if eq.Lambda.shape != (v, R):
                raise SpecValidationError(
                    f"equation {j}: Lambda must be {v} x {R}"
                )

    @classmethod
    def constant(
        cls,
        spec: ModelSpec,
        gamma: list[np.ndarray] | None = None,
        sv: SvParams | None = None,
    ) -> "TruthRecord":
        """Lambda = 0 and omega = 0: a constant-parameter data generator."""
        equations = []
        for j in range(spec.M):
            v, R = spec.v(j), spec.R_for(j)
            g = np.zeros(v) if gamma is None else np.asarray(gamma[j], float)
            equations.append(
                EquationTruth(
                    gamma=g,
                    Lambda=np.zeros((v, R)),
                    omega=np.zeros(v),
                    sv=sv or SvParams(0.0, 0.5, 0.1),
                )
            )
        return cls(spec=spec, equations=equations)

    @property
    def T_eff(self) -> int | None:
        h = self.equations[0].h
        return None if h is None else h.shape[0]

    def Q(self) -> np.ndarray:
        """T x M x M unit lower triangular Q_t."""
        spec, K = self.spec, self.spec.K
        Q = np.broadcast_to(np.eye(spec.M), (self.T_eff, spec.M, spec.M))
        Q = Q.copy()
        for j, eq in enumerate(self.equations):
            coef = eq.gamma + eq.gamma_tilde
            Q[:, j, :j] = coef[:, K:]
        return Q

    def to_equation_states(self) -> list[EquationState]:
        """Equation states of a Gibbs sweep sitting exactly at the truth."""
        states = []
        for j, eq in enumerate(self.equations):
            hs = eq.hs or _unit_scales(self.spec, j)
            states.append(
                EquationState(
                    j=j,
                    gamma=eq.gamma.copy(),
                    Lambda=eq.Lambda.copy(),
                    omega=eq.omega.copy(),
                    tau=eq.tau.copy(),
                    S=eq.S.astype(np.int8),
                    P=eq.P.copy(),
                    h=eq.h.copy(),
                    sv=eq.sv,
                    hs={k: v.copy() for k, v in hs.items()},
                    gamma_tilde=eq.gamma_tilde.copy(),
                    eta=eq.eta.copy(),
                )
            )
        return states


def _unit_scales(spec: ModelSpec, j: int) -> dict[str, HorseshoeState]:
    v = spec.v(j)
    return {
        "constants": HorseshoeState.single_group(v),
        "loadings": HorseshoeState.init(spec.loading_index(j)[1]),
        "sqrt_omega": HorseshoeState.single_group(v),
    }


def _half_cauchy_sq(rng, size, cap: float) -> np.ndarray:
    """Squared half-Cauchy draws, redrawn until below ``cap``."""
    scale = np.abs(rng.standard_cauchy(size))
    while np.any(scale > cap):
        bad = scale > cap
        scale[bad] = np.abs(rng.standard_cauchy(int(bad.sum())))
    return scale * scale


def draw_horseshoe(
    groups: np.ndarray,
    rng: np.random.Generator,
    cap: float | None = SCALE_TRUNCATION,
) -> HorseshoeState:
    """
    Prior draw of one horseshoe block. With ``cap=None`` the auxiliaries are
    drawn too and the draw is exact; a finite cap truncates the half-Cauchy
    scales (auxiliaries are then left at 1).
    """
    hs = HorseshoeState.init(groups)
    if cap is None:
        e = 1.0 / rng.gamma(0.5, 1.0, hs.size)
        f = 1.0 / rng.gamma(0.5, 1.0, hs.n_groups)
        c2 = 1.0 / rng.gamma(0.5, e)
        d2 = 1.0 / rng.gamma(0.5, f)
        return HorseshoeState(c2=c2, d2=d2, e=e, f=f, groups=hs.groups)
    hs.c2 = _half_cauchy_sq(rng, hs.size, cap)
    hs.d2 = _half_cauchy_sq(rng, hs.n_groups, cap)
    return hs


def draw_prior_truth(
    spec: ModelSpec,
    rng: np.random.Generator,
    cap: float | None = SCALE_TRUNCATION,
) -> TruthRecord:
    """Static parameters drawn from the prior; paths are left empty."""
    priors = spec.priors
    e = priors.transition
    equations = []
    for j in range(spec.M):
        v = spec.v(j)
        rows, cols = spec.loading_index(j)
        hs = {
            "constants": draw_horseshoe(np.zeros(v, np.int64), rng, cap),
            "loadings": draw_horseshoe(cols, rng, cap),
            "sqrt_omega": draw_horseshoe(np.zeros(v, np.int64), rng, cap),
        }
        sd_gamma = np.sqrt(hs["constants"].prior_variance())
        gamma = sd_gamma * rng.standard_normal(v)
        Lambda = np.zeros((v, spec.R_for(j)))
        Lambda[rows, cols] = np.sqrt(
            hs["loadings"].prior_variance()
        ) * rng.standard_normal(rows.size)
        if spec.static:
            omega = np.zeros(v)
        else:
            sqrt_omega = np.sqrt(hs["sqrt_omega"].prior_variance())
            omega = (sqrt_omega * rng.standard_normal(v)) ** 2

        p00 = rng.beta(e[0, 0], e[0, 1])
        p11 = rng.beta(e[1, 0], e[1, 1])
        psi = 2.0 * rng.beta(priors.sv_psi_a, priors.sv_psi_b) - 1.0
        sv = SvParams(
            mu=float(np.sqrt(priors.sv_mu_var) * rng.standard_normal()),
            psi=float(psi),
            sigma2=float(
                rng.gamma(priors.sv_sigma2_shape, 1.0 / priors.sv_sigma2_rate)
            ),
        )
        equations.append(
            EquationTruth(
                gamma=gamma,
                Lambda=Lambda,
                omega=omega,
                P=np.array([[p00, 1.0 - p00], [1.0 - p11, p11]]),
                sv=sv,
                hs=hs,
            )
        )
    return TruthRecord(spec=spec, equations=equations)


def simulate_modifiers(
    T: int,
    R_r: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Standardized AR(1) series with coefficient 0.9, T x R_r."""
    r = np.empty((T, R_r))
    r[0] = rng.standard_normal(R_r) / np.sqrt(1.0 - MODIFIER_AR**2)
    for t in range(1, T):
        r[t] = MODIFIER_AR * r[t - 1] + rng.standard_normal(R_r)
    return (r - r.mean(axis=0)) / r.std(axis=0)


def simulate_markov_path(
    P: np.ndarray,
    T: int,
    rng: np.random.Generator,
) -> np.ndarray:
    S = np.empty(T, dtype=np.int8)
    S[0] = int(rng.random() < stationary_distribution(P)[1])
    for t in range(1, T):
        S[t] = int(rng.random() < P[S[t - 1], 1])
    return S


def complete_paths(
    truth: TruthRecord,
    T_eff: int,
    rng: np.random.Generator,
) -> TruthRecord:
    """
    Fill in every latent path the truth does not already carry: tau by unit
    random walks from 0, S by the chain started at its stationary law, h by
    the stationary AR(1), observed modifiers by ``simulate_modifiers``, then
    eta ~ N(0, diag(omega)) and gamma_tilde = Lambda z + eta.
    """
    spec = truth.spec
    R_obs = truth.R_obs
    if spec.include_obs and R_obs is None:
        R_obs = simulate_modifiers(T_eff, spec.R_r, rng)
    equations = []
    for j, eq in enumerate(truth.equations):
        v, delta = spec.v(j), spec.delta_for(j)
        tau = eq.tau
        if tau is None:
            tau = np.cumsum(rng.standard_normal((T_eff, delta)), axis=0)
        S = eq.S
        if S is None:
            S = (
                simulate_markov_path(eq.P, T_eff, rng)
                if spec.include_ms
                else np.zeros(T_eff, dtype=np.int8)
            )
        h = eq.h if eq.h is not None else simulate_sv_path(eq.sv, T_eff, rng)
        parts = []
        if spec.include_obs:
            parts.append(R_obs)
        if spec.include_ms:
            parts.append(S[:, None].astype(float))
        parts.append(tau)
        z = np.hstack(parts)
        eta = eq.eta
        if eta is None:
            eta = np.sqrt(eq.omega) * rng.standard_normal((T_eff, v))
        equations.append(
            replace(
                eq,
                tau=tau,
                S=S,
                h=h,
                eta=eta,
                gamma_tilde=z @ eq.Lambda.T + eta,
            )
        )
    for eq in equations:
        if eq.h.shape[0] != T_eff:
            raise SpecValidationError(
                f"truth paths have {eq.h.shape[0]} periods, expected {T_eff}"
            )
    return replace(truth, equations=equations, R_obs=R_obs)


def generate_observations(
    equations: Sequence[EquationTruth | EquationState],
    X: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Y given a fixed lag design X (T_eff x K) and complete paths of gamma_tilde
    and h for every equation.

    :return: (Y, u) where u holds the structural shocks eps_jt
    """
    T_eff, M = X.shape[0], len(equations)
    Y = np.empty((T_eff, M))
    u = np.empty((T_eff, M))
    for j, eq in enumerate(equations):
        m = X if j == 0 else np.hstack([X, u[:, :j]])
        u[:, j] = np.exp(0.5 * eq.h) * rng.standard_normal(T_eff)
        coef = eq.gamma + eq.gamma_tilde
        Y[:, j] = np.einsum("ti,ti->t", m, coef) + u[:, j]
    return Y, u


def simulate_dgp(
    spec: ModelSpec,
    truth: TruthRecord | Literal["prior"],
    T: int,
    rng: np.random.Generator,
) -> tuple[DataPanel, TruthRecord]:
    """
    Simulate T observations (the first P are standard-normal start-up lags)
    recursively through the triangular system.

    :param spec: ModelSpec
    :param truth: TruthRecord, or "prior" to draw one (half-Cauchy scales
        truncated at 10)
    :param T: number of rows of the panel
    :param rng: np.random.Generator
    :return: (DataPanel, TruthRecord with complete paths)
    """
    if T <= spec.P:
        raise SpecValidationError(f"T={T} must exceed P={spec.P}")
    if isinstance(truth, str):
        if truth != "prior":
            raise SpecValidationError(f"unknown truth {truth!r}")
        truth = draw_prior_truth(spec, rng)
    elif truth.spec != spec:
        raise SpecValidationError("truth was built for another spec")
    T_eff = T - spec.P
    R_next = None
    if spec.include_obs and truth.R_obs is None:
        r = simulate_modifiers(T_eff + 1, spec.R_r, rng)
        truth = replace(truth, R_obs=r[:-1])
        R_next = r[-1]
    truth = complete_paths(truth, T_eff, rng)

    M, P, K = spec.M, spec.P, spec.K
    Y = np.empty((T, M))
    Y[:P] = rng.standard_normal((P, M))
    u = np.empty((T_eff, M))
    for t in range(T_eff):
        lags = [Y[P + t - p] for p in range(1, P + 1)]
        if spec.intercept:
            lags.append(np.ones(1))
        x = np.concatenate(lags)
        for j, eq in enumerate(truth.equations):
            coef = eq.gamma + eq.gamma_tilde[t]
            u[t, j] = np.exp(0.5 * eq.h[t]) * rng.standard_normal()
            Y[P + t, j] = coef[:K] @ x + coef[K:] @ u[t, :j] + u[t, j]

    R_obs = None
    if spec.include_obs:
        # panel row P + t carries the modifier entering z at t
        R_obs = np.vstack([np.zeros((P, spec.R_r)), truth.R_obs])
    dates = pd.period_range(START_DATE, periods=T, freq="M").to_timestamp()
    panel = DataPanel(
        dates=dates.to_numpy().astype("datetime64[D]"),
        Y=Y,
        R_obs=R_obs,
        labels=tuple(f"y{i + 1}" for i in range(M)),
        R_next=R_next,
    )
    return panel, replace(truth, u=u)
