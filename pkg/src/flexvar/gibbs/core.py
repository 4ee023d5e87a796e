"""
Equation-by-equation Gibbs sampler. Equation ``j`` regresses y_jt on
m_jt = (x_t, eps_1t, ..., eps_{j-1}t) with coefficients gamma_j +
gamma_tilde_jt and gamma_tilde_jt = Lambda_j z_jt + eta_jt.
"""

import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from flexvar.gibbs.utils import (
    build_equation_regressors,
    init_equation,
    loading_design,
    marginal_variance,
    modifier_matrix,
)
from flexvar.model.consts import TIMINGS_KEY
from flexvar.model.core import (
    DataPanel,
    EquationState,
    ModelSpec,
    PosteriorDraws,
)
from flexvar.model.errors import NumericalError, SweepError
from flexvar.model.utils import build_lag_matrix, validate_spec
from flexvar.rng.core import RngStream
from flexvar.rng.dists import sample_gaussian_regression, sample_gig
from flexvar.shrinkage.consts import SCALE_CAP, SCALE_FLOOR, SHRINKAGE_BLOCKS
from flexvar.shrinkage.core import update_horseshoe
from flexvar.states.ffbs import FfbsProblem, ffbs_sample
from flexvar.states.markov import (
    SwitchProblem,
    kim_sample_path,
    update_transition_probs,
)
from flexvar.states.sv import SvProblem, sample_sv_block
from flexvar.utils import content_hash

CHI_FLOOR = 1e-300

HS_FIELDS = ("c2", "d2", "e", "f")


@dataclass
class SweepState:
    equations: list[EquationState]
    u: np.ndarray
    sweep: int = 0


@dataclass
class ChainDiagnostics:
    timings: dict[str, float] = field(
        default_factory=lambda: defaultdict(float)
    )
    psi_accepted: list[int] = field(default_factory=list)
    psi_proposals: list[int] = field(default_factory=list)
    psi_retries: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        rates = [
            a / p if p else None
            for a, p in zip(self.psi_accepted, self.psi_proposals)
        ]
        return {
            "psi_acceptance": rates,
            "psi_retries": list(self.psi_retries),
        }

    def timing_dict(self, wall_clock: float) -> dict:
        return {"wall_clock": wall_clock, "block_seconds": dict(self.timings)}


class GibbsSampler:
    """
    Holds the fixed design (lags, observed modifiers) and runs sweeps over a
    SweepState. ``Y`` may be replaced between sweeps (the joint-distribution
    test re-simulates it).
    """

    def __init__(
        self,
        spec: ModelSpec,
        X: np.ndarray,
        Y: np.ndarray,
        R_obs: np.ndarray | None,
        stream: RngStream,
    ):
        self.spec = spec
        self.X = X
        self.Y = Y
        self.R_obs = R_obs if spec.include_obs else None
        self.stream = stream
        self.T = Y.shape[0]
        self.diagnostics = ChainDiagnostics(
            psi_accepted=[0] * spec.M,
            psi_proposals=[0] * spec.M,
            psi_retries=[0] * spec.M,
        )
        self._index = [spec.loading_index(j) for j in range(spec.M)]

    @classmethod
    def from_panel(
        cls,
        spec: ModelSpec,
        panel: DataPanel,
        stream: RngStream,
    ) -> "GibbsSampler":
        validate_spec(spec, panel)
        X, Y = build_lag_matrix(panel, spec.P, spec.intercept)
        R_obs = panel.R_obs[spec.P :] if spec.include_obs else None
        return cls(spec, X, Y, R_obs, stream)

    def init_state(self) -> SweepState:
        u = np.zeros((self.T, self.spec.M))
        equations = []
        for j in range(self.spec.M):
            m = build_equation_regressors(j, self.X, u)
            eq, resid = init_equation(self.spec, j, m, self.Y[:, j])
            equations.append(eq)
            u[:, j] = resid
        return SweepState(equations=equations, u=u)

    def regressors(self, j: int, state: SweepState) -> np.ndarray:
        return build_equation_regressors(j, self.X, state.u)

    def modifiers(self, eq: EquationState) -> np.ndarray:
        return modifier_matrix(self.spec, self.R_obs, eq.S, eq.tau)

    def residuals(self, j: int, state: SweepState) -> np.ndarray:
        """eps_jt under the current gamma_j and gamma_tilde_j."""
        eq = state.equations[j]
        m = self.regressors(j, state)
        return (
            self.Y[:, j]
            - m @ eq.gamma
            - np.einsum("ti,ti->t", m, eq.gamma_tilde)
        )

    def sample_z_block(
        self,
        j: int,
        state: SweepState,
        rng: np.random.Generator,
    ):
        """
        tau_j by FFBS and S_j by the switching filter, both with gamma_tilde
        integrated out, then the transition matrix.
        """
        spec, eq = self.spec, state.equations[j]
        sl = spec.modifier_slices(j)
        if not (spec.include_ms or spec.delta_for(j)):
            return

        m = self.regressors(j, state)
        y_tilde = self.Y[:, j] - m @ eq.gamma
        variance = marginal_variance(m, eq.omega, eq.h)

        r_part = np.zeros(self.T)
        if spec.include_obs:
            r_part = np.einsum(
                "tc,tc->t", m @ eq.Lambda[:, sl["r"]], self.R_obs
            )
        s_load = (m @ eq.Lambda[:, sl["S"]]).sum(axis=1)
        tau_load = m @ eq.Lambda[:, sl["tau"]]

        if spec.delta_for(j):
            problem = FfbsProblem(
                obs=y_tilde - r_part - s_load * eq.S,
                load=tau_load,
                obs_var=variance,
            )
            eq.tau = ffbs_sample(problem, rng)

        if spec.include_ms:
            base = y_tilde - r_part - np.einsum("tc,tc->t", tau_load, eq.tau)
            loglik = np.column_stack(
                [
                    -0.5 * base * base / variance,
                    -0.5 * (base - s_load) ** 2 / variance,
                ]
            )
            eq.S = kim_sample_path(SwitchProblem(loglik, eq.P), rng)
            eq.P = update_transition_probs(
                eq.S, spec.priors.transition, rng
            )

        self._refresh_tvp_mean(eq)

    def sample_loadings_and_constants(
        self,
        j: int,
        state: SweepState,
        rng: np.random.Generator,
    ):
        """Joint Gaussian draw of (gamma_j, sampled entries of Lambda_j)."""
        eq = state.equations[j]
        m = self.regressors(j, state)
        rows, cols = self._index[j]
        design = loading_design(m, self.modifiers(eq), rows, cols)
        prior_var = np.concatenate(
            [
                eq.hs["constants"].prior_variance(),
                eq.hs["loadings"].prior_variance(),
            ]
        )
        coef = sample_gaussian_regression(
            design,
            self.Y[:, j],
            marginal_variance(m, eq.omega, eq.h),
            prior_var,
            rng,
        )
        eq.gamma = coef[: eq.v]
        eq.Lambda = np.zeros_like(eq.Lambda)
        eq.Lambda[rows, cols] = coef[eq.v :]
        self._refresh_tvp_mean(eq)

    def sample_tvp_paths(
        self,
        j: int,
        state: SweepState,
        rng: np.random.Generator,
    ):
        """
        gamma_tilde_jt from N(Lambda z_t, diag(omega)) conditioned on the
        single observation y_jt, all t at once by perturbing a prior draw.
        Coordinates with omega = 0 stay at Lambda z_t.
        """
        eq = state.equations[j]
        m = self.regressors(j, state)
        prior_mean = self.modifiers(eq) @ eq.Lambda.T
        sd = np.sqrt(eq.omega)
        noise_var = np.exp(eq.h)

        g = prior_mean + sd * rng.standard_normal(prior_mean.shape)
        e = np.sqrt(noise_var) * rng.standard_normal(self.T)
        Dm = m * eq.omega
        innovation = (
            self.Y[:, j] - m @ eq.gamma - np.einsum("ti,ti->t", m, g) - e
        )
        gain = Dm / (np.einsum("ti,ti->t", m, Dm) + noise_var)[:, None]
        eq.gamma_tilde = g + gain * innovation[:, None]
        eq.eta = eq.gamma_tilde - prior_mean

    def sample_state_variances(
        self,
        j: int,
        state: SweepState,
        rng: np.random.Generator,
    ):
        """omega_ji ~ GIG((1 - T)/2, sum_t eta_ji,t^2, 1 / prior variance)."""
        if self.spec.static:
            return
        eq = state.equations[j]
        lam = (1.0 - self.T) / 2.0
        chi = np.maximum((eq.eta * eq.eta).sum(axis=0), CHI_FLOOR)
        psi = 1.0 / eq.hs["sqrt_omega"].prior_variance()
        omega = np.array(
            [sample_gig(lam, c, p, rng) for c, p in zip(chi, psi)]
        )
        eq.omega = np.clip(omega, SCALE_FLOOR, SCALE_CAP)

    def sample_volatility(
        self,
        j: int,
        state: SweepState,
        rng: np.random.Generator,
    ):
        eq = state.equations[j]
        result = sample_sv_block(
            SvProblem(
                resid=self.residuals(j, state),
                h=eq.h,
                params=eq.sv,
                priors=self.spec.priors,
            ),
            rng,
        )
        eq.h, eq.sv = result.h, result.params
        self.diagnostics.psi_proposals[j] += 1
        self.diagnostics.psi_accepted[j] += int(result.psi_accepted)
        self.diagnostics.psi_retries[j] += result.psi_retries

    def update_shrinkage(
        self,
        j: int,
        state: SweepState,
        rng: np.random.Generator,
    ):
        eq = state.equations[j]
        rows, cols = self._index[j]
        eq.hs["constants"] = update_horseshoe(eq.gamma, eq.hs["constants"], rng)
        eq.hs["loadings"] = update_horseshoe(
            eq.Lambda[rows, cols], eq.hs["loadings"], rng
        )
        if not self.spec.static:
            eq.hs["sqrt_omega"] = update_horseshoe(
                np.sqrt(eq.omega), eq.hs["sqrt_omega"], rng
            )

    def _refresh_tvp_mean(self, eq: EquationState):
        """Keep gamma_tilde = Lambda z + eta after z or Lambda moved."""
        eq.gamma_tilde = self.modifiers(eq) @ eq.Lambda.T + eq.eta

    def sweep(self, state: SweepState) -> SweepState:
        """
        One full pass over the equations in index order; eps_j is refreshed
        once equation j is done so equation j + 1 conditions on it.
        """
        steps = (
            ("z", self.sample_z_block),
            ("loadings", self.sample_loadings_and_constants),
            ("tvp", self.sample_tvp_paths),
            ("omega", self.sample_state_variances),
            ("sv", self.sample_volatility),
            ("shrinkage", self.update_shrinkage),
        )
        for j in range(self.spec.M):
            for block, step in steps:
                rng = self.stream.generator(state.sweep, j, block)
                started = time.perf_counter()
                try:
                    step(j, state, rng)
                except NumericalError as exc:
                    raise SweepError(
                        str(exc), sweep=state.sweep, equation=j, block=block
                    ) from exc
                self.diagnostics.timings[block] += (
                    time.perf_counter() - started
                )
            state.u[:, j] = self.residuals(j, state)
        state.sweep += 1
        return state


class DrawBuffer:
    """Preallocated storage for the thinned sweeps of one chain."""

    def __init__(self, spec: ModelSpec, T: int, n: int):
        self.spec = spec
        self.n = n
        self.filled = 0
        self.arrays: dict[str, np.ndarray] = {}
        for j in range(spec.M):
            v, R, d = spec.v(j), spec.R_for(j), spec.delta_for(j)
            n_load = int(spec.loading_mask(j).sum())
            n_groups = len(np.unique(spec.loading_index(j)[1]))
            shapes = {
                "gamma": (v,),
                "Lambda": (v, R),
                "omega": (v,),
                "tau": (T, d),
                "P": (2, 2),
                "h": (T,),
                "sv": (3,),
                "gamma_tilde": (T, v),
            }
            for name, shape in shapes.items():
                self.arrays[f"{name}_{j}"] = np.zeros((n, *shape))
            self.arrays[f"S_{j}"] = np.zeros((n, T), dtype=np.int8)
            sizes = {
                "constants": (v, 1),
                "loadings": (n_load, n_groups),
                "sqrt_omega": (v, 1),
            }
            for block in SHRINKAGE_BLOCKS:
                local, groups = sizes[block]
                for name, size in zip(
                    HS_FIELDS, (local, groups, local, groups)
                ):
                    self.arrays[f"hs_{block}_{name}_{j}"] = np.zeros(
                        (n, size)
                    )

    def store(self, state: SweepState):
        i = self.filled
        for eq in state.equations:
            j = eq.j
            self.arrays[f"gamma_{j}"][i] = eq.gamma
            self.arrays[f"Lambda_{j}"][i] = eq.Lambda
            self.arrays[f"omega_{j}"][i] = eq.omega
            self.arrays[f"tau_{j}"][i] = eq.tau
            self.arrays[f"S_{j}"][i] = eq.S
            self.arrays[f"P_{j}"][i] = eq.P
            self.arrays[f"h_{j}"][i] = eq.h
            self.arrays[f"sv_{j}"][i] = eq.sv.as_array()
            self.arrays[f"gamma_tilde_{j}"][i] = eq.gamma_tilde
            for block in SHRINKAGE_BLOCKS:
                for name in HS_FIELDS:
                    self.arrays[f"hs_{block}_{name}_{j}"][i] = getattr(
                        eq.hs[block], name
                    )
        self.filled += 1

    def to_draws(
        self,
        dates: np.ndarray,
        labels: tuple[str, ...],
        metadata: dict,
    ) -> PosteriorDraws:
        return PosteriorDraws(
            spec=self.spec,
            dates=dates,
            labels=labels,
            arrays={k: v[: self.filled] for k, v in self.arrays.items()},
            metadata=metadata,
        )


def _finish(metadata: dict, sampler: GibbsSampler, wall_clock: float):
    metadata["diagnostics"] = sampler.diagnostics.to_dict()
    metadata[TIMINGS_KEY] = sampler.diagnostics.timing_dict(wall_clock)


def run_chain(
    spec: ModelSpec,
    panel: DataPanel,
    stream: RngStream | int,
) -> PosteriorDraws:
    """
    Run ``spec.mcmc.draws`` sweeps and keep every ``thin``-th sweep after
    ``burn``.

    :param spec: ModelSpec
    :param panel: DataPanel
    :param stream: RngStream (or a bare seed)
    :return: PosteriorDraws
    """
    if isinstance(stream, int):
        stream = RngStream(stream)
    mcmc = spec.mcmc
    sampler = GibbsSampler.from_panel(spec, panel, stream)
    state = sampler.init_state()
    buffer = DrawBuffer(spec, sampler.T, mcmc.n_stored)
    dates = panel.dates[spec.P :]
    metadata = {
        "spec_hash": content_hash(spec.model_dump(mode="json")),
        "seed": stream.seed,
        "chain": list(stream.chain),
    }
    logger.info(
        f"chain {stream.chain} start: {mcmc.draws} sweeps, burn {mcmc.burn}, "
        f"thin {mcmc.thin}, T={sampler.T}, spec {metadata['spec_hash'][:12]}"
    )

    started = time.perf_counter()
    for sweep in range(mcmc.draws):
        try:
            sampler.sweep(state)
        except SweepError as exc:
            _finish(metadata, sampler, time.perf_counter() - started)
            exc.partial = buffer.to_draws(dates, panel.labels, metadata)
            logger.error(f"chain {stream.chain} aborted: {exc}")
            raise
        kept = sweep + 1 - mcmc.burn
        if kept > 0 and kept % mcmc.thin == 0:
            buffer.store(state)
        if (sweep + 1) % mcmc.log_every == 0:
            logger.debug(
                f"chain {stream.chain}: sweep {sweep + 1}/{mcmc.draws}"
            )

    wall_clock = time.perf_counter() - started
    _finish(metadata, sampler, wall_clock)
    logger.info(
        f"chain {stream.chain} done in {wall_clock:.1f}s, "
        f"{buffer.filled} draws stored"
    )
    return buffer.to_draws(dates, panel.labels, metadata)
