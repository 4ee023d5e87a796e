"""
Joint-distribution test of the sampler: draws of (parameters, data) from
the prior-then-likelihood route are compared with the successive-conditional
route that alternates one Gibbs sweep with a fresh data draw. On a fixed lag
design both routes target the same joint law.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy import stats

from flexvar.dgp.core import (
    complete_paths,
    draw_prior_truth,
    generate_observations,
    simulate_modifiers,
)
from flexvar.gibbs.core import GibbsSampler, SweepState
from flexvar.model.core import ModelSpec
from flexvar.model.errors import SpecValidationError
from flexvar.rng import RngStream

DEFAULT_PROBS = (0.1, 0.25, 0.5, 0.75, 0.9)
N_BATCHES = 25


def functional_names(spec: ModelSpec) -> list[str]:
    names = []
    for j in range(spec.M):
        names += [f"gamma_{j}[0]", f"h_{j}_mean", f"mu_{j}", f"psi_{j}"]
        names.append(f"log_sigma2_{j}")
        if not spec.static:
            names.append(f"log_omega_{j}[0]")
        if spec.loading_index(j)[0].size:
            names.append(f"Lambda_{j}[0]")
        if spec.delta_for(j):
            names.append(f"tau_{j}_last")
        if spec.include_ms:
            names += [f"p00_{j}", f"p11_{j}", f"S_{j}_mean"]
    return names


def functionals(spec: ModelSpec, equations) -> np.ndarray:
    """Values in the order of ``functional_names``."""
    out = []
    for j, eq in enumerate(equations):
        out += [eq.gamma[0], eq.h.mean(), eq.sv.mu, eq.sv.psi]
        out.append(np.log(eq.sv.sigma2))
        if not spec.static:
            out.append(np.log(eq.omega[0]))
        rows, cols = spec.loading_index(j)
        if rows.size:
            out.append(eq.Lambda[rows[0], cols[0]])
        if spec.delta_for(j):
            out.append(eq.tau[-1, 0])
        if spec.include_ms:
            out += [eq.P[0, 0], eq.P[1, 1], eq.S.mean()]
    return np.asarray(out, dtype=float)


def _batch_se(x: np.ndarray, n_batches: int = N_BATCHES) -> np.ndarray:
    """Batch-means standard errors of column means."""
    n = x.shape[0] - x.shape[0] % n_batches
    batches = x[:n].reshape(n_batches, -1, *x.shape[1:]).mean(axis=1)
    return batches.std(axis=0, ddof=1) / np.sqrt(n_batches)


@dataclass
class GewekeResult:
    names: list[str]
    marginal: np.ndarray
    successive: np.ndarray

    def mean_z_scores(self) -> np.ndarray:
        """Difference of means over its standard error, per functional."""
        n_m = self.marginal.shape[0]
        se_m = self.marginal.std(axis=0, ddof=1) / np.sqrt(n_m)
        se_s = _batch_se(self.successive)
        diff = self.marginal.mean(axis=0) - self.successive.mean(axis=0)
        return diff / np.sqrt(se_m**2 + se_s**2)

    def quantile_z_scores(self, probs=DEFAULT_PROBS) -> np.ndarray:
        """
        For each marginal-route quantile q_p, the successive-route share
        below q_p compared with p; functionals x probs.
        """
        q = np.quantile(self.marginal, probs, axis=0).T
        below_m = self.marginal[:, :, None] <= q[None]
        below_s = (self.successive[:, :, None] <= q[None]).astype(float)
        n_m = self.marginal.shape[0]
        p_m = below_m.mean(axis=0)
        se_m = np.sqrt(p_m * (1.0 - p_m) / n_m)
        se_s = _batch_se(below_s)
        se = np.sqrt(se_m**2 + se_s**2)
        with np.errstate(invalid="ignore", divide="ignore"):
            z = (below_s.mean(axis=0) - p_m) / se
        return np.where(se > 0, z, 0.0)

    def passes(
        self, level: float = 0.99, probs=DEFAULT_PROBS, adjust: bool = True
    ) -> bool:
        """
        True when every quantile z-score lies inside the two-sided ``level``
        band. With ``adjust`` the band is Bonferroni-widened so that
        ``level`` holds for the whole family of tests. Mean z-scores are not
        part of the verdict: horseshoe coefficients have infinite variance.
        """
        z = self.quantile_z_scores(probs)
        alpha = 1.0 - level
        if adjust:
            alpha /= z.size
        bound = stats.norm.ppf(1.0 - alpha / 2.0)
        return bool(np.all(np.abs(z) < bound))


def geweke_test(
    spec: ModelSpec,
    T: int,
    n_draws: int,
    seed: int = 0,
    burn: int = 100,
) -> GewekeResult:
    """
    Run both routes on a standard-normal lag design with ``T`` rows. The
    prior is drawn exactly (no truncation of the half-Cauchy scales).

    :param spec: ModelSpec
    :param T: effective sample length
    :param n_draws: draws per route
    :param seed: int
    :param burn: successive-conditional cycles discarded
    :return: GewekeResult
    """
    if n_draws < 2 * N_BATCHES:
        raise SpecValidationError(f"need at least {2 * N_BATCHES} draws")
    stream = RngStream(seed)
    design_rng = stream.generator("design")
    X = design_rng.standard_normal((T, spec.K))
    if spec.intercept:
        X[:, -1] = 1.0
    R_obs = (
        simulate_modifiers(T, spec.R_r, design_rng)
        if spec.include_obs
        else None
    )

    def prior_draw(rng):
        truth = draw_prior_truth(spec, rng, cap=None)
        truth.R_obs = R_obs
        return complete_paths(truth, T, rng)

    marginal_rng = stream.generator("marginal")
    marginal = np.array(
        [
            functionals(spec, prior_draw(marginal_rng).equations)
            for _ in range(n_draws)
        ]
    )

    cycle_rng = stream.generator("cycle")
    truth = prior_draw(cycle_rng)
    Y, u = generate_observations(truth.equations, X, cycle_rng)
    sampler = GibbsSampler(spec, X, Y, R_obs, stream.spawn("sweeps"))
    state = SweepState(equations=truth.to_equation_states(), u=u)

    successive = np.empty_like(marginal)
    for i in range(burn + n_draws):
        sampler.sweep(state)
        if i >= burn:
            successive[i - burn] = functionals(spec, state.equations)
        sampler.Y, state.u = generate_observations(
            state.equations, X, cycle_rng
        )
        if (i + 1) % 1000 == 0:
            logger.debug(f"joint-distribution test: cycle {i + 1}")

    return GewekeResult(
        names=functional_names(spec),
        marginal=marginal,
        successive=successive,
    )
