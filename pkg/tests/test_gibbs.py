import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from flexvar.dgp import TruthRecord, simulate_dgp
from flexvar.gibbs import (
    GibbsSampler,
    build_equation_regressors,
    normalize_modifiers,
    run_chain,
)
from flexvar.model import McmcConfig, ModelSpec
from flexvar.model.errors import FilterError, SweepError
from flexvar.model.utils import build_lag_matrix
from flexvar.rng import RngStream

# 99.8% posterior bands
BANDS = [0.001, 0.999]


class TestRegressors:
    def test_triangular_columns(self):
        X = np.ones((4, 3))
        u = np.arange(8.0).reshape(4, 2)
        assert build_equation_regressors(0, X, u) is X
        m = build_equation_regressors(2, X, u)
        assert m.shape == (4, 5)
        assert_array_equal(m[:, 3:], u)


class TestNormalizeModifiers:
    def test_preserves_tvp_mean(self, rng):
        z = rng.standard_normal((20, 3))
        Lambda = rng.standard_normal((4, 3))
        out = normalize_modifiers(z, Lambda)
        assert_allclose(out.z.min(axis=0), 0.0)
        assert_allclose(out.z.max(axis=0), 1.0)
        assert_allclose(z @ Lambda.T, out.z @ out.Lambda.T + out.shift)

    def test_constant_column_flagged(self):
        z = np.column_stack([np.linspace(0, 2, 5), np.full(5, 3.0)])
        out = normalize_modifiers(z, np.ones((2, 2)))
        assert_array_equal(out.degenerate, [False, True])
        assert_allclose(out.z[:, 1], 3.0)


class TestRunChain:
    def test_static_spec_has_no_variation(self, var1_panel, short_chain):
        spec = ModelSpec.constant(M=2, P=1, mcmc=short_chain)
        draws = run_chain(spec, var1_panel, 1)
        assert draws.n_stored == 20
        assert draws.get("Lambda", 1).shape == (20, 3, 0)
        assert_array_equal(draws.get("omega", 0), 0.0)
        assert_array_equal(draws.get("gamma_tilde", 1), 0.0)

    def test_shapes_and_ranges(self, var1_panel, short_chain):
        spec = ModelSpec(
            M=2,
            P=1,
            include_obs=True,
            R_r=1,
            include_ms=True,
            delta=1,
            mcmc=short_chain,
        )
        draws = run_chain(spec, var1_panel, 2)
        T = var1_panel.T - 1
        assert draws.get("tau", 0).shape == (20, T, 1)
        assert draws.get("Lambda", 1).shape == (20, 3, 3)
        assert set(np.unique(draws.get("S", 0))) <= {0, 1}
        assert_allclose(draws.get("P", 1).sum(axis=2), 1.0)
        assert np.all(draws.get("omega", 0) > 0)
        assert np.all(np.abs(draws.get("sv", 1)[:, 1]) < 1)
        assert len(draws.dates) == T
        z = draws.modifiers(0, var1_panel.R_obs[1:])
        assert z.shape == (20, T, 3)

    def test_random_walk_preset_keeps_diagonal(self, var1_panel, short_chain):
        spec = ModelSpec.random_walk_tvp(M=2, P=1, mcmc=short_chain)
        draws = run_chain(spec, var1_panel, 3)
        Lambda = draws.get("Lambda", 1)
        off = ~np.eye(3, dtype=bool)
        assert_array_equal(Lambda[:, off], 0.0)
        assert np.any(np.diagonal(Lambda, axis1=1, axis2=2) != 0)

    def test_same_seed_same_draws(self, var1_panel, short_chain):
        spec = ModelSpec(M=2, P=1, delta=1, mcmc=short_chain)
        a = run_chain(spec, var1_panel, RngStream(9))
        b = run_chain(spec, var1_panel, RngStream(9))
        for name in a.arrays:
            assert_array_equal(a.arrays[name], b.arrays[name])
        assert a.metadata["spec_hash"] == b.metadata["spec_hash"]

    def test_thinning(self, var1_panel):
        mcmc = McmcConfig(draws=30, burn=10, thin=4)
        draws = run_chain(ModelSpec.constant(M=2, P=1, mcmc=mcmc), var1_panel, 0)
        assert draws.n_stored == 5

    def test_failure_carries_partial_draws(
        self, var1_panel, short_chain, monkeypatch
    ):
        spec = ModelSpec(M=2, P=1, delta=1, mcmc=short_chain)
        original = GibbsSampler.sample_volatility

        def failing(self, j, state, rng):
            if state.sweep == 25 and j == 1:
                raise FilterError("lost positive-definiteness", t=3)
            return original(self, j, state, rng)

        monkeypatch.setattr(GibbsSampler, "sample_volatility", failing)
        with pytest.raises(SweepError) as info:
            run_chain(spec, var1_panel, 4)
        err = info.value
        assert (err.sweep, err.equation, err.block) == (25, 1, "sv")
        # sweeps 21..25 were stored before the failure
        assert err.partial.n_stored == 5
        assert "diagnostics" in err.partial.metadata


@pytest.mark.slow
class TestConstantReduction:
    def test_posterior_means_match_regression(self, constant_panel):
        panel, truth = constant_panel
        mcmc = McmcConfig(draws=1500, burn=500, seed=0)
        spec = ModelSpec.constant(M=2, P=1, mcmc=mcmc)
        draws = run_chain(spec, panel, 11)

        X, Y = build_lag_matrix(panel, 1)
        u = np.zeros_like(Y)
        for j in range(2):
            m = build_equation_regressors(j, X, u)
            coef, *_ = np.linalg.lstsq(m, Y[:, j], rcond=None)
            resid = Y[:, j] - m @ coef
            u[:, j] = resid
            cov = resid.var() * np.linalg.inv(m.T @ m)
            se = np.sqrt(np.diag(cov))
            posterior = draws.get("gamma", j).mean(axis=0)
            assert np.all(np.abs(posterior - coef) < 3 * se)


@pytest.fixture
def block_state():
    """Equation 0 of a delta = 1 system with every other block held fixed."""
    rng = np.random.default_rng(61)
    spec = ModelSpec(M=2, P=1, delta=1)
    T, v = 8, spec.v(0)
    X = rng.standard_normal((T, spec.K))
    Y = rng.standard_normal((T, 2))
    sampler = GibbsSampler(spec, X, Y, None, RngStream(0))
    state = sampler.init_state()
    eq = state.equations[0]
    eq.gamma = np.linspace(0.3, -0.2, v)
    eq.omega = np.linspace(0.2, 0.05, v)
    eq.h = np.log(np.linspace(0.5, 1.5, T))
    eq.tau = np.linspace(-1.0, 1.0, T)[:, None]
    eq.Lambda = np.linspace(0.5, -0.5, v)[:, None]
    eq.hs["constants"].c2 = np.linspace(4.0, 0.25, v)
    eq.hs["loadings"].c2 = np.full(v, 0.5)
    return sampler, state


class TestBlockConditionals:
    n = 20_000

    def test_tau_matches_dense_posterior(self, block_state):
        sampler, state = block_state
        eq = state.equations[0]
        m = sampler.X
        y = sampler.Y[:, 0] - m @ eq.gamma
        noise = (m * m) @ eq.omega + np.exp(eq.h)
        load = m @ eq.Lambda[:, 0]
        t = np.arange(1, sampler.T + 1)
        prior_cov = np.minimum.outer(t, t).astype(float)
        cov = np.linalg.inv(
            np.linalg.inv(prior_cov) + np.diag(load**2 / noise)
        )
        mean = cov @ (load * y / noise)

        rng = np.random.default_rng(62)
        draws = np.empty((self.n, sampler.T))
        for i in range(self.n):
            sampler.sample_z_block(0, state, rng)
            draws[i] = eq.tau[:, 0]
        se = np.sqrt(np.diag(cov) / self.n)
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 4 * se)
        assert_allclose(draws.var(axis=0), np.diag(cov), rtol=0.05)

    def test_loadings_and_constants_match_gls(self, block_state):
        sampler, state = block_state
        eq = state.equations[0]
        m, v = sampler.X, eq.v
        design = np.hstack([m, m * eq.tau])
        weight = 1.0 / ((m * m) @ eq.omega + np.exp(eq.h))
        prior_var = np.concatenate(
            [eq.hs["constants"].c2, eq.hs["loadings"].c2]
        )
        cov = np.linalg.inv(
            design.T @ (design * weight[:, None]) + np.diag(1.0 / prior_var)
        )
        mean = cov @ design.T @ (weight * sampler.Y[:, 0])

        rng = np.random.default_rng(63)
        draws = np.empty((self.n, 2 * v))
        for i in range(self.n):
            sampler.sample_loadings_and_constants(0, state, rng)
            draws[i] = np.concatenate([eq.gamma, eq.Lambda[:, 0]])
        se = np.sqrt(np.diag(cov) / self.n)
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 4 * se)
        assert_allclose(draws.var(axis=0), np.diag(cov), rtol=0.05)

    def test_tvp_matches_per_period_posterior(self, block_state):
        sampler, state = block_state
        eq = state.equations[0]
        m = sampler.X
        y = sampler.Y[:, 0] - m @ eq.gamma
        noise = np.exp(eq.h)
        prior_mean = eq.tau @ eq.Lambda.T

        means, variances = [], []
        for t in range(sampler.T):
            cov = np.linalg.inv(
                np.diag(1.0 / eq.omega) + np.outer(m[t], m[t]) / noise[t]
            )
            means.append(
                cov @ (prior_mean[t] / eq.omega + m[t] * y[t] / noise[t])
            )
            variances.append(np.diag(cov))
        means, variances = np.array(means), np.array(variances)

        rng = np.random.default_rng(64)
        draws = np.empty((self.n, sampler.T, eq.v))
        for i in range(self.n):
            sampler.sample_tvp_paths(0, state, rng)
            draws[i] = eq.gamma_tilde
        assert_allclose(eq.eta, eq.gamma_tilde - prior_mean)
        se = np.sqrt(variances / self.n)
        assert np.all(np.abs(draws.mean(axis=0) - means) < 4 * se)
        assert_allclose(draws.var(axis=0), variances, rtol=0.05)

    def test_state_variance_gig_parameters(self, block_state, monkeypatch):
        sampler, state = block_state
        eq = state.equations[0]
        eq.eta = np.arange(sampler.T * eq.v, dtype=float).reshape(
            sampler.T, eq.v
        )
        hs = eq.hs["sqrt_omega"]
        hs.c2 = np.linspace(2.0, 0.5, eq.v)
        hs.d2 = np.array([3.0])
        calls = []

        def recording(lam, chi, psi, rng):
            calls.append((lam, chi, psi))
            return 0.5

        monkeypatch.setattr("flexvar.gibbs.core.sample_gig", recording)
        sampler.sample_state_variances(0, state, np.random.default_rng(0))
        lam, chi, psi = map(np.array, zip(*calls))
        assert_allclose(lam, (1.0 - sampler.T) / 2.0)
        assert_allclose(chi, (eq.eta**2).sum(axis=0))
        assert_allclose(psi, 1.0 / (3.0 * hs.c2))
        assert_array_equal(eq.omega, 0.5)


@pytest.mark.slow
class TestRecovery:
    def test_observed_modifier_loading_recovered(self):
        mcmc = McmcConfig(draws=3000, burn=1000, seed=0)
        spec = ModelSpec(M=2, P=1, include_obs=True, R_r=1, mcmc=mcmc)
        truth = TruthRecord.constant(
            spec, gamma=[np.array([0.3, 0.1]), np.array([0.2, 0.4, 0.3])]
        )
        truth.equations[0].Lambda[0, 0] = 0.3
        panel, _ = simulate_dgp(spec, truth, 300, np.random.default_rng(71))
        draws = run_chain(spec, panel, 12)

        loading = draws.get("Lambda", 0)[:, 0, 0]
        lo, hi = np.quantile(loading, BANDS)
        assert lo < 0.3 < hi
        assert lo > 0.0
        unloaded = draws.get("Lambda", 1)[:, :, 0]
        lo, hi = np.quantile(unloaded, BANDS, axis=0)
        assert np.all((lo < 0.0) & (0.0 < hi))
        for j, eq in enumerate(truth.equations):
            lo, hi = np.quantile(draws.get("gamma", j), BANDS, axis=0)
            assert np.all((lo < eq.gamma) & (eq.gamma < hi))
