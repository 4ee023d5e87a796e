import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import solve_discrete_lyapunov

from flexvar.gibbs import run_chain
from flexvar.longrun import (
    companion_form,
    longrun_measure,
    longrun_paths,
    spectral_density_zero,
)
from flexvar.model import ModelSpec
from flexvar.model.errors import (
    NonStationaryError,
    NumericalError,
    SpecValidationError,
)


def random_stationary_var(rng, M, P):
    """Lag coefficients scaled until the companion radius is below 0.95."""
    beta = rng.standard_normal((M, M * P))
    while True:
        B = companion_form(beta, np.eye(M), M, P).B
        radius = np.abs(np.linalg.eigvals(B)).max()
        if radius < 0.95:
            return beta
        beta *= 0.9


class TestCompanion:
    def test_structure(self, rng):
        sys = companion_form(rng.standard_normal(27), np.eye(3), 3, 3)
        assert sys.B.shape == (9, 9)
        assert_array_equal(sys.B[3:], np.eye(6, 9))
        assert_array_equal(sys.J @ sys.J.T, np.eye(3))
        assert_array_equal(sys.Omega[:3, :3], np.eye(3))

    def test_one_lag_is_the_coefficient_matrix(self, rng):
        beta = rng.standard_normal((2, 2))
        assert_array_equal(companion_form(beta, np.eye(2), 2, 1).B, beta)

    def test_one_step_mean_matches_direct_recursion(self, rng):
        M, P = 2, 3
        beta = rng.standard_normal((M, M * P))
        state = rng.standard_normal(M * P)
        sys = companion_form(beta, np.eye(M), M, P)
        assert_allclose(sys.J @ sys.B @ state, beta @ state)

    def test_dimension_mismatch(self):
        with pytest.raises(SpecValidationError):
            companion_form(np.zeros(5), np.eye(2), 2, 1)


class TestSpectralDensity:
    def test_scalar_ar1(self):
        sys = companion_form(np.array([0.5]), np.array([[1.0]]), 1, 1)
        assert_allclose(spectral_density_zero(sys), [[4.0]], atol=1e-10)

    def test_white_noise(self, rng):
        A = rng.standard_normal((3, 3))
        Sigma = A @ A.T
        sys = companion_form(np.zeros(18), Sigma, 3, 2)
        assert_allclose(spectral_density_zero(sys), Sigma, atol=1e-12)

    def test_matches_autocovariance_sum(self, rng):
        M = 2
        beta = random_stationary_var(rng, M, 1)
        A = rng.standard_normal((M, M))
        Sigma = A @ A.T
        gamma0 = solve_discrete_lyapunov(beta, Sigma)
        total = gamma0.copy()
        power = np.eye(M)
        for _ in range(2000):
            power = power @ beta
            gamma_h = power @ gamma0
            total += gamma_h + gamma_h.T
        sys = companion_form(beta, Sigma, M, 1)
        assert_allclose(spectral_density_zero(sys), total, atol=1e-8)

    def test_symmetric_psd(self, rng):
        for _ in range(1000):
            beta = random_stationary_var(rng, 3, 2)
            A = rng.standard_normal((3, 3))
            Phi = spectral_density_zero(companion_form(beta, A @ A.T, 3, 2))
            assert_allclose(Phi, Phi.T, atol=1e-12)
            assert np.linalg.eigvalsh(Phi).min() >= -1e-10

    def test_nonstationary_reports_period(self):
        sys = companion_form(np.array([1.0]), np.array([[1.0]]), 1, 1)
        with pytest.raises(NonStationaryError) as info:
            spectral_density_zero(sys, t=17)
        assert info.value.t == 17


class TestLongrunMeasure:
    def test_ratio(self):
        phi = longrun_measure(np.array([[4.0, 2.0], [2.0, 4.0]]))
        assert_allclose(phi[0, 1], 0.5)
        assert_allclose(phi[1, 0], 0.5)
        assert np.isnan(phi[0, 0])

    def test_diagonal_gives_zero(self):
        phi = longrun_measure(np.diag([1.0, 2.0, 3.0]))
        off = ~np.eye(3, dtype=bool)
        assert_array_equal(phi[off], 0.0)

    def test_rescaling(self, rng):
        A = rng.standard_normal((3, 3))
        Phi = A @ A.T
        s = np.array([2.0, 1.0, 1.0])
        scaled = longrun_measure(Phi * np.outer(s, s))
        base = longrun_measure(Phi)
        assert_allclose(scaled[0, 1], 2.0 * base[0, 1])
        assert_allclose(scaled[1, 0], base[1, 0] / 2.0)

    def test_nonpositive_diagonal(self):
        with pytest.raises(NumericalError):
            longrun_measure(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestLongrunPaths:
    @pytest.fixture
    def flat_draws(self, var1_panel, short_chain):
        spec = ModelSpec.constant(M=2, P=1, mcmc=short_chain)
        draws = run_chain(spec, var1_panel, 31)
        for j in range(2):
            h = draws.arrays[f"h_{j}"]
            h[:] = h.mean(axis=1, keepdims=True)
            draws.arrays[f"gamma_{j}"][:, :2] *= 0.5
        return draws

    def test_constant_parameters_give_flat_paths(self, flat_draws):
        summary = longrun_paths(flat_draws)
        assert_allclose(summary.median[1:, 0, 1], summary.median[0, 0, 1])
        assert_array_equal(summary.n_dropped, 0)
        off = ~np.eye(2, dtype=bool)
        assert np.all(np.isnan(summary.median[:, ~off]))
        assert np.all(summary.q16[:, off] <= summary.median[:, off])
        assert np.all(summary.median[:, off] <= summary.q84[:, off] + 1e-15)

    def test_frame_rows(self, flat_draws):
        frame = longrun_paths(flat_draws).to_frame()
        assert len(frame) == flat_draws.T_eff * 2
        assert set(frame.columns) >= {"t", "median", "q16", "q84", "n_dropped"}

    def test_nonstationary_draws_dropped(self, flat_draws):
        flat_draws.arrays["gamma_0"][0, 0] = 1.5
        flat_draws.arrays["gamma_0"][0, 1] = 0.0
        summary = longrun_paths(flat_draws)
        assert_array_equal(summary.n_dropped, 1)
        assert summary.n_draws == 20
