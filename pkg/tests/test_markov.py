import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from flexvar.model.errors import SpecValidationError
from flexvar.states import (
    SwitchProblem,
    kim_sample_path,
    update_transition_probs,
)
from flexvar.states.markov import (
    smoothed_probabilities,
    stationary_distribution,
    transition_counts,
)


def enumerate_paths(problem: SwitchProblem):
    """All 2^T paths with their normalized posterior probabilities."""
    paths = np.array(list(itertools.product((0, 1), repeat=problem.T)))
    t = np.arange(problem.T)
    logp = np.log(problem.init[paths[:, 0]])
    logp = logp + problem.loglik[t, paths].sum(axis=1)
    logp = logp + np.log(problem.P[paths[:, :-1], paths[:, 1:]]).sum(axis=1)
    prob = np.exp(logp - logp.max())
    return paths, prob / prob.sum()


def random_problem(rng, T=8) -> SwitchProblem:
    p00, p11 = rng.uniform(0.6, 0.95, 2)
    return SwitchProblem(
        loglik=rng.normal(0.0, 1.5, (T, 2)),
        P=np.array([[p00, 1.0 - p00], [1.0 - p11, p11]]),
    )


class TestHamiltonKim:
    def test_smoothing_matches_enumeration(self, rng):
        for _ in range(5):
            problem = random_problem(rng)
            paths, prob = enumerate_paths(problem)
            expected = prob @ paths
            assert_allclose(
                smoothed_probabilities(problem)[:, 1], expected, atol=1e-10
            )

    def test_path_frequencies_match_enumeration(self):
        rng = np.random.default_rng(41)
        problem = random_problem(rng)
        paths, prob = enumerate_paths(problem)
        n = 20_000
        codes = np.zeros(2**problem.T)
        weights = 2 ** np.arange(problem.T - 1, -1, -1)
        for _ in range(n):
            codes[kim_sample_path(problem, rng) @ weights] += 1
        freq = codes / n
        se = np.sqrt(prob * (1.0 - prob) / n)
        top = np.argsort(prob)[-10:]
        assert np.all(np.abs(freq[top] - prob[top]) < 4 * se[top] + 1e-12)

    def test_swapping_labels_mirrors_paths(self):
        rng = np.random.default_rng(43)
        problem = random_problem(rng)
        swapped = SwitchProblem(
            loglik=problem.loglik[:, ::-1], P=problem.P[::-1, ::-1]
        )
        assert_allclose(
            smoothed_probabilities(swapped),
            smoothed_probabilities(problem)[:, ::-1],
            atol=1e-12,
        )

        n = 20_000
        draws = np.array([kim_sample_path(problem, rng) for _ in range(n)])
        mirrored = 1 - np.array(
            [kim_sample_path(swapped, rng) for _ in range(n)]
        )
        # marginals and adjacent pairs agree in distribution
        stay = draws[:, 1:] == draws[:, :-1]
        stay_m = mirrored[:, 1:] == mirrored[:, :-1]
        for a, b in ((draws, mirrored), (stay, stay_m)):
            pa, pb = a.mean(axis=0), b.mean(axis=0)
            se = np.sqrt((pa * (1 - pa) + pb * (1 - pb)) / n)
            assert np.all(np.abs(pa - pb) < 4 * se + 1e-12)

    def test_degenerate_likelihood_pins_path(self, rng):
        loglik = np.zeros((5, 2))
        loglik[:, 0] = -1e6
        problem = SwitchProblem(loglik, np.array([[0.9, 0.1], [0.2, 0.8]]))
        assert_array_equal(kim_sample_path(problem, rng), np.ones(5))

    def test_rejects_bad_transition_matrix(self):
        with pytest.raises(SpecValidationError):
            SwitchProblem(np.zeros((3, 2)), np.array([[0.5, 0.4], [0, 1]]))


class TestTransitionUpdate:
    def test_counts(self):
        counts = transition_counts(np.array([0, 0, 1, 1, 1, 0]))
        assert_array_equal(counts, [[1, 1], [1, 2]])

    def test_posterior_means(self):
        rng = np.random.default_rng(42)
        path = np.array([0, 0, 0, 1, 1, 0, 0, 1])
        priors = np.array([[10.0, 1.0], [1.0, 10.0]])
        draws = np.array(
            [update_transition_probs(path, priors, rng) for _ in range(20_000)]
        )
        # n00 = 3, n01 = 2, n10 = 1, n11 = 1
        assert_allclose(draws[:, 0, 0].mean(), 13.0 / 16.0, atol=0.005)
        assert_allclose(draws[:, 1, 1].mean(), 2.0 / 13.0, atol=0.005)
        assert_allclose(draws.sum(axis=2), 1.0)

    def test_short_path(self, rng):
        with pytest.raises(SpecValidationError):
            update_transition_probs(np.array([1]), np.ones((2, 2)), rng)


def test_stationary_distribution():
    P = np.array([[0.9, 0.1], [0.3, 0.7]])
    pi = stationary_distribution(P)
    assert_allclose(pi @ P, pi)
    assert_allclose(pi, [0.75, 0.25])
