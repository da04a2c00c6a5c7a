from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from haarbellman.martingale_lab import (
    InvalidTreeError,
    haar_synthesis,
    random_ds_pair,
    subordination_scale,
    verify_haar_unconditionality,
    verify_subordination_bound,
)
from haarbellman.martingale_lab.haar import lp_norm
from haarbellman.special_functions import DomainError, ExponentPair, b_special, cost_constant


class TestTrees:
    @pytest.mark.parametrize("mode", ["mixed", "sign", "contraction"])
    @pytest.mark.parametrize("branching", [2, 3])
    def test_generated_trees_are_valid(self, mode, branching):
        for seed in range(5):
            t = random_ds_pair(seed, 4, branching, 2, mode)
            t.check()
            assert t.depth == 4 and t.dimension == 2
            assert t.leaf_probabilities().sum() == pytest.approx(1.0, abs=1e-12)

    def test_sign_mode_has_equal_increments(self):
        t = random_ds_pair(7, 3, 2, 3, "sign")
        for j in range(1, 4):
            df = np.linalg.norm(t.f_levels[j] - np.repeat(t.f_levels[j - 1], 2, axis=0), axis=1)
            dg = np.linalg.norm(t.g_levels[j] - np.repeat(t.g_levels[j - 1], 2, axis=0), axis=1)
            np.testing.assert_allclose(dg, df, rtol=1e-12)

    def test_deterministic(self):
        a, b = random_ds_pair(11, 3, 3, 2), random_ds_pair(11, 3, 3, 2)
        for x, y in zip(a.f_levels + a.g_levels, b.f_levels + b.g_levels):
            np.testing.assert_array_equal(x, y)

    def test_check_detects_violations(self):
        t = random_ds_pair(1, 2, 2, 1, "sign")
        g = list(t.g_levels)
        g[2] = g[2] * 3.0
        with pytest.raises(InvalidTreeError):
            dataclasses.replace(t, g_levels=tuple(g)).check()
        probs = list(t.cond_probs)
        probs[1] = probs[1] * 0.5
        with pytest.raises(InvalidTreeError):
            dataclasses.replace(t, cond_probs=tuple(probs)).check()

    def test_depth_zero(self):
        e = ExponentPair.from_p(1.5)
        t = random_ds_pair(3, 0, 2, 2)
        t.check()
        x, y = t.f_levels[0][0], t.g_levels[0][0]
        gamma = 0.5 * e.gamma_max
        expected = b_special(x, y, gamma, e) - (np.linalg.norm(y) ** e.p - cost_constant(gamma, e) * np.linalg.norm(x) ** e.p)
        assert verify_subordination_bound(t, gamma, e) == pytest.approx(expected, rel=1e-13)
        assert expected >= 0

    @pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
    def test_auxiliary_estimate(self, p):
        e = ExponentPair.from_p(p)
        rng = np.random.default_rng(5)
        for seed in range(40):
            t = random_ds_pair(seed, int(rng.integers(1, 6)), int(rng.integers(2, 4)), int(rng.integers(1, 4)))
            gamma = rng.uniform(0.05, 1.0) * e.gamma_max
            assert verify_subordination_bound(t, gamma, e) >= -1e-10 * subordination_scale(t, gamma, e)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            random_ds_pair(0, 2, 4, 1)
        with pytest.raises(DomainError):
            random_ds_pair(0, 2, 2, 1, "bogus")
        t = random_ds_pair(0, 2, 2, 1)
        with pytest.raises(DomainError):
            verify_subordination_bound(t, 0.5, ExponentPair.from_p(3.0))
        with pytest.raises(DomainError):
            verify_subordination_bound(t, 5.0, ExponentPair.from_p(1.5))


class TestHaar:
    def test_synthesis_small(self):
        np.testing.assert_array_equal(haar_synthesis([1, 2, 3, 4])[:, 0], [6, 0, 3, -5])
        np.testing.assert_array_equal(haar_synthesis([2.0])[:, 0], [2.0])

    def test_haar_functions_are_orthogonal(self):
        n = 16
        basis = np.stack([haar_synthesis(np.eye(n)[k])[:, 0] for k in range(n)])
        gram = basis @ basis.T / n
        np.testing.assert_allclose(gram, np.diag(np.diag(gram)), atol=1e-15)

    def test_trivial_signs(self):
        e = ExponentPair.from_p(1.5)
        a = np.random.default_rng(0).normal(size=(10, 2))
        assert verify_haar_unconditionality(a, np.ones(10), e) == pytest.approx(1.0, rel=1e-14)
        assert verify_haar_unconditionality(a, -np.ones(10), e) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("p", [1.3, 2.0, 4.0])
    def test_ratio_bounded(self, p):
        e = ExponentPair.from_p(p)
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(2, 64))
            a = rng.normal(size=n)
            s = rng.choice([-1.0, 1.0], size=n)
            assert verify_haar_unconditionality(a, s, e) <= (e.p_star - 1.0) * (1 + 1e-10)

    def test_single_coefficient(self):
        e = ExponentPair.from_p(3.0)
        a = np.zeros(9)
        a[5] = 2.5
        s = np.ones(9)
        s[5] = -1.0
        assert verify_haar_unconditionality(a, s, e) == 1.0

    def test_p2_is_isometric(self):
        a = np.random.default_rng(2).normal(size=(20, 3))
        s = np.where(np.arange(20) % 3 == 0, -1.0, 1.0)
        assert verify_haar_unconditionality(a, s, ExponentPair.from_p(2.0)) == pytest.approx(1.0, rel=1e-13)

    def test_lp_norm(self):
        assert lp_norm(np.array([[3.0, 4.0], [0.0, 0.0]]), 2.0) == pytest.approx(np.sqrt(12.5))

    def test_rejects(self):
        e = ExponentPair.from_p(1.5)
        with pytest.raises(DomainError):
            verify_haar_unconditionality([1.0, 2.0], [1.0, 0.5], e)
        with pytest.raises(DomainError):
            verify_haar_unconditionality([0.0, 0.0], [1.0, -1.0], e)
        with pytest.raises(DomainError):
            haar_synthesis(np.ones(5000))
