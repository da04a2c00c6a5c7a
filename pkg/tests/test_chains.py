from __future__ import annotations

import numpy as np
import pytest

from haarbellman.martingale_lab.chains import (
    ChainParams,
    axis_step,
    case1_epsilon,
    extremal_chain,
    interior_step,
    limit_Ef_p_case2,
    simulate_chain_mc,
    tail_ratio,
)
from haarbellman.special_functions import DomainError, ExponentPair, b_special, cost_constant


class TestParams:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(p=2.5, gamma=0.5, Y=0.1, delta=1e-3),
            dict(p=1.5, gamma=2.0, Y=0.1, delta=1e-3),
            dict(p=1.5, gamma=0.5, Y=-0.1, delta=1e-3),
            dict(p=1.5, gamma=0.5, Y=0.1, delta=0.0),
            dict(p=1.5, gamma=0.5, Y=0.1, delta=1e-3, eps=-1.0),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            ChainParams(**kw)

    def test_case2_needs_Y_below_gamma(self):
        with pytest.raises(DomainError):
            extremal_chain(ChainParams(1.5, 0.5, 0.6, 1e-3))

    def test_delta_too_large(self):
        with pytest.raises(DomainError, match="delta too large"):
            extremal_chain(ChainParams(1.9, 1.1, 0.2, 5.0))


class TestSteps:
    def test_axis_step_martingale(self):
        xs, ys, pr = axis_step(2.0, 0.7, 0.01)
        assert pr.sum() == pytest.approx(1.0, abs=1e-15)
        assert pr @ xs == pytest.approx(2.0, rel=1e-14)
        assert pr @ ys == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(np.abs(ys), np.abs(xs - 2.0), rtol=1e-14)

    def test_interior_step_martingale(self):
        x, y, g = 1.3, -0.4, 0.8
        (lx, ly), (ax, ay), pl = interior_step(x, y, g)
        assert pl * lx + (1 - pl) * ax == pytest.approx(x, rel=1e-14)
        assert pl * ly + (1 - pl) * ay == pytest.approx(y, rel=1e-14)
        assert abs(ly) == pytest.approx(g * lx, rel=1e-14)
        assert abs(ly - y) == pytest.approx(abs(lx - x), rel=1e-13)
        assert abs(ay - y) == pytest.approx(abs(ax - x), rel=1e-13)

    def test_tail_ratio_below_one(self):
        assert 0 < tail_ratio(0.5, 1e-3) < 1


class TestCase2:
    # atoms are truncated at small mass, so compare only where the tail decays fast
    @pytest.mark.parametrize("p,gamma,Y", [(1.5, 0.1, 0.05), (1.2, 0.15, 0.1), (1.9, 0.1, 0.0)])
    def test_exact_statistics(self, p, gamma, Y):
        st = extremal_chain(ChainParams(p, gamma, Y, 1e-2))
        assert st.Ef_mean == pytest.approx(1.0, rel=1e-12)
        assert st.Eg_mean == Y
        assert st.masses.sum() == pytest.approx(1.0, abs=1e-13)
        assert st.Eg_p == pytest.approx(gamma**p * st.Ef_p, rel=1e-14)
        # materialised atoms reproduce the closed-form moments
        assert st.masses @ st.f_values**p == pytest.approx(st.Ef_p, rel=1e-11)
        assert st.masses @ st.f_values == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("p,gamma,Y", [(1.5, 0.6, 0.2), (1.3, 2.0, 0.5)])
    def test_signed_power(self, p, gamma, Y):
        st = extremal_chain(ChainParams(p, gamma, Y, 1e-3), materialize=False)
        assert st.Eg_signed_power == pytest.approx(Y * (gamma * (1 + Y) / (gamma + 1)) ** (p - 2), rel=1e-13)

    def test_limit_and_monotone_error(self):
        p, gamma, Y = 1.5, 1.2, 0.4
        lim = limit_Ef_p_case2(p, gamma, Y)
        errs = [abs(extremal_chain(ChainParams(p, gamma, Y, d), materialize=False).Ef_p - lim) for d in (1e-2, 1e-3, 1e-4, 1e-5)]
        assert errs[-1] < 1e-4 * lim
        assert all(a > b for a, b in zip(errs, errs[1:]))

    @pytest.mark.parametrize("p,gamma,Y", [(1.5, 1.2, 0.4), (1.2, 4.0, 1.0), (1.8, 0.5, 0.1)])
    def test_limit_attains_auxiliary_bound(self, p, gamma, Y):
        e = ExponentPair.from_p(p)
        Ef_p = limit_Ef_p_case2(p, gamma, Y)
        lhs = gamma**p * Ef_p - cost_constant(gamma, e) * Ef_p
        b = b_special(np.array([1.0]), np.array([Y]), gamma, e)
        assert lhs <= b + 1e-10
        assert lhs == pytest.approx(b, rel=1e-10)


    @pytest.mark.parametrize("p,gamma,Y", [(1.5, 1.2, 0.4), (1.2, 4.0, 1.0), (1.8, 0.5, 0.1)])
    @pytest.mark.parametrize("delta", [1e-2, 1e-3])
    def test_exact_chain_obeys_auxiliary_bound(self, p, gamma, Y, delta):
        e = ExponentPair.from_p(p)
        st = extremal_chain(ChainParams(p, gamma, Y, delta), materialize=False)
        b = b_special(np.array([1.0]), np.array([Y]), gamma, e)
        assert st.Eg_p - cost_constant(gamma, e) * st.Ef_p <= b + 1e-10


class TestCase1:
    def test_first_step(self):
        p, gamma, Y = 1.5, 0.1, 0.5
        eps = case1_epsilon(p, gamma, Y, 1.3)
        st = extremal_chain(ChainParams(p, gamma, Y, 1e-3, eps))
        assert st.extra["absorbing_mass"] == pytest.approx(Y / (Y + eps), rel=1e-15)
        assert st.Ef_mean == pytest.approx(1.0, rel=1e-12)
        assert st.masses.sum() == pytest.approx(1.0, abs=1e-13)
        assert st.masses @ st.f_values**p == pytest.approx(st.Ef_p, rel=1e-11)
        assert st.masses @ st.g_abs**p == pytest.approx(st.Eg_p, rel=1e-9)
        assert st.Eg_signed_power == pytest.approx(Y / (Y + eps) * (Y + eps) ** (p - 1), rel=1e-14)

    def test_small_delta_limit(self):
        p, gamma, Y = 1.5, 1.9, 3.0
        eps = case1_epsilon(p, gamma, Y, 1.5)
        lim = Y / (Y + eps) * (1 - eps) ** p + eps / (Y + eps) * (1 + Y) ** p / (
            (1 - (p - 1) * gamma) * (1 + gamma) ** (p - 1)
        )
        errs = [abs(extremal_chain(ChainParams(p, gamma, Y, d, eps), materialize=False).Ef_p - lim) for d in (1e-3, 1e-4, 1e-5)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[-1] < 1e-3 * lim

    def test_rejects_non_absorbing(self):
        with pytest.raises(DomainError):
            extremal_chain(ChainParams(1.5, 1.2, 0.1, 1e-3, 0.01))


class TestMonteCarlo:
    def test_matches_exact_and_is_deterministic(self):
        cp = ChainParams(1.5, 0.4, 0.1, 0.05)
        a = simulate_chain_mc(cp, 20000, seed=3)
        b = simulate_chain_mc(cp, 20000, seed=3)
        assert a.as_dict() == b.as_dict()
        ex = extremal_chain(cp, materialize=False)
        assert a.capped == 0
        assert a.max_edge_defect < 1e-12
        assert abs(a.Ef_p.mean - ex.Ef_p) < 5 * a.Ef_p.stderr
        assert abs(a.Ef_mean.mean - 1.0) < 5 * a.Ef_mean.stderr

    def test_rejects_no_paths(self):
        with pytest.raises(DomainError):
            simulate_chain_mc(ChainParams(1.5, 0.4, 0.1, 0.05), 0, seed=0)
