import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wqc_optim.core import ClassParams, make_quadratic_objective
from wqc_optim.exceptions import (InvalidInputError, InvariantViolationError,
                                  ParameterRegimeError)
from wqc_optim.objectives import make_nonconvex_test_objective
from wqc_optim.wes import (AGD1, AGD2, WesVariant, agd_run, alpha_residual, initial_state,
                           lambda_envelope, phi_consistency_probe, solve_alpha,
                           accelerated_rate_envelope, wes_step, weak_estimate_residuals)


class TestAlpha:
    def test_golden_ratio(self):
        assert solve_alpha(1.0, 1.0, 0.0, 1.0) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-15)

    def test_half(self):
        assert solve_alpha(4.0, 1.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_fixed_point(self):
        assert solve_alpha(4.0, 0.5, 1.0, 1.0) == pytest.approx(0.25, abs=1e-15)

    def test_collapse_when_mu_equals_L(self):
        with pytest.raises(ParameterRegimeError):
            solve_alpha(1.0, 1.0, 1.0, 1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(0.05, 1.0), st.floats(0, 1), st.floats(1e-3, 1e3),
           st.sampled_from([1, 4]))
    def test_residual_tiny(self, L, gamma, mu_frac, gk, scale):
        mu = mu_frac * L * 0.99
        a = solve_alpha(L, gamma, mu, gk, scale)
        scale_terms = scale * L * a * a / gamma ** 2 + gk + a * mu
        assert 0 < a < 1
        assert abs(alpha_residual(a, L, gamma, mu, gk, scale)) <= 1e-12 * scale_terms


class TestStep:
    def test_first_alpha_hand_value(self):
        o = make_quadratic_objective(np.diag([1.0, 4.0]), [0.0, 0.0])
        p = ClassParams(L=4.0, gamma=1.0, mu=1.0)
        s1 = wes_step(o, p, initial_state(o, [1.0, 1.0], 4.0))
        assert s1.alpha == pytest.approx((-3 + math.sqrt(73)) / 8, abs=1e-14)
        assert s1.gamma_k == pytest.approx((1 - s1.alpha) * 4 + s1.alpha)

    def test_regime_error_at_mu_equal_L(self, quad1):
        with pytest.raises(ParameterRegimeError):
            wes_step(quad1, ClassParams(1.0, 1.0, 1.0), initial_state(quad1, [1.0], 1.0))

    def test_stationary_y_fixed(self, quad1):
        # x = minimiser: y = x, gradient zero, so x_next = y and v moves toward y.
        p = ClassParams(2.0, 1.0, 0.5)
        s0 = initial_state(quad1, [0.0], 2.0)
        s0.v = np.array([3.0])
        s1 = wes_step(quad1, p, s0)
        np.testing.assert_array_equal(s1.x, s1.y)
        lo, hi = sorted([float(s1.y[0]), 3.0])
        assert lo <= s1.v[0] <= hi

    def test_wrong_L_is_caught(self, quad_1_10):
        p = ClassParams(L=1.0, gamma=1.0, mu=0.0)
        with pytest.raises(InvariantViolationError) as info:
            agd_run(quad_1_10, p, [3.0, 3.0], max_iter=50)
        assert info.value.state is not None


class TestRun:
    def test_linear_envelope_diag_1_10(self, quad_1_10):
        t = agd_run(quad_1_10, quad_1_10.info.params, [3.0, 3.0], max_iter=200)
        ks = np.arange(len(t))
        env = (1 - math.sqrt(0.1)) ** ks * 10 * 18
        assert np.all(t.f_values <= env * (1 + 1e-9))

    def test_sublinear_quartic(self, quartic):
        t = agd_run(quartic, quartic.info.params, [1.0], max_iter=300)
        L = quartic.info.params.L
        ks = np.arange(len(t))
        assert np.all(t.f_values <= 4 * L / (2 + ks) ** 2 * (1 + 1e-9))

    def test_start_at_minimizer(self, quad_1_10):
        t = agd_run(quad_1_10, quad_1_10.info.params, [0.0, 0.0], max_iter=10)
        assert len(t) == 1

    def test_certificate_and_weak_estimate(self, sinsq):
        p = sinsq.info.params
        t = agd_run(sinsq, p, [3.0], max_iter=100)
        for r in t:
            assert r.f <= r.extras["phi_star"] + 1e-9 * (1 + abs(r.extras["phi_star"]))
        assert np.max(weak_estimate_residuals(t, 0.0, [0.0])) <= 1e-9

    def test_agd2_equals_agd1_at_half_gamma(self, sinsq):
        p = sinsq.info.wq_params
        a = agd_run(sinsq, p, [4.0], max_iter=100, variant=AGD2)
        b = agd_run(sinsq, ClassParams.for_inequality(p.L, p.gamma / 2, p.mu), [4.0],
                    max_iter=100, variant=WesVariant(1.0, "exact"))
        assert len(a) == len(b)
        assert max(np.max(np.abs(ra.x - rb.x)) for ra, rb in zip(a, b)) <= 1e-12

    def test_bad_variant(self):
        with pytest.raises(InvalidInputError):
            WesVariant(2.0, "exact")
        with pytest.raises(InvalidInputError):
            WesVariant(1.0, "random")


class TestLambda:
    def test_second_branch(self):
        assert lambda_envelope(ClassParams(9.0, 1.0), 9.0, 2) == pytest.approx(0.25)

    def test_k_zero(self):
        assert lambda_envelope(ClassParams(5.0, 0.7), 5.0, 0) == 1.0

    def test_min_of_branches(self):
        val = lambda_envelope(ClassParams(10.0, 1.0, 1.0), 10.0, 1)
        assert val == pytest.approx(40 / (3 * math.sqrt(10)) ** 2)
        assert val < 1 - math.sqrt(0.1)

    def test_gamma0_precondition(self):
        with pytest.raises(InvalidInputError):
            lambda_envelope(ClassParams(10.0, 0.5, 4.0), 1.0, 3)

    def test_run_satisfies_bound(self, quad_1_10):
        p = quad_1_10.info.params
        t = agd_run(quad_1_10, p, [3.0, 3.0], max_iter=300)
        for r in t:
            assert r.extras["lambda"] <= lambda_envelope(p, t.meta["gamma0"], r.k) * (1 + 1e-9)

    def test_accelerated_rate_envelope_mu_zero(self):
        p = ClassParams(12.0, 0.5)
        assert accelerated_rate_envelope(p, 4, 2.0) == pytest.approx(4 / 16 * 12 * 2)


class TestProbe:
    def test_empty_history(self):
        assert phi_consistency_probe([], 3.0, 1.0, [0.0, 0.0], 1.0, 0.0,
                                     [[0.0, 0.0], [1.0, 0.0]]) == 0.0

    def test_quadratic_run(self, quad1):
        p = ClassParams(4.0, 1.0, 0.5)
        t = agd_run(quad1, p, [4.0], max_iter=10, record=True)
        probes = np.linspace(-5, 5, 20).reshape(-1, 1)
        err = phi_consistency_probe(t.meta["history"], t.meta["gamma0"], t.meta["phi0_star"],
                                    t.meta["v0"], 1.0, 0.5, probes)
        phis = [r.extras["phi_star"] + 0.5 * r.extras["gamma_k"] * (probes - r.extras["v"]) ** 2
                for r in t]
        assert err <= 1e-8 * max(np.max(np.abs(v)) for v in phis)

    def test_mu_zero_gamma_recursion(self, quartic):
        t = agd_run(quartic, quartic.info.params, [1.0], max_iter=30)
        for prev, rec in zip(t.records[:-1], t.records[1:]):
            assert rec.extras["gamma_k"] == (1 - rec.extras["alpha"]) * prev.extras["gamma_k"]


@pytest.mark.parametrize("variant", [AGD1, AGD2])
def test_deterministic(variant):
    o = make_nonconvex_test_objective("sinsq", 2)
    p = o.info.wq_params
    a = agd_run(o, p, [3.0, -2.0], max_iter=50, variant=variant, record_time=False)
    b = agd_run(o.clone(), p, [3.0, -2.0], max_iter=50, variant=variant, record_time=False)
    assert a.to_csv() == b.to_csv()
