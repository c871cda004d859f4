import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wqc_optim.core import (CSV_HEADER, ClassParams, ObjectiveOracle, Trajectory,
                            TrajectoryRecord, finite_difference_gradient,
                            make_quadratic_objective)
from wqc_optim.exceptions import InvalidInputError
from wqc_optim.objectives import (certification_samples, default_x0,
                                  make_nonconvex_test_objective)


class TestQuadratic:
    def test_scalar_value_and_gradient(self, quad1):
        assert quad1.eval([2.0]) == 2.0
        np.testing.assert_array_equal(quad1.grad([2.0]), [2.0])

    def test_identity_minimum(self):
        q = make_quadratic_objective(np.eye(3), np.zeros(3))
        assert q(np.zeros(3)) == 0.0
        np.testing.assert_array_equal(q.grad(np.zeros(3)), np.zeros(3))

    def test_shifted_minimizer(self):
        q = make_quadratic_objective(np.diag([1.0, 10.0]), [1.0, -1.0])
        assert q([1.0, 0.0]) == pytest.approx(5.0, abs=1e-15)

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidInputError, match="semidefinite"):
            make_quadratic_objective(np.diag([1.0, -1.0]), [0.0, 0.0])

    def test_rejects_asymmetric_and_mismatched(self):
        with pytest.raises(InvalidInputError):
            make_quadratic_objective([[1.0, 2.0], [0.0, 1.0]], [0.0, 0.0])
        with pytest.raises(InvalidInputError):
            make_quadratic_objective(np.eye(2), [0.0])


class TestOracle:
    def test_counters_and_clone(self, quad1):
        quad1.eval([1.0])
        quad1.grad([1.0])
        quad1.grad([1.0])
        assert (quad1.eval_count, quad1.grad_count) == (1, 2)
        twin = quad1.clone()
        assert (twin.eval_count, twin.grad_count) == (0, 0)
        assert twin.eval([3.0]) == quad1.eval([3.0])
        quad1.reset_counters()
        assert quad1.eval_count == 0

    def test_shape_checks(self, quad1):
        with pytest.raises(InvalidInputError):
            quad1.eval([1.0, 2.0])
        bad = ObjectiveOracle(lambda x: 0.0, lambda x: np.zeros(2), 1)
        with pytest.raises(InvalidInputError, match="gradient has shape"):
            bad.grad([0.0])

    @pytest.mark.parametrize("dim", [0, -1, 1.5, True])
    def test_bad_dimension(self, dim):
        with pytest.raises(InvalidInputError):
            ObjectiveOracle(lambda x: 0.0, lambda x: x, dim)


class TestClassParams:
    def test_valid_and_roundtrip(self):
        p = ClassParams(L=10.0, gamma=0.5, mu=1.0, tau=0.25)
        assert ClassParams.from_dict(p.to_dict()) == p

    @pytest.mark.parametrize("kwargs", [
        dict(L=0.0, gamma=1.0), dict(L=1.0, gamma=0.0), dict(L=1.0, gamma=1.5),
        dict(L=1.0, gamma=1.0, mu=-1.0), dict(L=1.0, gamma=1.0, mu=2.0),
        dict(L=math.nan, gamma=1.0), dict(L=1.0, gamma=1.0, tau=0.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidInputError):
            ClassParams(**kwargs)

    def test_inequality_constants_may_exceed_L(self):
        p = ClassParams.for_inequality(1.0, 0.5, 20.0)
        assert p.mu == 20.0

    def test_unknown_keys(self):
        with pytest.raises(InvalidInputError, match="unknown"):
            ClassParams.from_dict({"L": 1.0, "gamma": 1.0, "kappa": 3})


class TestTrajectory:
    def test_order_enforced(self):
        t = Trajectory()
        t.append(TrajectoryRecord(0, np.zeros(1), 1.0, 0.0))
        with pytest.raises(InvalidInputError):
            t.append(TrajectoryRecord(2, np.zeros(1), 1.0, 0.0))

    def test_csv(self, tmp_path):
        t = Trajectory([TrajectoryRecord(0, np.zeros(1), 0.1, 2.0, envelope=1.0),
                        TrajectoryRecord(1, np.zeros(1), 1e-300, 0.0, wall_nanos=17)])
        text = t.to_csv(tmp_path / "t.csv")
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[1] == "0,0.1,2.0,1.0,0"
        assert lines[2] == "1,1e-300,0.0,,17"
        assert (tmp_path / "t.csv").read_text() == text
        assert len(lines) == len(t) + 1


class TestFiniteDifferences:
    def test_quadratic(self, quad1):
        np.testing.assert_allclose(finite_difference_gradient(quad1, [2.0]), [2.0], atol=1e-8)

    def test_sinsq_analytic(self, sinsq):
        fd = finite_difference_gradient(sinsq, [1.0], h=1e-5)
        assert fd[0] == pytest.approx(2.0 + 3.0 * math.sin(2.0), abs=1e-6)

    @pytest.mark.parametrize("name", ["quad", "sinsq", "flat_quartic"])
    def test_stationary_at_minimizer(self, name):
        o = make_nonconvex_test_objective(name)
        assert np.linalg.norm(finite_difference_gradient(o, o.known_minimizer)) <= 1e-6

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-4.0, 4.0), min_size=3, max_size=3))
    def test_matches_gradient_everywhere(self, x):
        o = make_nonconvex_test_objective("sinsq", 3)
        np.testing.assert_allclose(finite_difference_gradient(o, x), o.grad(x), atol=1e-6)


class TestCatalogue:
    def test_sinsq_values(self, sinsq):
        assert sinsq([math.pi]) == pytest.approx(math.pi ** 2, rel=1e-14)
        np.testing.assert_array_equal(sinsq.grad([0.0]), [0.0])
        assert sinsq.known_minimum == 0.0

    def test_sinsq_certified_gamma_is_grid_minimum(self, sinsq):
        from wqc_optim import classcheck
        xs = classcheck.grid(-5.0, 5.0, 10_000)[:, 0]
        xs = xs[np.abs(xs) > 0]
        f = xs ** 2 + 3 * np.sin(xs) ** 2
        ratio = (2 * xs + 3 * np.sin(2 * xs)) * xs / f
        assert sinsq.info.params.gamma == pytest.approx(min(1.0, ratio.min()), rel=1e-12)
        assert 0.0 < sinsq.info.params.gamma < 1.0

    def test_frozen_catalogue_constants(self, sinsq, quartic):
        # Regression values produced by the certification grids.
        assert sinsq.info.params.gamma == pytest.approx(0.4960900837727361, rel=1e-12)
        assert sinsq.info.wq_params.mu == pytest.approx(2.0, rel=1e-7)
        assert sinsq.info.params.L == 8.0
        assert quartic.info.params.L == 12.0
        assert quartic.info.params.gamma == 1.0
        assert quartic.info.params.mu == 0.0

    def test_default_x0(self, sinsq, quartic):
        np.testing.assert_array_equal(default_x0(sinsq), [3.0])
        np.testing.assert_allclose(default_x0(make_nonconvex_test_objective("flat_quartic", 4)),
                                   [0.5] * 4)
        np.testing.assert_array_equal(default_x0(make_nonconvex_test_objective("quad")), [3, 3])

    def test_certification_samples_stay_in_ball(self):
        o = make_nonconvex_test_objective("flat_quartic", 2)
        pts = certification_samples(o)
        assert np.all(np.sum(pts ** 2, axis=1) <= 1.0 + 1e-12)
        assert len(pts) > 500

    def test_unknown_objective(self):
        with pytest.raises(InvalidInputError, match="unknown objective"):
            make_nonconvex_test_objective("rosenbrock")
