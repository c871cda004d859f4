import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from wqc_optim import classcheck
from wqc_optim.estimators import (AcceleratedGradient, ClassConstantEstimator, GradientDescent,
                                  QuadraticAveraging)
from wqc_optim.exceptions import InvalidInputError


def test_get_set_params_and_clone():
    est = AcceleratedGradient(L=10.0, mu=1.0, variant="agd2")
    assert est.get_params()["variant"] == "agd2"
    twin = clone(est).set_params(max_iter=5)
    assert twin.max_iter == 5 and est.max_iter == 1000


def test_optimizers_on_quadratic(quad_1_10):
    for est in (GradientDescent(L=10.0, gamma=1.0, mu=1.0, stepsize_rule="gamma_over_L",
                                max_iter=2000),
                AcceleratedGradient(L=10.0, gamma=1.0, mu=1.0, max_iter=300),
                QuadraticAveraging(L=10.0, gamma=1.0, mu=1.0, max_iter=300)):
        est.fit(quad_1_10)
        np.testing.assert_allclose(est.predict(), [0.0, 0.0], atol=1e-6)
        assert est.score(quad_1_10) <= 0 and est.score(quad_1_10) > -1e-10
        assert est.n_iter_ == len(est.trajectory_) - 1


def test_lower_bound_exposed(quad_1_10):
    est = QuadraticAveraging(L=10.0, mu=1.0).fit(quad_1_10, x0=[1.0, -2.0])
    assert est.lower_bound_ <= 1e-9


def test_not_fitted():
    with pytest.raises(NotFittedError):
        GradientDescent().predict()


def test_needs_oracle():
    with pytest.raises(InvalidInputError):
        GradientDescent().fit(np.zeros((3, 2)))


def test_bad_variant(quad_1_10):
    with pytest.raises(InvalidInputError):
        AcceleratedGradient(L=10.0, variant="agd3").fit(quad_1_10)


class TestClassConstantEstimator:
    def test_fit_transform(self, sinsq):
        X = classcheck.grid(-5, 5, 2001)
        est = ClassConstantEstimator(oracle=sinsq, L=8.0).fit(X)
        assert est.gamma_ == pytest.approx(0.496, abs=1e-3)
        assert est.n_features_in_ == 1
        slack = est.transform(X)
        assert slack.shape == (2001, 1)
        assert est.score(X) == 1.0

    def test_predict_flags_outside_points(self, sinsq):
        est = ClassConstantEstimator(oracle=sinsq, L=8.0).fit(classcheck.grid(0.5, 1.0, 50))
        wide = classcheck.grid(-5, 5, 1001)
        assert est.score(wide) < 1.0
        assert est.predict(wide).dtype == bool

    def test_shape_mismatch(self, sinsq):
        est = ClassConstantEstimator(oracle=sinsq).fit(classcheck.grid(-1, 1, 11))
        with pytest.raises(InvalidInputError):
            est.transform(np.zeros((3, 2)))
        with pytest.raises(InvalidInputError):
            ClassConstantEstimator(oracle=sinsq).fit(np.zeros((3, 2)))
