"""scikit-learn style wrappers over the functional API.

The optimisers take an :class:`~wqc_optim.core.ObjectiveOracle` in ``fit``
instead of a data matrix; hyperparameters live in the constructor so
``get_params``, ``set_params`` and ``sklearn.base.clone`` work as usual.
:class:`ClassConstantEstimator` is data-shaped: ``X`` holds sample points.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import classcheck
from .core import ClassParams, ObjectiveOracle
from .exceptions import InvalidInputError
from .gd import GdConfig, gd_run
from .oqa import oqa_run
from .wes import AGD1, AGD2, agd_run


def _oracle(oracle):
    if not isinstance(oracle, ObjectiveOracle):
        raise InvalidInputError(f"expected an ObjectiveOracle, got {type(oracle).__name__}")
    return oracle


class _OptimizerBase(BaseEstimator):
    def _params(self):
        return ClassParams(L=self.L, gamma=self.gamma, mu=self.mu)

    def _finish(self, oracle, traj):
        self.trajectory_ = traj
        self.x_ = traj.final.x.copy()
        self.f_ = traj.final.f
        self.n_iter_ = traj.final.k
        self.f_star_ = oracle.known_minimum
        return self

    def _start(self, oracle, x0):
        if x0 is None:
            info = oracle.info
            if getattr(info, "default_x0", None) is None:
                raise InvalidInputError("x0 is required for oracles outside the catalogue")
            x0 = info.default_x0
        return np.asarray(x0, dtype=np.float64)

    def predict(self, X=None):
        """The minimiser found by ``fit``."""
        check_is_fitted(self, "x_")
        return self.x_.copy()

    def score(self, oracle, x0=None):
        """Negative suboptimality ``-(f(x) - f*)`` at the fitted point (higher is better)."""
        check_is_fitted(self, "x_")
        oracle = _oracle(oracle)
        if oracle.known_minimum is None:
            raise InvalidInputError("score needs an oracle with a known minimum")
        return -(oracle.eval(self.x_) - oracle.known_minimum)


class GradientDescent(_OptimizerBase):
    """Gradient descent with a class-specific stepsize rule."""

    def __init__(self, L=1.0, gamma=1.0, mu=0.0, stepsize_rule="one_over_L", max_iter=1000,
                 grad_tol=0.0, safeguard=False):
        self.L = L
        self.gamma = gamma
        self.mu = mu
        self.stepsize_rule = stepsize_rule
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.safeguard = safeguard

    def fit(self, oracle, x0=None):
        oracle = _oracle(oracle)
        traj = gd_run(oracle, self._params(), self._start(oracle, x0),
                      GdConfig(self.stepsize_rule, self.max_iter, self.grad_tol),
                      safeguard=self.safeguard, record_time=False)
        return self._finish(oracle, traj)


class AcceleratedGradient(_OptimizerBase):
    """Weak-estimate-sequence acceleration; ``variant`` is ``"agd1"`` or ``"agd2"``."""

    def __init__(self, L=1.0, gamma=1.0, mu=0.0, variant="agd1", gamma0=None, max_iter=1000,
                 grad_tol=0.0, safeguard=False):
        self.L = L
        self.gamma = gamma
        self.mu = mu
        self.variant = variant
        self.gamma0 = gamma0
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.safeguard = safeguard

    def fit(self, oracle, x0=None):
        oracle = _oracle(oracle)
        variants = {"agd1": AGD1, "agd2": AGD2}
        if self.variant not in variants:
            raise InvalidInputError(f"variant must be 'agd1' or 'agd2', got {self.variant!r}")
        traj = agd_run(oracle, self._params(), self._start(oracle, x0), self.gamma0,
                       self.max_iter, self.grad_tol, variants[self.variant],
                       safeguard=self.safeguard, record_time=False)
        return self._finish(oracle, traj)


class QuadraticAveraging(_OptimizerBase):
    """Optimal quadratic averaging; exposes the final lower bound as ``lower_bound_``."""

    def __init__(self, L=1.0, gamma=1.0, mu=1.0, max_iter=1000, gap_tol=0.0):
        self.L = L
        self.gamma = gamma
        self.mu = mu
        self.max_iter = max_iter
        self.gap_tol = gap_tol

    def fit(self, oracle, x0=None):
        oracle = _oracle(oracle)
        traj = oqa_run(oracle, self._params(), self._start(oracle, x0), self.max_iter,
                       self.gap_tol, record_time=False)
        self._finish(oracle, traj)
        self.lower_bound_ = traj.final.extras["m"]
        return self


class ClassConstantEstimator(BaseEstimator):
    """Estimate ``(L, gamma, mu)`` of ``oracle`` from sample points ``X``.

    After ``fit``: ``params_``, ``L_``, ``gamma_``, ``mu_`` and ``n_features_in_``.
    ``transform`` returns the per-sample slack of the WQSC inequality at the
    fitted constants, ``predict`` whether each sample satisfies it and
    ``score`` the satisfied fraction.
    """

    def __init__(self, oracle=None, L=None, tol=classcheck.DEFAULT_TOL):
        self.oracle = oracle
        self.L = L
        self.tol = tol

    def _check_oracle(self):
        oracle = _oracle(self.oracle)
        if oracle.known_minimizer is None:
            raise InvalidInputError("the oracle needs a known minimiser")
        return oracle

    def fit(self, X, y=None):
        oracle = self._check_oracle()
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != oracle.dimension:
            raise InvalidInputError(f"X has {X.shape[1]} columns, oracle dimension is "
                                    f"{oracle.dimension}")
        est = classcheck.estimate_params(oracle, oracle.known_minimizer, X, L=self.L)
        self.params_ = ClassParams.for_inequality(est.L, est.gamma, est.mu, est.tau, est.zeta)
        self.L_, self.gamma_, self.mu_ = est.L, est.gamma, est.mu
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        oracle = self._check_oracle()
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise InvalidInputError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        data = classcheck.evaluate_samples(oracle, oracle.known_minimizer, X)
        slack = data.inner / self.gamma_ - 0.5 * self.mu_ * data.dist_sq - data.gap
        return slack.reshape(-1, 1)

    def predict(self, X):
        return self.transform(X)[:, 0] >= -self.tol

    def score(self, X, y=None):
        return float(np.mean(self.predict(X)))
