"""Optimal quadratic averaging for weakly-quasi-strongly-convex objectives (mu > 0).

Each iterate ``x`` yields the lower model

    q(z; x) = f(x) + <grad f(x), z - x> / gamma + (mu/2) |z - x|^2
            = (f(x) - |grad f(x)|^2 / (2 mu gamma^2)) + (mu/2) |z - x++|^2,

with ``x++ = x - grad f(x) / (mu gamma)``, whose value at ``x*`` underestimates
``f*``. The running model ``Q_k`` is the best convex combination of the
previous model and the newest one, so its minimum ``m_k`` is a nondecreasing
lower bound on ``f*`` and ``f(x_k^+) - m_k`` bounds the suboptimality.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ._validation import check_point, check_scalar
from .core import ClassParams, ObjectiveOracle, Trajectory, TrajectoryRecord, norm, sqnorm
from .exceptions import InvalidInputError, InvariantViolationError
from .linesearch import segment_min
from .wes import Quadratic

GAP_TOL = 1e-9


@dataclass
class OqaState:
    k: int
    x: np.ndarray
    x_plus: np.ndarray
    Q: Quadratic
    best_value: float


def grad_step(oracle: ObjectiveOracle, L, x) -> np.ndarray:
    """``x - grad f(x) / L``."""
    L = check_scalar(L, "L", lower=0.0, lower_inclusive=False)
    x = check_point(x, oracle.dimension)
    return x - oracle.grad(x) / L


def _lower(f_x, g_x, x, gamma, mu) -> Quadratic:
    return Quadratic(f_x - sqnorm(g_x) / (2.0 * mu * gamma ** 2),
                     x - g_x / (mu * gamma), mu)


def lower_quadratic(oracle: ObjectiveOracle, gamma, mu, x_bar) -> Quadratic:
    """Completed-square lower model at ``x_bar`` (curvature ``mu``)."""
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    mu = check_scalar(mu, "mu", lower=0.0)
    if mu == 0.0:
        raise InvalidInputError("lower_quadratic needs mu > 0")
    x_bar = check_point(x_bar, oracle.dimension, name="x_bar")
    return _lower(oracle.eval(x_bar), oracle.grad(x_bar), x_bar, gamma, mu)


def optimal_average(A: Quadratic, B: Quadratic):
    """Convex combination ``lam A + (1 - lam) B`` with the largest minimum value.

    Returns ``(Q, lam)``. With ``d = |c_A - c_B|`` the minimum of the mixture is
    ``lam m_A + (1 - lam) m_B + (mu/2) lam (1 - lam) d^2``, maximised at
    ``lam = clamp(1/2 + (m_A - m_B) / (mu d^2), 0, 1)``. Coincident centres
    pick whichever input has the larger minimum, preferring ``B`` on ties.
    """
    mu = float(B.kappa)
    if not mu > 0 or abs(A.kappa - mu) > 1e-12 * max(abs(A.kappa), abs(mu)):
        raise InvalidInputError(f"curvatures differ or vanish: {A.kappa} vs {B.kappa}")
    diff = np.asarray(A.c, dtype=np.float64) - np.asarray(B.c, dtype=np.float64)
    d2 = sqnorm(diff)
    if d2 == 0.0:
        lam = 1.0 if A.m > B.m else 0.0
    else:
        lam = min(1.0, max(0.0, 0.5 + (A.m - B.m) / (mu * d2)))
    if lam == 0.0:
        return B, 0.0
    if lam == 1.0:
        return A, 1.0
    m = lam * A.m + (1.0 - lam) * B.m + 0.5 * mu * lam * (1.0 - lam) * d2
    c = lam * np.asarray(A.c) + (1.0 - lam) * np.asarray(B.c)
    return Quadratic(m, c, mu), lam


def averaged_minimum(A: Quadratic, B: Quadratic, lam: float) -> float:
    d2 = sqnorm(np.asarray(A.c) - np.asarray(B.c))
    return lam * A.m + (1.0 - lam) * B.m + 0.5 * B.kappa * lam * (1.0 - lam) * d2


def oqa_run(oracle: ObjectiveOracle, params: ClassParams, x0, max_iter: int = 1000,
            gap_tol: float = 0.0, *, record_time: bool = True) -> Trajectory:
    """Optimal quadratic averaging from ``x0``.

    Records log ``x_k^+`` and ``f(x_k^+)``; ``extras`` hold ``m`` (the model
    minimum), ``gap = f(x_k^+) - m_k``, the centre ``c``, the averaging weight
    and the line-search point ``x_k``. Stops once ``gap <= gap_tol`` or after
    ``max_iter`` averaging steps.
    """
    L, gamma, mu = params.L, params.gamma, params.mu
    if mu == 0.0:
        raise InvalidInputError("quadratic averaging needs mu > 0")
    gap_tol = check_scalar(gap_tol, "gap_tol", lower=0.0)
    if int(max_iter) != max_iter or max_iter < 0:
        raise InvalidInputError("max_iter must be a nonnegative integer")
    x = check_point(x0, oracle.dimension, name="x0")
    f_star = oracle.known_minimum
    start = time.perf_counter_ns()

    f_x, g_x = oracle.eval(x), oracle.grad(x)
    Q = _lower(f_x, g_x, x, gamma, mu)
    x_plus = x - g_x / L
    f_plus, g_plus = oracle.eval(x_plus), oracle.grad(x_plus)
    state = OqaState(0, x, x_plus, Q, f_plus)
    traj = Trajectory(meta={"algorithm": "oqa"})
    prev_gap = math.inf

    while True:
        gap = f_plus - state.Q.m
        if gap > prev_gap + GAP_TOL * (1.0 + abs(prev_gap)):
            raise InvariantViolationError(
                f"optimality gap increased at k={state.k}: {prev_gap!r} -> {gap!r}", state=state)
        if f_star is not None and state.Q.m > f_star + GAP_TOL * (1.0 + abs(f_star)):
            raise InvariantViolationError(
                f"lower bound m_k={state.Q.m!r} exceeds f*={f_star!r} at k={state.k}; "
                "check gamma and mu", state=state)
        wall = time.perf_counter_ns() - start if record_time else 0
        traj.append(TrajectoryRecord(
            state.k, state.x_plus.copy(), f_plus, norm(g_plus), wall_nanos=wall,
            extras={"m": state.Q.m, "gap": gap, "c": np.array(state.Q.c, copy=True),
                    "x": state.x.copy(), "best_value": state.best_value}))
        if gap <= gap_tol or state.k >= max_iter:
            break
        prev_gap = gap

        res = segment_min(oracle, state.Q.c, state.x_plus)
        x = res.point
        f_x, g_x = res.value, oracle.grad(x)
        Q_new, lam = optimal_average(_lower(f_x, g_x, x, gamma, mu), state.Q)
        x_plus = x - g_x / L
        f_plus, g_plus = oracle.eval(x_plus), oracle.grad(x_plus)
        state = OqaState(state.k + 1, x, x_plus, Q_new, min(state.best_value, f_plus))
        traj[-1].extras["next_lambda"] = lam
    return traj


def oqa_envelope(params: ClassParams, k: int, gap0: float) -> float:
    """``(1 - sqrt(mu gamma^2 / L))^k gap0``."""
    rate = max(0.0, 1.0 - math.sqrt(params.mu * params.gamma ** 2 / params.L))
    return rate ** k * gap0
