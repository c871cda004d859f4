"""Exact one-dimensional minimisation over a segment ``[p, q]``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._validation import check_point, check_scalar
from .core import ObjectiveOracle
from .exceptions import InvalidInputError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
# Coarse scan resolution used to bracket the minimiser before golden section.
SCAN_POINTS = 17


@dataclass
class SegmentSearchResult:
    t: float
    point: np.ndarray
    value: float
    evals: int


def golden_section_min(f1d: Callable[[float], float], a: float, b: float,
                       tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Golden-section search for a local minimiser of ``f1d`` on ``[a, b]``.

    Returns ``(t, f1d(t))`` for the best point evaluated. Only points inside
    ``[a, b]`` are evaluated, and at most ``max_iter + 2`` of them.
    """
    a = check_scalar(a, "a")
    b = check_scalar(b, "b")
    if a >= b:
        raise InvalidInputError(f"need a < b, got [{a}, {b}]")
    tol = check_scalar(tol, "tol", lower=0.0, lower_inclusive=False)
    if max_iter < 1:
        raise InvalidInputError("max_iter must be positive")

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f1d(c), f1d(d)
    budget = max_iter
    while budget > 0 and b - a > tol:
        if fc == fd and budget >= 2:
            # A unimodal function with equal values brackets its minimum in
            # [c, d]; keeps flat-bottomed minima centred at rounding level.
            a, b = c, d
            c = b - _INVPHI * (b - a)
            d = a + _INVPHI * (b - a)
            fc, fd = f1d(c), f1d(d)
            budget -= 2
            continue
        budget -= 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f1d(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f1d(d)
    if fc <= fd:
        return c, fc
    return d, fd


def segment_min(oracle: ObjectiveOracle, p, q, tol: float = DEFAULT_TOL, *,
                accept: Optional[Callable[[np.ndarray, float], bool]] = None,
                max_iter: int = DEFAULT_MAX_ITER) -> SegmentSearchResult:
    """Minimise ``f(p + t (q - p))`` over ``t in [0, 1]``.

    If ``accept`` is given it is first called as ``accept(q, f(q))``; a true
    result short-circuits with ``t = 1``. Otherwise a coarse scan brackets the
    best region and golden section refines it. The returned value never
    exceeds ``min(f(p), f(q))``.
    """
    p = check_point(p, oracle.dimension, name="p")
    q = check_point(q, oracle.dimension, name="q")
    tol = check_scalar(tol, "tol", lower=0.0, lower_inclusive=False)
    direction = q - p
    evals = 0

    def phi(t):
        nonlocal evals
        evals += 1
        if t == 1.0:
            return oracle.eval(q)
        return oracle.eval(p + t * direction)

    if not np.any(direction):
        return SegmentSearchResult(0.0, p.copy(), phi(0.0), evals)

    f_q = None
    if accept is not None:
        f_q = phi(1.0)
        if accept(q, f_q):
            return SegmentSearchResult(1.0, q.copy(), f_q, evals)

    ts = np.linspace(0.0, 1.0, SCAN_POINTS)
    vals = np.array([f_q if (t == 1.0 and f_q is not None) else phi(float(t)) for t in ts])
    i = int(np.argmin(vals))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, SCAN_POINTS - 1)]
    t_best, f_best = float(ts[i]), float(vals[i])
    t_gs, f_gs = golden_section_min(phi, float(lo), float(hi), tol, max_iter)
    if f_gs < f_best:
        t_best, f_best = t_gs, f_gs

    point = q.copy() if t_best == 1.0 else p + t_best * direction
    return SegmentSearchResult(t_best, point, f_best, evals)


def check_y_condition(oracle: ObjectiveOracle, x_k, v_k, y_k, alpha_k, gamma_k, gamma_next,
                      gamma, mu, tol: float = 0.0, *, f_x=None, f_y=None, g_y=None):
    """Test the interpolation-point condition of the accelerated method.

    The condition reads::

        f(x_k) + a_k g_k / (g_{k+1} gamma) <grad f(y_k), v_k - y_k>
               + a_k g_k mu / (2 g_{k+1}) |y_k - v_k|^2  >=  f(y_k)

    Returns ``(holds, slack)`` with ``slack = lhs - f(y_k)``. Precomputed
    ``f_x``, ``f_y`` and ``g_y`` skip the corresponding oracle calls.
    """
    gamma_next = check_scalar(gamma_next, "gamma_next", lower=0.0, lower_inclusive=False)
    alpha_k = check_scalar(alpha_k, "alpha_k", lower=0.0, upper=1.0,
                           lower_inclusive=False, upper_inclusive=False)
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    x_k = np.asarray(x_k, dtype=np.float64)
    v_k = np.asarray(v_k, dtype=np.float64)
    y_k = np.asarray(y_k, dtype=np.float64)
    if f_x is None:
        f_x = oracle.eval(x_k)
    if f_y is None:
        f_y = oracle.eval(y_k)
    if g_y is None:
        g_y = oracle.grad(y_k)
    w = v_k - y_k
    ratio = alpha_k * gamma_k / gamma_next
    lhs = f_x + ratio / gamma * float(g_y @ w) + 0.5 * ratio * mu * float(w @ w)
    slack = lhs - f_y
    return bool(slack >= -tol), float(slack)
