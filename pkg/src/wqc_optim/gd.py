"""Gradient descent with class-specific constant stepsizes and their rate envelopes."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import check_point, check_scalar
from .core import ClassParams, ObjectiveOracle, Trajectory, TrajectoryRecord, norm
from .exceptions import DivergenceError, InvalidInputError

STEPSIZE_RULES = ("one_over_L", "gamma_over_L", "gamma_over_2L", "fixed")
ENVELOPE_VARIANTS = ("wqc_sublinear", "wqsc_linear", "wq_growth_linear", "graddom_linear")
# A step is abandoned as divergent when f jumps by more than this factor.
DIVERGENCE_FACTOR = 1e6
SAFEGUARD_HALVINGS = 60
UNSTABLE_VALUE = 1e300


@dataclass(frozen=True)
class GdConfig:
    stepsize_rule: str = "one_over_L"
    max_iter: int = 1000
    grad_tol: float = 0.0
    step: Optional[float] = None

    def __post_init__(self):
        if self.stepsize_rule not in STEPSIZE_RULES:
            raise InvalidInputError(
                f"unknown stepsize_rule {self.stepsize_rule!r}; expected one of {STEPSIZE_RULES}")
        if self.stepsize_rule == "fixed":
            if self.step is None:
                raise InvalidInputError("rule 'fixed' needs a step")
            check_scalar(self.step, "step", lower=0.0, lower_inclusive=False)
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError("max_iter must be a positive integer")
        check_scalar(self.grad_tol, "grad_tol", lower=0.0)


def resolve_stepsize(config: GdConfig, params: ClassParams) -> float:
    rule = config.stepsize_rule
    if rule == "one_over_L":
        h = 1.0 / params.L
    elif rule == "gamma_over_L":
        h = params.gamma / params.L
    elif rule == "gamma_over_2L":
        h = params.gamma / (2.0 * params.L)
    else:
        h = float(config.step)
    if not h > 0:
        raise InvalidInputError(f"resolved stepsize {h} is not positive")
    return h


def _bad(value):
    return not math.isfinite(value) or value >= UNSTABLE_VALUE


def gd_run(oracle: ObjectiveOracle, params: ClassParams, x0, config: GdConfig,
           *, safeguard: bool = False, record_time: bool = True,
           target_f: Optional[float] = None) -> Trajectory:
    """Run ``x_{k+1} = x_k - h grad f(x_k)`` and log every iterate.

    Stops after ``config.max_iter`` steps, once ``|grad f(x_k)| <= grad_tol``,
    or once ``f(x_k) <= target_f``.
    With ``safeguard`` the step is halved (up to 60 times) whenever it lands
    where ``f`` is undefined, e.g. at a destabilising LQR gain.
    """
    x = check_point(x0, oracle.dimension, name="x0")
    h = resolve_stepsize(config, params)
    start = time.perf_counter_ns()
    traj = Trajectory(meta={"algorithm": "gd", "stepsize_rule": config.stepsize_rule,
                            "stepsize": h, "safeguard_halvings": 0})
    f = oracle.eval(x)
    g = oracle.grad(x)
    for k in range(config.max_iter + 1):
        gn = norm(g)
        wall = time.perf_counter_ns() - start if record_time else 0
        traj.append(TrajectoryRecord(k, x.copy(), f, gn, wall_nanos=wall))
        if k == config.max_iter or gn <= config.grad_tol or (
                target_f is not None and f <= target_f):
            break
        step = h
        x_new = x - step * g
        f_new = oracle.eval(x_new)
        if safeguard:
            halvings = 0
            while _bad(f_new) and halvings < SAFEGUARD_HALVINGS:
                step *= 0.5
                halvings += 1
                x_new = x - step * g
                f_new = oracle.eval(x_new)
            traj.meta["safeguard_halvings"] += halvings
        if _bad(f_new) or f_new > f + DIVERGENCE_FACTOR * (1.0 + abs(f)):
            raise DivergenceError(
                f"gradient descent diverged at k={k}: f went from {f!r} to {f_new!r} "
                f"with stepsize {step!r}; is L={params.L} too small?",
                state={"k": k, "x": x, "f": f, "stepsize": step})
        x, f = x_new, f_new
        g = oracle.grad(x)
    return traj


def gd_envelope(params: ClassParams, variant: str, k: int, r0sq: float = 0.0,
                f0gap: float = 0.0) -> float:
    """Rate bound for iterate ``k`` of gradient descent.

    ``wqc_sublinear``: ``L r0sq / (gamma (k+1))`` on ``f - f*`` (stepsize 1/L).
    ``wqsc_linear``: ``(1 - gamma^2 mu / L)^k r0sq`` on ``|x_k - x*|^2`` (gamma/L).
    ``wq_growth_linear``: ``(1 - gamma^2 mu / (4L))^k r0sq`` (gamma/(2L)).
    ``graddom_linear``: ``(1 - mu gamma^2 / L)^k f0gap`` on ``f - f*`` (1/L).
    """
    if variant not in ENVELOPE_VARIANTS:
        raise InvalidInputError(f"unknown envelope variant {variant!r}")
    if int(k) != k or k < 0:
        raise InvalidInputError("k must be a nonnegative integer")
    r0sq = check_scalar(r0sq, "r0sq", lower=0.0)
    f0gap = check_scalar(f0gap, "f0gap", lower=0.0)
    L, gamma, mu = params.L, params.gamma, params.mu
    if variant == "wqc_sublinear":
        return L * r0sq / (gamma * (k + 1))
    if mu == 0.0:
        raise InvalidInputError(f"envelope {variant} needs mu > 0")
    if variant == "wqsc_linear":
        return max(0.0, 1.0 - gamma ** 2 * mu / L) ** k * r0sq
    if variant == "wq_growth_linear":
        return max(0.0, 1.0 - gamma ** 2 * mu / (4.0 * L)) ** k * r0sq
    return max(0.0, 1.0 - mu * gamma ** 2 / L) ** k * f0gap


def distance_sq(traj: Trajectory, x_star) -> np.ndarray:
    x_star = np.asarray(x_star, dtype=np.float64)
    return np.array([float((r.x - x_star) @ (r.x - x_star)) for r in traj])
