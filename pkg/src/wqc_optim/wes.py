"""Accelerated gradient descent built on a weak estimate sequence.

The method keeps an isotropic quadratic model

    phi_k(x) = phi*_k + (gamma_k / 2) |x - v_k|^2

updated by ``phi_{k+1} = (1 - a_k) phi_k + a_k q_k`` with the lower model
``q_k(x) = f(y_k) + <grad f(y_k), x - y_k> / gamma + (mu/2) |x - y_k|^2``.
Iterates are certified by ``f(x_k) <= phi*_k``, which gives
``f(x_k) - f* <= lambda_k (phi_0(x*) - f*)`` with ``lambda_k = prod (1 - a_i)``.

Two variants share the code. ``scale = 1`` is the method for the W class.
``scale = 4`` is the method for the WQ class (quadratic growth); it equals
the first variant run with ``gamma / 2``, which is how it is implemented.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import check_point, check_scalar
from .core import ClassParams, ObjectiveOracle, Trajectory, TrajectoryRecord, norm, sqnorm
from .exceptions import InvalidInputError, InvariantViolationError, ParameterRegimeError
from .linesearch import check_y_condition, segment_min

CERT_TOL = 1e-9
ALPHA_RESIDUAL_TOL = 1e-12
SAFEGUARD_HALVINGS = 60
UNSTABLE_VALUE = 1e300
Y_SELECTIONS = ("first_feasible", "exact")


@dataclass(frozen=True)
class Quadratic:
    """``q(x) = m + (kappa / 2) |x - c|^2``."""

    m: float
    c: np.ndarray
    kappa: float

    def __call__(self, x) -> float:
        d = np.asarray(x, dtype=np.float64) - self.c
        return self.m + 0.5 * self.kappa * float(d @ d)


@dataclass(frozen=True)
class WesVariant:
    """Selects between the two accelerated methods.

    ``scale`` multiplies ``L`` in the stepsize equation for ``alpha``; the
    method then behaves as the base method with ``gamma / sqrt(scale)``.
    ``y_selection`` is ``"first_feasible"`` (try ``y = x_k`` and fall back to
    the exact segment minimiser) or ``"exact"`` (always minimise).
    """

    scale: float = 1.0
    y_selection: str = "first_feasible"

    def __post_init__(self):
        if self.scale not in (1.0, 4.0):
            raise InvalidInputError(f"scale must be 1 or 4, got {self.scale}")
        if self.y_selection not in Y_SELECTIONS:
            raise InvalidInputError(f"y_selection must be one of {Y_SELECTIONS}")

    def effective_gamma(self, gamma: float) -> float:
        return gamma / math.sqrt(self.scale)


AGD1 = WesVariant(1.0, "first_feasible")
AGD2 = WesVariant(4.0, "exact")


@dataclass
class WesState:
    """State at iteration ``k``.

    ``x, v, gamma_k, lam, phi_star`` describe iteration ``k`` itself; ``y``,
    ``alpha`` and ``beta`` are those of the step that produced it (``None`` at
    ``k = 0``). ``f_x`` and ``g_x`` cache the oracle at ``x``.
    """

    k: int
    x: np.ndarray
    v: np.ndarray
    gamma_k: float
    lam: float
    phi_star: float
    y: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    f_x: Optional[float] = None
    g_x: Optional[np.ndarray] = None
    safeguard_halvings: int = 0

    @property
    def phi(self) -> Quadratic:
        return Quadratic(self.phi_star, self.v, self.gamma_k)


def solve_alpha(L, gamma, mu, gamma_k, scale=1.0) -> float:
    """Positive root of ``(scale L / gamma^2) a^2 + (gamma_k - mu) a - gamma_k = 0``."""
    L = check_scalar(L, "L", lower=0.0, lower_inclusive=False)
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    mu = check_scalar(mu, "mu", lower=0.0)
    gamma_k = check_scalar(gamma_k, "gamma_k", lower=0.0, lower_inclusive=False)
    if scale not in (1, 4):
        raise InvalidInputError(f"scale must be 1 or 4, got {scale}")
    a = scale * L / gamma ** 2
    if a <= mu:
        raise ParameterRegimeError(
            f"scale*L/gamma^2 = {a} <= mu = {mu}: the stepsize equation has no root in (0, 1)")
    b = gamma_k - mu
    disc = math.sqrt(b * b + 4.0 * a * gamma_k)
    # Cancellation-free form of the positive root.
    alpha = 2.0 * gamma_k / (b + disc) if b >= 0 else (disc - b) / (2.0 * a)
    if not 0.0 < alpha < 1.0:
        raise ParameterRegimeError(f"alpha = {alpha} is outside (0, 1)")
    return alpha


def alpha_residual(alpha, L, gamma, mu, gamma_k, scale=1.0) -> float:
    return scale * L * alpha ** 2 / gamma ** 2 - (1.0 - alpha) * gamma_k - alpha * mu


def initial_state(oracle: ObjectiveOracle, x0, gamma0: float) -> WesState:
    x0 = check_point(x0, oracle.dimension, name="x0")
    gamma0 = check_scalar(gamma0, "gamma0", lower=0.0, lower_inclusive=False)
    f0 = oracle.eval(x0)
    return WesState(0, x0, x0.copy(), gamma0, 1.0, f0, f_x=f0, g_x=oracle.grad(x0))


def default_gamma0(params: ClassParams, variant: WesVariant = AGD1) -> float:
    return max(params.L, params.mu / variant.effective_gamma(params.gamma))


def _bad(value):
    return not math.isfinite(value) or value >= UNSTABLE_VALUE


def wes_step(oracle: ObjectiveOracle, params: ClassParams, state: WesState,
             variant: WesVariant = AGD1, *, safeguard: bool = False,
             history: Optional[list] = None) -> WesState:
    """One iteration of the accelerated method; returns the next state.

    Raises :class:`InvariantViolationError` when the certificate
    ``f(x_{k+1}) <= phi*_{k+1}`` fails, which means ``L``, ``gamma`` or ``mu``
    do not describe this oracle.
    """
    L, mu = params.L, params.mu
    g_eff = variant.effective_gamma(params.gamma)
    x, v, gk = state.x, state.v, state.gamma_k
    f_x = state.f_x if state.f_x is not None else oracle.eval(x)
    g_x = state.g_x if state.g_x is not None else oracle.grad(x)

    alpha = solve_alpha(L, g_eff, mu, gk)
    g_next = (1.0 - alpha) * gk + alpha * mu

    def condition(y, f_y, g_y, tol):
        return check_y_condition(oracle, x, v, y, alpha, gk, g_next, g_eff, mu, tol,
                                 f_x=f_x, f_y=f_y, g_y=g_y)

    y = f_y = g_y = None
    beta = None
    if variant.y_selection == "first_feasible":
        holds, _ = condition(x, f_x, g_x, 0.0)
        if holds:
            y, f_y, g_y, beta = x, f_x, g_x, 1.0
    if y is None:
        res = segment_min(oracle, v, x)
        beta = res.t
        if beta == 1.0:
            y, f_y, g_y = x, f_x, g_x
        else:
            y, f_y = res.point, res.value
            g_y = oracle.grad(y)
        holds, slack = condition(y, f_y, g_y, CERT_TOL * (1.0 + abs(f_x)))
        if not holds:
            raise InvariantViolationError(
                f"interpolation condition infeasible at k={state.k} after exact line search "
                f"(slack {slack:.3e})", state=state)

    step = 1.0 / L
    x_next = y - step * g_y
    f_next = oracle.eval(x_next)
    halvings = 0
    if safeguard:
        while _bad(f_next) and halvings < SAFEGUARD_HALVINGS:
            step *= 0.5
            halvings += 1
            x_next = y - step * g_y
            f_next = oracle.eval(x_next)

    w = v - y
    v_next = ((1.0 - alpha) * gk * v + alpha * mu * y - (alpha / g_eff) * g_y) / g_next
    mix = alpha * (1.0 - alpha) * gk / g_next
    phi_next = ((1.0 - alpha) * state.phi_star + alpha * f_y
                - alpha ** 2 / (2.0 * g_eff ** 2 * g_next) * sqnorm(g_y)
                + mix * (0.5 * mu * sqnorm(w) + float(g_y @ w) / g_eff))
    lam_next = (1.0 - alpha) * state.lam

    if history is not None:
        history.append((y.copy(), g_y.copy(), f_y, alpha))

    new = WesState(state.k + 1, x_next, v_next, g_next, lam_next, phi_next, y=y, alpha=alpha,
                   beta=beta, f_x=f_next, g_x=None,
                   safeguard_halvings=state.safeguard_halvings + halvings)
    if _bad(f_next) or f_next > phi_next + CERT_TOL * (1.0 + abs(phi_next)):
        raise InvariantViolationError(
            f"certificate f(x_k) <= phi*_k failed at k={new.k}: f={f_next!r}, "
            f"phi*={phi_next!r}; check L, gamma and mu", state=new)
    new.g_x = oracle.grad(x_next)
    return new


def lambda_envelope(params: ClassParams, gamma0: float, k: int, scale: float = 1.0) -> float:
    """Upper bound on ``lambda_k``.

    ``min((1 - sqrt(mu g^2 / L))^k, 4L / (2 sqrt(L) + g k sqrt(gamma0))^2)``
    with ``g = gamma / sqrt(scale)``; requires ``gamma0 >= mu / g``.
    """
    gamma0 = check_scalar(gamma0, "gamma0", lower=0.0, lower_inclusive=False)
    if int(k) != k or k < 0:
        raise InvalidInputError("k must be a nonnegative integer")
    g = params.gamma / math.sqrt(scale)
    L, mu = params.L, params.mu
    if gamma0 < mu / g:
        raise InvalidInputError(f"gamma0={gamma0} is below mu/gamma={mu / g}")
    # Equals 4L / (2 sqrt(L) + g k sqrt(gamma0))^2, written to be exactly 1 at k = 0.
    sub = 1.0 / (1.0 + g * k * math.sqrt(gamma0) / (2.0 * math.sqrt(L))) ** 2
    if mu == 0.0:
        return sub
    lin = max(0.0, 1.0 - math.sqrt(mu * g ** 2 / L)) ** k
    return min(lin, sub)


def accelerated_rate_envelope(params: ClassParams, k: int, r0sq: float, scale: float = 1.0) -> float:
    """``min((1 - sqrt(mu g^2/L))^k, 4/(2 + g k)^2) L r0sq`` for ``gamma0 = max(L, mu/g)``."""
    g = params.gamma / math.sqrt(scale)
    L, mu = params.L, params.mu
    sub = 4.0 / (2.0 + g * k) ** 2
    if mu > 0.0:
        sub = min(sub, max(0.0, 1.0 - math.sqrt(mu * g ** 2 / L)) ** k)
    return sub * L * r0sq


def agd_run(oracle: ObjectiveOracle, params: ClassParams, x0, gamma0: Optional[float] = None,
            max_iter: int = 1000, grad_tol: float = 0.0, variant: WesVariant = AGD1, *,
            record: bool = False, safeguard: bool = False,
            record_time: bool = True, target_f: Optional[float] = None) -> Trajectory:
    """Run the accelerated method from ``x0`` (``v_0 = x_0``, ``phi*_0 = f(x_0)``).

    ``gamma0`` defaults to ``max(L, mu / gamma)`` (with the variant's effective
    gamma). Each record carries ``lambda``, ``gamma_k``, ``phi_star``, ``v``,
    ``alpha`` and ``beta`` in ``extras``; when the oracle knows its minimiser the
    record's ``envelope`` is ``lambda_k (f(x_0) - f* + gamma0/2 |x_0 - x*|^2)``.
    Stops at ``max_iter``, once ``|grad f| <= grad_tol`` or once
    ``f(x_k) <= target_f``. With ``record`` the history needed by :func:`phi_consistency_probe` is
    stored in ``meta["history"]``.
    """
    if gamma0 is None:
        gamma0 = default_gamma0(params, variant)
    if int(max_iter) != max_iter or max_iter < 0:
        raise InvalidInputError("max_iter must be a nonnegative integer")
    grad_tol = check_scalar(grad_tol, "grad_tol", lower=0.0)
    start = time.perf_counter_ns()
    state = initial_state(oracle, x0, gamma0)
    history = [] if record else None
    traj = Trajectory(meta={
        "algorithm": "agd2" if variant.scale == 4.0 else "agd1",
        "gamma0": state.gamma_k, "phi0_star": state.phi_star, "v0": state.v.copy(),
        "effective_gamma": variant.effective_gamma(params.gamma),
        "scale": variant.scale, "y_selection": variant.y_selection,
    })
    weight = None
    if oracle.known_minimizer is not None and oracle.known_minimum is not None:
        d0 = state.x - oracle.known_minimizer
        weight = state.f_x - oracle.known_minimum + 0.5 * state.gamma_k * float(d0 @ d0)

    while True:
        gn = norm(state.g_x)
        wall = time.perf_counter_ns() - start if record_time else 0
        traj.append(TrajectoryRecord(
            state.k, state.x.copy(), state.f_x, gn,
            envelope=None if weight is None else state.lam * weight, wall_nanos=wall,
            extras={"lambda": state.lam, "gamma_k": state.gamma_k, "phi_star": state.phi_star,
                    "v": state.v.copy(), "alpha": state.alpha, "beta": state.beta}))
        if state.k >= max_iter or gn <= grad_tol or (
                target_f is not None and state.f_x <= target_f):
            break
        state = wes_step(oracle, params, state, variant, safeguard=safeguard, history=history)
    traj.meta["safeguard_halvings"] = state.safeguard_halvings
    if record:
        traj.meta["history"] = history
    return traj


def phi_consistency_probe(history, gamma0, phi0_star, v0, gamma, mu, probes) -> float:
    """Largest gap between the recursive and canonical forms of ``phi_k`` at the probes.

    The recursive form unrolls ``phi_{k+1} = (1 - a_k) phi_k + a_k q_k`` from
    ``phi_0``; the canonical form rebuilds ``(gamma_k, v_k, phi*_k)`` from the
    closed-form updates. ``gamma`` is the effective constant of the run.
    """
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    v = check_point(v0, name="v0")
    probes = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    if probes.shape[1] != v.shape[0]:
        raise InvalidInputError("probe dimension does not match v0")
    gk, phis = float(gamma0), float(phi0_star)

    rec = np.array([phis + 0.5 * gk * float((p - v) @ (p - v)) for p in probes])
    worst = 0.0
    for y, g, f_y, alpha in history:
        y = np.asarray(y, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        d = probes - y
        q = f_y + (d @ g) / gamma + 0.5 * mu * np.sum(d * d, axis=1)
        rec = (1.0 - alpha) * rec + alpha * q

        g_next = (1.0 - alpha) * gk + alpha * mu
        w = v - y
        phis = ((1.0 - alpha) * phis + alpha * f_y
                - alpha ** 2 / (2.0 * gamma ** 2 * g_next) * float(g @ g)
                + alpha * (1.0 - alpha) * gk / g_next * (0.5 * mu * float(w @ w)
                                                         + float(g @ w) / gamma))
        v = ((1.0 - alpha) * gk * v + alpha * mu * y - (alpha / gamma) * g) / g_next
        gk = g_next
        dv = probes - v
        canon = phis + 0.5 * gk * np.sum(dv * dv, axis=1)
        worst = max(worst, float(np.max(np.abs(canon - rec))))
    return worst


def weak_estimate_residuals(traj: Trajectory, f_star: float, x_star) -> np.ndarray:
    """``phi_k(x*) - (1 - lambda_k) f* - lambda_k phi_0(x*)`` for every record (should be <= 0)."""
    x_star = np.asarray(x_star, dtype=np.float64)
    first = traj[0].extras
    phi0_at = first["phi_star"] + 0.5 * first["gamma_k"] * sqnorm(x_star - first["v"])
    out = []
    for r in traj:
        e = r.extras
        phi_at = e["phi_star"] + 0.5 * e["gamma_k"] * sqnorm(x_star - e["v"])
        out.append(phi_at - (1.0 - e["lambda"]) * f_star - e["lambda"] * phi0_at)
    return np.array(out)


__all__ = [
    "Quadratic", "WesVariant", "WesState", "AGD1", "AGD2", "solve_alpha", "alpha_residual",
    "initial_state", "default_gamma0", "wes_step", "lambda_envelope", "accelerated_rate_envelope",
    "agd_run", "phi_consistency_probe", "weak_estimate_residuals",
]
