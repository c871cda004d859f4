"""Sampled verification and estimation of weak-quasi-convexity class constants.

Every check evaluates a class inequality literally at caller-supplied sample
points and reports where it fails. The inequalities, written as ``lhs <= rhs``
with ``d = x - x*`` and ``gap = f(x) - f*``:

=========  =======================  =====================================
kind       lhs                      rhs
=========  =======================  =====================================
WQC        gamma * gap              <grad f(x), d>
WQSC       gap                      <grad f(x), d> / gamma - mu/2 |d|^2
QG_def2    zeta/2 |grad f(x)|^2     gap
QG_dist    mu/2 |d|^2               gap
GradDom    tau * gap                |grad f(x)|^2 / 2
=========  =======================  =====================================
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_point, check_samples, check_scalar
from .core import ClassParams, ObjectiveOracle
from .exceptions import InvalidInputError

CLASS_KINDS = ("WQC", "WQSC", "QG_def2", "QG_dist", "GradDom")
DEFAULT_TOL = 1e-9
# Samples this close to optimal are excluded from ratio-type estimates.
GAP_FLOOR = 1e-12
BISECTION_STEPS = 60

_REQUIRED = {"WQC": (), "WQSC": (), "QG_def2": ("zeta",), "QG_dist": (), "GradDom": ("tau",)}


@dataclass
class MembershipReport:
    class_kind: str
    params: ClassParams
    n_points: int
    violations: list
    worst_slack: float
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: "MembershipReport") -> "MembershipReport":
        """Combine reports over disjoint sample blocks."""
        if other.class_kind != self.class_kind or other.params != self.params:
            raise InvalidInputError("can only merge reports for the same class and constants")
        return MembershipReport(self.class_kind, self.params, self.n_points + other.n_points,
                                self.violations + other.violations,
                                min(self.worst_slack, other.worst_slack),
                                {**self.notes, **other.notes})

    def to_dict(self) -> dict:
        return {
            "class_kind": self.class_kind,
            "params": self.params.to_dict(),
            "n_points": self.n_points,
            "violations": [{"point": [float(c) for c in x], "lhs": lhs, "rhs": rhs}
                           for x, lhs, rhs in self.violations],
            "worst_slack": self.worst_slack,
            "notes": self.notes,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass
class SampleData:
    """Oracle values at the samples, shared between checks."""

    points: np.ndarray
    gap: np.ndarray
    inner: np.ndarray
    dist_sq: np.ndarray
    grad_sq: np.ndarray


def evaluate_samples(oracle: ObjectiveOracle, x_star, samples) -> SampleData:
    x_star = check_point(x_star, oracle.dimension, name="x_star")
    pts = check_samples(samples, oracle.dimension)
    f_star = oracle.known_minimum if oracle.known_minimum is not None else oracle.eval(x_star)
    n = pts.shape[0]
    gap = np.empty(n)
    inner = np.empty(n)
    dist_sq = np.empty(n)
    grad_sq = np.empty(n)
    for i, x in enumerate(pts):
        g = oracle.grad(x)
        d = x - x_star
        gap[i] = oracle.eval(x) - f_star
        inner[i] = g @ d
        dist_sq[i] = d @ d
        grad_sq[i] = g @ g
    return SampleData(pts, gap, inner, dist_sq, grad_sq)


def _sides(kind, params, data):
    if kind == "WQC":
        return params.gamma * data.gap, data.inner
    if kind == "WQSC":
        return data.gap, data.inner / params.gamma - 0.5 * params.mu * data.dist_sq
    if kind == "QG_def2":
        return 0.5 * params.zeta * data.grad_sq, data.gap
    if kind == "QG_dist":
        return 0.5 * params.mu * data.dist_sq, data.gap
    if kind == "GradDom":
        return params.tau * data.gap, 0.5 * data.grad_sq
    raise InvalidInputError(f"unknown class_kind {kind!r}; expected one of {CLASS_KINDS}")


def report_from_data(data: SampleData, class_kind, params: ClassParams,
                     tol=DEFAULT_TOL) -> MembershipReport:
    if class_kind not in CLASS_KINDS:
        raise InvalidInputError(f"unknown class_kind {class_kind!r}; expected one of {CLASS_KINDS}")
    for name in _REQUIRED[class_kind]:
        if getattr(params, name) is None:
            raise InvalidInputError(f"class_kind {class_kind} needs params.{name}")
    tol = check_scalar(tol, "tol", lower=0.0)
    lhs, rhs = _sides(class_kind, params, data)
    slack = rhs - lhs
    bad = np.flatnonzero(lhs > rhs + tol)
    violations = [(data.points[i].copy(), float(lhs[i]), float(rhs[i])) for i in bad]
    return MembershipReport(class_kind, params, int(data.points.shape[0]), violations,
                            float(np.min(slack)))


def verify_membership(oracle: ObjectiveOracle, x_star, class_kind, params: ClassParams,
                      samples, tol=DEFAULT_TOL) -> MembershipReport:
    """Check one class inequality at every sample and report violations beyond ``tol``."""
    if class_kind not in CLASS_KINDS:
        raise InvalidInputError(f"unknown class_kind {class_kind!r}; expected one of {CLASS_KINDS}")
    for name in _REQUIRED[class_kind]:
        if getattr(params, name) is None:
            raise InvalidInputError(f"class_kind {class_kind} needs params.{name}")
    data = evaluate_samples(oracle, x_star, samples)
    return report_from_data(data, class_kind, params, tol)


def _feasible(slack, lhs, rhs):
    # Equality at the extremal sample must survive rounding.
    return bool(np.all(slack >= -1e-12 * (1.0 + np.abs(lhs) + np.abs(rhs))))


def _estimate_L(data: SampleData, oracle, x_star) -> float:
    # Difference quotients between consecutive samples and against x*.
    grads = np.array([oracle.grad(x) for x in data.points])
    g_star = oracle.grad(check_point(x_star, oracle.dimension))
    d_star = data.points - x_star
    r = np.sqrt(np.sum(d_star ** 2, axis=1))
    q = np.sqrt(np.sum((grads - g_star) ** 2, axis=1))
    mask = r > 0
    best = float(np.max(q[mask] / r[mask])) if np.any(mask) else 0.0
    if data.points.shape[0] > 1:
        dx = np.sqrt(np.sum(np.diff(data.points, axis=0) ** 2, axis=1))
        dg = np.sqrt(np.sum(np.diff(grads, axis=0) ** 2, axis=1))
        m = dx > 0
        if np.any(m):
            best = max(best, float(np.max(dg[m] / dx[m])))
    if best <= 0.0:
        raise InvalidInputError("cannot estimate L: gradient is constant on the samples")
    return best


def estimate_gamma(data: SampleData) -> float:
    mask = data.gap > GAP_FLOOR
    if not np.any(mask):
        raise InvalidInputError("all samples are at the minimizer; constants are undefined")
    ratio = float(np.min(data.inner[mask] / data.gap[mask]))
    if ratio <= 0.0:
        raise InvalidInputError(
            f"objective is not weakly-quasi-convex on the samples (min ratio {ratio:.3g})")
    return min(ratio, 1.0)


def estimate_mu(data: SampleData, gamma: float, L: float) -> float:
    """Largest mu in [0, L] keeping the WQSC inequality feasible, by bisection."""
    def ok(mu):
        lhs = data.gap
        rhs = data.inner / gamma - 0.5 * mu * data.dist_sq
        return _feasible(rhs - lhs, lhs, rhs)

    if ok(L):
        return L
    if not ok(0.0):
        return 0.0
    lo, hi = 0.0, L
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def estimate_params(oracle: ObjectiveOracle, x_star, samples, L=None) -> ClassParams:
    """Largest constants for which each class inequality holds on every sample.

    ``gamma`` is the minimum of ``<grad f, x - x*> / (f - f*)`` capped at 1,
    ``mu`` is bisected jointly with that ``gamma`` for the WQSC inequality,
    and ``tau``, ``zeta`` are the minima of their own ratios. If ``L`` is not
    given it is estimated from gradient difference quotients, which is only a
    lower bound on the true constant.
    """
    data = evaluate_samples(oracle, x_star, samples)
    gamma = estimate_gamma(data)
    if L is None:
        L = _estimate_L(data, oracle, x_star)
    L = check_scalar(L, "L", lower=0.0, lower_inclusive=False)
    mu = estimate_mu(data, gamma, L)

    mask = data.gap > GAP_FLOOR
    tau = float(np.min(0.5 * data.grad_sq[mask] / data.gap[mask]))
    gmask = mask & (data.grad_sq > 0)
    zeta = float(np.min(2.0 * data.gap[gmask] / data.grad_sq[gmask])) if np.any(gmask) else None
    return ClassParams(L=L, gamma=gamma, mu=mu, tau=tau if tau > 0 else None,
                       zeta=zeta if zeta and zeta > 0 else None)


def estimate_quadratic_growth(oracle: ObjectiveOracle, x_star, samples) -> float:
    """Largest ``mu`` with ``f - f* >= mu/2 |x - x*|^2`` on every sample."""
    data = evaluate_samples(oracle, x_star, samples)
    mask = data.dist_sq > 0
    if not np.any(mask):
        raise InvalidInputError("all samples are at the minimizer; constants are undefined")
    return max(0.0, float(np.min(2.0 * data.gap[mask] / data.dist_sq[mask])))


def embedded_gamma(gamma, mu, a) -> float:
    """Weak-quasi-convexity constant of the W-class containing WQ(gamma, mu) for curvature a."""
    return 1.0 / (1.0 / gamma + a / (mu * gamma))


def check_wq_to_w_embedding(oracle, x_star, gamma, mu, a, samples, L=None,
                            tol=DEFAULT_TOL) -> MembershipReport:
    """Check ``f - f* <= (1/gamma + a/(mu gamma)) <g, d> - a/2 |d|^2`` on the samples."""
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    mu = check_scalar(mu, "mu", lower=0.0)
    a = check_scalar(a, "a", lower=0.0, lower_inclusive=False)
    if mu == 0.0:
        raise InvalidInputError("the embedding needs mu > 0")
    L = 1.0 if L is None else L
    params = ClassParams.for_inequality(L, embedded_gamma(gamma, mu, a), a)
    report = verify_membership(oracle, x_star, "WQSC", params, samples, tol)
    report.notes["embedding"] = {"gamma": gamma, "mu": mu, "a": a}
    return report


def check_gradient_domination_consequence(oracle, x_star, gamma, mu, samples, L=None,
                                          tol=DEFAULT_TOL) -> MembershipReport:
    """Check ``mu gamma^2 (f - f*) <= |grad f|^2 / 2``."""
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    mu = check_scalar(mu, "mu", lower=0.0, lower_inclusive=False)
    L = 1.0 if L is None else L
    params = ClassParams.for_inequality(L, gamma, mu, tau=mu * gamma ** 2)
    return verify_membership(oracle, x_star, "GradDom", params, samples, tol)


def check_quadratic_growth_consequence(oracle, x_star, gamma, mu, samples, L=None,
                                       growth=None, tol=DEFAULT_TOL) -> MembershipReport:
    """Check ``f - f* >= growth/2 |x - x*|^2`` for a W(gamma, mu) member.

    ``growth`` defaults to ``4 mu gamma^2``, i.e. ``f - f* >= 2 mu gamma^2 |d|^2``.
    That constant is false already for ``f = x^2/2``; the bound that follows
    from gradient domination is ``growth = mu gamma^2``.
    """
    gamma = check_scalar(gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
    mu = check_scalar(mu, "mu", lower=0.0, lower_inclusive=False)
    growth = 4.0 * mu * gamma ** 2 if growth is None else check_scalar(growth, "growth", lower=0.0)
    L = 1.0 if L is None else L
    params = ClassParams.for_inequality(L, gamma, growth)
    report = verify_membership(oracle, x_star, "QG_dist", params, samples, tol)
    report.notes["source_mu"] = mu
    return report


def grid(lo, hi, n, dim=1) -> np.ndarray:
    """Deterministic tensor grid with ``n`` points per axis on ``[lo, hi]^dim``."""
    if n < 1:
        raise InvalidInputError("grid needs at least one point per axis")
    axis = np.linspace(lo, hi, int(n))
    if dim == 1:
        return axis.reshape(-1, 1)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def halton(n, dim, lo=-1.0, hi=1.0) -> np.ndarray:
    """Unscrambled Halton points on ``[lo, hi]^dim`` (deterministic)."""
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53]
    if dim > len(primes):
        raise InvalidInputError(f"halton supports up to {len(primes)} dimensions")
    out = np.empty((n, dim))
    for j in range(dim):
        base = primes[j]
        for i in range(n):
            k, fct, val = i + 1, 1.0, 0.0
            while k > 0:
                fct /= base
                val += fct * (k % base)
                k //= base
            out[i, j] = val
    return lo + (hi - lo) * out
