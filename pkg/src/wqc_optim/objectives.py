"""Built-in test objectives with numerically certified class constants.

=============  ===============================  =====================================
id             f(x)                             regime
=============  ===============================  =====================================
quad           0.5 (x-x*)^T H (x-x*)            gamma = 1, mu = min eig, L = max eig
sinsq          sum x_i^2 + 3 sin^2 x_i          nonconvex, quadratic growth
flat_quartic   |x|^4                            mu = 0, L = 12 r^2 on the ball |x| <= r
=============  ===============================  =====================================

For ``sinsq`` and ``flat_quartic`` the weak-quasi-convexity constants are not
asserted by hand. They come from :func:`wqc_optim.classcheck.estimate_params`
on a documented one-dimensional grid (10^4 points); ``sinsq`` is
coordinate-separable and ``flat_quartic`` is radial, so the one-dimensional
constants carry over to any dimension.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import classcheck
from ._validation import check_point
from .core import ClassParams, ObjectiveOracle, make_quadratic_objective
from .exceptions import InvalidInputError

CATALOGUE_IDS = ("quad", "sinsq", "flat_quartic")
CERTIFICATION_POINTS = 10_000


@dataclass(frozen=True)
class CatalogueEntry:
    """Metadata attached to catalogue oracles as ``oracle.info``.

    ``params`` are W-class constants ``(L, gamma, mu)``; ``wq_params`` carry the
    distance-form quadratic growth constant as ``mu`` (class WQ). ``box`` is the
    per-coordinate interval the constants were certified on, ``radius`` the
    Euclidean ball for radial objectives.
    """

    name: str
    dimension: int
    box: tuple
    radius: float
    default_x0: tuple
    params: ClassParams
    wq_params: ClassParams
    certification: str

    def certification_grid(self, n=CERTIFICATION_POINTS):
        return classcheck.grid(self.box[0], self.box[1], n)


def _sinsq_fun(x):
    s = np.sin(x)
    return float(x @ x + 3.0 * (s @ s))


def _sinsq_grad(x):
    return 2.0 * x + 3.0 * np.sin(2.0 * x)


def _quartic_fun(x):
    r2 = float(x @ x)
    return r2 * r2


def _quartic_grad(x):
    return 4.0 * float(x @ x) * x


@functools.lru_cache(maxsize=None)
def _certify_sinsq():
    oracle = ObjectiveOracle(_sinsq_fun, _sinsq_grad, 1, known_minimizer=[0.0],
                             known_minimum=0.0)
    samples = classcheck.grid(-5.0, 5.0, CERTIFICATION_POINTS)
    # sup |f''| = sup |2 + 6 cos 2x| = 8, globally.
    est = classcheck.estimate_params(oracle, [0.0], samples, L=8.0)
    growth = classcheck.estimate_quadratic_growth(oracle, [0.0], samples)
    return est, growth


@functools.lru_cache(maxsize=None)
def _certify_quartic(radius):
    oracle = ObjectiveOracle(_quartic_fun, _quartic_grad, 1, known_minimizer=[0.0],
                             known_minimum=0.0)
    samples = classcheck.grid(-radius, radius, CERTIFICATION_POINTS)
    # Hessian 4|x|^2 I + 8 x x^T has top eigenvalue 12 |x|^2.
    L = 12.0 * radius ** 2
    est = classcheck.estimate_params(oracle, [0.0], samples, L=L)
    return est


def make_nonconvex_test_objective(id, dim=None, *, H=None, x_star=None,
                                  radius=1.0) -> ObjectiveOracle:
    """Return a catalogue oracle with ``known_minimizer``/``known_minimum`` set.

    ``quad`` accepts an explicit ``H`` (default ``diag(1, 10)``) and ``x_star``
    (default zero). ``radius`` sets the certification ball of ``flat_quartic``.
    """
    if id == "quad":
        if H is None:
            n = 2 if dim is None else int(dim)
            H = np.diag([1.0, 10.0]) if n == 2 else np.diag(np.logspace(0.0, 1.0, n))
        H = np.atleast_2d(np.asarray(H, dtype=np.float64))
        n = H.shape[0]
        if dim is not None and dim != n:
            raise InvalidInputError(f"dim={dim} does not match H of size {n}")
        xs = np.zeros(n) if x_star is None else check_point(x_star, n, name="x_star")
        oracle = make_quadratic_objective(H, xs)
        eig = np.linalg.eigvalsh(oracle.hessian)
        L, mu = float(eig[-1]), max(0.0, float(eig[0]))
        if L <= 0:
            raise InvalidInputError("quad needs a nonzero H")
        params = ClassParams(L=L, gamma=1.0, mu=mu, tau=mu if mu > 0 else None,
                             zeta=1.0 / L)
        reach = 5.0 + float(np.max(np.abs(xs)))
        oracle.info = CatalogueEntry(
            "quad", n, (-reach, reach), math.inf, tuple(xs + 3.0), params,
            ClassParams(L=L, gamma=1.0, mu=mu), "analytic: eigenvalues of H")
        return oracle

    if x_star is not None or H is not None:
        raise InvalidInputError(f"{id!r} does not take H or x_star")
    n = 1 if dim is None else int(dim)
    if n < 1:
        raise InvalidInputError("dim must be positive")

    if id == "sinsq":
        est, growth = _certify_sinsq()
        params = ClassParams(L=est.L, gamma=est.gamma, mu=est.mu, tau=est.tau, zeta=est.zeta)
        entry = CatalogueEntry(
            "sinsq", n, (-5.0, 5.0), math.inf, tuple([3.0] * n), params,
            ClassParams(L=est.L, gamma=est.gamma, mu=growth),
            f"estimate_params on {CERTIFICATION_POINTS}-point grid of [-5, 5]; L = sup|f''| = 8")
        return ObjectiveOracle(_sinsq_fun, _sinsq_grad, n, known_minimizer=np.zeros(n),
                               known_minimum=0.0, name="sinsq", info=entry)

    if id == "flat_quartic":
        radius = float(radius)
        if radius <= 0:
            raise InvalidInputError("radius must be positive")
        est = _certify_quartic(radius)
        # The grid estimate of mu is ~6 h^2 for grid spacing h: a discretisation
        # artefact of the mu = 0 regime, so it is pinned to zero.
        params = ClassParams(L=est.L, gamma=est.gamma, mu=0.0, tau=None, zeta=est.zeta)
        x0 = np.full(n, radius / math.sqrt(n))
        entry = CatalogueEntry(
            "flat_quartic", n, (-radius, radius), radius, tuple(x0), params,
            ClassParams(L=est.L, gamma=est.gamma, mu=0.0),
            f"estimate_params on {CERTIFICATION_POINTS}-point grid of [-r, r], r = {radius}; "
            "L = 12 r^2")
        return ObjectiveOracle(_quartic_fun, _quartic_grad, n, known_minimizer=np.zeros(n),
                               known_minimum=0.0, name="flat_quartic", info=entry)

    raise InvalidInputError(f"unknown objective {id!r}; expected one of {CATALOGUE_IDS}")


def default_x0(oracle: ObjectiveOracle) -> np.ndarray:
    entry = oracle.info
    if not isinstance(entry, CatalogueEntry):
        raise InvalidInputError(f"{oracle!r} has no catalogue default x0")
    return np.array(entry.default_x0, dtype=np.float64)


def certification_samples(oracle: ObjectiveOracle, n_per_axis=None) -> np.ndarray:
    """Deterministic grid over the oracle's certification box (about 10^3 points)."""
    entry = oracle.info
    if not isinstance(entry, CatalogueEntry):
        raise InvalidInputError(f"{oracle!r} has no certification box")
    n = oracle.dimension
    if n_per_axis is None:
        n_per_axis = max(2, int(round(1000 ** (1.0 / n))))
    pts = classcheck.grid(entry.box[0], entry.box[1], n_per_axis, n)
    if math.isfinite(entry.radius):
        pts = pts[np.sum(pts ** 2, axis=1) <= entry.radius ** 2 * (1 + 1e-12)]
    return pts
