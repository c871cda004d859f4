"""Shared numeric types: the objective oracle, class constants and trajectories.

Points are plain 1-D ``float64`` numpy arrays. Norms are Euclidean and inner
products are the standard dot product throughout the package.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from ._validation import check_point, check_scalar, check_symmetric
from .exceptions import InvalidInputError

__all__ = [
    "ObjectiveOracle",
    "ClassParams",
    "TrajectoryRecord",
    "Trajectory",
    "make_quadratic_objective",
    "finite_difference_gradient",
]


class ObjectiveOracle:
    """First-order oracle for a smooth objective ``f: R^n -> R``.

    Parameters
    ----------
    fun, grad : callable
        Value and gradient maps. They must be deterministic.
    dimension : int
    known_minimizer, known_minimum : optional
        Reference solution used for envelopes and class checks.
    name : str, optional
    info : object, optional
        Free-form metadata (the catalogue attaches its entry here).

    Counters ``eval_count`` and ``grad_count`` go up by one per call. Apart from
    the counters an oracle is immutable; use :meth:`clone` to give each run a
    private copy.
    """

    def __init__(self, fun: Callable, grad: Callable, dimension: int, *,
                 known_minimizer=None, known_minimum=None, name=None, info=None):
        if isinstance(dimension, bool) or int(dimension) != dimension or dimension < 1:
            raise InvalidInputError(f"dimension must be a positive integer, got {dimension!r}")
        self._fun = fun
        self._grad = grad
        self.dimension = int(dimension)
        self.known_minimizer = (None if known_minimizer is None
                                else check_point(known_minimizer, self.dimension,
                                                 name="known_minimizer"))
        self.known_minimum = None if known_minimum is None else float(known_minimum)
        self.name = name
        self.info = info
        self.eval_count = 0
        self.grad_count = 0

    def _coerce(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise InvalidInputError(
                f"point has shape {x.shape}, oracle expects ({self.dimension},)")
        return x

    def eval(self, x) -> float:
        x = self._coerce(x)
        self.eval_count += 1
        return float(self._fun(x))

    __call__ = eval

    def grad(self, x) -> np.ndarray:
        x = self._coerce(x)
        self.grad_count += 1
        g = np.array(self._grad(x), dtype=np.float64).reshape(-1)
        if g.shape != (self.dimension,):
            raise InvalidInputError(f"gradient has shape {g.shape}, expected ({self.dimension},)")
        return g

    def clone(self) -> "ObjectiveOracle":
        """Copy sharing the (immutable) maps, with counters reset to zero."""
        return ObjectiveOracle(self._fun, self._grad, self.dimension,
                               known_minimizer=self.known_minimizer,
                               known_minimum=self.known_minimum,
                               name=self.name, info=self.info)

    def reset_counters(self) -> None:
        self.eval_count = 0
        self.grad_count = 0

    def __repr__(self):
        return f"ObjectiveOracle(name={self.name!r}, dimension={self.dimension})"


@dataclass(frozen=True)
class ClassParams:
    """Smoothness and weak-quasi-convexity constants ``(L, gamma, mu)``.

    ``tau`` is the gradient-domination constant and ``zeta`` the constant of
    the gradient-norm growth condition; both are optional.
    """

    L: float
    gamma: float
    mu: float = 0.0
    tau: Optional[float] = None
    zeta: Optional[float] = None

    def __post_init__(self):
        self._check(bound_mu=True)

    def _check(self, bound_mu):
        check_scalar(self.L, "L", lower=0.0, lower_inclusive=False)
        check_scalar(self.gamma, "gamma", lower=0.0, upper=1.0, lower_inclusive=False)
        check_scalar(self.mu, "mu", lower=0.0)
        if bound_mu and self.mu > self.L:
            raise InvalidInputError(f"mu={self.mu} exceeds L={self.L}")
        if self.tau is not None:
            check_scalar(self.tau, "tau", lower=0.0, lower_inclusive=False)
        if self.zeta is not None:
            check_scalar(self.zeta, "zeta", lower=0.0, lower_inclusive=False)

    @classmethod
    def for_inequality(cls, L, gamma, mu, tau=None, zeta=None) -> "ClassParams":
        """Constants for a pure class inequality, where ``mu`` may exceed ``L``.

        The class inequalities themselves never involve ``L``; embeddings such as
        ``a = 10 mu`` legitimately produce a curvature constant above it.
        """
        obj = object.__new__(cls)
        for key, value in dict(L=L, gamma=gamma, mu=mu, tau=tau, zeta=zeta).items():
            object.__setattr__(obj, key, None if value is None else float(value))
        obj._check(bound_mu=False)
        return obj

    def to_dict(self) -> dict:
        return {"L": self.L, "gamma": self.gamma, "mu": self.mu,
                "tau": self.tau, "zeta": self.zeta}

    @classmethod
    def from_dict(cls, data) -> "ClassParams":
        unknown = set(data) - {"L", "gamma", "mu", "tau", "zeta"}
        if unknown:
            raise InvalidInputError(f"unknown ClassParams keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidInputError(str(exc)) from None


@dataclass
class TrajectoryRecord:
    k: int
    x: np.ndarray
    f: float
    grad_norm: float
    envelope: Optional[float] = None
    wall_nanos: int = 0
    extras: dict = field(default_factory=dict)


CSV_HEADER = ("k", "f", "grad_norm", "envelope", "wall_nanos")


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


class Trajectory:
    """Per-iteration log of a run. ``k`` is strictly increasing from 0."""

    def __init__(self, records=None, meta=None):
        self.records: list[TrajectoryRecord] = []
        self.meta: dict = dict(meta or {})
        for rec in records or ():
            self.append(rec)

    def append(self, record: TrajectoryRecord) -> None:
        expected = self.records[-1].k + 1 if self.records else 0
        if record.k != expected:
            raise InvalidInputError(f"record k={record.k} out of order, expected {expected}")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def f_values(self) -> np.ndarray:
        return np.array([r.f for r in self.records])

    @property
    def iterates(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    def extra(self, key) -> list:
        return [r.extras.get(key) for r in self.records]

    def to_csv(self, target=None) -> str:
        """Write ``k,f,grad_norm,envelope,wall_nanos`` rows; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.records:
            writer.writerow([r.k, _fmt(r.f), _fmt(r.grad_norm), _fmt(r.envelope),
                             int(r.wall_nanos)])
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def make_quadratic_objective(H, x_star) -> ObjectiveOracle:
    """Oracle for ``f(x) = 0.5 (x - x_star)^T H (x - x_star)``."""
    H = check_symmetric(H, name="H")
    x_star = check_point(x_star, name="x_star")
    if H.shape[0] != x_star.shape[0]:
        raise InvalidInputError(f"H is {H.shape} but x_star has length {x_star.shape[0]}")
    eig = np.linalg.eigvalsh(H)
    if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
        raise InvalidInputError(f"H is not positive semidefinite (min eigenvalue {eig[0]:.3g})")
    H = H.copy()
    H.setflags(write=False)
    xs = x_star.copy()

    def fun(x):
        d = x - xs
        return 0.5 * float(d @ H @ d)

    def grad(x):
        return H @ (x - xs)

    oracle = ObjectiveOracle(fun, grad, H.shape[0], known_minimizer=xs, known_minimum=0.0,
                             name="quad")
    oracle.hessian = H
    return oracle


def finite_difference_gradient(oracle: ObjectiveOracle, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient, one coordinate at a time."""
    h = check_scalar(h, "h", lower=0.0, lower_inclusive=False)
    x = check_point(x, oracle.dimension)
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (oracle.eval(x + e) - oracle.eval(x - e)) / (2.0 * h)
    return out


def sqnorm(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(v @ v)


def norm(v) -> float:
    return math.sqrt(sqnorm(v))
