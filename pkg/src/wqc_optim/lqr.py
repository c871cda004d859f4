"""Discrete-time LQR as a policy-optimisation testbed.

For a static gain ``K`` the closed loop is ``x_{t+1} = (A - B K) x_t`` and the
cost is ``f(K) = trace(X_K Sigma0)`` where ``X_K`` solves

    (A - BK)^T X (A - BK) - X + Q + K^T R K = 0.

The gradient is ``2 [(R + B^T X_K B) K - B^T X_K A] Sigma_K`` with ``Sigma_K``
the closed-loop state covariance. Gains are flattened row-major when exposed
as an :class:`~wqc_optim.core.ObjectiveOracle`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import classcheck
from ._validation import check_matrix, check_symmetric
from .core import ClassParams, ObjectiveOracle
from .exceptions import InstabilityError, InvalidInputError, NotStabilizableError

STABILITY_MARGIN = 1e-9
RICCATI_TOL = 1e-12
RICCATI_MAX_ITER = 100_000
UNSTABLE_VALUE = 1e300


@dataclass(frozen=True)
class LqrProblem:
    A: np.ndarray
    B: np.ndarray
    Qc: np.ndarray
    R: np.ndarray
    Sigma0: np.ndarray

    def __post_init__(self):
        A = check_matrix(self.A, name="A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise InvalidInputError(f"A must be square, got {A.shape}")
        B = check_matrix(self.B, (n, None), name="B")
        m = B.shape[1]
        Qc = check_symmetric(self.Qc, name="Q")
        R = check_symmetric(self.R, name="R")
        S0 = check_symmetric(self.Sigma0, name="Sigma0")
        if Qc.shape != (n, n) or R.shape != (m, m) or S0.shape != (n, n):
            raise InvalidInputError(
                f"dimension mismatch: Q {Qc.shape}, R {R.shape}, Sigma0 {S0.shape} "
                f"for n={n}, m={m}")
        if np.linalg.eigvalsh(Qc)[0] < -1e-12:
            raise InvalidInputError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(R)[0] <= 0:
            raise InvalidInputError("R must be positive definite")
        if np.linalg.eigvalsh(S0)[0] <= 0:
            raise InvalidInputError("Sigma0 must be positive definite")
        for name, val in (("A", A), ("B", B), ("Qc", Qc), ("R", R), ("Sigma0", S0)):
            val = val.copy()
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def to_dict(self, K0=None) -> dict:
        out = {"A": self.A.tolist(), "B": self.B.tolist(), "Q": self.Qc.tolist(),
               "R": self.R.tolist(), "Sigma0": self.Sigma0.tolist()}
        if K0 is not None:
            out["K0"] = np.asarray(K0, dtype=float).tolist()
        return out


PROBLEM_KEYS = ("A", "B", "Q", "R", "Sigma0", "K0")


def problem_from_dict(data):
    """Parse the problem file layout; returns ``(problem, K0)``."""
    if not isinstance(data, dict):
        raise InvalidInputError("LQR problem must be a JSON object")
    missing = [k for k in PROBLEM_KEYS if k not in data]
    extra = sorted(set(data) - set(PROBLEM_KEYS))
    if missing or extra:
        raise InvalidInputError(f"LQR problem keys: missing {missing}, unexpected {extra}")
    problem = LqrProblem(data["A"], data["B"], data["Q"], data["R"], data["Sigma0"])
    K0 = check_matrix(data["K0"], (problem.m, problem.n), name="K0")
    return problem, K0


def load_problem(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from None
    return problem_from_dict(data)


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(M, dtype=np.float64)))))


def solve_discrete_lyapunov(M, W) -> np.ndarray:
    """Solve ``M^T X M - X + W = 0`` by the vectorised (Kronecker) linear system.

    Cost is O(n^6); intended for n up to about 30.
    """
    M = check_matrix(M, name="M")
    n = M.shape[0]
    if M.shape != (n, n):
        raise InvalidInputError(f"M must be square, got {M.shape}")
    W = check_symmetric(W, name="W", rtol=1e-10)
    if W.shape != (n, n):
        raise InvalidInputError(f"W has shape {W.shape}, expected {(n, n)}")
    rho = spectral_radius(M)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise InstabilityError(f"spectral radius {rho:.12g} >= 1: Lyapunov equation unsolvable")
    # Row-major vec: vec(M^T X M) = (M^T kron M^T) vec(X).
    Mt = M.T
    lhs = np.eye(n * n) - np.kron(Mt, Mt)
    X = np.linalg.solve(lhs, W.reshape(-1)).reshape(n, n)
    return 0.5 * (X + X.T)


def lyapunov_residual(M, X, W) -> float:
    M = np.asarray(M, dtype=np.float64)
    return float(np.linalg.norm(M.T @ X @ M - X + W, "fro"))


@dataclass(frozen=True)
class LqrDerived:
    X_K: np.ndarray
    Sigma_K: np.ndarray
    cost: float
    grad: np.ndarray


def _gain(problem, K):
    K = check_matrix(K, (problem.m, problem.n), name="K")
    return K


def closed_loop(problem: LqrProblem, K) -> np.ndarray:
    return problem.A - problem.B @ _gain(problem, K)


def lqr_derived(problem: LqrProblem, K) -> LqrDerived:
    K = _gain(problem, K)
    M = problem.A - problem.B @ K
    rho = spectral_radius(M)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise InstabilityError(f"gain is not stabilising: spectral radius {rho:.12g}")
    X = solve_discrete_lyapunov(M, problem.Qc + K.T @ problem.R @ K)
    Sigma = solve_discrete_lyapunov(M.T, problem.Sigma0)
    cost = float(np.trace(X @ problem.Sigma0))
    E = (problem.R + problem.B.T @ X @ problem.B) @ K - problem.B.T @ X @ problem.A
    return LqrDerived(X, Sigma, cost, 2.0 * E @ Sigma)


def lqr_cost(problem: LqrProblem, K) -> float:
    K = _gain(problem, K)
    M = problem.A - problem.B @ K
    X = solve_discrete_lyapunov(M, problem.Qc + K.T @ problem.R @ K)
    return float(np.trace(X @ problem.Sigma0))


def lqr_grad(problem: LqrProblem, K) -> np.ndarray:
    return lqr_derived(problem, K).grad


def riccati_solve(problem: LqrProblem) -> np.ndarray:
    """Optimal gain by fixed-point iteration of the discrete Riccati map from ``P = Q``."""
    A, B, Qc, R = problem.A, problem.B, problem.Qc, problem.R
    P = Qc.copy()
    for _ in range(RICCATI_MAX_ITER):
        BtPA = B.T @ P @ A
        P_new = Qc + A.T @ P @ A - BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA)
        P_new = 0.5 * (P_new + P_new.T)
        if not np.all(np.isfinite(P_new)):
            break
        delta = np.linalg.norm(P_new - P, "fro")
        P = P_new
        if delta <= RICCATI_TOL * max(1.0, np.linalg.norm(P, "fro")):
            K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
            if spectral_radius(A - B @ K) >= 1.0:
                raise NotStabilizableError("Riccati fixed point is not stabilising")
            return K
    raise NotStabilizableError(f"Riccati iteration did not converge in {RICCATI_MAX_ITER} steps")


def flatten_gain(K) -> np.ndarray:
    return np.asarray(K, dtype=np.float64).reshape(-1).copy()


def unflatten_gain(coords, m, n) -> np.ndarray:
    return np.asarray(coords, dtype=np.float64).reshape(m, n).copy()


def lqr_oracle(problem: LqrProblem, safeguard: bool = False) -> ObjectiveOracle:
    """Oracle over row-major flattened gains.

    With ``safeguard`` an unstable gain evaluates to ``1e300`` instead of
    raising, so line searches and safeguarded steps can back off; the gradient
    always raises :class:`InstabilityError` there.
    """
    m, n = problem.m, problem.n
    K_star = riccati_solve(problem)

    def fun(k):
        K = k.reshape(m, n)
        if safeguard and spectral_radius(problem.A - problem.B @ K) >= 1.0 - STABILITY_MARGIN:
            return UNSTABLE_VALUE
        return lqr_cost(problem, K)

    def grad(k):
        return lqr_grad(problem, k.reshape(m, n)).reshape(-1)

    return ObjectiveOracle(fun, grad, m * n, known_minimizer=flatten_gain(K_star),
                           known_minimum=lqr_cost(problem, K_star), name="lqr",
                           info={"problem": problem, "safeguard": safeguard})


def is_stabilizing(problem: LqrProblem, K) -> bool:
    return spectral_radius(closed_loop(problem, K)) < 1.0 - STABILITY_MARGIN


def sample_stabilizing_gains(problem: LqrProblem, center, n_samples, radius, seed=0,
                             max_cost=None) -> list:
    """Gains drawn uniformly from a Frobenius ball around ``center``, kept if stabilising.

    With ``max_cost`` only gains in the sublevel set ``f(K) <= max_cost`` are kept.
    """
    rng = np.random.default_rng(seed)
    center = _gain(problem, center)
    out = []
    tries = 0
    while len(out) < n_samples:
        tries += 1
        if tries > 1000 * n_samples:
            raise InvalidInputError("could not draw enough stabilising gains; shrink the radius")
        d = rng.standard_normal(center.shape)
        d *= radius * rng.random() ** (1.0 / d.size) / np.linalg.norm(d)
        K = center + d
        if not is_stabilizing(problem, K):
            continue
        if max_cost is not None and lqr_cost(problem, K) > max_cost:
            continue
        out.append(K)
    return out


def _gain_inequality_terms(problem, K, K_star, f_star, Y_norm):
    der = lqr_derived(problem, K)
    S = problem.R + problem.B.T @ der.X_K @ problem.B
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    dK = K - K_star
    inner = float(np.sum(der.grad * dK))
    return der.cost, inner, float(np.sum(dK * dK)), eig[0], eig[-1]


def check_lqr_wqsc(problem: LqrProblem, samples, *, L=None, tol=classcheck.DEFAULT_TOL):
    """Numerically examine weak-quasi-convexity of the LQR cost on sampled gains.

    Returns ``(gamma_hat, mu_hat, report)``: the constants from
    :func:`~wqc_optim.classcheck.estimate_params` on the flattened oracle and
    the WQSC membership report at those constants. ``report.notes`` also
    records, for the bound

        f(K*) >= f(K) + c <grad f(K), K - K*> + lam(R + B^T X_K B) |K - K*|_F^2,

    with ``c = |Sigma_{K*}|_2``, how many samples violate it using the smallest
    and the largest eigenvalue for ``lam``, both as printed and with the inner
    product sign flipped to ``<grad f(K), K* - K>``, plus the smallest
    coefficient ``c`` that would make the sign-flipped form hold with the
    smallest eigenvalue. Samples that all equal ``K*`` give ``(1, 0)``.
    """
    K_star = riccati_solve(problem)
    f_star = lqr_cost(problem, K_star)
    Sigma_star = lqr_derived(problem, K_star).Sigma_K
    Y_norm = float(np.linalg.norm(Sigma_star, 2))
    gains = []
    for i, K in enumerate(samples):
        K = _gain(problem, K)
        if not is_stabilizing(problem, K):
            raise InstabilityError(f"sample {i} is not stabilising: {K.tolist()}")
        gains.append(K)
    if not gains:
        raise InvalidInputError("samples are empty")

    counts = {"literal_min": 0, "literal_max": 0, "flipped_min": 0, "flipped_max": 0}
    needed = 0.0
    for K in gains:
        cost, inner, dist_sq, lo, hi = _gain_inequality_terms(problem, K, K_star, f_star, Y_norm)
        for key, lam_ in (("min", lo), ("max", hi)):
            if f_star < cost + Y_norm * inner + lam_ * dist_sq - tol:
                counts["literal_" + key] += 1
            if f_star < cost - Y_norm * inner + lam_ * dist_sq - tol:
                counts["flipped_" + key] += 1
        if inner > 0:
            needed = max(needed, (cost - f_star + lo * dist_sq) / inner)

    oracle = lqr_oracle(problem)
    pts = np.array([flatten_gain(K) for K in gains])
    x_star = flatten_gain(K_star)
    if np.all(pts == x_star):
        # Every inequality reads 0 <= 0; any constants are certified.
        est = ClassParams.for_inequality(1.0 if L is None else L, 1.0, 0.0)
    else:
        est = classcheck.estimate_params(oracle, x_star, pts, L=L)
    params = ClassParams.for_inequality(est.L, est.gamma, est.mu)
    report = classcheck.verify_membership(oracle, x_star, "WQSC", params, pts, tol)
    report.notes.update({
        "Y_star_norm": Y_norm,
        "inequality_violations": counts,
        "inequality_holds": {k: v == 0 for k, v in counts.items()},
        "smallest_fitting_coefficient": needed,
        "estimated": est.to_dict(),
    })
    return est.gamma, est.mu, report


def estimate_lqr_constants(problem: LqrProblem, K0, n_samples=200, seed=0, n_directions=4):
    """Constants for running the first-order methods on ``f(K)``.

    Samples the sublevel set ``{K : f(K) <= f(K0)}`` (by rejection from a ball
    around ``K*`` reaching ``K0``). ``L`` is the largest directional curvature
    seen through finite-difference gradients along random directions;
    ``(gamma, mu)`` come from :func:`check_lqr_wqsc` on the same samples.
    Returns ``(params, samples)``.
    """
    K0 = _gain(problem, K0)
    if not is_stabilizing(problem, K0):
        raise InvalidInputError(f"K0 is not stabilising: {K0.tolist()}")
    K_star = riccati_solve(problem)
    f0 = lqr_cost(problem, K0)
    radius = max(float(np.linalg.norm(K0 - K_star)), 1e-3) * 1.5
    samples = sample_stabilizing_gains(problem, K_star, n_samples, radius, seed, max_cost=f0)
    rng = np.random.default_rng(seed + 1)
    h = 1e-6
    L_hat = 0.0
    for K in samples + [K0, K_star]:
        g = lqr_grad(problem, K)
        for _ in range(n_directions):
            d = rng.standard_normal(K.shape)
            d /= np.linalg.norm(d)
            Kp = K + h * d
            if not is_stabilizing(problem, Kp):
                continue
            L_hat = max(L_hat, float(np.linalg.norm(lqr_grad(problem, Kp) - g)) / h)
    gamma_hat, mu_hat, _ = check_lqr_wqsc(problem, samples, L=L_hat)
    mu_hat = min(mu_hat, L_hat)
    return ClassParams(L=L_hat, gamma=gamma_hat, mu=mu_hat), samples


SCALAR_PROBLEM = {"A": [[0.5]], "B": [[1.0]], "Q": [[1.0]], "R": [[1.0]], "Sigma0": [[1.0]],
                  "K0": [[0.0]]}
TWO_STATE_PROBLEM = {"A": [[0.9, 0.3], [0.0, 0.8]], "B": [[0.0], [1.0]],
                     "Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0]],
                     "Sigma0": [[1.0, 0.2], [0.2, 1.0]], "K0": [[0.0, 0.0]]}


def builtin_problem(name):
    """``"scalar"`` or ``"two_state"``; returns ``(problem, K0)``."""
    table = {"scalar": SCALAR_PROBLEM, "two_state": TWO_STATE_PROBLEM}
    if name not in table:
        raise InvalidInputError(f"unknown builtin LQR problem {name!r}")
    return problem_from_dict(table[name])
