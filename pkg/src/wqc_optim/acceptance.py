"""Acceptance criteria as executable checks, shared by ``bench`` and the test suite.

Each ``criterion_N`` returns a :class:`CriterionResult` made of named checks.
Envelope experiments also keep their CSV and JSON texts so ``bench`` can write
them. Every run is deterministic: fixed grids, fixed seeds, no wall-clock data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import classcheck, lqr
from .core import ClassParams
from .harness import ExperimentConfig, run_experiment_full
from .objectives import certification_samples, default_x0, make_nonconvex_test_objective
from .oqa import averaged_minimum, optimal_average
from .wes import (AGD1, AGD2, Quadratic, WesVariant, agd_run, alpha_residual, lambda_envelope,
                  phi_consistency_probe, weak_estimate_residuals)

ENVELOPE_TOL = 1e-9
CONDITION_NUMBERS = (4.0, 10.0, 100.0)
N_ITER = 500


@dataclass
class Check:
    label: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label, passed, **detail):
        self.checks.append(Check(label, bool(passed), detail))

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"criterion {self.number:2d} {status}  {self.title} ({len(self.checks)} checks"
        bad = self.failures()
        if bad:
            out += f"; failing: {', '.join(c.label for c in bad)}"
        return out + ")"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "checks": [{"label": c.label, "passed": c.passed, "detail": c.detail}
                           for c in self.checks]}


def _envelope(result: CriterionResult, label: str, config: ExperimentConfig):
    res = run_experiment_full(config, write=False)
    env = res.envelope
    result.add(label, env.ok, first_violation=env.first_violation, max_ratio=env.max_ratio,
               iterations=len(res.trajectory) - 1)
    result.outputs[label] = (res.csv_text, res.json_text)
    return res


def _diag(c):
    return ((1.0, 0.0), (0.0, float(c)))


def _quad(c):
    return make_nonconvex_test_objective("quad", H=np.diag([1.0, c]))


def criterion_1() -> CriterionResult:
    res = CriterionResult(1, "accelerated method, sublinear rate on flat_quartic")
    for dim in (1, 5):
        _envelope(res, f"flat_quartic_{dim}d",
                  ExperimentConfig("flat_quartic", "agd1", dim=dim, max_iter=N_ITER))
    return res


def criterion_2() -> CriterionResult:
    res = CriterionResult(2, "accelerated method, linear rate on diag(1, c)")
    for c in CONDITION_NUMBERS:
        _envelope(res, f"quad_c{c:g}", ExperimentConfig("quad", "agd1", H=_diag(c),
                                                        max_iter=N_ITER))
    return res


def criterion_3() -> CriterionResult:
    res = CriterionResult(3, "gradient descent rates")
    runs = [
        ("gamma_over_L_quad", ExperimentConfig("quad", "gd", stepsize_rule="gamma_over_L")),
        ("gamma_over_L_sinsq_1d", ExperimentConfig("sinsq", "gd", stepsize_rule="gamma_over_L")),
        ("gamma_over_L_sinsq_3d", ExperimentConfig("sinsq", "gd", dim=3,
                                                   stepsize_rule="gamma_over_L")),
        ("gamma_over_2L_quad", ExperimentConfig("quad", "gd", stepsize_rule="gamma_over_2L")),
        ("gamma_over_2L_sinsq_1d", ExperimentConfig("sinsq", "gd",
                                                    stepsize_rule="gamma_over_2L")),
        ("gamma_over_2L_sinsq_3d", ExperimentConfig("sinsq", "gd", dim=3,
                                                    stepsize_rule="gamma_over_2L")),
        ("one_over_L_flat_quartic_1d", ExperimentConfig("flat_quartic", "gd",
                                                        stepsize_rule="one_over_L")),
        ("one_over_L_flat_quartic_5d", ExperimentConfig("flat_quartic", "gd", dim=5,
                                                        stepsize_rule="one_over_L")),
    ]
    for label, cfg in runs:
        _envelope(res, label, cfg)
    return res


def _agd_runs():
    """Accelerated runs of criteria 1 and 2, with the second variant on the quadratics."""
    runs = []
    for dim in (1, 5):
        oracle = make_nonconvex_test_objective("flat_quartic", dim)
        runs.append((f"agd1_flat_quartic_{dim}d", oracle, oracle.info.params, AGD1))
    for c in CONDITION_NUMBERS:
        oracle = _quad(c)
        runs.append((f"agd1_quad_c{c:g}", oracle, oracle.info.params, AGD1))
        runs.append((f"agd2_quad_c{c:g}", oracle, oracle.info.wq_params, AGD2))
    out = []
    for label, oracle, params, variant in runs:
        traj = agd_run(oracle, params, default_x0(oracle), max_iter=N_ITER, variant=variant,
                       record=True, record_time=False)
        out.append((label, oracle, params, variant, traj))
    return out


def criterion_4(runs=None) -> CriterionResult:
    res = CriterionResult(4, "weak estimate sequence certificates")
    for label, oracle, params, variant, traj in runs or _agd_runs():
        cert = max(r.f - r.extras["phi_star"] - ENVELOPE_TOL * (1.0 + abs(r.extras["phi_star"]))
                   for r in traj)
        res.add(f"{label}_certificate", cert <= 0.0, worst_excess=cert)
        resid = weak_estimate_residuals(traj, oracle.known_minimum, oracle.known_minimizer)
        res.add(f"{label}_weak_estimate", float(np.max(resid)) <= ENVELOPE_TOL,
                worst_residual=float(np.max(resid)))
        lo, hi = oracle.info.box
        if math.isfinite(oracle.info.radius):
            lo, hi = -oracle.info.radius, oracle.info.radius
        probes = classcheck.halton(20, oracle.dimension, lo, hi)
        err = phi_consistency_probe(traj.meta["history"], traj.meta["gamma0"],
                                    traj.meta["phi0_star"], traj.meta["v0"],
                                    variant.effective_gamma(params.gamma), params.mu, probes)
        res.add(f"{label}_phi_probe", err <= 1e-8, max_error=err)
    return res


def criterion_5(runs=None) -> CriterionResult:
    res = CriterionResult(5, "alpha root, lambda recursion and lambda bound")
    for label, oracle, params, variant, traj in runs or _agd_runs():
        g = variant.effective_gamma(params.gamma)
        worst_alpha = 0.0
        worst_lam = 0.0
        worst_bound = -math.inf
        product = 1.0
        gamma0 = traj.meta["gamma0"]
        for prev, rec in zip(traj.records[:-1], traj.records[1:]):
            a = rec.extras["alpha"]
            gk = prev.extras["gamma_k"]
            scale = params.L * a * a / g ** 2 + gk + a * params.mu
            worst_alpha = max(worst_alpha,
                              abs(alpha_residual(a, params.L, g, params.mu, gk)) / scale)
            product *= 1.0 - a
            lam = rec.extras["lambda"]
            worst_lam = max(worst_lam, abs(lam - product) / product)
        for rec in traj:
            bound = lambda_envelope(params, gamma0, rec.k, scale=variant.scale)
            worst_bound = max(worst_bound, rec.extras["lambda"] - bound * (1.0 + ENVELOPE_TOL))
        res.add(f"{label}_alpha_residual", worst_alpha <= 1e-12, worst_scaled=worst_alpha)
        res.add(f"{label}_lambda_product", worst_lam <= 1e-15, worst_relative=worst_lam)
        res.add(f"{label}_lambda_bound", worst_bound <= 0.0, worst_excess=worst_bound)
    return res


def criterion_6() -> CriterionResult:
    res = CriterionResult(6, "quadratic-growth variant")
    cases = [("sinsq_1d", "sinsq", None, None), ("sinsq_3d", "sinsq", 3, None),
             ("sinsq_1d_x4", "sinsq", None, (4.0,)), ("quad_c10", "quad", None, None)]
    for label, obj, dim, x0 in cases:
        cfg = ExperimentConfig(obj, "agd2", dim=dim, max_iter=N_ITER,
                               x0="default" if x0 is None else x0)
        run = _envelope(res, label, cfg)
        oracle = make_nonconvex_test_objective(obj, dim)
        p = oracle.info.wq_params
        half = ClassParams.for_inequality(p.L, p.gamma / 2.0, p.mu)
        start = default_x0(oracle) if x0 is None else np.array(x0)
        base = agd_run(oracle, half, start, max_iter=N_ITER,
                       variant=WesVariant(1.0, "exact"), record_time=False)
        a, b = run.trajectory, base
        same_len = len(a) == len(b)
        diff = max((float(np.max(np.abs(ra.x - rb.x))) for ra, rb in zip(a, b)), default=0.0)
        res.add(f"{label}_matches_half_gamma", same_len and diff <= 1e-12,
                max_abs_diff=diff, lengths=[len(a), len(b)])
    return res


def _average_pairs(n=100, seed=7):
    """Deterministic quadratic pairs; centres stay within 0.35 of each other per axis
    and mu <= 1, so the grid oracle's resolution error stays below 1e-9."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        mu = float(rng.uniform(0.1, 1.0))
        ca = rng.uniform(-0.3, 0.3, 2)
        cb = ca + rng.uniform(-0.35, 0.35, 2)
        spread = 0.5 * mu * float((ca - cb) @ (ca - cb))
        # A third of the pairs have minima far apart so the weight clamps.
        scale = 3.0 if i % 3 == 0 else 0.4
        ma, mb = rng.uniform(-scale, scale, 2) * max(spread, 1e-3)
        pairs.append((Quadratic(float(ma), ca, mu), Quadratic(float(mb), cb, mu)))
    return pairs


def grid_search_average(A, B, n=10_001):
    lams = np.linspace(0.0, 1.0, n)
    d2 = float((np.asarray(A.c) - np.asarray(B.c)) @ (np.asarray(A.c) - np.asarray(B.c)))
    vals = lams * A.m + (1.0 - lams) * B.m + 0.5 * B.kappa * lams * (1.0 - lams) * d2
    i = int(np.argmax(vals))
    return float(lams[i]), float(vals[i])


def criterion_7() -> CriterionResult:
    res = CriterionResult(7, "optimal quadratic averaging")
    for c in CONDITION_NUMBERS:
        label = f"quad_c{c:g}"
        run = _envelope(res, label, ExperimentConfig("quad", "oqa", H=_diag(c), max_iter=N_ITER))
        m = np.array(run.trajectory.extra("m"))
        f_star = run.report["objective"]["f_star"]
        drops = float(np.max(m[:-1] - m[1:], initial=0.0))
        res.add(f"{label}_m_nondecreasing", drops <= 0.0, worst_drop=drops)
        res.add(f"{label}_m_below_f_star", float(np.max(m)) <= f_star + 1e-9,
                max_m=float(np.max(m)))
    worst = 0.0
    for A, B in _average_pairs():
        Q, lam = optimal_average(A, B)
        _, best = grid_search_average(A, B)
        worst = max(worst, abs(Q.m - best), abs(averaged_minimum(A, B, lam) - Q.m))
    res.add("optimal_average_vs_grid", worst <= 1e-9, worst_abs_diff=worst, pairs=100)
    return res


def _certified_positive_mu():
    """(label, oracle, W params, WQ params) for catalogue objectives with mu > 0."""
    out = []
    for label, oracle in (("quad", make_nonconvex_test_objective("quad")),
                          ("sinsq_1d", make_nonconvex_test_objective("sinsq")),
                          ("sinsq_2d", make_nonconvex_test_objective("sinsq", 2))):
        out.append((label, oracle, oracle.info.params, oracle.info.wq_params))
    return out


def criterion_8() -> CriterionResult:
    res = CriterionResult(8, "class inclusions")
    for label, oracle, w, wq in _certified_positive_mu():
        samples = certification_samples(oracle)
        xs = oracle.known_minimizer
        for name, a in (("mu_over_10", wq.mu / 10.0), ("mu", wq.mu), ("10mu", 10.0 * wq.mu)):
            rep = classcheck.check_wq_to_w_embedding(oracle, xs, wq.gamma, wq.mu, a, samples)
            res.add(f"{label}_embedding_{name}", rep.ok, violations=len(rep.violations),
                    points=rep.n_points)
        if w.mu > 0:
            rep = classcheck.check_gradient_domination_consequence(oracle, xs, w.gamma, w.mu,
                                                                   samples)
            res.add(f"{label}_gradient_domination", rep.ok, violations=len(rep.violations),
                    points=rep.n_points)
            rep = classcheck.check_quadratic_growth_consequence(
                oracle, xs, w.gamma, w.mu, samples, growth=4.0 * w.mu * w.gamma ** 2)
            res.add(f"{label}_growth_2mu_gamma2", rep.ok, violations=len(rep.violations),
                    points=rep.n_points, worst_slack=rep.worst_slack)
    return res


LQR_SAMPLE_RADIUS = {"scalar": 0.7, "two_state": 0.5}
LQR_SEED = 11


def _lqr_gains(name, problem, n=50):
    K_star = lqr.riccati_solve(problem)
    return lqr.sample_stabilizing_gains(problem, K_star, n, LQR_SAMPLE_RADIUS[name], LQR_SEED)


def central_difference_gain_grad(problem, K, h=1e-6):
    out = np.zeros_like(K)
    for idx in np.ndindex(*K.shape):
        e = np.zeros_like(K)
        e[idx] = h
        out[idx] = (lqr.lqr_cost(problem, K + e) - lqr.lqr_cost(problem, K - e)) / (2.0 * h)
    return out


def criterion_9() -> CriterionResult:
    res = CriterionResult(9, "LQR testbed")
    for name in ("scalar", "two_state"):
        problem, K0 = lqr.builtin_problem(name)
        gains = _lqr_gains(name, problem)
        worst_lyap = 0.0
        worst_grad = 0.0
        for K in gains:
            der = lqr.lqr_derived(problem, K)
            M = lqr.closed_loop(problem, K)
            W1 = problem.Qc + K.T @ problem.R @ K
            for Mx, X, W in ((M, der.X_K, W1), (M.T, der.Sigma_K, problem.Sigma0)):
                scale = np.linalg.norm(W) + np.linalg.norm(X) * (1.0 + np.linalg.norm(Mx) ** 2)
                worst_lyap = max(worst_lyap, lqr.lyapunov_residual(Mx, X, W) / scale)
            fd = central_difference_gain_grad(problem, K)
            worst_grad = max(worst_grad,
                             float(np.linalg.norm(fd - der.grad) / np.linalg.norm(der.grad)))
        res.add(f"{name}_lyapunov_residual", worst_lyap <= 1e-10, worst_scaled=worst_lyap)
        res.add(f"{name}_gradient_vs_central_differences", worst_grad <= 1e-5,
                worst_relative=worst_grad, gains=len(gains))
        K_star = lqr.riccati_solve(problem)
        der = lqr.lqr_derived(problem, K_star)
        gscale = float(np.linalg.norm(der.grad) / (1.0 + der.cost))
        res.add(f"{name}_stationary_at_riccati_gain", gscale <= 1e-8, scaled_grad_norm=gscale)
        gamma_hat, mu_hat, rep = lqr.check_lqr_wqsc(problem, gains)
        res.add(f"{name}_wqsc_at_own_estimates", rep.ok, gamma_hat=gamma_hat, mu_hat=mu_hat,
                violations=len(rep.violations), inequality_holds=rep.notes["inequality_holds"])

    problem, K0 = lqr.builtin_problem("scalar")
    params, _ = lqr.estimate_lqr_constants(problem, K0, seed=LQR_SEED)
    oracle = lqr.lqr_oracle(problem, safeguard=True)
    traj = agd_run(oracle, params, lqr.flatten_gain(K0), max_iter=200, safeguard=True,
                   record_time=False)
    gaps = traj.f_values - oracle.known_minimum
    hit = next((r.k for r, g in zip(traj, gaps) if g <= 1e-6), None)
    res.add("scalar_agd1_reaches_1e-6", hit is not None and hit <= 200, first_k=hit,
            final_gap=float(gaps[-1]))
    _envelope(res, "scalar_agd1_envelope",
              ExperimentConfig("lqr:scalar", "agd1", max_iter=200, gap_tol=1e-10,
                               seed=LQR_SEED))
    return res


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def default_suite():
    """Criteria run by ``bench --suite default`` (10 checks bench itself)."""
    return dict(CRITERIA)


__all__ = ["Check", "CriterionResult", "CRITERIA", "default_suite", "grid_search_average",
           "central_difference_gain_grad"]
