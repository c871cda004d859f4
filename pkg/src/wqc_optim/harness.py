"""Experiment configuration, envelope comparison and file outputs."""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import classcheck, lqr
from ._validation import check_point, check_scalar
from .core import ClassParams, ObjectiveOracle, Trajectory
from .exceptions import InvalidInputError
from .gd import STEPSIZE_RULES, GdConfig, distance_sq, gd_envelope, gd_run
from .objectives import (CATALOGUE_IDS, CatalogueEntry, certification_samples, default_x0,
                         make_nonconvex_test_objective)
from .oqa import oqa_envelope, oqa_run
from .wes import AGD1, AGD2, agd_run, accelerated_rate_envelope

SCHEMA_VERSION = 1
ALGORITHMS = ("gd", "agd1", "agd2", "oqa")
DOMINANCE_TOL = 1e-9
COMPARISON_EPSILONS = (1e-2, 1e-4, 1e-6)
THREADS_ENV = "WQC_OPTIM_THREADS"

_CONFIG_KEYS = {"objective", "algorithm", "params", "x0", "gamma0", "max_iter", "grad_tol",
                "gap_tol", "seed", "output_prefix", "dim", "H", "stepsize_rule", "record_time"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One algorithm run on one objective.

    ``objective`` is a catalogue id (``quad``, ``sinsq``, ``flat_quartic``),
    ``lqr:scalar`` / ``lqr:two_state``, or the path of an LQR problem file.
    ``params`` is a :class:`ClassParams`, ``"estimate"`` (run classcheck on
    the certification grid, or the sampled sublevel set for LQR), or ``None``
    for the catalogue's certified constants. Gradient descent with stepsize
    ``gamma/(2L)`` and ``agd2`` use the quadratic-growth (WQ) constants.
    Relative problem paths and ``output_prefix`` in a config file resolve
    against the file's directory.
    """

    objective: str
    algorithm: str
    params: Union[ClassParams, str, None] = None
    x0: Union[tuple, str] = "default"
    gamma0: Optional[float] = None
    max_iter: int = 500
    grad_tol: float = 0.0
    gap_tol: float = 0.0
    seed: int = 0
    output_prefix: Optional[str] = None
    dim: Optional[int] = None
    H: Optional[tuple] = None
    stepsize_rule: Optional[str] = None
    record_time: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidInputError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not isinstance(self.objective, str) or not self.objective:
            raise InvalidInputError("objective must be a non-empty string")
        if isinstance(self.params, str) and self.params != "estimate":
            raise InvalidInputError(f"params must be a mapping or 'estimate', got {self.params!r}")
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", ClassParams.from_dict(self.params))
        if isinstance(self.x0, str):
            if self.x0 != "default":
                raise InvalidInputError(f"x0 must be a point or 'default', got {self.x0!r}")
        else:
            object.__setattr__(self, "x0", tuple(float(v) for v in np.ravel(self.x0)))
        if self.H is not None:
            object.__setattr__(self, "H", tuple(tuple(float(v) for v in row) for row in self.H))
        if self.gamma0 is not None:
            check_scalar(self.gamma0, "gamma0", lower=0.0, lower_inclusive=False)
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError("max_iter must be a positive integer")
        check_scalar(self.grad_tol, "grad_tol", lower=0.0)
        check_scalar(self.gap_tol, "gap_tol", lower=0.0)
        if int(self.seed) != self.seed:
            raise InvalidInputError("seed must be an integer")
        if self.stepsize_rule is not None:
            if self.algorithm != "gd":
                raise InvalidInputError("stepsize_rule only applies to algorithm 'gd'")
            if self.stepsize_rule not in STEPSIZE_RULES or self.stepsize_rule == "fixed":
                raise InvalidInputError(
                    f"stepsize_rule {self.stepsize_rule!r} has no rate envelope; "
                    "use one_over_L, gamma_over_L or gamma_over_2L")
        if isinstance(self.params, ClassParams) and self.params.mu == 0.0:
            if self.algorithm == "oqa":
                raise InvalidInputError("oqa requires mu > 0")
            if self.stepsize_rule in ("gamma_over_L", "gamma_over_2L"):
                raise InvalidInputError(f"the {self.stepsize_rule} envelope requires mu > 0")

    @classmethod
    def from_dict(cls, data, base_dir=None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise InvalidInputError("config must be a JSON object")
        unknown = sorted(set(data) - _CONFIG_KEYS)
        if unknown:
            raise InvalidInputError(f"unknown config keys {unknown}")
        for key in ("objective", "algorithm"):
            if key not in data:
                raise InvalidInputError(f"config is missing {key!r}")
        data = dict(data)
        obj = data["objective"]
        if base_dir and isinstance(obj, str) and not _is_named_objective(obj) \
                and not os.path.isabs(obj):
            data["objective"] = os.path.join(base_dir, obj)
        prefix = data.get("output_prefix")
        if base_dir and isinstance(prefix, str) and not os.path.isabs(prefix):
            data["output_prefix"] = os.path.join(base_dir, prefix)
        return cls(**data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if isinstance(self.params, ClassParams):
            out["params"] = self.params.to_dict()
        out["x0"] = self.x0 if isinstance(self.x0, str) else list(self.x0)
        if self.H is not None:
            out["H"] = [list(row) for row in self.H]
        return out


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def _is_named_objective(obj):
    return obj in CATALOGUE_IDS or obj.startswith("lqr:")


@dataclass
class EnvelopeReport:
    """Per-iteration comparison of a measured quantity against a rate bound."""

    metric: str
    rows: list = field(default_factory=list)
    indexing: Optional[dict] = None

    @classmethod
    def build(cls, metric, measured, envelope) -> "EnvelopeReport":
        rep = cls(metric)
        for k, (m, e) in enumerate(zip(measured, envelope)):
            m, e = float(m), float(e)
            rep.rows.append((k, m, e, bool(m <= e * (1.0 + DOMINANCE_TOL))))
        return rep

    @property
    def first_violation(self) -> Optional[int]:
        for k, _, _, dominated in self.rows:
            if not dominated:
                return k
        return None

    @property
    def max_ratio(self) -> float:
        best = 0.0
        for _, m, e, _ in self.rows:
            if e > 0:
                best = max(best, m / e)
            elif m > 0:
                return math.inf
        return best

    @property
    def ok(self) -> bool:
        return self.first_violation is None

    def to_dict(self, include_rows=True) -> dict:
        out = {"metric": self.metric, "first_violation": self.first_violation,
               "max_ratio": self.max_ratio, "n_rows": len(self.rows)}
        if include_rows:
            out["rows"] = [{"k": k, "measured": m, "envelope": e, "dominated": d}
                           for k, m, e, d in self.rows]
        if self.indexing is not None:
            out["indexing"] = self.indexing
        return out


@dataclass
class ResolvedObjective:
    oracle: ObjectiveOracle
    x0: np.ndarray
    params: ClassParams
    params_source: str
    extra: dict = field(default_factory=dict)


def _uses_growth_class(config):
    return config.algorithm == "agd2" or (
        config.algorithm == "gd" and config.stepsize_rule == "gamma_over_2L")


def resolve_objective(config: ExperimentConfig) -> ResolvedObjective:
    """Build the oracle, starting point and class constants for ``config``."""
    obj = config.objective
    if obj in CATALOGUE_IDS:
        kwargs = {}
        if config.H is not None:
            if obj != "quad":
                raise InvalidInputError("H only applies to objective 'quad'")
            kwargs["H"] = np.array(config.H)
        oracle = make_nonconvex_test_objective(obj, config.dim, **kwargs)
        x0 = default_x0(oracle) if config.x0 == "default" else check_point(
            config.x0, oracle.dimension, name="x0")
        entry: CatalogueEntry = oracle.info
        growth = _uses_growth_class(config)
        if config.params is None:
            params, source = (entry.wq_params if growth else entry.params), "catalogue"
        elif config.params == "estimate":
            samples = certification_samples(oracle)
            est = classcheck.estimate_params(oracle, oracle.known_minimizer, samples,
                                             L=entry.params.L)
            if growth:
                mu = classcheck.estimate_quadratic_growth(oracle, oracle.known_minimizer, samples)
                est = ClassParams.for_inequality(est.L, est.gamma, mu)
            params, source = est, "estimated"
        else:
            params, source = config.params, "given"
        return ResolvedObjective(oracle, x0, params, source)

    if obj.startswith("lqr:"):
        problem, K0 = lqr.builtin_problem(obj[4:])
    else:
        if config.dim is not None or config.H is not None:
            raise InvalidInputError("dim and H only apply to catalogue objectives")
        if not os.path.exists(obj):
            raise InvalidInputError(f"objective {obj!r} is neither a catalogue id nor a file")
        problem, K0 = lqr.load_problem(obj)
    if config.x0 != "default":
        K0 = lqr.unflatten_gain(check_point(config.x0, problem.m * problem.n, name="x0"),
                                problem.m, problem.n)
    if not lqr.is_stabilizing(problem, K0):
        raise InvalidInputError(
            f"K0 is not stabilising: spectral radius of A - B K0 is "
            f"{lqr.spectral_radius(lqr.closed_loop(problem, K0)):.6g} >= 1")
    oracle = lqr.lqr_oracle(problem, safeguard=True)
    extra = {"K_star": lqr.flatten_gain(
        lqr.unflatten_gain(oracle.known_minimizer, problem.m, problem.n)).tolist()}
    if isinstance(config.params, ClassParams):
        params, source = config.params, "given"
    else:
        params, samples = lqr.estimate_lqr_constants(problem, K0, seed=config.seed)
        if _uses_growth_class(config):
            pts = np.array([lqr.flatten_gain(K) for K in samples])
            mu = classcheck.estimate_quadratic_growth(oracle, oracle.known_minimizer, pts)
            params = ClassParams.for_inequality(params.L, params.gamma, min(mu, params.L))
        source = "estimated"
    return ResolvedObjective(oracle, lqr.flatten_gain(K0), params, source, extra)


def _default_rule(params):
    return "gamma_over_L" if params.mu > 0 else "one_over_L"


def compute_envelope(config: ExperimentConfig, params: ClassParams, traj: Trajectory,
                     x_star, f_star) -> EnvelopeReport:
    """Measured quantity and rate bound appropriate to the algorithm and class."""
    x_star = np.asarray(x_star, dtype=np.float64)
    d0 = traj[0].x - x_star
    r0sq = float(d0 @ d0)
    ks = range(len(traj))
    f_gap = traj.f_values - f_star
    alg = config.algorithm
    if alg == "gd":
        rule = config.stepsize_rule or _default_rule(params)
        if rule == "one_over_L" and params.mu == 0.0:
            metric, measured = "f_gap", f_gap
            bound = lambda k: gd_envelope(params, "wqc_sublinear", k, r0sq)  # noqa: E731
        elif rule == "one_over_L":
            metric, measured = "f_gap", f_gap
            bound = lambda k: gd_envelope(params, "graddom_linear", k,  # noqa: E731
                                          f0gap=float(f_gap[0]))
        else:
            variant = "wqsc_linear" if rule == "gamma_over_L" else "wq_growth_linear"
            metric, measured = "dist_sq", distance_sq(traj, x_star)
            bound = lambda k: gd_envelope(params, variant, k, r0sq)  # noqa: E731
        rep = EnvelopeReport.build(metric, measured, [bound(k) for k in ks])
        # Rate bounds can be read with row k carrying index k or k+1;
        # the report uses k and records how the shifted reading fares.
        alt = EnvelopeReport.build(metric, measured, [bound(k + 1) for k in ks])
        rep.indexing = {"used": "k", "alternative": "k+1",
                        "alternative_first_violation": alt.first_violation,
                        "alternative_max_ratio": alt.max_ratio}
        return rep
    if alg == "agd1":
        if config.gamma0 is None:
            env = [accelerated_rate_envelope(params, k, r0sq) for k in ks]
        else:
            env = [r.envelope for r in traj]
        return EnvelopeReport.build("f_gap", f_gap, env)
    if alg == "agd2":
        if params.mu > 0 and config.gamma0 is None:
            rate = max(0.0, 1.0 - 0.5 * math.sqrt(params.mu * params.gamma ** 2 / params.L))
            env = [rate ** k * params.L * r0sq for k in ks]
        elif config.gamma0 is None:
            env = [accelerated_rate_envelope(params, k, r0sq, scale=4.0) for k in ks]
        else:
            env = [r.envelope for r in traj]
        return EnvelopeReport.build("f_gap", f_gap, env)
    gaps = np.array(traj.extra("gap"))
    env = [oqa_envelope(params, k, float(gaps[0])) for k in ks]
    return EnvelopeReport.build("model_gap", gaps, env)


def execute(config: ExperimentConfig, resolved: ResolvedObjective) -> Trajectory:
    oracle, params, x0 = resolved.oracle, resolved.params, resolved.x0
    alg = config.algorithm
    target = None
    if config.gap_tol > 0 and oracle.known_minimum is not None:
        target = oracle.known_minimum + config.gap_tol
    if alg in ("oqa",) or (alg == "gd" and config.stepsize_rule in ("gamma_over_L",
                                                                   "gamma_over_2L")):
        if params.mu == 0.0:
            raise InvalidInputError(f"{alg} with these settings requires mu > 0")
    if alg == "gd":
        rule = config.stepsize_rule or _default_rule(params)
        return gd_run(oracle, params, x0, GdConfig(rule, config.max_iter, config.grad_tol),
                      safeguard=True, record_time=config.record_time, target_f=target)
    if alg in ("agd1", "agd2"):
        return agd_run(oracle, params, x0, config.gamma0, config.max_iter, config.grad_tol,
                       AGD1 if alg == "agd1" else AGD2, safeguard=True,
                       record_time=config.record_time, target_f=target)
    return oqa_run(oracle, params, x0, config.max_iter, config.gap_tol,
                   record_time=config.record_time)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, round-trip floats)."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trajectory: Trajectory
    envelope: EnvelopeReport
    params: ClassParams
    params_source: str
    report: dict
    csv_text: str
    json_text: str


def run_experiment(config: ExperimentConfig, *, write: bool = True):
    """Run ``config``; returns ``(trajectory, envelope_report)``.

    With ``output_prefix`` set (and ``write``), writes ``<prefix>.csv`` and
    ``<prefix>.json``. The full result, including the serialized texts, is
    available from :func:`run_experiment_full`.
    """
    res = run_experiment_full(config, write=write)
    return res.trajectory, res.envelope


def run_experiment_full(config: ExperimentConfig, *, write: bool = True) -> ExperimentResult:
    resolved = resolve_objective(config)
    oracle = resolved.oracle
    traj = execute(config, resolved)
    f_star = oracle.known_minimum
    env = compute_envelope(config, resolved.params, traj, oracle.known_minimizer, f_star)
    for record, row in zip(traj, env.rows):
        record.envelope = row[2]
    final = traj.final
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "objective": {"name": oracle.name, "dimension": oracle.dimension,
                      "f_star": f_star, "x_star": oracle.known_minimizer},
        "params": resolved.params.to_dict(),
        "params_source": resolved.params_source,
        "x0": resolved.x0,
        "envelope": env.to_dict(),
        "final": {"k": final.k, "f": final.f, "f_gap": final.f - f_star,
                  "grad_norm": final.grad_norm},
        "oracle_calls": {"eval": oracle.eval_count, "grad": oracle.grad_count},
        "safeguard_halvings": traj.meta.get("safeguard_halvings", 0),
    }
    report.update(resolved.extra)
    csv_text = traj.to_csv()
    json_text = dumps(report)
    result = ExperimentResult(config, traj, env, resolved.params, resolved.params_source,
                              report, csv_text, json_text)
    if write and config.output_prefix:
        write_outputs(config.output_prefix, csv_text, json_text)
    return result


def write_outputs(prefix, csv_text, json_text):
    parent = os.path.dirname(os.path.abspath(prefix))
    os.makedirs(parent, exist_ok=True)
    with open(prefix + ".csv", "w", newline="") as fh:
        fh.write(csv_text)
    with open(prefix + ".json", "w") as fh:
        fh.write(json_text)


@dataclass
class ComparisonTable:
    objective: str
    epsilons: tuple
    rows: list

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "objective": self.objective,
                "epsilons": list(self.epsilons), "rows": self.rows}

    def to_text(self) -> str:
        head = ["algorithm"] + [f"eps={e:g}" for e in self.epsilons]
        lines = ["\t".join(head)]
        for row in self.rows:
            cells = [row["label"]] + ["-" if row["iterations"][str(e)] is None
                                      else str(row["iterations"][str(e)])
                                      for e in self.epsilons]
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def iterations_to_gap(traj: Trajectory, f_star: float, eps: float) -> Optional[int]:
    for record in traj:
        if record.f - f_star <= eps:
            return record.k
    return None


def _label(config):
    if config.algorithm == "gd":
        return f"gd({config.stepsize_rule or 'default'})"
    return config.algorithm


def compare_algorithms(configs, epsilons=COMPARISON_EPSILONS) -> ComparisonTable:
    """Iterations needed by each configuration to reach ``f - f* <= eps``."""
    configs = list(configs)
    if not configs:
        raise InvalidInputError("compare_algorithms needs at least one config")
    first = configs[0]
    key = (first.objective, first.dim, first.H, first.x0)
    for c in configs[1:]:
        if (c.objective, c.dim, c.H, c.x0) != key:
            raise InvalidInputError(
                f"configs must share objective and x0: {c.objective!r} vs {first.objective!r}")
    rows = []
    for c in configs:
        res = run_experiment_full(dataclasses.replace(c, output_prefix=None), write=False)
        f_star = res.report["objective"]["f_star"]
        rows.append({"label": _label(c), "algorithm": c.algorithm,
                     "params": res.params.to_dict(),
                     "iterations": {str(e): iterations_to_gap(res.trajectory, f_star, e)
                                    for e in epsilons}})
    return ComparisonTable(first.objective, tuple(epsilons), rows)


def thread_count() -> int:
    """Bench parallelism from ``WQC_OPTIM_THREADS`` (unset or 0 means CPU count)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidInputError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)
