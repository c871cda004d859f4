"""Command-line entry point: ``run``, ``verify``, ``lqr`` and ``bench``."""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import acceptance, classcheck, lqr
from .core import ClassParams
from .exceptions import InvalidInputError
from .harness import (ALGORITHMS, SCHEMA_VERSION, ExperimentConfig, dumps, load_config,
                      run_experiment_full, thread_count, write_outputs)
from .objectives import CATALOGUE_IDS, make_nonconvex_test_objective

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _summary(res) -> dict:
    return {"schema_version": SCHEMA_VERSION, "algorithm": res.config.algorithm,
            "objective": res.report["objective"]["name"], "params": res.params.to_dict(),
            "params_source": res.params_source, "final": res.report["final"],
            "envelope": res.envelope.to_dict(include_rows=False)}


def cmd_run(args) -> int:
    if not os.path.isfile(args.config):
        print(f"error: config file {args.config!r} not found", file=sys.stderr)
        return EXIT_USAGE
    config = load_config(args.config)
    res = run_experiment_full(config)
    sys.stdout.write(dumps(_summary(res)))
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.objective not in CATALOGUE_IDS:
        raise InvalidInputError(f"unknown objective {args.objective!r}")
    lo, hi = args.box
    if not lo < hi:
        raise InvalidInputError(f"empty box [{lo}, {hi}]")
    oracle = make_nonconvex_test_objective(args.objective, args.dim)
    samples = classcheck.grid(lo, hi, args.grid, oracle.dimension)
    if args.objective == "flat_quartic":
        radius = max(abs(lo), abs(hi)) * np.sqrt(oracle.dimension)
        oracle = make_nonconvex_test_objective(args.objective, args.dim, radius=radius)
    est = classcheck.estimate_params(oracle, oracle.known_minimizer, samples, L=args.L)
    params = ClassParams.for_inequality(est.L, est.gamma, est.mu, est.tau, est.zeta)
    report = classcheck.verify_membership(oracle, oracle.known_minimizer, "WQSC", params,
                                          samples)
    out = params.to_dict()
    out.update({"schema_version": SCHEMA_VERSION, "objective": args.objective,
                "dimension": oracle.dimension, "n_points": int(samples.shape[0]),
                "violations": len(report.violations), "report": report.to_dict()})
    sys.stdout.write(dumps(out))
    return EXIT_OK


def cmd_lqr(args) -> int:
    source = args.problem
    if source.startswith("lqr:"):
        problem, K0 = lqr.builtin_problem(source[4:])
        objective = source
    else:
        if not os.path.isfile(source):
            print(f"error: problem file {source!r} not found", file=sys.stderr)
            return EXIT_USAGE
        problem, K0 = lqr.load_problem(source)
        objective = os.path.abspath(source)
    if not lqr.is_stabilizing(problem, K0):
        raise InvalidInputError("K0 is not stabilising")
    params, samples = lqr.estimate_lqr_constants(problem, K0, seed=args.seed)
    gamma_hat, mu_hat, report = lqr.check_lqr_wqsc(problem, samples)
    config = ExperimentConfig(objective, args.algorithm, params=params, max_iter=args.max_iter,
                              gap_tol=args.gap_tol, seed=args.seed, output_prefix=args.out)
    res = run_experiment_full(config)
    out = _summary(res)
    out["K_star"] = res.report["K_star"]
    out["wqsc_check"] = {"gamma_hat": gamma_hat, "mu_hat": mu_hat, "ok": report.ok,
                         "violations": len(report.violations), "n_points": report.n_points,
                         "notes": report.notes}
    sys.stdout.write(dumps(out))
    return EXIT_OK


def run_bench(out_dir, threads=None, stream=None):
    """Run the default suite; writes results under ``out_dir``; returns the results."""
    stream = sys.stdout if stream is None else stream
    suite = acceptance.default_suite()
    workers = thread_count() if threads is None else threads
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(suite)))) as pool:
        futures = {n: pool.submit(fn) for n, fn in suite.items()}
        results = [futures[n].result() for n in sorted(futures)]
    # All file writes happen here, after every experiment has finished.
    os.makedirs(out_dir, exist_ok=True)
    for res in results:
        for label, (csv_text, json_text) in sorted(res.outputs.items()):
            write_outputs(os.path.join(out_dir, f"c{res.number}_{label}"), csv_text, json_text)
        stream.write(res.line() + "\n")
    summary = {"schema_version": SCHEMA_VERSION, "suite": "default",
               "passed": all(r.passed for r in results),
               "criteria": [r.to_dict() for r in results]}
    with open(os.path.join(out_dir, "bench_summary.json"), "w") as fh:
        fh.write(dumps(summary))
    return results


def cmd_bench(args) -> int:
    results = run_bench(args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wqc-optim",
                                     description="Accelerated first-order methods and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="estimate class constants on a grid")
    p.add_argument("--objective", required=True, choices=CATALOGUE_IDS)
    p.add_argument("--box", required=True, nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--grid", required=True, type=int, metavar="N")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--L", type=float, default=None, help="smoothness constant (else estimated)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lqr", help="estimate constants and optimise an LQR gain")
    p.add_argument("--problem", required=True,
                   help="problem JSON file, or lqr:scalar / lqr:two_state")
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--gap-tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output prefix for CSV and JSON")
    p.set_defaults(func=cmd_lqr)

    p = sub.add_parser("bench", help="run the acceptance suite")
    p.add_argument("--suite", required=True, choices=("default",))
    p.add_argument("--out", default="bench_out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
