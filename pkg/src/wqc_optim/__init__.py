"""Accelerated first-order methods for weakly-quasi-convex objectives.

Functional core: :mod:`~wqc_optim.gd`, :mod:`~wqc_optim.wes` (accelerated
methods), :mod:`~wqc_optim.oqa` (quadratic averaging), class-membership checks
in :mod:`~wqc_optim.classcheck` and an LQR testbed in :mod:`~wqc_optim.lqr`.
:mod:`~wqc_optim.harness` ties them to rate envelopes and file outputs.
"""
from .classcheck import MembershipReport, estimate_params, verify_membership
from .core import ClassParams, ObjectiveOracle, Trajectory, TrajectoryRecord
from .exceptions import (DivergenceError, InstabilityError, InvalidInputError,
                         InvariantViolationError, NotStabilizableError, ParameterRegimeError)
from .gd import GdConfig, gd_run
from .harness import EnvelopeReport, ExperimentConfig, compare_algorithms, run_experiment
from .objectives import make_nonconvex_test_objective
from .oqa import oqa_run
from .wes import AGD1, AGD2, agd_run

__version__ = "0.1.0"

__all__ = [
    "ClassParams", "ObjectiveOracle", "Trajectory", "TrajectoryRecord", "MembershipReport",
    "estimate_params", "verify_membership", "GdConfig", "gd_run", "agd_run", "AGD1", "AGD2",
    "oqa_run", "make_nonconvex_test_objective", "ExperimentConfig", "EnvelopeReport",
    "run_experiment", "compare_algorithms", "InvalidInputError", "ParameterRegimeError",
    "InvariantViolationError", "DivergenceError", "InstabilityError", "NotStabilizableError",
]
