"""Boundary Morse-Darboux normal form: compute and certify a chart (p, q) with
omega = dp^dq, f = alpha(p^2 + q) and the boundary {y = 0} sent to {q = 0}."""

from .area import AlphaFunction, AreaProfile, area_below, build_profile
from .expr import ScalarExpression, evaluate, evaluate_jet2, parse_expression
from .flow import LevelChart
from .morse import HypothesisReport, NormalizedProblem, check_and_normalize, check_hypotheses
from .normal_form import GridSpec, NormalFormChart, VerificationReport, build_chart, run_pipeline, verify
from .numerics import ToleranceConfig

__version__ = "0.1.0"

__all__ = [
    "AlphaFunction",
    "AreaProfile",
    "GridSpec",
    "HypothesisReport",
    "LevelChart",
    "NormalFormChart",
    "NormalizedProblem",
    "ScalarExpression",
    "ToleranceConfig",
    "VerificationReport",
    "area_below",
    "build_chart",
    "build_profile",
    "check_and_normalize",
    "check_hypotheses",
    "evaluate",
    "evaluate_jet2",
    "parse_expression",
    "run_pipeline",
    "verify",
]
