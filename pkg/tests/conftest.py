import functools
import logging

import pytest

from boundary_darboux.expr import parse_expression
from boundary_darboux.morse import check_and_normalize
from boundary_darboux.normal_form import run_pipeline

F_CORPUS = ("x^2+y", "x^2+y+x^3", "2*y+x^2")
OMEGA_CORPUS = ("1", "8", "exp(x)", "1+y", "exp(x)*(1+y)")
CORPUS = tuple((f, w) for w in OMEGA_CORPUS for f in F_CORPUS)


@functools.lru_cache(maxsize=None)
def problem_for(f: str, omega: str):
    return check_and_normalize(parse_expression(f), parse_expression(omega))[1]


@functools.lru_cache(maxsize=None)
def pipeline_for(f: str, omega: str, eps_max: float = 0.16):
    return run_pipeline(parse_expression(f), parse_expression(omega), eps_max=eps_max)


def case_id(case):
    return f"f={case[0]},omega={case[1]}"


@pytest.fixture(autouse=True)
def _quiet_chart_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="boundary_darboux")
