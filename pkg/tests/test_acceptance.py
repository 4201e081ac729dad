"""One test per acceptance criterion.  Each prints a single pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the lines.
"""

import pytest

from wallcross import repro

# runtime budgets, in seconds, where the criterion states one
BUDGET = {"pentagon": 10.0, "hlt": 60.0, "airy": 300.0}


def _check(name):
    rep = repro.SUITES[name]()
    print(rep.line())
    assert rep.passed, rep.line()
    if name in BUDGET:
        assert rep.seconds < BUDGET[name], f"{name} took {rep.seconds:.1f}s"


def test_pentagon_identity():
    _check("pentagon")


def test_factorization_soundness():
    _check("factorization")


def test_support_form_family_bound():
    _check("support")


@pytest.mark.slow
def test_cover_calculus():
    _check("covers")


def test_connection_normalization_roundtrip():
    _check("hlt")


def test_airy_resurgence():
    _check("airy")


def test_psi_series_convergence():
    _check("psi")


def test_gluing_and_normal_form():
    _check("ecalle")


def test_growth_estimation():
    _check("growth")
