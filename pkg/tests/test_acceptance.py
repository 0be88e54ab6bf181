"""Acceptance battery: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
without -s.  The whole file takes roughly ten minutes on one core.
"""

import pytest

from qredist import acceptance as acc


@pytest.fixture(scope="module")
def qeps_runs():
    return acc.criterion_9_10()


def report(capsys, result):
    with capsys.disabled():
        print("\n" + result.line(), flush=True)
        print("    " + result.summary(), flush=True)


def test_tolerances_are_pinned():
    assert acc.SMALL_K_DELTA == 0.12
    assert acc.SMALL_K_TOL == 1e-9
    assert acc.STAGE_MARGIN_TOL == 1e-8
    assert acc.GRID_STEP == 0.01
    assert acc.GRID_MATCH_TOL == 2e-2
    assert acc.GRID_ABOVE_TOL == 1e-7
    assert acc.DMAX_FEAS_SHIFT == 1e-6
    assert acc.DMAX_INFEAS_SHIFT == 1e-3
    assert acc.PINSKER_TOL == 1e-9
    assert acc.TRIANGLE_TOL == 1e-9
    assert acc.DMAX_GE_D_TOL == 1e-8
    assert acc.DIM_BOUND_TOL == 1e-7
    assert acc.MONOTONE_TOL == 1e-7
    assert acc.DPI_TOL == 1e-9
    assert acc.MIXING_TOL == 1e-8
    assert acc.PROTOCOL_EPS == 0.15
    assert acc.BALL_RATE == 0.95
    assert acc.DUALITY_TOL == 1e-6
    assert acc.QEPS_EPS == 0.1
    assert acc.SANDWICH_TOL == 1e-6
    assert acc.DECOUPLED_QEPS_TOL == 1e-6
    assert acc.BUDGETS == {"1": 10, "2": 60, "3": 1, "4": 120, "5": 10, "6": 120, "7": 300,
                           "7-literal": 300, "8": 300, "9": 600, "10": 600, "11": 600}


def test_criterion_1_small_k(capsys):
    r = acc.criterion_1()
    report(capsys, r)
    assert r.passed


def test_criterion_2_proof_stages(capsys):
    r = acc.criterion_2()
    report(capsys, r)
    assert r.passed


def test_criterion_3_copy_count(capsys):
    r = acc.criterion_3()
    report(capsys, r)
    assert r.passed


def test_criterion_4_imax_grid(capsys):
    r = acc.criterion_4()
    report(capsys, r)
    assert r.passed


def test_criterion_5_dmax_closed_form(capsys):
    r = acc.criterion_5()
    report(capsys, r)
    assert r.passed


def test_criterion_6_inequality_battery(capsys):
    r = acc.criterion_6()
    report(capsys, r)
    assert r.passed


def test_criterion_7_splitting_end_to_end(capsys):
    r = acc.criterion_7()
    report(capsys, r)
    assert r.passed


def test_criterion_7_with_trivial_a(capsys):
    # the other reading of the layout: R, B, C qubits with A trivial
    r = acc.criterion_7_literal()
    report(capsys, r)
    assert r.passed


def test_criterion_8_merge_split_duality(capsys):
    r = acc.criterion_8()
    report(capsys, r)
    assert r.passed


def test_criterion_9_sandwich(capsys, qeps_runs):
    r = qeps_runs[0]
    report(capsys, r)
    assert r.passed


def test_criterion_10_budgets(capsys, qeps_runs):
    r = qeps_runs[1]
    report(capsys, r)
    assert r.passed


def test_criterion_11_two_copy_table(capsys):
    r = acc.criterion_11()
    report(capsys, r)
    assert r.passed is None
    table = r.details["table"]
    assert len(table) == 4
    for row in table:
        assert row["per_copy_1"] is not None and row["per_copy_2"] is not None
        assert row["cmi"] <= 2 + 1e-9
