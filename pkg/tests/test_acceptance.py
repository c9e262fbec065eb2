"""End-to-end acceptance gates, one test per criterion.

Each test runs its full criterion fixture and prints the one-line
pass/fail record before asserting, so `pytest -v -s` doubles as the
acceptance report.
"""

from strata_lab.acceptance import format_line, run_criterion


def check(number):
    rec = run_criterion(number)
    print(format_line(rec))
    assert rec.passed, rec.observed


def test_criterion_01_acceleration_integrality():
    check(1)


def test_criterion_02_zero_count_vs_acceleration():
    check(2)


def test_criterion_03_zero_symmetries():
    check(3)


def test_criterion_04_green_function_suite():
    check(4)


def test_criterion_05_riesz_decomposition():
    check(5)


def test_criterion_06_jensen_identity():
    check(6)


def test_criterion_07_riesz_mass():
    check(7)


def test_criterion_08_ids_holder():
    check(8)


def test_criterion_09_localization_diagnostics():
    check(9)


def test_criterion_10_lyapunov_convergence_rate():
    check(10)


def test_criterion_11_expansion_identity():
    check(11)


def test_criterion_12_determinism():
    check(12)
