"""Acceptance criteria, one test per criterion, each printing a pass/fail line."""
import pytest

from imdpp import verification as V

REPORT = []  # printed again in the terminal summary by conftest


def _report(result, note=""):
    line = result.line() + note
    print("\n" + line)
    REPORT.append(line)
    return result


def test_01_dr_first_hop_terms():
    assert _report(V.check_dr_terms()).passed


def test_01_negative_control_perturbed_dr_fails():
    res = _report(V.check_dr_terms(perturb=True), "  <- negative control, must FAIL")
    assert not res.passed
    assert res.detail["pi_ipad"] != pytest.approx(-0.2)


def test_02_non_monotone_instance():
    assert _report(V.check_non_monotone()).passed


def test_03_realization_submodularity():
    assert _report(V.check_realization_submodularity()).passed


def test_04_violating_greedy_half_bound():
    assert _report(V.check_greedy_bound()).passed


def test_05_smk_vs_brute_force():
    assert _report(V.check_smk_bound()).passed


def test_06_double_greedy_third_bound():
    assert _report(V.check_usm()).passed


def test_07_estimator_vs_exact():
    assert _report(V.check_estimator()).passed


def test_08_worked_example_traces():
    assert _report(V.check_examples()).passed


def test_09_dysim_dominance():
    assert _report(V.check_dominance()).passed


def test_10_approximation_spot_check():
    assert _report(V.check_approximation()).passed
