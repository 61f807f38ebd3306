import pytest

from core.exceptions import DegenerateMapError
from core.verification import SuiteSettings, VerificationSuite


@pytest.fixture
def suite():
    return VerificationSuite("quick", seed=0)


def test_suite_composition():
    quick = [name for name, _ in VerificationSuite("quick").checks()]
    full = [name for name, _ in VerificationSuite("full").checks()]
    assert quick[0] == "resultant_anchor"
    assert full[:len(quick)] == quick
    assert "quadratic_bifurcation_mass" in full and "quadratic_bifurcation_mass" not in quick
    assert SuiteSettings.named("full").scan_resolution == 512


@pytest.mark.parametrize("check", [
    "check_resultant_anchor",
    "check_resultant_homogeneity",
    "check_counting_laws",
    "check_per_n_w_oracle",
    "check_green_laws",
    "check_formula_equivalence",
])
def test_algebraic_checks_pass(suite, check):
    result = getattr(suite, check)()
    assert result.passed, result.detail


def test_mod2_algebra_check_passes(suite):
    result = suite.check_mod2_algebra()
    assert result.passed, result.detail


def test_resultant_anchor_fails_with_wrong_sign(suite, monkeypatch):
    monkeypatch.setattr("core.polyalg._anchor_sign", lambda d: -1.0)
    result = suite.check_resultant_anchor()
    assert not result.passed
    assert "2.00e+00" in result.detail


def test_run_turns_exceptions_into_failures(suite, monkeypatch):
    def broken():
        raise DegenerateMapError("lift vanishes")
    monkeypatch.setattr(suite, "checks", lambda: [("broken", broken), ("anchor", suite.check_resultant_anchor)])
    results = suite.run()
    assert [r.passed for r in results] == [False, True]
    assert results[0].detail == "DegenerateMapError: lift vanishes"


@pytest.mark.slow
def test_quick_suite_passes():
    results = VerificationSuite("quick", seed=0, workers=2).run()
    assert all(r.passed for r in results), [r for r in results if not r.passed]
