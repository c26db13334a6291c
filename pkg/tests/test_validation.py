import math

import pandas as pd
import pytest

from casimir import validation
from casimir.cli import EXIT_FAILED, EXIT_OK, run
from casimir.config import THREADS_ENV
from casimir.errors import InvariantViolation
from casimir.records import CheckResult


@pytest.mark.parametrize(
    "check",
    [
        validation.check_perfect_conductor_pressure,
        validation.check_two_plate_gamma,
        validation.check_multiplicativity,
        validation.check_mu_regularity,
        validation.check_splitting_identity,
        validation.check_series_consistency,
        validation.check_casimir_polder_exponent,
        validation.check_depolarization,
    ],
)
def test_fast_checks_pass(check):
    res = check()
    assert res.passed, res
    assert 0.0 <= res.value <= res.tolerance


def _fake_mu(monkeypatch, mu_of_delta):
    fake = lambda mode, ch: mu_of_delta(ch.eps - 1.0)
    monkeypatch.setattr(validation, "mu_sphere", fake)
    monkeypatch.setattr(validation, "perfect_conductor_mu", fake)


@pytest.mark.parametrize(
    "mu_of_delta, passed",
    [
        (lambda d: -0.2 * d / (1.0 + 0.3 * d), True),
        # слишком крутой наклон μ/δ: прежняя полоса 1e-2 такое пропускала
        (lambda d: -0.2 * d / (1.0 + 50.0 * d), False),
        # неаналитичная поправка ~√δ
        (lambda d: -0.2 * d * (1.0 + math.sqrt(d)), False),
    ],
)
def test_mu_regularity_band(monkeypatch, mu_of_delta, passed):
    _fake_mu(monkeypatch, mu_of_delta)
    assert validation.check_mu_regularity().passed is passed


def test_result_threshold():
    assert validation._result("x", 1e-9, 1e-8).passed
    assert not validation._result("x", 2e-8, 1e-8).passed
    assert not validation._result("x", math.nan, 1e-8).passed


def _broken() -> CheckResult:
    raise InvariantViolation("denominator went negative")


def test_crash_becomes_failed_check(monkeypatch):
    monkeypatch.setattr(
        validation,
        "CHECKS",
        [
            ("depolarization", validation.check_depolarization, False),
            ("broken", _broken, False),
            ("slow_one", _broken, True),
        ],
    )
    results = validation.run_validation(progress=False)
    assert [r.name for r in results] == ["lorentz_lorenz_depolarization", "broken"]
    assert results[0].passed
    assert not results[1].passed and math.isnan(results[1].value)


def test_validate_command(monkeypatch, tmp_path):
    monkeypatch.setenv(THREADS_ENV, "1")
    monkeypatch.setattr(validation, "CHECKS", [("depolarization", validation.check_depolarization, False)])
    argv = ["--root", str(tmp_path / "out"), "--logdir", str(tmp_path / "logs"), "validate"]
    assert run(argv) == EXIT_OK
    df = pd.read_csv(tmp_path / "out" / "validation.csv")
    assert df["name"].tolist() == ["lorentz_lorenz_depolarization"]
    assert bool(df["passed"].iloc[0])

    monkeypatch.setattr(validation, "CHECKS", [("broken", _broken, False)])
    assert run(argv) == EXIT_FAILED


def test_full_fast_suite():
    results = validation.run_validation(progress=False)
    assert len(results) == len([c for c in validation.CHECKS if not c[2]])
    failed = [r for r in results if not r.passed]
    assert not failed, failed


@pytest.mark.slow
def test_slab_cross_validation():
    res = validation.check_slab_cross_validation()
    assert res.passed, res
