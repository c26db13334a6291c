import math

import pytest

from casimir.numerics import QuadResult, SumResult
from casimir.planar import ZeroModePolicy
from casimir.records import (
    RECORDS,
    CheckResult,
    ModeRecord,
    as_row,
    make_mode_record,
    make_pressure_record,
    schema_of,
)


def test_schemas():
    assert schema_of("pressure") == ("a", "temperature", "policy", "pressure", "pressure_a4", "error", "terms")
    assert schema_of("reflection") == ("m", "u", "p", "r_te", "r_tm", "integrand")
    assert schema_of("modes")[0] == "lambda"
    assert schema_of("validation") == ("name", "value", "tolerance", "passed")
    assert set(RECORDS) == {"pressure", "reflection", "modes", "oracle", "validation"}
    with pytest.raises(KeyError):
        schema_of("spectrum")


def test_pressure_record_from_quad_result():
    rec = make_pressure_record(gap=2.0, policy=ZeroModePolicy.PERFECT_CONDUCTOR, result=QuadResult(-0.5, 1e-12, 99))
    assert rec.a == 2.0
    assert rec.temperature == 0.0
    assert rec.policy == "perfect_conductor"
    assert rec.pressure_a4 == pytest.approx(-8.0)
    assert rec.terms == 0


def test_pressure_record_from_sum_result():
    rec = make_pressure_record(a=1.0, T=0.3, policy="lifshitz_limit", result=SumResult(-1.0, 1e-9, 17, 1e-15))
    assert rec.temperature == 0.3
    assert rec.terms == 17
    assert rec.error == 1e-9


def test_pressure_record_explicit_values():
    rec = make_pressure_record(a=1.0, policy="microscopic_zero", pressure=-2.0)
    assert rec.pressure == -2.0
    assert math.isnan(rec.error)
    assert list(as_row(rec)) == list(schema_of("pressure"))


def test_mode_record_renames_lambda():
    row = {"lambda": "TM", "l": 3, "uR": 1.0, "eps": 4.0, "alpha2_gamma": 0.1, "mu": -0.02}
    rec = make_mode_record(row=row, u=1.0)
    assert isinstance(rec, ModeRecord)
    assert rec.lam == "TM"
    out = as_row(rec)
    assert out["lambda"] == "TM" and "lam" not in out
    assert list(out) == list(schema_of("modes"))


def test_check_result_row():
    row = as_row(CheckResult("bilinear_identities", 1e-10, 1e-8, True))
    assert row == {"name": "bilinear_identities", "value": 1e-10, "tolerance": 1e-8, "passed": True}
