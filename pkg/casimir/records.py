from __future__ import annotations

import inspect
import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Tuple


@dataclass(frozen=True)
class PressureRecord:

    a: float
    temperature: float
    policy: str

    pressure: float
    pressure_a4: float
    error: float

    terms: int


@dataclass(frozen=True)
class ReflectionRecord:

    m: int
    u: float
    p: float
    r_te: float
    r_tm: float
    integrand: float


@dataclass(frozen=True)
class ModeRecord:

    lam: str
    l: int
    u: float
    uR: float
    eps: float
    alpha2_gamma: float
    mu: float


@dataclass(frozen=True)
class OracleRecord:

    separation: float
    min_distance: float
    f_ab: float
    error: float
    force: float


@dataclass(frozen=True)
class CheckResult:

    name: str
    value: float
    tolerance: float
    passed: bool


# колонка в таблице -> поле записи
_RENAMES = {"lam": "lambda"}

RECORDS = {
    "pressure": PressureRecord,
    "reflection": ReflectionRecord,
    "modes": ModeRecord,
    "oracle": OracleRecord,
    "validation": CheckResult,
}


def schema_of(kind: str) -> Tuple[str, ...]:
    if kind not in RECORDS:
        raise KeyError(f"unknown table kind {kind!r}, expected one of {sorted(RECORDS)}")
    return tuple(_RENAMES.get(f.name, f.name) for f in fields(RECORDS[kind]))


def as_row(record: Any) -> Dict[str, Any]:
    return {_RENAMES.get(k, k): v for k, v in asdict(record).items()}


def _set_first(kwargs: Dict[str, Any], params: Dict[str, Any], names: List[str], value: Any) -> None:

    for n in names:
        if n in params:
            kwargs[n] = value
            return


def _first(*values: Any) -> Any:
    for v in values:
        if v is not None:
            return v
    return None


def make_pressure_record(
    *,
    a: Optional[float] = None,
    gap: Optional[float] = None,

    temperature: Optional[float] = None,
    T: Optional[float] = None,

    policy: str,

    result: Any = None,
    pressure: Optional[float] = None,
    error: Optional[float] = None,
    terms: Optional[int] = None,
) -> PressureRecord:
    """
    Pressure row from either a numerics result (QuadResult / SumResult) or
    explicit values; P a⁴ is derived here.
    """

    params = inspect.signature(PressureRecord).parameters
    kwargs: Dict[str, Any] = {}

    a = float(_first(a, gap))
    _set_first(kwargs, params, ["a", "gap"], a)
    _set_first(kwargs, params, ["temperature", "T"], float(_first(temperature, T, 0.0)))
    _set_first(kwargs, params, ["policy"], str(getattr(policy, "value", policy)))

    # результат численного интегрирования приоритетнее явных значений
    if result is not None:
        pressure = result.value
        error = result.error
        terms = getattr(result, "terms", 0)

    p = float(pressure) if pressure is not None else math.nan
    _set_first(kwargs, params, ["pressure"], p)
    _set_first(kwargs, params, ["pressure_a4"], p * a ** 4)
    _set_first(kwargs, params, ["error"], float(error) if error is not None else math.nan)
    _set_first(kwargs, params, ["terms"], int(terms or 0))

    return PressureRecord(**kwargs)


def make_mode_record(*, row: Optional[Dict[str, Any]] = None, u: float, **values: Any) -> ModeRecord:
    """ModeRecord from a spherical mode-table row; 'lambda' is accepted for lam."""
    data = dict(row or {})
    data.update(values)
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    return ModeRecord(
        lam=str(data["lam"]),
        l=int(data["l"]),
        u=float(u),
        uR=float(data["uR"]),
        eps=float(data["eps"]),
        alpha2_gamma=float(data["alpha2_gamma"]),
        mu=float(data["mu"]),
    )
