from __future__ import annotations

import logging
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from casimir import config as cfgmod
from casimir.config import ScenarioConfig
from casimir.dipole_oracle import force_between, total_free_energy, translate
from casimir.planar import channel_rows, pressure
from casimir.records import (
    OracleRecord,
    ReflectionRecord,
    as_row,
    make_mode_record,
    make_pressure_record,
    schema_of,
)
from casimir.spherical import BallChannel, mode_table
from storage.local import LocalStorage

log = logging.getLogger("casimir.scenarios")

# l-tail ratio above which a mode table is reported as truncated
TAIL_WARN = 1e-6


@dataclass
class ScenarioResult:
    kind: str
    table: str
    rows: List[Dict[str, Any]]
    error: float = 0.0
    formulas: Tuple[str, ...] = ()
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def schema(self) -> Tuple[str, ...]:
        return schema_of(self.table)


@contextmanager
def _executor(workers: int) -> Iterator[Optional[Executor]]:
    if workers <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="casimir") as ex:
        yield ex


def _progress(values, desc: str):
    return tqdm(values, desc=desc, leave=False, disable=len(values) < 2)


def _pressure_row(cfg: ScenarioConfig, gap: Optional[float], T: Optional[float], ex: Optional[Executor]):
    cavity = cfgmod.cavity_from_config(cfg, gap)
    if T is not None:
        cavity = cavity.with_temperature(T)
    res = pressure(cavity, cfgmod.quad_spec(cfg), cfgmod.sum_spec(cfg), ex)
    return make_pressure_record(a=cavity.gap, temperature=cavity.temperature, policy=cavity.m0_te_policy, result=res)


_PLANAR_FORMULAS = ("fresnel_reflection", "round_trip_loop_factor", "lifshitz_pressure", "matsubara_sum", "lorentz_lorenz")


def run_pressure(cfg: ScenarioConfig, ex: Optional[Executor] = None) -> ScenarioResult:
    rec = _pressure_row(cfg, None, None, ex)
    return ScenarioResult("pressure", "pressure", [as_row(rec)], rec.error, _PLANAR_FORMULAS)


def run_temperature_sweep(cfg: ScenarioConfig, ex: Optional[Executor] = None) -> ScenarioResult:
    what, values = cfgmod.sweep_values(cfg)
    rows = []
    worst = 0.0
    for v in _progress(values, f"sweep {what}"):
        if what == "a":
            rec = _pressure_row(cfg, float(v), None, ex)
        else:
            rec = _pressure_row(cfg, None, float(v), ex)
        rows.append(as_row(rec))
        worst = max(worst, rec.error)
    return ScenarioResult("temperature_sweep", "pressure", rows, worst, _PLANAR_FORMULAS, {"sweep": what})


def run_reflection_table(cfg: ScenarioConfig, ex: Optional[Executor] = None) -> ScenarioResult:
    m_max = cfg.get_int("reflection", "m_max", minimum=0)
    ps = cfgmod.grid(cfg, "reflection", "p_min", "p_max", "p_count")
    gap = cfg.get_float("geometry", "a", default=1.0, positive=True)
    cavity = cfgmod.cavity_from_config(cfg, gap)
    rows = [as_row(ReflectionRecord(**r)) for r in channel_rows(cavity, m_max, ps)]
    return ScenarioResult(
        "reflection_table",
        "reflection",
        rows,
        0.0,
        ("fresnel_reflection", "zero_mode_policy", "round_trip_loop_factor", "lorentz_lorenz"),
    )


def run_sphere_modes(cfg: ScenarioConfig, ex: Optional[Executor] = None) -> ScenarioResult:
    R = cfg.get_float("ball", "radius", positive=True)
    model = cfgmod.model_from_section(cfg, "ball")
    l_max = cfg.get_int("numerics", "l_max", default=60, minimum=1)
    spacing = cfg.get_str("ball", "spacing", default="linear", choices=cfgmod.SPACINGS)
    us = cfgmod.grid(cfg, "ball", "u_min", "u_max", "u_count", spacing)

    def one(u: float):
        channel = BallChannel.from_model(R, float(u), model)
        return float(u), mode_table(channel, l_max)

    if ex is not None:
        results = list(ex.map(one, us))
    else:
        results = [one(u) for u in _progress(us, "sphere")]

    rows = []
    tails: Dict[str, float] = {}
    reached: Dict[str, int] = {}
    for u, (table, tail, last_l) in results:
        rows.extend(as_row(make_mode_record(row=r, u=u)) for r in table)
        for lam, l in last_l.items():
            reached[lam] = min(reached.get(lam, l_max), l)
            if l < l_max:
                log.warning(f"[sphere_modes] u={u:.4g} {lam}: table stops at l={l} < l_max={l_max}")
        for lam, t in tail.items():
            tails[lam] = max(tails.get(lam, 0.0), t)
            if t > TAIL_WARN:
                log.warning(f"[sphere_modes] u={u:.4g} {lam}: l-tail {t:.2e} > {TAIL_WARN:.0e}, raise l_max")
    return ScenarioResult(
        "sphere_modes",
        "modes",
        rows,
        max(tails.values(), default=0.0),
        ("spherical_bessel_scaled", "bilinear_forms", "mode_gamma", "scattering_coefficient"),
        {"l_tail": tails, "l_reached": reached, "truncated": any(l < l_max for l in reached.values())},
    )


_AXES = {"x": 0, "y": 1, "z": 2}


def run_oracle(cfg: ScenarioConfig, ex: Optional[Executor] = None) -> ScenarioResult:
    storage = LocalStorage(root=str(Path(cfg.path).parent))
    a = cfgmod.lattice_from_section(cfg, "lattice_a", storage)
    b0 = cfgmod.lattice_from_section(cfg, "lattice_b", storage)
    axis = cfg.get_str("oracle", "axis", default="z", choices=tuple(_AXES))
    h = cfg.get_float("oracle", "h", default=0.0, minimum=0.0)
    T = cfg.get_float("geometry", "temperature", default=0.0, minimum=0.0)
    spec = cfgmod.quad_spec(cfg)
    sspec = cfgmod.sum_spec(cfg)

    rows = []
    worst = 0.0
    for s in _progress(cfg.get_floats("oracle", "separations"), "oracle"):
        shift = np.zeros(3)
        shift[_AXES[axis]] = s
        b = translate(b0, shift)
        dmin = float(np.min(np.linalg.norm(a.sites[:, None, :] - b.sites[None, :, :], axis=-1)))
        res = total_free_energy((a, b), T, spec, sspec, ex)
        force = force_between(a, b, axis, h, T, "B", spec, sspec, ex) if h > 0 else math.nan
        rows.append(as_row(OracleRecord(s, dmin, res.value, res.error, force)))
        worst = max(worst, res.error)
    return ScenarioResult(
        "oracle_run",
        "oracle",
        rows,
        worst,
        ("dyadic_kernel", "coupling_logdet", "split_free_energy", "frequency_integral"),
        {"n_a": len(a), "n_b": len(b0)},
    )


def run_validate(cfg: ScenarioConfig, ex: Optional[Executor] = None, slow: bool = False) -> ScenarioResult:
    from casimir.validation import run_validation

    checks = run_validation(slow=slow)
    rows = [as_row(c) for c in checks]
    failed = [c.name for c in checks if not c.passed]
    return ScenarioResult(
        "validate",
        "validation",
        rows,
        0.0,
        ("property_suite",),
        {"failed": failed, "slow": slow},
    )


RUNNERS: Dict[str, Callable[..., ScenarioResult]] = {
    "pressure": run_pressure,
    "temperature_sweep": run_temperature_sweep,
    "reflection_table": run_reflection_table,
    "sphere_modes": run_sphere_modes,
    "oracle_run": run_oracle,
    "validate": run_validate,
}


def _manifest(cfg: ScenarioConfig, result: ScenarioResult) -> Dict[str, Any]:
    return {
        "scenario": result.kind,
        "config": cfg.path,
        "config_sha1": cfg.sha1,
        "tolerances": {
            "quad_tol": cfgmod.quad_spec(cfg).rel_tol,
            "sum_tol": cfgmod.sum_spec(cfg).rel_tol,
        },
        "achieved_error": result.error,
        "rows": len(result.rows),
        "schema": list(result.schema),
        "formulas": list(result.formulas),
        "extra": result.extra,
    }


def run_scenario(
    cfg: ScenarioConfig,
    storage: LocalStorage,
    logger: Optional[logging.Logger] = None,
    **kwargs: Any,
) -> Tuple[ScenarioResult, str]:
    """Run one scenario, write its table and manifest; returns the result and the table path."""
    logger = logger or log
    t0 = time.time()
    logger.info(f"RUN: {cfg.kind}")

    with _executor(cfg.workers) as ex:
        result = RUNNERS[cfg.kind](cfg, ex, **kwargs)

    path = storage.emit_table(result.rows, result.schema, cfg.output, cfg.fmt)
    storage.put_manifest(path, _manifest(cfg, result))

    logger.info(f"[{cfg.kind}] rows: {len(result.rows)} | time: {time.time() - t0:.2f}s")
    return result, path
