"""
Property suite behind `casimir validate`.

Every check returns a CheckResult whose value is a non-negative residual and
passes when value <= tolerance. Checks that take minutes are marked slow.
"""
from __future__ import annotations

import logging
import math
import time
import traceback
from typing import Callable, List, Tuple

import numpy as np
from tqdm import tqdm

from casimir.dielectric import PolarizabilityModel
from casimir.dipole_oracle import (
    build_coupling,
    casimir_polder_scaling,
    cubic_slab,
    depolarization_integral,
    force_between,
    free_energy_series,
    free_energy_spectral,
    merge,
    random_cloud,
    series_tail_bound,
    split_free_energy,
)
from casimir.errors import CasimirError
from casimir.numerics import QuadratureSpec, SumSpec
from casimir.planar import (
    MODES,
    FrequencyMomentumPoint,
    PlanarCavity,
    ZeroModePolicy,
    dilute_sheet_pressure,
    free_energy_per_area,
    gamma_planar,
    pressure,
    pressure_zero_temperature,
    reflection,
    verify_multiplicativity,
    zero_mode_term,
)
from casimir.records import CheckResult
from casimir.spherical import (
    H1,
    J,
    TE,
    BallChannel,
    SphericalMode,
    lommel_residual,
    mu_sphere,
    perfect_conductor_mu,
    second_form_residual,
)

log = logging.getLogger("casimir.validation")

GRID_EPS = (1.5, 4.0, 16.0)
GRID_U = (0.1, 1.0, 10.0)
GRID_P = (0.1, 1.0, 10.0)
GRID_UR = (0.1, 1.0, 10.0)
GRID_L = tuple(range(1, 11))
MU_DELTAS = (1e-2, 1e-3, 1e-4, 1e-5)


def _result(name: str, value: float, tolerance: float) -> CheckResult:
    value = float(value)
    return CheckResult(name, value, float(tolerance), bool(value <= tolerance))


def _rel(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref)


# planar


def check_perfect_conductor_pressure() -> CheckResult:
    cavity = PlanarCavity(1.0, m0_te_policy=ZeroModePolicy.PERFECT_CONDUCTOR)
    p = pressure_zero_temperature(cavity, QuadratureSpec(rel_tol=1e-10)).value
    return _result("perfect_conductor_pressure", _rel(p, -math.pi ** 2 / 240.0), 1e-6)


def check_thermodynamic_identity(h: float = 1e-4) -> CheckResult:
    model = PolarizabilityModel.constant_epsilon(4.0)
    spec = QuadratureSpec(rel_tol=1e-12)
    sspec = SumSpec(rel_tol=1e-14)
    worst = 0.0
    for T in (0.0, 0.1, 1.0):
        cavity = PlanarCavity(1.0, model, temperature=T)
        f_plus = free_energy_per_area(cavity.with_gap(1.0 + h), spec, sspec).value
        f_minus = free_energy_per_area(cavity.with_gap(1.0 - h), spec, sspec).value
        p = pressure(cavity, spec, sspec).value
        worst = max(worst, _rel(-(f_plus - f_minus) / (2.0 * h), p))
    return _result("thermodynamic_identity", worst, 1e-6)


def check_two_plate_gamma() -> CheckResult:
    worst = 0.0
    for e in GRID_EPS:
        for u in GRID_U:
            for p in GRID_P:
                pt = FrequencyMomentumPoint(u, p)
                r = reflection(pt, e)
                decay = math.exp(-2.0 * pt.kappa0)
                for mode in MODES:
                    ref = r.of(mode) ** 2 * decay
                    worst = max(worst, _rel(gamma_planar(pt, e, mode, gap=1.0), ref))
    return _result("two_plate_gamma", worst, 1e-14)


def check_multiplicativity() -> CheckResult:
    worst = 0.0
    for e in GRID_EPS:
        for u in GRID_U:
            for p in GRID_P:
                for mode in MODES:
                    worst = max(worst, verify_multiplicativity(FrequencyMomentumPoint(u, p), e, mode))
    return _result("planar_multiplicativity", worst, 1e-8)


def check_zero_mode_policy() -> CheckResult:
    spec = QuadratureSpec(rel_tol=1e-12)
    sspec = SumSpec(rel_tol=1e-15)
    plasma = PlanarCavity(1.0, PolarizabilityModel.plasma(1.0), temperature=0.1)
    lifshitz = plasma.with_policy(ZeroModePolicy.LIFSHITZ_LIMIT)
    diff = pressure(plasma, spec, sspec).value - pressure(lifshitz, spec, sspec).value
    # microscopic_zero drops exactly the m = 0 TE term of the lifshitz_limit sum
    term = -zero_mode_term(lifshitz, TE, spec).value
    plasma_residual = _rel(diff, term) / 1e-10

    dielectric = PlanarCavity(1.0, PolarizabilityModel.constant_epsilon(4.0), temperature=0.1)
    p_micro = pressure(dielectric, spec, sspec).value
    p_lif = pressure(dielectric.with_policy(ZeroModePolicy.LIFSHITZ_LIMIT), spec, sspec).value
    dielectric_residual = _rel(p_lif, p_micro) / 1e-12
    return _result("zero_mode_policy", max(plasma_residual, dielectric_residual), 1.0)


# spherical


def check_bilinear_identities() -> CheckResult:
    worst = 0.0
    for e in GRID_EPS:
        for x in GRID_UR:
            channel = BallChannel(1.0, x, e)
            for l in GRID_L:
                for f, g, rho0 in ((J, J, 0.0), (J, H1, 0.5), (H1, H1, 0.5)):
                    worst = max(
                        worst,
                        lommel_residual(f, g, l, channel, rho0),
                        second_form_residual(f, g, l, channel, rho0),
                    )
    return _result("bilinear_identities", worst, 1e-8)


def check_mu_regularity(l: int = 1, uR: float = 1.0) -> CheckResult:
    worst = 0.0
    for lam in ("TE", "TM"):
        mode = SphericalMode(lam, l)

        def ratio(delta: float) -> float:
            # B1[j,h] stays finite at ε = 1, so μ is first order in δ
            return mu_sphere(mode, BallChannel(1.0, uR, 1.0 + delta)) / delta

        r2, r3, r4, r5 = (ratio(d) for d in MU_DELTAS)
        # μ/δ is analytic in δ: the two linear extrapolations to δ = 0 agree to O(δ²)
        limit = (10.0 * r5 - r4) / 9.0
        coarse = (10.0 * r4 - r3) / 9.0
        worst = max(worst, _rel(r5, r4) / 1e-3, _rel(coarse, limit) / 1e-5)
        log.info(f"[mu_regularity] {lam} l={l}: μ/δ -> {limit:.6e}, drift {_rel(r3, r2):.2e} between δ=1e-2 and 1e-3")

    mode = SphericalMode("TE", l)
    big = BallChannel(1.0, uR, 1e6)
    worst = max(worst, _rel(mu_sphere(mode, big), perfect_conductor_mu(mode, big)) / 1e-2)
    return _result("mu_regularity", worst, 1.0)


# dipole oracle


def check_splitting_identity(pairs: int = 20, u: float = 0.5) -> CheckResult:
    worst = 0.0
    for k in range(pairs):
        a = random_cloud(8, 1.5, 0.8, 0.05, (0.0, 0.0, 0.0), seed=2 * k, label="A")
        b = random_cloud(8, 1.5, 0.8, 0.05, (0.0, 0.0, 4.0), seed=2 * k + 1, label="B")
        total = free_energy_spectral(merge(a, b), u)
        worst = max(worst, abs(total - sum(split_free_energy(a, b, u))) / abs(total))
    return _result("splitting_identity", worst, 1e-12)


def check_series_consistency(n_max: int = 40, u: float = 0.5, rho: float = 0.5) -> CheckResult:
    base = cubic_slab(3, 3, 3, 1.0, 1.0)
    lattice = base.with_alpha0(rho / build_coupling(base, u).spectral_radius)
    c = build_coupling(lattice, u)
    exact = free_energy_spectral(lattice, u)
    series = free_energy_series(lattice, u, n_max)
    bound = series_tail_bound(c.spectral_radius, n_max, c.matrix.shape[0])
    roundoff = 1e-13 * abs(exact)
    return _result("series_logdet_consistency", abs(series - exact) / (bound + roundoff), 1.0)


def check_casimir_polder_exponent() -> CheckResult:
    slope = casimir_polder_scaling(1e-3, np.geomspace(1.0, 10.0, 5))
    # oscillator dispersion, separations well past 1/u0
    osc = casimir_polder_scaling(1e-3, np.geomspace(10.0, 100.0, 5), dispersion=PolarizabilityModel.oscillator(1.5, 2.0))
    return _result("casimir_polder_exponent", max(abs(slope + 7.0), abs(osc + 7.0)), 0.05)


def check_depolarization() -> CheckResult:
    d = depolarization_integral(1e-3, 1.0)
    return _result("lorentz_lorenz_depolarization", float(np.max(np.abs(d + np.eye(3) / 3.0))), 1e-6)


def check_slab_cross_validation(distance: float = 1.5, alpha0: float = 0.05) -> CheckResult:
    """
    Force between two 6x6x2 dipole slabs (unit spacing) against the dilute
    Lifshitz pressure times their area. Each lattice plane is a sheet of areal
    polarizability alpha0; distance is the gap between the facing planes.
    """
    a = cubic_slab(6, 6, 2, 1.0, alpha0, (0.0, 0.0, 0.0), label="A")
    b = cubic_slab(6, 6, 2, 1.0, alpha0, (0.0, 0.0, 1.0 + distance), label="B")
    force = force_between(a, b, "z", 1e-2, spec=QuadratureSpec(rel_tol=1e-8))
    planes_a = np.unique(a.sites[:, 2])
    planes_b = np.unique(b.sites[:, 2])
    # attraction: negative pressure, force on B along -z
    predicted = 36.0 * sum(dilute_sheet_pressure(zb - za, alpha0) for za in planes_a for zb in planes_b)
    return _result("slab_cross_validation", _rel(force, predicted), 0.25)


CHECKS: List[Tuple[str, Callable[[], CheckResult], bool]] = [
    ("perfect_conductor_pressure", check_perfect_conductor_pressure, False),
    ("thermodynamic_identity", check_thermodynamic_identity, False),
    ("two_plate_gamma", check_two_plate_gamma, False),
    ("planar_multiplicativity", check_multiplicativity, False),
    ("zero_mode_policy", check_zero_mode_policy, False),
    ("bilinear_identities", check_bilinear_identities, False),
    ("mu_regularity", check_mu_regularity, False),
    ("splitting_identity", check_splitting_identity, False),
    ("series_logdet_consistency", check_series_consistency, False),
    ("casimir_polder_exponent", check_casimir_polder_exponent, False),
    ("lorentz_lorenz_depolarization", check_depolarization, False),
    ("slab_cross_validation", check_slab_cross_validation, True),
]


def run_validation(slow: bool = False, progress: bool = True) -> List[CheckResult]:
    results: List[CheckResult] = []
    selected = [c for c in CHECKS if slow or not c[2]]
    for name, fn, _ in tqdm(selected, desc="validate", leave=False, disable=not progress):
        t0 = time.time()
        try:
            res = fn()
        except CasimirError:
            log.error(f"[{name}] crashed:\n{traceback.format_exc()}")
            res = CheckResult(name, math.nan, math.nan, False)
        status = "ok" if res.passed else "FAIL"
        log.info(f"[{name}] {status} | value: {res.value:.3e} | tol: {res.tolerance:.1e} | time: {time.time() - t0:.2f}s")
        results.append(res)
    return results
