import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from casimir import planar
from casimir.dielectric import DielectricResponse, PolarizabilityModel
from casimir.errors import DomainError
from casimir.numerics import QuadratureSpec, SumSpec
from casimir.planar import (
    DILUTE_COEFFICIENT,
    MODES,
    TE,
    TM,
    FrequencyMomentumPoint,
    PlanarCavity,
    ZeroModePolicy,
    channel_rows,
    classical_limit_pressure,
    dilute_pressure_zero_temperature,
    dilute_sheet_pressure,
    dilute_slab_pressure,
    free_energy_per_area,
    gamma_planar,
    greens_between_plates,
    longitudinal_reflection_u0,
    mode_loop_factor,
    one_plate_transmission,
    pressure,
    pressure_finite_temperature,
    pressure_integrand,
    pressure_zero_temperature,
    reflection,
    reflection_pair_for,
    reflection_tm_alternative,
    rotated_wavenumbers,
    te_convergence_gamma,
    verify_multiplicativity,
    zero_mode_te_reflection,
)

ZETA3 = 1.2020569031595942

PT = FrequencyMomentumPoint


def ideal(gap=1.0, T=0.0):
    return PlanarCavity(gap, temperature=T, m0_te_policy=ZeroModePolicy.PERFECT_CONDUCTOR)


def dielectric(eps, gap=1.0, T=0.0):
    return PlanarCavity(gap, PolarizabilityModel.constant_epsilon(eps), temperature=T)


# wavenumbers and reflection


@pytest.mark.parametrize(
    "u, p, eps, expected",
    [(0.0, 1.0, 4.0, (1.0, 1.0)), (3.0, 4.0, 1.0, (5.0, 5.0)), (1.0, 0.0, 4.0, (1.0, 2.0))],
)
def test_rotated_wavenumbers(u, p, eps, expected):
    k = rotated_wavenumbers(PT(u, p), eps)
    assert (k.kappa0, k.kappa1) == pytest.approx(expected, rel=1e-15)


def test_rotated_wavenumbers_metal():
    assert math.isinf(rotated_wavenumbers(PT(1.0, 1.0), DielectricResponse.metal()).kappa1)
    with pytest.raises(DomainError):
        rotated_wavenumbers(PT(0.0, 1.0), DielectricResponse.metal())


def test_reflection_vacuum_is_zero():
    for u, p in [(0.1, 3.0), (2.0, 0.0), (0.0, 1.0)]:
        r = reflection(PT(u, p), 1.0)
        assert r.r_te == 0.0
        assert r.r_tm == 0.0


def test_reflection_static_limit():
    r = reflection(PT(0.0, 1.0), 4.0)
    assert r.r_te == 0.0
    assert r.r_tm == pytest.approx(3.0 / 5.0, rel=1e-15)


def test_reflection_large_epsilon():
    r = reflection(PT(1.0, 1.0), 1e8)
    assert r.r_te == pytest.approx(-1.0, abs=1e-3)
    assert r.r_tm == pytest.approx(1.0, abs=1e-3)
    assert r.r_te <= 0


def test_reflection_metal():
    r = reflection(PT(1.0, 1.0), DielectricResponse.metal())
    assert (r.r_te, r.r_tm) == (-1.0, 1.0)
    with pytest.raises(DomainError):
        reflection(PT(0.0, 1.0), DielectricResponse.metal())
    with pytest.raises(DomainError):
        reflection(PT(0.0, 0.0), 4.0)


def test_reflection_tm_alternative_matches():
    for u, p in [(0.1, 0.1), (1.0, 1.0), (10.0, 0.1), (0.3, 7.0)]:
        for eps in (1.5, 4.0, 16.0):
            pt = PT(u, p)
            assert reflection_tm_alternative(pt, eps) == pytest.approx(reflection(pt, eps).r_tm, rel=1e-13)


def test_zero_mode_policies():
    plasma = PolarizabilityModel.plasma(1.0)
    micro = PlanarCavity(1.0, plasma, temperature=0.1)
    assert zero_mode_te_reflection(1.0, micro) == 0.0

    lif = micro.with_policy("lifshitz_limit")
    expected = -(math.sqrt(2.0) - 1.0) / (math.sqrt(2.0) + 1.0)
    assert zero_mode_te_reflection(1.0, lif) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(-0.171573, abs=1e-6)
    # предел u -> 0 обычного коэффициента
    assert reflection_pair_for(lif, "left", 1e-6, 1.0).r_te == pytest.approx(expected, rel=1e-6)

    assert zero_mode_te_reflection(1.0, ideal(T=0.1)) == -1.0

    finite = dielectric(4.0, T=0.1).with_policy(ZeroModePolicy.LIFSHITZ_LIMIT)
    assert zero_mode_te_reflection(1.0, finite) == 0.0


# loop factors and integrands


def test_mode_loop_factor_half_round_trip():
    pt = PT(math.log(2.0) / 2.0, 0.0)
    for mode in MODES:
        assert mode_loop_factor(pt, ideal(), mode) == pytest.approx(1.0, rel=1e-14)


def test_mode_loop_factor_by_hand():
    k0, k1 = math.sqrt(2.0), math.sqrt(5.0)
    d = math.exp(-2.0 * k0)
    r_te = -(k1 - k0) / (k1 + k0)
    r_tm = -(k1 - 4.0 * k0) / (k1 + 4.0 * k0)
    cav = dielectric(4.0)
    pt = PT(1.0, 1.0)
    assert mode_loop_factor(pt, cav, TE) == pytest.approx(r_te ** 2 * d / (1.0 - r_te ** 2 * d), rel=1e-13)
    assert mode_loop_factor(pt, cav, TM) == pytest.approx(r_tm ** 2 * d / (1.0 - r_tm ** 2 * d), rel=1e-13)


def test_mode_loop_factor_vacuum():
    assert mode_loop_factor(PT(1.0, 1.0), dielectric(1.0), TE) == 0.0


def test_pressure_integrand():
    pt = PT(0.4, 0.9)
    assert pressure_integrand(pt, dielectric(1.0)) == 0.0
    x = math.exp(-2.0 * pt.kappa0)
    assert pressure_integrand(pt, ideal()) == pytest.approx(-pt.kappa0 * 2.0 * x / (1.0 - x), rel=1e-14)

    pt = PT(1.0, 1.0)
    k0, k1 = math.sqrt(2.0), math.sqrt(3.0)
    d = math.exp(-2.0 * k0)
    total = 0.0
    for r in ((k1 - k0) / (k1 + k0), (k1 - 2.0 * k0) / (k1 + 2.0 * k0)):
        total += r * r * d / (1.0 - r * r * d)
    assert pressure_integrand(pt, dielectric(2.0)) == pytest.approx(-k0 * total, rel=1e-13)


# pressure and free energy


def test_ideal_pressure_zero_temperature():
    res = pressure_zero_temperature(ideal(), QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(-math.pi ** 2 / 240.0, rel=1e-8)
    assert res.value == pytest.approx(-0.0411234, abs=1e-7)


def test_ideal_pressure_scaling():
    res = pressure_zero_temperature(ideal(gap=2.0), QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(-math.pi ** 2 / 240.0 / 16.0, rel=1e-8)


def test_ideal_free_energy():
    res = free_energy_per_area(ideal(), QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(-math.pi ** 2 / 720.0, rel=1e-8)


def test_vacuum_gives_nothing():
    assert pressure_zero_temperature(dielectric(1.0)).value == 0.0
    assert free_energy_per_area(dielectric(1.0)).value == 0.0


def test_vacuum_on_one_side_gives_nothing():
    cav = PlanarCavity(1.0, PolarizabilityModel.plasma(2.0), PolarizabilityModel.constant_epsilon(1.0))
    assert pressure_zero_temperature(cav).value == 0.0


def test_dilute_pressure_closed_form():
    res = dilute_pressure_zero_temperature(1.0, 0.01, QuadratureSpec(rel_tol=1e-11))
    assert res.value == pytest.approx(-DILUTE_COEFFICIENT * 1e-4, rel=1e-8)


def test_weak_dielectric_second_order():
    full = pressure_zero_temperature(dielectric(1.01), QuadratureSpec(rel_tol=1e-10)).value
    leading = -DILUTE_COEFFICIENT * 0.01 ** 2
    assert full < 0
    assert full == pytest.approx(leading, rel=0.03)


def test_dilute_slab_and_sheet():
    # толстые слои стремятся к полупространствам
    assert dilute_slab_pressure(1.0, 1e4, 0.1) == pytest.approx(-DILUTE_COEFFICIENT * 0.01, rel=1e-6)
    # тонкие слои дают предел листов
    t = 1e-3
    slab = dilute_slab_pressure(1.0, t, 0.1)
    assert slab == pytest.approx(dilute_sheet_pressure(1.0, 0.1 * t), rel=1e-2)
    with pytest.raises(DomainError):
        dilute_sheet_pressure(0.0, 1.0)


def test_low_temperature_limit():
    cold = pressure_finite_temperature(ideal(T=0.01), QuadratureSpec(rel_tol=1e-9)).value
    assert cold == pytest.approx(-math.pi ** 2 / 240.0, rel=1e-2)


def test_high_temperature_classical_limit():
    T = 5.0
    classical = -ZETA3 * T / (4.0 * math.pi)
    assert classical_limit_pressure(ideal(T=T)) == pytest.approx(classical, rel=1e-8)
    assert pressure(ideal(T=T)).value == pytest.approx(classical, rel=1e-6)

    # у металла с выключенной TE нулевой модой остается половина
    metal = PlanarCavity(1.0, PolarizabilityModel.plasma(1.0), temperature=T)
    assert classical_limit_pressure(metal) == pytest.approx(0.5 * classical, rel=1e-8)


def test_zero_mode_policy_changes_only_metals():
    plasma = PlanarCavity(1.0, PolarizabilityModel.plasma(1.0), temperature=0.3)
    micro = pressure(plasma).value
    lif = pressure(plasma.with_policy("lifshitz_limit")).value
    assert lif < micro < 0

    diel = dielectric(4.0, T=0.3)
    assert pressure(diel).value == pytest.approx(pressure(diel.with_policy("lifshitz_limit")).value, rel=1e-14)


def test_thermodynamic_identity_finite_temperature():
    spec = QuadratureSpec(rel_tol=1e-12)
    sspec = SumSpec(rel_tol=1e-14)
    a, h = 1.0, 1e-4
    cav = dielectric(4.0, gap=a, T=0.5)
    p = pressure(cav, spec, sspec).value
    f_hi = free_energy_per_area(cav.with_gap(a + h), spec, sspec).value
    f_lo = free_energy_per_area(cav.with_gap(a - h), spec, sspec).value
    assert -(f_hi - f_lo) / (2.0 * h) == pytest.approx(p, rel=1e-6)


def test_finite_temperature_needs_temperature():
    with pytest.raises(DomainError):
        pressure_finite_temperature(ideal())


# γ and the multiplicative solution


def test_gamma_two_plate_identity():
    for eps in (1.5, 4.0, 16.0):
        for u in (0.1, 1.0, 10.0):
            for p in (0.1, 1.0, 10.0):
                pt = PT(u, p)
                r = reflection(pt, eps)
                d = math.exp(-2.0 * pt.kappa0 * 0.7)
                for mode in MODES:
                    g = gamma_planar(pt, eps, mode, gap=0.7)
                    assert abs(g - r.of(mode) ** 2 * d) <= 1e-14 * max(1.0, g)


def test_gamma_vacuum_and_transmission():
    pt = PT(1.0, 1.0)
    assert gamma_planar(pt, 1.0, TE, gap=1.0) == 0.0
    assert gamma_planar(pt, 1.0, TM, form="one_plate") == 0.0

    k = rotated_wavenumbers(pt, 4.0)
    expected = 4.0 * k.kappa1 * k.kappa0 / (k.kappa1 + k.kappa0) ** 2
    assert one_plate_transmission(pt, 4.0, TE) == pytest.approx(expected, rel=1e-14)
    assert gamma_planar(pt, 4.0, TM, form="one_plate") > 0


def test_gamma_errors():
    with pytest.raises(DomainError):
        gamma_planar(PT(0.0, 1.0), 4.0, TE, gap=1.0)
    with pytest.raises(DomainError):
        gamma_planar(PT(1.0, 1.0), 4.0, TE)
    with pytest.raises(DomainError):
        gamma_planar(PT(1.0, 1.0), DielectricResponse.metal(), TE, form="one_plate")


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("eps, u, p", [(4.0, 1.0, 1.0), (16.0, 0.1, 2.0)])
def test_verify_multiplicativity(eps, u, p, mode):
    assert verify_multiplicativity(PT(u, p), eps, mode) < 1e-8


def test_verify_multiplicativity_vacuum():
    assert verify_multiplicativity(PT(1.0, 1.0), 1.0, TE) == 0.0


def test_tm_composition_is_independent_of_te(monkeypatch):
    # композиция TM-ядер должна отличить γ_TM от γ_TE
    pt = PT(1.0, 1.0)
    assert verify_multiplicativity(pt, 4.0, TM) < 1e-8
    exact = planar.gamma_planar
    monkeypatch.setattr(planar, "gamma_planar", lambda pt, eps, mode, **kw: exact(pt, eps, TE, **kw))
    assert verify_multiplicativity(pt, 4.0, TM) > 0.5
    assert verify_multiplicativity(pt, 4.0, TE) < 1e-8


# Green's function between the plates


def test_greens_vacuum_is_free_kernel():
    pt = PT(1.0, 1.0)
    cav = dielectric(1.0)
    assert greens_between_plates(0.3, 0.6, pt, cav, TE, scattered_only=True) == 0.0
    free = -1.0 / (2.0 * pt.kappa0) * math.exp(-pt.kappa0 * 0.3)
    assert greens_between_plates(0.3, 0.6, pt, cav, TM) == pytest.approx(free, rel=1e-15)


@pytest.mark.parametrize("mode", MODES)
def test_greens_symmetric(mode):
    pt = PT(1.0, 1.0)
    cav = PlanarCavity(1.0, PolarizabilityModel.constant_epsilon(4.0), PolarizabilityModel.plasma(3.0))
    g1 = greens_between_plates(0.3, 0.6, pt, cav, mode)
    g2 = greens_between_plates(0.6, 0.3, pt, cav, mode)
    assert g1 == pytest.approx(g2, rel=1e-14)


@pytest.mark.parametrize("mode", MODES)
def test_greens_image_series(mode):
    pt = PT(1.0, 1.0)
    a, x, xp = 1.0, 0.3, 0.6
    cav = PlanarCavity(a, PolarizabilityModel.constant_epsilon(4.0), PolarizabilityModel.constant_epsilon(9.0))
    r_l = reflection(pt, 4.0).of(mode)
    r_r = reflection(pt, 9.0).of(mode)
    k = pt.kappa0
    # сумма по отражениям: каждый лишний обход добавляет r_l r_r e^{-2κa}
    total = 0.0
    for n in range(60):
        rt = (r_l * r_r) ** n
        total += rt * r_l * math.exp(-k * (x + xp + 2 * n * a))
        total += rt * r_r * math.exp(-k * (2 * a - x - xp + 2 * n * a))
        total += rt * r_l * r_r * math.exp(-k * (2 * a + (xp - x) + 2 * n * a))
        total += rt * r_l * r_r * math.exp(-k * (2 * a - (xp - x) + 2 * n * a))
    expected = -pt.u ** 2 / (2.0 * k) * total
    assert greens_between_plates(x, xp, pt, cav, mode, scattered_only=True) == pytest.approx(expected, rel=1e-13)


def _layered_greens(mode, pt, eps_l, eps_r, a, x, xp, m, L=15):
    # конечные объёмы: -(βG')' + qG = δ(x - xp) на [-L, a + L], G = 0 на концах;
    # узлы с шагом 1/m попадают точно на 0, a, x и xp
    h = 1.0 / m
    i0 = L * m
    ia = i0 + round(a * m)
    N = ia + L * m
    eps = np.ones(N)
    eps[:i0] = eps_l
    eps[ia:] = eps_r
    u2, p2 = pt.u ** 2, pt.p ** 2
    if mode == TE:
        beta, q = np.ones(N), eps * u2 + p2
    else:
        beta, q = 1.0 / eps, u2 + p2 / eps
    n = N - 1
    ab = np.zeros((3, n))
    ab[0, 1:] = -beta[1:n] / h ** 2
    ab[2, :-1] = -beta[1:n] / h ** 2
    ab[1] = (beta[:n] + beta[1:]) / h ** 2 + 0.5 * (q[:n] + q[1:])
    rhs = np.zeros(n)
    rhs[i0 + round(xp * m) - 1] = 1.0 / h
    sol = solve_banded((1, 1), ab, rhs)
    return -u2 * sol[i0 + round(x * m) - 1]


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("x, xp", [(0.3, 0.6), (0.6, 0.3), (0.5, 0.5), (0.2, 0.2)])
def test_greens_matches_grid_solution(mode, x, xp):
    pt = PT(1.0, 1.0)
    cav = PlanarCavity(1.0, PolarizabilityModel.constant_epsilon(4.0), PolarizabilityModel.constant_epsilon(9.0))
    coarse = _layered_greens(mode, pt, 4.0, 9.0, 1.0, x, xp, 500)
    fine = _layered_greens(mode, pt, 4.0, 9.0, 1.0, x, xp, 1000)
    grid_value = (4.0 * fine - coarse) / 3.0
    assert greens_between_plates(x, xp, pt, cav, mode) == pytest.approx(grid_value, rel=1e-6)
    free = -pt.u ** 2 / (2.0 * pt.kappa0) * math.exp(-pt.kappa0 * abs(x - xp))
    scattered = greens_between_plates(x, xp, pt, cav, mode, scattered_only=True)
    assert scattered == pytest.approx(grid_value - free, abs=1e-7)


def test_greens_outside_gap():
    with pytest.raises(DomainError):
        greens_between_plates(1.2, 0.5, PT(1.0, 1.0), dielectric(4.0), TE)


# zero-frequency analysis


def test_longitudinal_reflection():
    assert longitudinal_reflection_u0(0.0) == (1.0, 0.0)
    assert longitudinal_reflection_u0(3.0) == pytest.approx((0.0, 1.0))
    t, r = longitudinal_reflection_u0(1.5)
    assert t == pytest.approx(0.4, rel=1e-15)
    assert r == pytest.approx(0.6, rel=1e-15)
    with pytest.raises(DomainError):
        longitudinal_reflection_u0(6.5)
    with pytest.raises(DomainError):
        longitudinal_reflection_u0(4.0)


def test_te_convergence_gamma():
    assert te_convergence_gamma(PT(0.0, 1.0), 1.2)[0] == pytest.approx(0.4)
    assert te_convergence_gamma(PT(0.0, 1.0), 3.0) == (1.0, False)
    assert te_convergence_gamma(PT(0.1, 1.0), 0.0) == (0.0, True)
    gamma, ok = te_convergence_gamma(PT(0.1, 1.0), 2.9)
    assert ok and gamma < 1.0
    with pytest.raises(DomainError):
        te_convergence_gamma(PT(1.0, 1.0), 1.0)


# tables


def test_channel_rows():
    cav = PlanarCavity(1.0, PolarizabilityModel.plasma(1.0), temperature=0.2)
    ps = np.linspace(0.0, 2.0, 5)
    rows = channel_rows(cav, 3, ps)
    # (m=0, p=0) пропускается
    assert len(rows) == 4 * 5 - 1
    assert rows[0]["m"] == 0 and rows[0]["p"] == 0.5
    assert all(r["r_te"] <= 0 for r in rows)
    assert rows[-1]["u"] == pytest.approx(2.0 * math.pi * 0.2 * 3)


def test_channel_rows_vacuum_and_errors():
    rows = channel_rows(dielectric(1.0, T=0.1), 2, [0.5, 1.0])
    assert all(r["r_te"] == 0 and r["r_tm"] == 0 and r["integrand"] == 0 for r in rows)
    with pytest.raises(DomainError):
        channel_rows(dielectric(4.0), 1, [1.0])


def test_invalid_points_and_cavities():
    with pytest.raises(DomainError):
        PT(-1.0, 0.0)
    with pytest.raises(DomainError):
        PlanarCavity(0.0, PolarizabilityModel.plasma(1.0))
    with pytest.raises(DomainError):
        PlanarCavity(1.0)


def test_pressure_with_tabulated_material():
    # осциллятор, заданный таблицей на [0, 5]; выше таблицы α₀ спадает как u^-2
    alpha_s, u0 = 1.5, 2.0
    us = np.linspace(0.0, 5.0, 201)
    table = PolarizabilityModel.tabulated(us, alpha_s * u0 ** 2 / (u0 ** 2 + us ** 2), interpolation="pchip")
    spec = QuadratureSpec(rel_tol=1e-8)
    tabulated = pressure_zero_temperature(PlanarCavity(1.0, table), spec).value
    analytic = pressure_zero_temperature(PlanarCavity(1.0, PolarizabilityModel.oscillator(alpha_s, u0)), spec).value
    assert math.isfinite(tabulated) and tabulated < 0
    assert tabulated == pytest.approx(analytic, rel=1e-2)
