import cmath
import math

import pytest

from casimir.dielectric import PolarizabilityModel
from casimir.errors import BesselRangeError, DomainError
from casimir.spherical import (
    H1,
    J,
    MODES,
    TE,
    TM,
    BallChannel,
    ScaledValue,
    SphericalMode,
    bilinear_form_1,
    bilinear_form_2,
    exterior_greens_coefficient,
    free_radial_greens,
    gamma_sphere,
    lommel_residual,
    mode_table,
    mu_sphere,
    perfect_conductor_mu,
    radial_greens,
    second_form_residual,
    sph_bessel_pair,
    wronskian_residual,
)


# Bessel functions on the imaginary axis


def test_wronskian_example():
    assert wronskian_residual(5, 3.0) < 1e-12


@pytest.mark.parametrize("l", [0, 1, 2, 7, 20])
@pytest.mark.parametrize("x", [0.1, 1.0, 10.0, 50.0])
def test_wronskian_grid(l, x):
    assert wronskian_residual(l, x) < 1e-12


def test_order_zero_closed_forms():
    x = 0.7
    z = 1j * x
    j, h = sph_bessel_pair(0, x)
    jv, jd = j.to_complex()
    hv, hd = h.to_complex()
    assert jv == pytest.approx(cmath.sin(z) / z, rel=1e-14)
    assert jd == pytest.approx(cmath.cos(z) / z - cmath.sin(z) / z ** 2, rel=1e-13)
    assert hv == pytest.approx(-1j * cmath.exp(1j * z) / z, rel=1e-14)
    assert hd == pytest.approx(cmath.exp(1j * z) / z + 1j * cmath.exp(1j * z) / z ** 2, rel=1e-13)


def test_order_one_closed_form():
    x = 2.5
    z = 1j * x
    j, h = sph_bessel_pair(1, x)
    assert j.to_complex()[0] == pytest.approx(cmath.sin(z) / z ** 2 - cmath.cos(z) / z, rel=1e-13)
    assert h.to_complex()[0] == pytest.approx(-cmath.exp(1j * z) * (z + 1j) / z ** 2, rel=1e-13)


def test_scaling_keeps_large_arguments():
    j, h = sph_bessel_pair(3, 800.0)
    assert j.exponent == 800.0 and h.exponent == -800.0
    assert math.isfinite(j.value) and math.isfinite(h.value)


def test_bessel_range_errors():
    with pytest.raises(BesselRangeError) as exc:
        sph_bessel_pair(200, 1e-3)
    assert exc.value.l == 200
    with pytest.raises(DomainError):
        sph_bessel_pair(-1, 1.0)
    with pytest.raises(DomainError):
        sph_bessel_pair(1, 0.0)


def test_scaled_value_arithmetic():
    a = ScaledValue(2.0, 700.0) * ScaledValue(3.0, -695.0)
    assert a.value == pytest.approx(6.0 * math.exp(5.0), rel=1e-13)
    assert (ScaledValue(1.0, 1.0) - ScaledValue(1.0, 0.0)).value == pytest.approx(math.e - 1.0, rel=1e-14)
    assert (ScaledValue(4.0, 2.0) / 2.0).value == pytest.approx(2.0 * math.exp(2.0))
    with pytest.raises(OverflowError):
        ScaledValue(1.0, 1000.0).value


# bilinear forms


def test_bilinear_forms_vanish_in_vacuum():
    ch = BallChannel(1.0, 1.0, 1.0)
    for l in (1, 3):
        assert bilinear_form_1(J, J, l, ch).value == 0.0
        assert bilinear_form_1(H1, H1, l, ch).value == 0.0
        assert bilinear_form_2(J, J, l, ch).value == 0.0
    # j–h форма в вакууме сводится к вронскиану
    assert bilinear_form_1(J, H1, 1, ch).value != 0.0
    with pytest.raises(DomainError):
        bilinear_form_1(J, J, 1, ch, raw=True)


def test_lommel_examples():
    assert lommel_residual(J, J, 2, BallChannel(1.0, 1.0, 4.0)) < 1e-8
    assert lommel_residual(H1, H1, 3, BallChannel(1.0, 2.0, 2.0), rho_min=0.5) < 1e-8
    assert lommel_residual(J, H1, 2, BallChannel(1.0, 1.0, 4.0), rho_min=0.5) < 1e-8


@pytest.mark.parametrize("eps", [1.5, 4.0, 16.0])
@pytest.mark.parametrize("uR", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("pair", [(J, J, 0.0), (J, H1, 0.5), (H1, H1, 0.5)])
def test_lommel_grid(eps, uR, pair):
    f, g, rho0 = pair
    ch = BallChannel(1.0, uR, eps)
    for l in (1, 4, 10):
        assert lommel_residual(f, g, l, ch, rho0) < 1e-8


def test_lommel_needs_lower_radius_for_h1():
    with pytest.raises(DomainError):
        lommel_residual(J, H1, 1, BallChannel(1.0, 1.0, 4.0))
    with pytest.raises(DomainError):
        lommel_residual(J, J, 1, BallChannel(1.0, 1.0, 4.0), rho_min=1.0)


def test_second_form_examples():
    assert second_form_residual(J, J, 1, BallChannel(1.0, 1.0, 4.0)) < 1e-8
    assert second_form_residual(J, J, 4, BallChannel(1.0, 0.5, 16.0)) < 1e-8
    assert second_form_residual(H1, H1, 2, BallChannel(1.0, 1.0, 4.0), rho_min=0.5) < 1e-8


def test_second_form_vacuum_raw():
    # при ε = 1 обе стороны считаются квадратурой
    assert second_form_residual(J, J, 2, BallChannel(1.0, 1.0, 1.0)) < 1e-10
    assert second_form_residual(J, J, 2, BallChannel(1.0, 1.0, 4.0), raw=True) < 1e-8


def test_bilinear_forms_scale_with_radius():
    # B1 зависит от R и u только через uR, с множителем R²/w
    a = bilinear_form_1(J, J, 2, BallChannel(1.0, 2.0, 4.0)).value
    b = bilinear_form_1(J, J, 2, BallChannel(2.0, 1.0, 4.0)).value
    assert b == pytest.approx(8.0 * a, rel=1e-13)


# mode coefficients


@pytest.mark.parametrize("lam", MODES)
def test_vacuum_modes(lam):
    ch = BallChannel(1.0, 1.0, 1.0)
    mode = SphericalMode(lam, 2)
    assert gamma_sphere(mode, ch) == 0.0
    assert mu_sphere(mode, ch) == 0.0


@pytest.mark.parametrize("lam", MODES)
def test_mu_first_order_in_contrast(lam):
    mode = SphericalMode(lam, 1)
    r = [mu_sphere(mode, BallChannel(1.0, 1.0, 1.0 + d)) / d for d in (1e-3, 1e-4, 1e-5)]
    assert r[0] != 0.0
    assert r[2] == pytest.approx(r[1], rel=1e-3)
    assert r[1] == pytest.approx(r[0], rel=1e-2)


def test_mu_perfect_conductor_limit():
    mode = SphericalMode(TE, 1)
    ch = BallChannel(1.0, 1.0, 1e6)
    assert mu_sphere(mode, ch) == pytest.approx(perfect_conductor_mu(mode, ch), rel=1e-2)


def test_mu_sign_and_gamma_positive():
    ch = BallChannel(1.0, 1.0, 2.0)
    for lam in MODES:
        mode = SphericalMode(lam, 1)
        assert gamma_sphere(mode, ch) > -1.0
        # знак совпадает с пределом идеального проводника
        assert mu_sphere(mode, ch) * perfect_conductor_mu(mode, ch) > 0


def test_channel_from_model():
    ch = BallChannel.from_model(1.0, 2.0, PolarizabilityModel.plasma(2.0))
    assert ch.eps == pytest.approx(2.0)
    assert ch.alpha == pytest.approx(1.0)
    assert ch.x1 == pytest.approx(math.sqrt(2.0) * 2.0)


def test_invalid_modes_and_channels():
    with pytest.raises(DomainError):
        SphericalMode(TE, 0)
    with pytest.raises(DomainError):
        SphericalMode("TX", 1)
    with pytest.raises(DomainError):
        BallChannel(1.0, 0.0, 2.0)
    with pytest.raises(DomainError):
        BallChannel(1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        BallChannel.from_model(1.0, 0.0, PolarizabilityModel.plasma(1.0))


# Green's functions outside the ball


def test_exterior_greens_vacuum():
    ch = BallChannel(1.0, 1.0, 1.0)
    mode = SphericalMode(TM, 1)
    assert exterior_greens_coefficient(mode, ch, 2.0, 2.0) == 0.0
    assert radial_greens(mode, ch, 2.0, 3.0) == pytest.approx(free_radial_greens(1, 1.0, 2.0, 3.0), rel=1e-15)


def test_free_radial_greens_closed_form():
    # i w³ h_0(w r>) j_0(w r<) при w = iu
    u, r, rp = 1.0, 2.0, 3.0
    w = 1j * u
    j0 = cmath.sin(w * r) / (w * r)
    h0 = -1j * cmath.exp(1j * w * rp) / (w * rp)
    expected = (1j * w ** 3 * h0 * j0).real
    assert free_radial_greens(0, u, r, rp) == pytest.approx(expected, rel=1e-13)
    assert free_radial_greens(0, u, rp, r) == free_radial_greens(0, u, r, rp)


def test_exterior_greens_symmetric_and_checked():
    ch = BallChannel(1.0, 1.0, 4.0)
    mode = SphericalMode(TE, 1)
    assert exterior_greens_coefficient(mode, ch, 2.0, 3.0) == pytest.approx(
        exterior_greens_coefficient(mode, ch, 3.0, 2.0), rel=1e-14
    )
    assert exterior_greens_coefficient(mode, ch, 2.0, 2.0) != 0.0
    with pytest.raises(DomainError):
        exterior_greens_coefficient(mode, ch, 0.5, 2.0)


# mode tables


def test_mode_table_rows_and_tail():
    rows, tails, reached = mode_table(BallChannel(1.0, 1.0, 4.0), l_max=12)
    assert reached == {TE: 12, TM: 12}
    assert len(rows) == 24
    assert rows[0]["lambda"] == TE and rows[0]["l"] == 1
    assert rows[-1]["lambda"] == TM and rows[-1]["l"] == 12
    assert set(tails) == {TE, TM}
    assert all(t < 1e-6 for t in tails.values())


def test_mode_table_stops_at_bessel_range():
    rows, _, reached = mode_table(BallChannel(1.0, 1e-3, 2.0), l_max=300, modes=(TE,))
    assert 0 < len(rows) < 300
    assert reached == {TE: len(rows)}
    assert [r["l"] for r in rows] == list(range(1, len(rows) + 1))


def test_mode_table_rejects_empty():
    with pytest.raises(DomainError):
        mode_table(BallChannel(1.0, 1.0, 2.0), l_max=0)
