from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from scipy.special import ive, kve

from casimir.dielectric import DielectricResponse, PolarizabilityModel, eval_epsilon
from casimir.errors import BesselRangeError, DomainError, ResonanceError
from casimir.numerics import QuadratureSpec, integrate_finite

log = logging.getLogger("casimir.spherical")

TE = "TE"
TM = "TM"
MODES = (TE, TM)

J = "j"
H1 = "h1"
KINDS = (J, H1)

L_MAX_DEFAULT = 60

_TWO_OVER_PI = 2.0 / math.pi


@dataclass(frozen=True)
class SphericalMode:
    lam: str
    l: int

    def __post_init__(self):
        if self.lam not in MODES:
            raise DomainError(f"polarization must be one of {MODES}, got {self.lam!r}")
        if int(self.l) != self.l or self.l < 1:
            raise DomainError(f"multipole order must be an integer >= 1, got {self.l}")

    @property
    def Q(self) -> int:
        return self.l * (self.l + 1)


@dataclass(frozen=True)
class BallChannel:
    """Dielectric ball of radius R probed at imaginary frequency u."""

    R: float
    u: float
    eps: float

    def __post_init__(self):
        eps = self.eps
        if isinstance(eps, DielectricResponse):
            if eps.metallic:
                raise DomainError("ball channel needs a finite epsilon")
            eps = eps.value
        object.__setattr__(self, "eps", float(eps))
        if not (self.R > 0 and math.isfinite(self.R)):
            raise DomainError(f"radius must be positive, got {self.R}")
        if not (self.u > 0 and math.isfinite(self.u)):
            raise DomainError(f"frequency must be positive, got {self.u}")
        if not (1.0 <= self.eps < math.inf):
            raise DomainError(f"epsilon must be finite and >= 1, got {self.eps}")

    @classmethod
    def from_model(cls, R: float, u: float, model: PolarizabilityModel) -> "BallChannel":
        return cls(R, u, eval_epsilon(model, u))

    @property
    def n(self) -> float:
        return math.sqrt(self.eps)

    @property
    def alpha(self) -> float:
        return self.eps - 1.0

    @property
    def x0(self) -> float:
        return self.u * self.R

    @property
    def x1(self) -> float:
        return self.n * self.u * self.R


@dataclass(frozen=True)
class ScaledValue:
    """mantissa * exp(exponent)"""

    mantissa: float
    exponent: float = 0.0

    @property
    def value(self) -> float:
        if self.mantissa == 0.0:
            return 0.0
        try:
            return self.mantissa * math.exp(self.exponent)
        except OverflowError:
            raise OverflowError(f"scaled value {self.mantissa:.3e} * e^{self.exponent:.1f} overflows")

    def __mul__(self, other: Union["ScaledValue", float]) -> "ScaledValue":
        if isinstance(other, ScaledValue):
            return ScaledValue(self.mantissa * other.mantissa, self.exponent + other.exponent)
        return ScaledValue(self.mantissa * float(other), self.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "ScaledValue":
        return ScaledValue(self.mantissa / float(other), self.exponent)

    def __sub__(self, other: "ScaledValue") -> "ScaledValue":
        e = max(self.exponent, other.exponent)
        return ScaledValue(
            self.mantissa * math.exp(self.exponent - e) - other.mantissa * math.exp(other.exponent - e),
            e,
        )


@dataclass(frozen=True)
class BesselValue:
    """
    Spherical Bessel function on the imaginary axis, z = i x.

    value, derivative -- the modified function (i_l for j, k_l for h1) and its
                         x-derivative, both scaled by exp(-exponent)
    The complex function follows as phase * value * e^exponent.
    """

    kind: str
    l: int
    x: float
    value: float
    derivative: float
    exponent: float

    @property
    def phase(self) -> complex:
        if self.kind == J:
            return 1j ** self.l
        return -_TWO_OVER_PI * (1j ** (-self.l))

    def to_complex(self) -> Tuple[complex, complex]:
        """(f(ix), f'(ix)) with the derivative taken in z."""
        scale = math.exp(self.exponent)
        return (
            self.phase * self.value * scale,
            -1j * self.phase * self.derivative * scale,
        )


def _modified(kind: str, l: int, x: float) -> Tuple[float, float, float]:
    """Scaled (value, x-derivative, exponent) of i_l (kind j) or k_l (kind h1)."""
    if not x > 0:
        raise DomainError(f"argument must be positive, got {x}")
    pref = math.sqrt(0.5 * math.pi / x)
    if kind == J:
        f = pref * float(ive(l + 0.5, x))
        f_lower = pref * float(ive(l - 0.5, x))
        df = f_lower - (l + 1) * f / x
        exponent = x
    elif kind == H1:
        f = pref * float(kve(l + 0.5, x))
        f_lower = pref * float(kve(l - 0.5, x))
        df = -f_lower - (l + 1) * f / x
        exponent = -x
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")

    if not (math.isfinite(f) and math.isfinite(df)) or f == 0.0:
        raise BesselRangeError(l, x)
    return f, df, exponent


def sph_bessel_pair(l: int, x: float) -> Tuple[BesselValue, BesselValue]:
    if l < 0:
        raise DomainError(f"order must be >= 0, got {l}")
    fj = _modified(J, l, x)
    fh = _modified(H1, l, x)
    return BesselValue(J, l, x, *fj), BesselValue(H1, l, x, *fh)


def wronskian_residual(l: int, x: float) -> float:
    """|x²(i_l k_l' - i_l' k_l) + π/2| / (π/2); the scale factors cancel exactly."""
    j, h = sph_bessel_pair(l, x)
    w = x * x * (j.value * h.derivative - j.derivative * h.value)
    return abs(w + 0.5 * math.pi) / (0.5 * math.pi)


def _phase_product(f_kind: str, g_kind: str, l: int) -> float:
    """Real product of the phases linking j, h1 on the imaginary axis to i_l, k_l."""
    sign = -1.0 if l % 2 else 1.0
    if f_kind == J and g_kind == J:
        return sign
    if f_kind == H1 and g_kind == H1:
        return sign * _TWO_OVER_PI ** 2
    return -_TWO_OVER_PI


def _check_kinds(f_kind: str, g_kind: str) -> None:
    if f_kind not in KINDS or g_kind not in KINDS:
        raise ValueError(f"kinds must be in {KINDS}, got {f_kind!r}, {g_kind!r}")


def _boundary_terms(f_kind: str, g_kind: str, l: int, u: float, n: float, rho: float):
    """W = F'(uρ)G(nuρ) - n F(uρ)G'(nuρ) and D_F G = (F + uρF')(uρ) G(nuρ), sharing one exponent."""
    y0, y1 = u * rho, n * u * rho
    F, dF, eF = _modified(f_kind, l, y0)
    G, dG, eG = _modified(g_kind, l, y1)
    w = dF * G - n * F * dG
    dg = (F + y0 * dF) * G
    return w, dg, eF + eG


def _b1_at(f_kind: str, g_kind: str, l: int, u: float, n: float, rho: float) -> ScaledValue:
    w, _, e = _boundary_terms(f_kind, g_kind, l, u, n, rho)
    return ScaledValue(-(rho * rho / u) * _phase_product(f_kind, g_kind, l) * w, e)


def bilinear_form_1(
    f_kind: str,
    g_kind: str,
    l: int,
    channel: BallChannel,
    raw: bool = False,
) -> ScaledValue:
    """
    B1[f,g] = α<f,g>_1 = (R²/w)[f'(wR) g(√ε wR) - √ε f(wR) g'(√ε wR)], w = iu,
    returned in real form; raw=True divides by α = ε - 1.
    """
    _check_kinds(f_kind, g_kind)
    b = _b1_at(f_kind, g_kind, l, channel.u, channel.n, channel.R)
    if raw:
        if channel.alpha == 0:
            raise DomainError("raw bilinear form is 0/0 at epsilon = 1")
        return b / channel.alpha
    return b


def bilinear_form_2(
    f_kind: str,
    g_kind: str,
    l: int,
    channel: BallChannel,
    raw: bool = False,
) -> ScaledValue:
    """B2[f,g] = α<f,g>_2 with <f,g>_2 = [d/dR(R f(wR))] R g(√ε wR) + w²<f,g>_1."""
    _check_kinds(f_kind, g_kind)
    w, dg, e = _boundary_terms(f_kind, g_kind, l, channel.u, channel.n, channel.R)
    m = channel.R * _phase_product(f_kind, g_kind, l) * (channel.alpha * dg + channel.x0 * w)
    b = ScaledValue(m, e)
    if raw:
        if channel.alpha == 0:
            raise DomainError("raw bilinear form is 0/0 at epsilon = 1")
        return b / channel.alpha
    return b


def _products(mode: SphericalMode, channel: BallChannel) -> Tuple[ScaledValue, ScaledValue]:
    """(α²γ, μ numerator) as scaled products of B-forms."""
    u, n, l = channel.u, channel.n, mode.l
    if mode.lam == TE:
        jj = bilinear_form_1(J, J, l, channel)
        hh = bilinear_form_1(H1, H1, l, channel)
        jh = bilinear_form_1(J, H1, l, channel)
        k = n * u ** 6
    else:
        jj = bilinear_form_2(J, J, l, channel)
        hh = bilinear_form_2(H1, H1, l, channel)
        jh = bilinear_form_2(J, H1, l, channel)
        k = u * u / n
    return (jj * hh) * (-k), (jj * jh) * k


def gamma_sphere(mode: SphericalMode, channel: BallChannel) -> float:
    """α²γ_λl; TE from √ε w⁶ B1[h,h] B1[j,j], TM from (w²/√ε) B2[j,j] B2[h,h]."""
    g, _ = _products(mode, channel)
    return g.value


def mu_sphere_scaled(mode: SphericalMode, channel: BallChannel) -> ScaledValue:
    g, num = _products(mode, channel)
    den = 1.0 + g.value
    if not abs(den) > 1e-300 or not math.isfinite(den):
        raise ResonanceError(
            f"vanishing mode denominator 1 + alpha^2 gamma = {den}",
            channel={"lambda": mode.lam, "l": mode.l},
        )
    return num / den


def mu_sphere(mode: SphericalMode, channel: BallChannel) -> float:
    try:
        return mu_sphere_scaled(mode, channel).value
    except OverflowError:
        raise BesselRangeError(mode.l, channel.x0, what="scattering coefficient")


def perfect_conductor_mu(mode: SphericalMode, channel: BallChannel) -> float:
    """ε → ∞ limits: TE -j_l/h_l, TM -(R j_l)'/(R h_l)' at wR = i uR."""
    l, x = mode.l, channel.x0
    I, dI, eI = _modified(J, l, x)
    K, dK, eK = _modified(H1, l, x)
    sign = -1.0 if l % 2 else 1.0
    if mode.lam == TE:
        ratio = I / K
    else:
        ratio = (I + x * dI) / (K + x * dK)
    return ScaledValue(0.5 * math.pi * sign * ratio, eI - eK).value


def _check_exterior(channel: BallChannel, r: float, rp: float) -> None:
    if not (r > channel.R and rp > channel.R):
        raise DomainError(f"radii must exceed R={channel.R}, got r={r}, r'={rp}")


def exterior_greens_coefficient(mode: SphericalMode, channel: BallChannel, r: float, rp: float) -> float:
    """Scattered radial term μ_λl (i w³) h_l(wr) h_l(wr') outside the ball, real form."""
    _check_exterior(channel, r, rp)
    mu = mu_sphere_scaled(mode, channel)
    u, l = channel.u, mode.l
    K1, _, e1 = _modified(H1, l, u * r)
    K2, _, e2 = _modified(H1, l, u * rp)
    sign = -1.0 if l % 2 else 1.0
    term = mu * ScaledValue(u ** 3 * sign * _TWO_OVER_PI ** 2 * K1 * K2, e1 + e2)
    return term.value


def free_radial_greens(l: int, u: float, r: float, rp: float) -> float:
    """i w³ h_l(w r>) j_l(w r<) on the imaginary axis."""
    lo, hi = min(r, rp), max(r, rp)
    I, _, eI = _modified(J, l, u * lo)
    K, _, eK = _modified(H1, l, u * hi)
    return ScaledValue(-_TWO_OVER_PI * u ** 3 * I * K, eI + eK).value


def radial_greens(mode: SphericalMode, channel: BallChannel, r: float, rp: float) -> float:
    _check_exterior(channel, r, rp)
    return free_radial_greens(mode.l, channel.u, r, rp) + exterior_greens_coefficient(mode, channel, r, rp)


# quadrature checks of the boundary forms


def _exponent_rate(kind: str) -> float:
    return 1.0 if kind == J else -1.0


def _guarded(f_kind: str, g_kind: str, fn):
    """Integrand wrapper: i_l underflow near the origin counts as zero."""

    def wrapped(rho: float) -> float:
        if rho == 0.0:
            return 0.0
        try:
            return fn(rho)
        except BesselRangeError:
            if f_kind == J and g_kind == J:
                return 0.0
            raise

    return wrapped


def _check_lower(f_kind: str, g_kind: str, rho_min: float, R: float) -> None:
    if not 0 <= rho_min < R:
        raise DomainError(f"lower radius must lie in [0, R), got {rho_min}")
    if rho_min == 0 and (f_kind == H1 or g_kind == H1):
        raise DomainError("pairs involving h1 need a positive lower radius")


def lommel_residual(
    f_kind: str,
    g_kind: str,
    l: int,
    channel: BallChannel,
    rho_min: float = 0.0,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """
    Relative residual between α ∫ ρ² f(wρ) g(√ε wρ) dρ over [ρ0, R] by quadrature
    and the boundary bracket B1(R) - B1(ρ0).
    """
    _check_kinds(f_kind, g_kind)
    _check_lower(f_kind, g_kind, rho_min, channel.R)
    spec = spec or QuadratureSpec(rel_tol=1e-11)
    u, n, R = channel.u, channel.n, channel.R
    if channel.alpha == 0:
        return 0.0

    rate = u * (_exponent_rate(f_kind) + n * _exponent_rate(g_kind))
    ref = max(rate * R, rate * rho_min)

    def integrand(rho: float) -> float:
        if rho == 0.0:
            return 0.0
        F, _, eF = _modified(f_kind, l, u * rho)
        G, _, eG = _modified(g_kind, l, n * u * rho)
        return rho * rho * F * G * math.exp(eF + eG - ref)

    quad = integrate_finite(_guarded(f_kind, g_kind, integrand), rho_min, R, spec)
    lhs = channel.alpha * _phase_product(f_kind, g_kind, l) * quad.value

    closed = bilinear_form_1(f_kind, g_kind, l, channel)
    if rho_min > 0:
        closed = closed - _b1_at(f_kind, g_kind, l, u, n, rho_min)
    rhs = closed.mantissa * math.exp(closed.exponent - ref)
    return abs(lhs - rhs) / abs(rhs)


def second_form_residual(
    f_kind: str,
    g_kind: str,
    l: int,
    channel: BallChannel,
    rho_min: float = 0.0,
    raw: bool = False,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """
    Relative residual of ∫[(ρf)'(ρg)' + l(l+1) f g] dρ against the boundary form.
    raw=True (forced at ε = 1) evaluates w²<f,g>_1 by quadrature instead of the
    closed bracket.
    """
    _check_kinds(f_kind, g_kind)
    _check_lower(f_kind, g_kind, rho_min, channel.R)
    spec = spec or QuadratureSpec(rel_tol=1e-11)
    u, n, R, Q = channel.u, channel.n, channel.R, l * (l + 1)

    rate = u * (_exponent_rate(f_kind) + n * _exponent_rate(g_kind))
    ref = max(rate * R, rate * rho_min)

    def parts(rho: float):
        y0, y1 = u * rho, n * u * rho
        F, dF, eF = _modified(f_kind, l, y0)
        G, dG, eG = _modified(g_kind, l, y1)
        return F, dF, G, dG, y0, y1, math.exp(eF + eG - ref)

    def lhs_integrand(rho: float) -> float:
        if rho == 0.0:
            return 0.0
        F, dF, G, dG, y0, y1, s = parts(rho)
        return ((F + y0 * dF) * (G + y1 * dG) + Q * F * G) * s

    def bracket(rho: float) -> float:
        if rho == 0.0:
            return 0.0
        F, dF, G, _, y0, _, s = parts(rho)
        return rho * (F + y0 * dF) * G * s

    lhs = integrate_finite(_guarded(f_kind, g_kind, lhs_integrand), rho_min, R, spec).value

    if raw or channel.alpha == 0:

        def volume(rho: float) -> float:
            if rho == 0.0:
                return 0.0
            F, _, G, _, _, _, s = parts(rho)
            return rho * rho * F * G * s

        vol = integrate_finite(_guarded(f_kind, g_kind, volume), rho_min, R, spec).value
        rhs = bracket(R) - bracket(rho_min) - u * u * vol
    else:
        closed = bilinear_form_2(f_kind, g_kind, l, channel, raw=True)
        rhs = closed.mantissa * math.exp(closed.exponent - ref) / _phase_product(f_kind, g_kind, l)
        if rho_min > 0:
            w, _, e = _boundary_terms(f_kind, g_kind, l, u, n, rho_min)
            rhs -= bracket(rho_min) + (u / channel.alpha) * rho_min ** 2 * w * math.exp(e - ref)
    return abs(lhs - rhs) / abs(rhs)


# mode tables


def mode_table(
    channel: BallChannel,
    l_max: int = L_MAX_DEFAULT,
    modes: Sequence[str] = MODES,
) -> Tuple[List[Dict[str, float]], Dict[str, float], Dict[str, int]]:
    """
    Rows (lambda, l, uR, eps, alpha2_gamma, mu) for l = 1..l_max, the tail
    ratio |μ_last| / max_l |μ_l| and the last l computed, per polarization.
    The last l falls short of l_max when the scaled Bessel functions leave
    floating-point range.
    """
    if l_max < 1:
        raise DomainError(f"l_max must be >= 1, got {l_max}")
    rows: List[Dict[str, float]] = []
    tails: Dict[str, float] = {}
    reached: Dict[str, int] = {}
    for lam in modes:
        peak, last = 0.0, 0.0
        reached[lam] = 0
        for l in range(1, l_max + 1):
            mode = SphericalMode(lam, l)
            try:
                g = gamma_sphere(mode, channel)
                mu = mu_sphere(mode, channel)
            except BesselRangeError as exc:
                log.warning(f"[{lam} l={l}] stop: {exc}")
                break
            rows.append(
                {
                    "lambda": lam,
                    "l": l,
                    "uR": channel.x0,
                    "eps": channel.eps,
                    "alpha2_gamma": g,
                    "mu": mu,
                }
            )
            peak = max(peak, abs(mu))
            last = abs(mu)
            reached[lam] = l
        tails[lam] = last / peak if peak > 0 else 0.0
        log.debug(f"[{lam}] uR={channel.x0:.4g} eps={channel.eps:.4g} tail={tails[lam]:.3e}")
    return rows, tails, reached
