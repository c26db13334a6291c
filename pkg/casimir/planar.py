from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from casimir.dielectric import (
    DielectricResponse,
    PolarizabilityModel,
    eval_epsilon,
    zero_frequency_weight,
)
from casimir.errors import DomainError, InvariantViolation, NonConvergenceError
from casimir.numerics import (
    QuadratureSpec,
    QuadResult,
    SumResult,
    SumSpec,
    integrate_finite,
    integrate_semi_infinite,
    integrate_semi_infinite_array,
    matsubara_frequency,
    matsubara_sum,
)

log = logging.getLogger("casimir.planar")

TE = "TE"
TM = "TM"
MODES = (TE, TM)

# pairwise-retarded (second order in ε-1) pressure: P = -DILUTE_COEFFICIENT * α² / a⁴
DILUTE_COEFFICIENT = 23.0 / (640.0 * math.pi ** 2)


class ZeroModePolicy(str, Enum):
    MICROSCOPIC_ZERO = "microscopic_zero"
    LIFSHITZ_LIMIT = "lifshitz_limit"
    PERFECT_CONDUCTOR = "perfect_conductor"


@dataclass(frozen=True)
class FrequencyMomentumPoint:
    u: float
    p: float

    def __post_init__(self):
        if not (self.u >= 0 and self.p >= 0):
            raise DomainError(f"u and p must be >= 0, got u={self.u}, p={self.p}")

    @property
    def kappa0(self) -> float:
        return math.hypot(self.u, self.p)


@dataclass(frozen=True)
class RotatedWavenumbers:
    kappa0: float
    kappa1: float


@dataclass(frozen=True)
class ReflectionPair:
    r_te: float
    r_tm: float

    def of(self, mode: str) -> float:
        if mode == TE:
            return self.r_te
        if mode == TM:
            return self.r_tm
        raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class PlanarCavity:
    """
    Vacuum gap 0 < x < a between a left half-space (x < 0) and a right one (x > a).
    model_right defaults to model_left; models may be omitted only for ideal mirrors.
    """

    gap: float
    model_left: Optional[PolarizabilityModel] = None
    model_right: Optional[PolarizabilityModel] = None
    temperature: float = 0.0
    m0_te_policy: ZeroModePolicy = ZeroModePolicy.MICROSCOPIC_ZERO

    def __post_init__(self):
        if not (self.gap > 0 and math.isfinite(self.gap)):
            raise DomainError(f"gap must be positive, got {self.gap}")
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise DomainError(f"temperature must be >= 0, got {self.temperature}")
        object.__setattr__(self, "m0_te_policy", ZeroModePolicy(self.m0_te_policy))
        if self.model_right is None and self.model_left is not None:
            object.__setattr__(self, "model_right", self.model_left)
        if self.m0_te_policy != ZeroModePolicy.PERFECT_CONDUCTOR and self.model_left is None:
            raise DomainError("material models are required unless the cavity is a perfect conductor")

    @property
    def ideal(self) -> bool:
        return self.m0_te_policy == ZeroModePolicy.PERFECT_CONDUCTOR

    def model(self, side: str) -> PolarizabilityModel:
        if side == "left":
            return self.model_left
        if side == "right":
            return self.model_right
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    def with_gap(self, gap: float) -> "PlanarCavity":
        return PlanarCavity(gap, self.model_left, self.model_right, self.temperature, self.m0_te_policy)

    def with_temperature(self, temperature: float) -> "PlanarCavity":
        return PlanarCavity(self.gap, self.model_left, self.model_right, temperature, self.m0_te_policy)

    def with_policy(self, policy: Union[str, ZeroModePolicy]) -> "PlanarCavity":
        return PlanarCavity(self.gap, self.model_left, self.model_right, self.temperature, ZeroModePolicy(policy))


def _eps(eps: Union[float, DielectricResponse]) -> DielectricResponse:
    if isinstance(eps, DielectricResponse):
        return eps
    eps = float(eps)
    if math.isinf(eps):
        return DielectricResponse.metal()
    if not eps >= 1:
        raise DomainError(f"epsilon must be >= 1, got {eps}")
    return DielectricResponse(eps)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


# wavenumbers and reflection


def rotated_wavenumbers(pt: FrequencyMomentumPoint, eps: Union[float, DielectricResponse]) -> RotatedWavenumbers:
    eps = _eps(eps)
    k0 = pt.kappa0
    if eps.metallic:
        if pt.u == 0:
            raise DomainError("metallic response at u=0 has no finite kappa1; use the zero-mode policy")
        return RotatedWavenumbers(k0, math.inf)
    return RotatedWavenumbers(k0, math.sqrt(eps.value * pt.u * pt.u + pt.p * pt.p))


def reflection(pt: FrequencyMomentumPoint, eps: Union[float, DielectricResponse]) -> ReflectionPair:
    """Fresnel factors of a half-space on the imaginary axis (TE <= 0)."""
    eps = _eps(eps)
    if pt.u == 0 and pt.p == 0:
        raise DomainError("reflection undefined at (u, p) = (0, 0)")
    if eps.metallic:
        if pt.u == 0:
            raise DomainError("metallic response at u=0 must go through the zero-mode policy")
        return ReflectionPair(-1.0, 1.0)

    e = eps.value
    if e == 1.0:
        return ReflectionPair(0.0, 0.0)
    k = rotated_wavenumbers(pt, eps)
    s = k.kappa1 + k.kappa0
    # κ1 - κ0 = (ε-1)u²/(κ1+κ0)
    r_te = -(e - 1.0) * pt.u * pt.u / (s * s)
    r_tm = -(k.kappa1 - e * k.kappa0) / (k.kappa1 + e * k.kappa0)
    return ReflectionPair(r_te, r_tm)


def reflection_tm_alternative(pt: FrequencyMomentumPoint, eps: Union[float, DielectricResponse]) -> float:
    """
    TM factor in the two-plate form -(κ1-κ0)(p²+κ1κ0)/((κ1+κ0)(p²-κ1κ0)),
    with the common u² cancelled so that u = 0 is regular.
    """
    eps = _eps(eps)
    if eps.metallic:
        return reflection(pt, eps).r_tm
    if pt.u == 0 and pt.p == 0:
        raise DomainError("reflection undefined at (u, p) = (0, 0)")
    e = eps.value
    k = rotated_wavenumbers(pt, eps)
    s = k.kappa1 + k.kappa0
    q = pt.p * pt.p + k.kappa1 * k.kappa0
    return (e - 1.0) * q * q / (s * s * (e * pt.u * pt.u + (e + 1.0) * pt.p * pt.p))


def zero_mode_te_reflection(p: float, cavity: PlanarCavity, side: str = "left") -> float:
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    policy = cavity.m0_te_policy
    if policy == ZeroModePolicy.MICROSCOPIC_ZERO:
        return 0.0
    if policy == ZeroModePolicy.PERFECT_CONDUCTOR:
        return -1.0

    weight = zero_frequency_weight(cavity.model(side))
    if weight == 0.0:
        return 0.0
    # -(k1 - p)/(k1 + p) with k1 = sqrt(u_p² + p²)
    k1 = math.sqrt(weight + p * p)
    return -weight / ((k1 + p) ** 2)


def reflection_pair_for(cavity: PlanarCavity, side: str, u: float, p: float) -> ReflectionPair:
    """Reflection at one plate with the zero-mode policy applied at u = 0."""
    if cavity.ideal:
        return ReflectionPair(-1.0, 1.0)

    eps = eval_epsilon(cavity.model(side), u, tail=True)
    if u == 0:
        r_tm = 1.0 if eps.metallic else (eps.value - 1.0) / (eps.value + 1.0)
        return ReflectionPair(zero_mode_te_reflection(p, cavity, side), r_tm)
    return reflection(FrequencyMomentumPoint(u, p), eps)


# loop factors and spectral densities


def _round_trip(pt: FrequencyMomentumPoint, cavity: PlanarCavity, mode: str) -> Tuple[float, float]:
    """(x, 1 - x) for x = r_L r_R exp(-2 κ0 a), the denominator computed without cancellation."""
    left = reflection_pair_for(cavity, "left", pt.u, pt.p).of(mode)
    right = left if cavity.model_right is cavity.model_left else reflection_pair_for(cavity, "right", pt.u, pt.p).of(mode)
    rr = left * right
    decay = 2.0 * pt.kappa0 * cavity.gap
    x = rr * math.exp(-decay)
    denom = -math.expm1(-decay) if rr == 1.0 else 1.0 - x
    if not denom > 0:
        raise InvariantViolation(f"round-trip denominator {denom} <= 0 at u={pt.u}, p={pt.p}, mode={mode}")
    return x, denom


def mode_loop_factor(pt: FrequencyMomentumPoint, cavity: PlanarCavity, mode: str) -> float:
    _check_mode(mode)
    x, denom = _round_trip(pt, cavity, mode)
    return x / denom


def pressure_integrand(pt: FrequencyMomentumPoint, cavity: PlanarCavity) -> float:
    return -pt.kappa0 * (mode_loop_factor(pt, cavity, TE) + mode_loop_factor(pt, cavity, TM))


def free_energy_integrand(pt: FrequencyMomentumPoint, cavity: PlanarCavity) -> float:
    total = 0.0
    for mode in MODES:
        _, denom = _round_trip(pt, cavity, mode)
        total += math.log(denom)
    return total


def _polar_integral(
    g: Callable[[float, float], float],
    gap: float,
    spec: QuadratureSpec,
) -> QuadResult:
    """∫du ∫p dp g(u, p) over the quarter plane, in polar coordinates u = κ cosθ, p = κ sinθ."""
    inner_spec = spec.tightened(10.0).scaled(1.0 / (2.0 * gap))
    worst = [0.0]

    def radial(theta: float) -> float:
        c, s = math.cos(theta), math.sin(theta)

        def f(k: float) -> float:
            if k == 0.0:
                return 0.0
            return k * k * g(k * c, k * s)

        try:
            res = integrate_semi_infinite(f, inner_spec)
        except NonConvergenceError as exc:
            raise exc.with_channel(theta=theta)
        worst[0] = max(worst[0], res.error)
        return s * res.value

    outer = integrate_finite(radial, 0.0, 0.5 * math.pi, spec)
    return QuadResult(outer.value, outer.error + 0.5 * math.pi * worst[0], outer.evaluations)


def _momentum_integral(
    g: Callable[[float, float], float],
    u: float,
    cavity: PlanarCavity,
    spec: QuadratureSpec,
    errors: List[float],
    T: float,
) -> float:
    """∫p dp g(u, p) at one Matsubara frequency."""

    def f(p: float) -> float:
        if p == 0.0:
            return 0.0
        return p * g(u, p)

    try:
        res = integrate_semi_infinite(f, spec, scale=1.0 / (2.0 * cavity.gap))
    except NonConvergenceError as exc:
        m = int(round(u / (2.0 * math.pi * T))) if T > 0 else 0
        raise exc.with_channel(m=m)
    errors.append(res.error)
    return res.value


def _pressure_density(u: float, p: float, cavity: PlanarCavity) -> float:
    return pressure_integrand(FrequencyMomentumPoint(u, p), cavity)


def _free_density(u: float, p: float, cavity: PlanarCavity) -> float:
    return free_energy_integrand(FrequencyMomentumPoint(u, p), cavity)


def pressure_zero_temperature(cavity: PlanarCavity, spec: Optional[QuadratureSpec] = None) -> QuadResult:
    """P = (1/2π²) ∫du ∫p dp pressure_integrand; negative means attraction."""
    spec = spec or QuadratureSpec()
    res = _polar_integral(lambda u, p: _pressure_density(u, p, cavity), cavity.gap, spec)
    k = 1.0 / (2.0 * math.pi ** 2)
    log.debug(f"P(T=0, a={cavity.gap}) = {k * res.value:.12e} +- {k * res.error:.2e}")
    return QuadResult(k * res.value, k * res.error, res.evaluations)


def _matsubara_integral(
    g: Callable[[float, float], float],
    cavity: PlanarCavity,
    spec: QuadratureSpec,
    sum_spec: Optional[SumSpec],
    executor: Optional[Executor],
) -> SumResult:
    T = cavity.temperature
    if not T > 0:
        raise DomainError(f"finite-temperature evaluation needs T > 0, got {T}")
    errors: List[float] = []
    res = matsubara_sum(
        lambda u: _momentum_integral(g, u, cavity, spec, errors, T),
        T,
        sum_spec,
        executor,
    )
    quad_err = 2.0 * T * math.fsum(sorted(errors))
    return SumResult(res.value, res.error + quad_err, res.terms, res.tail)


def pressure_finite_temperature(
    cavity: PlanarCavity,
    spec: Optional[QuadratureSpec] = None,
    sum_spec: Optional[SumSpec] = None,
    executor: Optional[Executor] = None,
) -> SumResult:
    """P = (T/2π) Σ_{m>=0} (2-δ_m0) ∫p dp pressure_integrand(u_m, p)."""
    spec = spec or QuadratureSpec()
    res = _matsubara_integral(lambda u, p: _pressure_density(u, p, cavity), cavity, spec, sum_spec, executor)
    k = 1.0 / (2.0 * math.pi)
    log.debug(f"P(T={cavity.temperature}, a={cavity.gap}) = {k * res.value:.12e} ({res.terms} terms)")
    return SumResult(k * res.value, k * res.error, res.terms, k * res.tail)


def pressure(
    cavity: PlanarCavity,
    spec: Optional[QuadratureSpec] = None,
    sum_spec: Optional[SumSpec] = None,
    executor: Optional[Executor] = None,
) -> Union[QuadResult, SumResult]:
    if cavity.temperature == 0:
        return pressure_zero_temperature(cavity, spec)
    return pressure_finite_temperature(cavity, spec, sum_spec, executor)


def free_energy_per_area(
    cavity: PlanarCavity,
    spec: Optional[QuadratureSpec] = None,
    sum_spec: Optional[SumSpec] = None,
    executor: Optional[Executor] = None,
) -> Union[QuadResult, SumResult]:
    """
    F/A = (T/2π) Σ'_m ∫p dp Σ_λ ln(1 - r_L r_R e^{-2κ0 a}), m = 0 at half weight;
    at T = 0 the sum becomes (1/4π²) ∫du ∫p dp.
    """
    spec = spec or QuadratureSpec()
    g = lambda u, p: _free_density(u, p, cavity)

    if cavity.temperature == 0:
        res = _polar_integral(g, cavity.gap, spec)
        k = 1.0 / (4.0 * math.pi ** 2)
        return QuadResult(k * res.value, k * res.error, res.evaluations)

    res = _matsubara_integral(g, cavity, spec, sum_spec, executor)
    k = 1.0 / (4.0 * math.pi)
    return SumResult(k * res.value, k * res.error, res.terms, k * res.tail)


def zero_mode_term(cavity: PlanarCavity, mode: Optional[str] = None, spec: Optional[QuadratureSpec] = None) -> QuadResult:
    """
    The m = 0 contribution (T/2π) ∫p dp (-p) loop(0, p) to the pressure,
    for one mode or both. Alone it is the classical high-temperature limit.
    """
    spec = spec or QuadratureSpec()
    T = cavity.temperature
    if not T > 0:
        raise DomainError("zero-mode term needs T > 0")
    modes = MODES if mode is None else (mode,)

    def f(p: float) -> float:
        if p == 0.0:
            return 0.0
        pt = FrequencyMomentumPoint(0.0, p)
        return -p * p * sum(mode_loop_factor(pt, cavity, m) for m in modes)

    res = integrate_semi_infinite(f, spec, scale=1.0 / (2.0 * cavity.gap))
    k = T / (2.0 * math.pi)
    return QuadResult(k * res.value, k * res.error, res.evaluations)


def classical_limit_pressure(cavity: PlanarCavity, spec: Optional[QuadratureSpec] = None) -> float:
    """
    High-temperature pressure, the m = 0 term alone.
    Ideal mirrors give -ζ(3)T/(4πa³); a metal whose TE zero mode vanishes gives half of that.
    """
    return zero_mode_term(cavity, spec=spec).value


# dilute limit


def _dilute_density(u: float, p: float, a: float, alpha: float) -> float:
    k0sq = u * u + p * p
    k0 = math.sqrt(k0sq)
    r_te = -alpha * u * u / (4.0 * k0sq)
    r_tm = alpha * (2.0 * k0sq - u * u) / (4.0 * k0sq)
    return -k0 * math.exp(-2.0 * k0 * a) * (r_te * r_te + r_tm * r_tm)


def dilute_pressure_zero_temperature(a: float, alpha: float, spec: Optional[QuadratureSpec] = None) -> QuadResult:
    """Lifshitz pressure to second order in α = ε - 1 (constant ε), integrated numerically."""
    spec = spec or QuadratureSpec()
    if not a > 0:
        raise DomainError(f"gap must be positive, got {a}")
    res = _polar_integral(lambda u, p: _dilute_density(u, p, a, alpha), a, spec)
    k = 1.0 / (2.0 * math.pi ** 2)
    return QuadResult(k * res.value, k * res.error, res.evaluations)


def dilute_slab_pressure(g: float, thickness: float, alpha: float) -> float:
    """Second-order pressure between two slabs of equal thickness a surface gap g apart."""
    if not (g > 0 and thickness > 0):
        raise DomainError(f"gap and thickness must be positive, got {g}, {thickness}")

    def half(x: float) -> float:
        return -DILUTE_COEFFICIENT * alpha * alpha / x ** 4

    return half(g) - 2.0 * half(g + thickness) + half(g + 2.0 * thickness)


def dilute_sheet_pressure(distance: float, areal_alpha: float) -> float:
    """
    Second-order pressure between two thin sheets of areal polarizability η
    (a slab of density n and thickness t has η = n a0 t) a distance apart:
    the thin-slab limit t² ∂²P/∂g², i.e. -20 DILUTE_COEFFICIENT η² / d⁶.
    """
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance}")
    return -20.0 * DILUTE_COEFFICIENT * areal_alpha * areal_alpha / distance ** 6


# γ coefficients and the multiplicative solution


def gamma_planar(
    pt: FrequencyMomentumPoint,
    eps: Union[float, DielectricResponse],
    mode: str,
    gap: Optional[float] = None,
    form: str = "two_plate",
) -> float:
    """
    α²γ_λ in rotated variables.

    form="one_plate": one interface,
        TE (κ1-κ0)²/(4κ1κ0), TM (κ1-κ0)²(p²+κ1κ0)²/(ε u⁴ 4κ1κ0);
    form="two_plate": two interfaces a gap apart, r_λ² e^{-2κ0 a}.
    """
    _check_mode(mode)
    eps = _eps(eps)
    if not (pt.u > 0 or mode == TM):
        raise DomainError("TE gamma needs u > 0")
    if pt.kappa0 == 0:
        raise DomainError("singular channel: kappa1 * kappa0 = 0")

    if form == "two_plate":
        if gap is None or not gap > 0:
            raise DomainError("two_plate form needs a positive gap")
        decay = math.exp(-2.0 * pt.kappa0 * gap)
        if eps.metallic:
            return decay
        k = rotated_wavenumbers(pt, eps)
        s = k.kappa1 + k.kappa0
        if mode == TE:
            d = (eps.value - 1.0) * pt.u * pt.u / (s * s)
            return d * d * decay
        r = reflection_tm_alternative(pt, eps)
        return r * r * decay

    if form != "one_plate":
        raise ValueError(f"form must be 'one_plate' or 'two_plate', got {form!r}")
    if eps.metallic:
        raise DomainError("one-plate gamma diverges for a metallic response")

    e = eps.value
    k = rotated_wavenumbers(pt, eps)
    s = k.kappa1 + k.kappa0
    prod4 = 4.0 * k.kappa1 * k.kappa0
    if mode == TE:
        d = (e - 1.0) * pt.u * pt.u
        return d * d / (s * s * prod4)
    q = pt.p * pt.p + k.kappa1 * k.kappa0
    return (e - 1.0) ** 2 * q * q / (e * s * s * prod4)


def one_plate_transmission(pt: FrequencyMomentumPoint, eps: Union[float, DielectricResponse], mode: str) -> float:
    """1/(1 + α²γ_λ); equals 4κ1κ0/(κ1+κ0)² for TE."""
    return 1.0 / (1.0 + gamma_planar(pt, eps, mode, form="one_plate"))


def verify_multiplicativity(
    pt: FrequencyMomentumPoint,
    eps: Union[float, DielectricResponse],
    mode: str,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """
    Compose medium, vacuum and medium one-dimensional kernels across the
    interface x = 0 by quadrature over the half-lines, divide by the bare
    medium kernel, and compare with the closed one-plate α²γ_λ.

    TE kernels are the scalars -u² e^{-κ|d|}/(2κ). TM kernels are the 2x2
    blocks of (∇∇ - εu²) e^{-κ|d|}/(2κε) on the (normal, in-plane) axes,
    derivative terms included; after scaling the in-plane axis by -i they
    are real, and every product picks up diag(1, -1) between factors.
    Contact terms drop out since the points never coincide.
    Returns the largest relative residual over the kernel entries.
    """
    _check_mode(mode)
    eps = _eps(eps)
    if not pt.u > 0:
        raise DomainError("multiplicativity check needs u > 0")
    if eps.metallic:
        raise DomainError("multiplicativity check needs a finite epsilon")
    e = eps.value
    if e == 1.0:
        return 0.0

    spec = spec or QuadratureSpec(rel_tol=1e-12)
    inner_spec = spec.tightened(10.0)
    k = rotated_wavenumbers(pt, eps)
    k0, k1, u2, p = k.kappa0, k.kappa1, pt.u * pt.u, pt.p

    if mode == TE:
        flip = np.eye(1)

        def kernel(d: float, kappa: float, weight: float) -> np.ndarray:
            return np.array([[-u2 / (2.0 * kappa) * math.exp(-kappa * abs(d))]])

    else:
        flip = np.diag([1.0, -1.0])

        def kernel(d: float, kappa: float, weight: float) -> np.ndarray:
            g = weight / (2.0 * kappa) * math.exp(-kappa * abs(d))
            off = -p * kappa * math.copysign(1.0, d)
            return g * np.array([[p * p, off], [off, kappa * kappa]])

    def vac(d: float) -> np.ndarray:
        return kernel(d, k0, 1.0)

    def med(d: float) -> np.ndarray:
        return kernel(d, k1, 1.0 / e)

    x = -0.5 / k1
    x2 = 0.5 / k1
    rate = k0 + k1

    def inner(xp: float) -> np.ndarray:
        # y over the vacuum half-line
        value, _ = integrate_semi_infinite_array(lambda y: med(x - y) @ flip @ vac(y - xp), inner_spec, scale=1.0 / rate)
        return value

    # x' over the medium half-line, x' = -t
    outer, _ = integrate_semi_infinite_array(lambda t: inner(-t) @ flip @ med(-t - x2), spec, scale=1.0 / rate)

    closed = gamma_planar(pt, eps, mode, form="one_plate") * med(x - x2)
    numeric = (e - 1.0) ** 2 * outer
    return float(np.max(np.abs(numeric - closed)) / np.max(np.abs(closed)))


# Green's function inside the gap


def greens_between_plates(
    x: float,
    xp: float,
    pt: FrequencyMomentumPoint,
    cavity: PlanarCavity,
    mode: str,
    scattered_only: bool = False,
) -> float:
    """
    Rotated scalar mode amplitude between the plates, overall factor -u²/(2κ0):
    free term + μ [r_L e^{-κ0(x+x')} + r_R e^{-κ0(2a-x-x')}]
    + μ r_L r_R e^{-2κ0 a} [e^{-κ0(x-x')} + e^{κ0(x-x')}],  μ = 1/(1 - r_L r_R e^{-2κ0 a}).
    """
    _check_mode(mode)
    a = cavity.gap
    if not (0 < x < a and 0 < xp < a):
        raise DomainError(f"points must lie inside the gap (0, {a}), got x={x}, x'={xp}")
    if not pt.u > 0:
        raise DomainError("Green's function between the plates needs u > 0")

    k0 = pt.kappa0
    c = -pt.u * pt.u / (2.0 * k0)
    r_l = reflection_pair_for(cavity, "left", pt.u, pt.p).of(mode)
    r_r = reflection_pair_for(cavity, "right", pt.u, pt.p).of(mode)
    decay = math.exp(-2.0 * k0 * a)
    mu = 1.0 / (1.0 - r_l * r_r * decay)

    scattered = c * mu * (
        r_l * math.exp(-k0 * (x + xp))
        + r_r * math.exp(-k0 * (2.0 * a - x - xp))
        + r_l * r_r * decay * 2.0 * math.cosh(k0 * (x - xp))
    )
    if scattered_only:
        return scattered
    return c * math.exp(-k0 * abs(x - xp)) + scattered


# zero-frequency analysis


def longitudinal_reflection_u0(alpha0: float) -> Tuple[float, float]:
    """(transmitted factor, reflection amplitude) of the longitudinal field at u = 0."""
    alpha0 = float(alpha0)
    if not alpha0 >= 0:
        raise DomainError(f"alpha0 must be >= 0, got {alpha0}")
    if alpha0 > 6.0:
        raise DomainError(f"alpha0={alpha0} outside the convergence domain alpha0 < 6")
    if alpha0 > 3.0:
        raise DomainError(f"alpha0={alpha0} > 3 is unphysical")
    reflected = 3.0 * alpha0 / (6.0 + alpha0)
    transmitted = (6.0 - 2.0 * alpha0) / (6.0 + alpha0)
    return transmitted, reflected


def te_convergence_gamma(pt: FrequencyMomentumPoint, alpha0: float) -> Tuple[float, bool]:
    """γ = α0/3 - (1 - α0/3)(κ1-κ0)²/(4κ1κ0); the TE perturbation series converges iff γ < 1."""
    alpha0 = float(alpha0)
    if not 0 <= alpha0 <= 3:
        raise DomainError(f"alpha0 must lie in [0, 3], got {alpha0}")
    if pt.u > 0 and not pt.p * pt.p > 2.0 * pt.u * pt.u:
        raise DomainError(f"TE convergence estimate needs p² > 2u² > 0 or u = 0, got u={pt.u}, p={pt.p}")

    if alpha0 == 3.0:
        gamma = 1.0
    elif pt.u == 0:
        gamma = alpha0 / 3.0
    else:
        e = 1.0 + alpha0 / (1.0 - alpha0 / 3.0)
        k = rotated_wavenumbers(pt, e)
        d = (e - 1.0) * pt.u * pt.u / (k.kappa1 + k.kappa0)
        gamma = alpha0 / 3.0 - (1.0 - alpha0 / 3.0) * d * d / (4.0 * k.kappa1 * k.kappa0)
    return gamma, gamma < 1.0


# spectral tables


def channel_rows(cavity: PlanarCavity, m_max: int, p_values: Iterable[float]) -> List[Dict[str, float]]:
    """Rows m, u, p, r_te, r_tm, integrand over Matsubara indices 0..m_max and a momentum grid."""
    if m_max > 0 and not cavity.temperature > 0:
        raise DomainError("reflection table with m_max > 0 needs T > 0")
    ps = [float(p) for p in p_values]
    rows: List[Dict[str, float]] = []
    for m in range(m_max + 1):
        u = matsubara_frequency(m, cavity.temperature)
        for p in ps:
            if u == 0 and p == 0:
                continue
            pt = FrequencyMomentumPoint(u, p)
            r = reflection_pair_for(cavity, "left", u, p)
            rows.append(
                {
                    "m": m,
                    "u": u,
                    "p": p,
                    "r_te": r.r_te,
                    "r_tm": r.r_tm,
                    "integrand": pressure_integrand(pt, cavity),
                }
            )
    return rows
