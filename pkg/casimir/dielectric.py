from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator

from casimir.errors import DomainError, OutOfRangeError, UnphysicalInputError

KINDS = ("plasma", "oscillator", "constant_epsilon", "tabulated")
INTERPOLATIONS = ("linear", "pchip")

# static polarizability density of a metal
METALLIC_ALPHA0 = 3.0


@dataclass(frozen=True)
class DielectricResponse:
    """ε(iu) >= 1, or the metallic marker (pole of the Lorentz–Lorenz map)."""

    value: float
    metallic: bool = False

    @classmethod
    def metal(cls) -> "DielectricResponse":
        return cls(math.inf, True)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class PolarizabilityModel:

    kind: str
    u_p: Optional[float] = None
    alpha_s: Optional[float] = None
    u0: Optional[float] = None
    epsilon: Optional[float] = None
    samples_u: Tuple[float, ...] = field(default_factory=tuple)
    samples_alpha0: Tuple[float, ...] = field(default_factory=tuple)
    interpolation: str = "linear"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnphysicalInputError(f"unknown model kind {self.kind!r}, expected one of {KINDS}")

        if self.kind == "plasma":
            if self.u_p is None or not (self.u_p > 0 and math.isfinite(self.u_p)):
                raise UnphysicalInputError(f"plasma model needs u_p > 0, got {self.u_p}")

        elif self.kind == "oscillator":
            if self.alpha_s is None or not (0.0 <= self.alpha_s < METALLIC_ALPHA0):
                raise UnphysicalInputError(f"oscillator model needs 0 <= alpha_s < 3, got {self.alpha_s}")
            if self.u0 is None or not (self.u0 > 0 and math.isfinite(self.u0)):
                raise UnphysicalInputError(f"oscillator model needs u0 > 0, got {self.u0}")

        elif self.kind == "constant_epsilon":
            if self.epsilon is None or not (1.0 <= self.epsilon < math.inf):
                raise UnphysicalInputError(f"constant_epsilon model needs finite epsilon >= 1, got {self.epsilon}")

        else:
            u = np.asarray(self.samples_u, dtype=float)
            a = np.asarray(self.samples_alpha0, dtype=float)
            if u.size < 2 or u.size != a.size:
                raise UnphysicalInputError("tabulated model needs at least two (u, alpha0) samples of equal length")
            if np.any(u < 0) or np.any(np.diff(u) <= 0):
                raise UnphysicalInputError("tabulated u samples must be >= 0 and strictly increasing")
            if np.any(a < 0) or np.any(a >= METALLIC_ALPHA0):
                raise UnphysicalInputError("tabulated alpha0 samples must lie in [0, 3)")
            if self.interpolation not in INTERPOLATIONS:
                raise UnphysicalInputError(
                    f"unknown interpolation {self.interpolation!r}, expected one of {INTERPOLATIONS}"
                )

    # constructors

    @classmethod
    def plasma(cls, u_p: float) -> "PolarizabilityModel":
        return cls("plasma", u_p=float(u_p))

    @classmethod
    def oscillator(cls, alpha_s: float, u0: float) -> "PolarizabilityModel":
        return cls("oscillator", alpha_s=float(alpha_s), u0=float(u0))

    @classmethod
    def constant_epsilon(cls, epsilon: float) -> "PolarizabilityModel":
        return cls("constant_epsilon", epsilon=float(epsilon))

    @classmethod
    def tabulated(
        cls,
        u: Sequence[float],
        alpha0: Sequence[float],
        interpolation: str = "linear",
    ) -> "PolarizabilityModel":
        return cls(
            "tabulated",
            samples_u=tuple(float(x) for x in u),
            samples_alpha0=tuple(float(x) for x in alpha0),
            interpolation=interpolation,
        )

    @classmethod
    def from_table(cls, path: Union[str, Path], interpolation: str = "linear") -> "PolarizabilityModel":
        df = pd.read_csv(path, comment="#")
        cols = [c.strip().lower() for c in df.columns]
        df.columns = cols
        if "u" in cols and "alpha0" in cols:
            u, a = df["u"], df["alpha0"]
        elif len(cols) >= 2:
            u, a = df.iloc[:, 0], df.iloc[:, 1]
        else:
            raise UnphysicalInputError(f"{path}: expected two columns u, alpha0")
        df2 = pd.DataFrame({"u": u.astype(float), "alpha0": a.astype(float)}).sort_values("u")
        return cls.tabulated(df2["u"].tolist(), df2["alpha0"].tolist(), interpolation)


@lru_cache(maxsize=64)
def _interpolator(model: PolarizabilityModel) -> Callable[[float], float]:
    u = np.asarray(model.samples_u, dtype=float)
    a = np.asarray(model.samples_alpha0, dtype=float)
    if model.interpolation == "pchip":
        spline = PchipInterpolator(u, a, extrapolate=False)
        return lambda x: float(spline(x))
    return lambda x: float(np.interp(x, u, a))


def _check_frequency(u: float) -> float:
    u = float(u)
    if not u >= 0 or math.isnan(u):
        raise DomainError(f"imaginary frequency must be >= 0, got {u}")
    return u


def eval_alpha0(model: PolarizabilityModel, u: float, tail: bool = False) -> float:
    """
    α₀(iu). A tabulated model raises OutOfRangeError outside its samples; with
    tail=True it continues above the last sample as α₀(u_n)(u_n/u)², the
    plasma-like decay used by frequency integrals that run to infinity.
    """
    u = _check_frequency(u)

    if model.kind == "plasma":
        if math.isinf(u):
            return 0.0
        return model.u_p ** 2 / (u * u + model.u_p ** 2 / 3.0)

    if model.kind == "oscillator":
        if math.isinf(u):
            return 0.0
        return model.alpha_s * model.u0 ** 2 / (model.u0 ** 2 + u * u)

    if model.kind == "constant_epsilon":
        return inverse_lorentz_lorenz(model.epsilon)

    lo, hi = model.samples_u[0], model.samples_u[-1]
    if tail and u > hi:
        return 0.0 if math.isinf(u) else model.samples_alpha0[-1] * (hi / u) ** 2
    if u < lo or u > hi:
        raise OutOfRangeError(f"u={u} outside tabulated range [{lo}, {hi}]")
    return _interpolator(model)(u)


def lorentz_lorenz(alpha0: float) -> DielectricResponse:
    alpha0 = float(alpha0)
    if not alpha0 >= 0:
        raise UnphysicalInputError(f"alpha0 must be >= 0, got {alpha0}")
    if alpha0 > METALLIC_ALPHA0:
        raise UnphysicalInputError(f"alpha0={alpha0} > 3 gives a negative Lorentz–Lorenz denominator")
    if alpha0 == METALLIC_ALPHA0:
        return DielectricResponse.metal()
    return DielectricResponse(1.0 + alpha0 / (1.0 - alpha0 / 3.0))


def inverse_lorentz_lorenz(epsilon: Union[float, DielectricResponse]) -> float:
    if isinstance(epsilon, DielectricResponse):
        if epsilon.metallic:
            return METALLIC_ALPHA0
        epsilon = epsilon.value
    epsilon = float(epsilon)
    if not epsilon >= 1:
        raise UnphysicalInputError(f"epsilon must be >= 1, got {epsilon}")
    if math.isinf(epsilon):
        return METALLIC_ALPHA0
    return 3.0 * (epsilon - 1.0) / (epsilon + 2.0)


def eval_epsilon(model: PolarizabilityModel, u: float, tail: bool = False) -> DielectricResponse:
    u = _check_frequency(u)

    if model.kind == "constant_epsilon":
        return DielectricResponse(model.epsilon)

    if model.kind == "plasma":
        # Lorentz–Lorenz of u_p^2/(u^2 + u_p^2/3) in closed form
        if u == 0:
            return DielectricResponse.metal()
        return DielectricResponse(1.0 + (model.u_p / u) ** 2)

    if model.kind == "oscillator":
        u0sq = model.u0 ** 2
        return DielectricResponse(
            1.0 + model.alpha_s * u0sq / (u0sq * (1.0 - model.alpha_s / 3.0) + u * u)
        )

    return lorentz_lorenz(eval_alpha0(model, u, tail))


def is_metallic(model: PolarizabilityModel) -> bool:
    """True when α₀(0) = 3, i.e. ε(0) is a pole."""
    return model.kind == "plasma"


def zero_frequency_weight(model: PolarizabilityModel) -> float:
    """lim_{u->0} ε(iu) u²: u_p² for the plasma model, 0 for any finite ε(0)."""
    if model.kind == "plasma":
        return model.u_p ** 2
    return 0.0
