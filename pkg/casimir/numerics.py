from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.integrate import IntegrationWarning, quad, quad_vec

from casimir.errors import NonConvergenceError

log = logging.getLogger("casimir.numerics")

QUAD_TOL_DEFAULT = 1e-9
SUM_TOL_DEFAULT = 1e-12

# QUADPACK refuses epsrel below max(50*eps, 5e-29) when epsabs is zero
_QUADPACK_MIN_REL = 1e-14

MAPPINGS = ("rational", "exponential")


@dataclass(frozen=True)
class QuadratureSpec:
    """
    rel_tol          -- target relative tolerance
    abs_tol          -- absolute floor (0 means purely relative)
    max_subdivisions -- QUADPACK panel limit
    mapping          -- semi-infinite map: "rational" x = L s/(1-s), "exponential" x = -L ln(1-s)
    scale            -- L in the maps above
    """

    rel_tol: float = QUAD_TOL_DEFAULT
    abs_tol: float = 0.0
    max_subdivisions: int = 200
    mapping: str = "rational"
    scale: float = 1.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.mapping not in MAPPINGS:
            raise ValueError(f"unknown mapping {self.mapping!r}, expected one of {MAPPINGS}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def scaled(self, scale: float) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.max_subdivisions, self.mapping, scale)

    def tightened(self, factor: float) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol / factor, self.abs_tol / factor, self.max_subdivisions, self.mapping, self.scale)


@dataclass(frozen=True)
class SumSpec:
    """
    Matsubara summation control. Terms are accumulated in index order until
    `patience` consecutive terms are below rel_tol relative to the partial sum;
    the remainder is extrapolated geometrically from the last two terms.
    """

    rel_tol: float = SUM_TOL_DEFAULT
    max_terms: int = 100000
    min_terms: int = 2
    patience: int = 3
    block: int = 16

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1 or self.min_terms < 1 or self.patience < 1 or self.block < 1:
            raise ValueError("max_terms, min_terms, patience and block must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int = 0


@dataclass(frozen=True)
class SumResult:
    value: float
    error: float
    terms: int
    tail: float


def _quad(f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec) -> QuadResult:
    rel = max(spec.rel_tol, _QUADPACK_MIN_REL)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        out = quad(f, a, b, epsabs=spec.abs_tol, epsrel=rel, limit=spec.max_subdivisions, full_output=1)

    value, err, info = out[0], out[1], out[2]
    neval = int(info.get("neval", 0)) if isinstance(info, dict) else 0

    if not (math.isfinite(value) and math.isfinite(err)):
        raise NonConvergenceError(
            f"integrand produced a non-finite value on [{a}, {b}]",
            best=value,
            error=err,
        )

    if len(out) > 3:
        # QUADPACK flagged something; accept only if the estimate still meets the target
        target = max(spec.abs_tol, spec.rel_tol * abs(value))
        if err > target:
            raise NonConvergenceError(
                f"quadrature on [{a}, {b}] stopped at error {err:.3e} > target {target:.3e}: {out[3]}",
                best=value,
                error=err,
            )
        log.debug(f"quad [{a}, {b}] accepted with warning: {out[3]}")

    return QuadResult(float(value), float(err), neval)


def integrate_finite(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: Optional[QuadratureSpec] = None,
) -> QuadResult:
    """Adaptive Gauss–Kronrod (QUADPACK) on [a, b] with endpoint-singularity extrapolation."""
    spec = spec or QuadratureSpec()
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    return _quad(f, a, b, spec)


def integrate_semi_infinite(
    f: Callable[[float], float],
    spec: Optional[QuadratureSpec] = None,
    scale: Optional[float] = None,
) -> QuadResult:
    """
    Integrate f over [0, inf) by mapping onto [0, 1).

    Parameters
    ----------
    f : callable
        Integrand, must decay at infinity.
    spec : QuadratureSpec, optional
        Tolerances and the mapping kind.
    scale : float, optional
        Characteristic decay length of f; overrides ``spec.scale``.

    Returns
    -------
    QuadResult
        Value and absolute error estimate.
    """
    spec = spec or QuadratureSpec()
    return _quad(_unit_interval(f, spec, scale), 0.0, 1.0, spec)


def _unit_interval(f: Callable, spec: QuadratureSpec, scale: Optional[float]) -> Callable:
    L = float(scale if scale is not None else spec.scale)
    if not L > 0:
        raise ValueError(f"scale must be positive, got {L}")

    if spec.mapping == "rational":

        def g(s: float):
            if s >= 1.0:
                return 0.0
            w = 1.0 - s
            return f(L * s / w) * L / (w * w)

    else:

        def g(s: float):
            if s >= 1.0:
                return 0.0
            return f(-L * math.log1p(-s)) * L / (1.0 - s)

    return g


def integrate_semi_infinite_array(
    f: Callable[[float], np.ndarray],
    spec: Optional[QuadratureSpec] = None,
    scale: Optional[float] = None,
) -> Tuple[np.ndarray, float]:
    """Array-valued version of integrate_semi_infinite; the error is in the max norm."""
    spec = spec or QuadratureSpec()
    rel = max(spec.rel_tol, _QUADPACK_MIN_REL)
    value, err, info = quad_vec(
        _unit_interval(f, spec, scale), 0.0, 1.0,
        epsabs=spec.abs_tol, epsrel=rel, norm="max", limit=spec.max_subdivisions, full_output=True,
    )
    value = np.asarray(value, dtype=float)
    if not (np.all(np.isfinite(value)) and math.isfinite(err)):
        raise NonConvergenceError("array integrand produced a non-finite value", error=err)
    target = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(value))))
    if not info.success and err > target:
        raise NonConvergenceError(f"array quadrature stopped at error {err:.3e} > target {target:.3e}", error=err)
    return value, float(err)


def matsubara_frequency(m: int, T: float) -> float:
    return 2.0 * math.pi * m * T


def matsubara_sum(
    f: Callable[[float], float],
    T: float,
    spec: Optional[SumSpec] = None,
    executor: Optional[Executor] = None,
) -> SumResult:
    """
    T * sum_{m>=0} (2 - delta_m0) f(u_m), u_m = 2 pi m T.

    With an executor, terms are evaluated in blocks concurrently; the stopping
    index and the reduction order do not depend on the block size.
    """
    spec = spec or SumSpec()
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")

    terms: List[float] = []
    partial = 0.0
    quiet = 0
    m = 0
    stop: Optional[int] = None

    while stop is None:
        if m >= spec.max_terms:
            best = T * math.fsum(terms)
            raise NonConvergenceError(
                f"Matsubara sum not converged after {spec.max_terms} terms "
                f"(last term {terms[-1] if terms else float('nan'):.3e})",
                best=best,
                error=abs(T * terms[-1]) if terms else None,
                channel={"m": m - 1},
            )

        width = spec.block if executor is not None else 1
        idx = list(range(m, min(m + width, spec.max_terms)))
        us = [matsubara_frequency(k, T) for k in idx]
        if executor is not None and len(us) > 1:
            values = list(executor.map(f, us))
        else:
            values = [f(u) for u in us]

        for k, v in zip(idx, values):
            v = float(v)
            if not math.isfinite(v):
                raise NonConvergenceError(
                    f"non-finite Matsubara term {v}",
                    best=T * math.fsum(terms),
                    channel={"m": k},
                )
            t = v if k == 0 else 2.0 * v
            terms.append(t)
            partial += t
            if abs(t) <= spec.rel_tol * abs(partial):
                quiet += 1
            else:
                quiet = 0
            if k + 1 >= spec.min_terms and quiet >= spec.patience:
                stop = k
                break
        m = idx[-1] + 1

    tail = 0.0
    if len(terms) >= 2 and terms[-2] != 0.0:
        q = terms[-1] / terms[-2]
        if 0.0 < q < 1.0:
            tail = terms[-1] * q / (1.0 - q)

    value = T * (math.fsum(terms) + tail)
    error = T * max(abs(tail), abs(terms[-1]))
    log.debug(f"matsubara: T={T:.6g} terms={len(terms)} tail={T * tail:.3e}")
    return SumResult(value, error, len(terms), T * tail)


def cholesky_lower(matrix: np.ndarray) -> np.ndarray:
    try:
        c, _ = linalg.cho_factor(np.asarray(matrix, dtype=float), lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise NonConvergenceError(f"non-positive pivot in Cholesky factorization: {exc}") from exc
    return np.tril(c)


def logdet_spd(matrix: np.ndarray) -> float:
    """ln det of a symmetric positive definite matrix, 2 Σ ln L_ii."""
    a = _square(matrix)
    if a.size == 0:
        return 0.0
    return 2.0 * math.fsum(np.log(np.diag(cholesky_lower(a))))


@dataclass(frozen=True)
class LogDet:
    value: float
    radius: float


def _square(matrix: np.ndarray) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix expected, got shape {a.shape}")
    return a


def logdet_one_minus(matrix: np.ndarray) -> LogDet:
    """
    log det(I - S) for symmetric S from its spectrum, Σ log1p(-λ).
    Keeps full relative accuracy when S is small; spectral radius >= 1 raises.
    """
    s = _square(matrix)
    if s.size == 0:
        return LogDet(0.0, 0.0)
    ev = linalg.eigvalsh(s)
    radius = float(max(abs(ev[0]), abs(ev[-1])))
    if radius >= 1.0:
        raise NonConvergenceError(
            f"spectral radius {radius:.6g} >= 1",
            best=None,
            channel={"radius": radius},
        )
    return LogDet(math.fsum(np.log1p(-ev)), radius)


def logdet_one_minus_gram(c: np.ndarray) -> LogDet:
    """log det(I - C Cᵀ) = Σ log1p(-σ²) over the singular values of C."""
    c = np.asarray(c, dtype=float)
    if c.size == 0:
        return LogDet(0.0, 0.0)
    sv = linalg.svdvals(c)
    radius = float(sv[0] ** 2)
    if radius >= 1.0:
        raise NonConvergenceError(f"reduced coupling norm {radius:.6g} >= 1", channel={"radius": radius})
    return LogDet(math.fsum(np.log1p(-sv * sv)), radius)
