"""
Brute-force free energy of finite dipole lattices.

Each site carries an isotropic polarizability a0 (volume units); sites couple
through the retarded dipole kernel on the imaginary frequency axis. The
spectral free energy is F(u) = ½ log det(I - M(u)), M the 3N x 3N coupling
matrix with zero self-blocks.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.spatial.distance import cdist, pdist
from scipy.spatial.transform import Rotation

from casimir.dielectric import PolarizabilityModel, eval_alpha0
from casimir.errors import DomainError, NonConvergenceError
from casimir.numerics import (
    QuadratureSpec,
    QuadResult,
    SumResult,
    SumSpec,
    LogDet,
    cholesky_lower,
    integrate_finite,
    integrate_semi_infinite,
    logdet_one_minus,
    logdet_one_minus_gram,
    matsubara_sum,
)

log = logging.getLogger("casimir.dipole_oracle")

# soft ceiling on lattice size for dense linear algebra
MAX_SITES = 2000

_AXES = {"x": 0, "y": 1, "z": 2}

# pairs at the cutoff distance up to rounding stay coupled
_CUTOFF_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DipoleLattice:
    """
    sites       -- (N, 3) coordinates
    site_alpha0 -- (N,) polarizabilities a0
    cutoff      -- pairs closer than this are excluded from the coupling
    label       -- name used in logs and when splitting A/B
    dispersion  -- optional model; at iu the sites carry a0 * α₀(u)/α₀(0)
    """

    sites: np.ndarray
    site_alpha0: np.ndarray
    cutoff: float = 0.0
    label: str = "A"
    dispersion: Optional[PolarizabilityModel] = None

    def __post_init__(self):
        sites = np.array(self.sites, dtype=float).reshape(-1, 3)
        alpha = np.broadcast_to(np.asarray(self.site_alpha0, dtype=float), (len(sites),)).copy()
        if not np.all(np.isfinite(sites)):
            raise DomainError(f"[{self.label}] site coordinates must be finite")
        if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
            raise DomainError(f"[{self.label}] site polarizabilities must be finite and >= 0")
        if not self.cutoff >= 0:
            raise DomainError(f"[{self.label}] cutoff must be >= 0, got {self.cutoff}")
        if len(sites) > MAX_SITES:
            log.warning(f"[{self.label}] {len(sites)} sites exceed the dense limit {MAX_SITES}")
        if len(sites) > 1:
            dmin = float(pdist(sites).min())
            if dmin == 0.0:
                raise DomainError(f"[{self.label}] sites must be pairwise distinct")
            if dmin < self.cutoff * (1.0 - _CUTOFF_RTOL):
                log.debug(f"[{self.label}] min distance {dmin:.4g} below cutoff {self.cutoff:.4g}; close pairs excluded")
        if self.dispersion is not None and not eval_alpha0(self.dispersion, 0.0) > 0:
            raise DomainError(f"[{self.label}] dispersion model needs a0(0) > 0")
        sites.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "site_alpha0", alpha)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def min_distance(self) -> float:
        return float(pdist(self.sites).min()) if len(self) > 1 else math.inf

    def alpha_at(self, u: float) -> np.ndarray:
        if self.dispersion is None:
            return self.site_alpha0
        shape = eval_alpha0(self.dispersion, u, tail=True) / eval_alpha0(self.dispersion, 0.0)
        return self.site_alpha0 * shape

    def with_alpha0(self, alpha0: Union[float, np.ndarray]) -> "DipoleLattice":
        return DipoleLattice(self.sites, alpha0, self.cutoff, self.label, self.dispersion)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "x": self.sites[:, 0],
                "y": self.sites[:, 1],
                "z": self.sites[:, 2],
                "alpha0": self.site_alpha0,
            }
        )

    @classmethod
    def from_frame(cls, df: pd.DataFrame, cutoff: float = 0.0, label: str = "A") -> "DipoleLattice":
        missing = {"x", "y", "z", "alpha0"} - set(df.columns)
        if missing:
            raise DomainError(f"lattice table misses columns {sorted(missing)}")
        return cls(df[["x", "y", "z"]].to_numpy(dtype=float), df["alpha0"].to_numpy(dtype=float), cutoff, label)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    matrix: np.ndarray
    u: float
    n_sites: int = field(default=0)

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.matrix)


# lattice generators and rigid motions


def cubic_slab(
    nx: int,
    ny: int,
    nz: int,
    spacing: float = 1.0,
    alpha0: float = 0.01,
    origin: Sequence[float] = (0.0, 0.0, 0.0),
    cutoff: Optional[float] = None,
    label: str = "A",
) -> DipoleLattice:
    """Simple cubic block of nx*ny*nz sites starting at origin; cutoff defaults to the spacing."""
    if min(nx, ny, nz) < 1 or not spacing > 0:
        raise DomainError(f"cubic slab needs counts >= 1 and positive spacing, got {(nx, ny, nz)}, {spacing}")
    grid = np.stack(
        np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"),
        axis=-1,
    ).reshape(-1, 3)
    sites = np.asarray(origin, dtype=float) + spacing * grid
    return DipoleLattice(sites, alpha0, spacing if cutoff is None else cutoff, label)


def random_cloud(
    n: int,
    radius: float,
    min_distance: float,
    alpha0: float = 0.01,
    center: Sequence[float] = (0.0, 0.0, 0.0),
    seed: int = 0,
    label: str = "A",
    max_attempts: int = 100000,
) -> DipoleLattice:
    """n sites uniform in a ball, rejection-sampled so no two are closer than min_distance."""
    if n < 1 or not radius > 0 or min_distance < 0:
        raise DomainError("random cloud needs n >= 1, radius > 0, min_distance >= 0")
    rng = np.random.default_rng(seed)
    pts = []
    attempts = 0
    while len(pts) < n:
        attempts += 1
        if attempts > max_attempts:
            raise DomainError(f"[{label}] placed {len(pts)}/{n} sites after {max_attempts} attempts")
        x = rng.uniform(-radius, radius, size=3)
        if x @ x > radius * radius:
            continue
        if pts and np.min(np.linalg.norm(np.asarray(pts) - x, axis=1)) < min_distance:
            continue
        pts.append(x)
    sites = np.asarray(pts) + np.asarray(center, dtype=float)
    return DipoleLattice(sites, alpha0, min_distance, label)


def translate(lattice: DipoleLattice, shift: Sequence[float]) -> DipoleLattice:
    sites = lattice.sites + np.asarray(shift, dtype=float)
    return DipoleLattice(sites, lattice.site_alpha0, lattice.cutoff, lattice.label, lattice.dispersion)


def rotate(
    lattice: DipoleLattice,
    rotation: Union[Rotation, np.ndarray],
    about: Sequence[float] = (0.0, 0.0, 0.0),
) -> DipoleLattice:
    if not isinstance(rotation, Rotation):
        rotation = Rotation.from_matrix(np.asarray(rotation, dtype=float))
    c = np.asarray(about, dtype=float)
    sites = rotation.apply(lattice.sites - c) + c
    return DipoleLattice(sites, lattice.site_alpha0, lattice.cutoff, lattice.label, lattice.dispersion)


def _check_disjoint(a: DipoleLattice, b: DipoleLattice) -> float:
    if len(a) == 0 or len(b) == 0:
        raise DomainError("both lattices need at least one site")
    d = float(cdist(a.sites, b.sites).min())
    if not d > 0:
        raise DomainError(f"lattices {a.label} and {b.label} overlap")
    return d


def merge(a: DipoleLattice, b: DipoleLattice) -> DipoleLattice:
    _check_disjoint(a, b)
    if a.dispersion != b.dispersion:
        raise DomainError(f"lattices {a.label} and {b.label} have different dispersion models")
    return DipoleLattice(
        np.vstack([a.sites, b.sites]),
        np.concatenate([a.site_alpha0, b.site_alpha0]),
        max(a.cutoff, b.cutoff),
        f"{a.label}+{b.label}",
        a.dispersion,
    )


# kernel and coupling


def dyadic_kernel(u: float, dx: Sequence[float]) -> np.ndarray:
    """
    D0(iu, x) = e^{-ur}/(4πr³) [(3 + 3ur + u²r²) n n - (1 + ur + u²r²) δ].
    At u = 0 this is the static dipole tensor (3nn - δ)/(4πr³).
    """
    dx = np.asarray(dx, dtype=float)
    r = float(np.linalg.norm(dx))
    if not r > 0:
        raise DomainError("kernel is singular at dx = 0")
    if not u >= 0:
        raise DomainError(f"frequency must be >= 0, got {u}")
    n = dx / r
    x = u * r
    pre = math.exp(-x) / (4.0 * math.pi * r ** 3)
    return pre * ((3.0 + 3.0 * x + x * x) * np.outer(n, n) - (1.0 + x + x * x) * np.eye(3))


def _coupling_blocks(
    u: float,
    left: np.ndarray,
    right: np.ndarray,
    alpha_left: np.ndarray,
    alpha_right: np.ndarray,
    cutoff: float,
) -> np.ndarray:
    """(3N, 3M) array of √(a_i a_j) D0(iu, x_i - x_j), excluded pairs zeroed."""
    dx = left[:, None, :] - right[None, :, :]
    r = np.linalg.norm(dx, axis=-1)
    keep = (r > 0) & (r >= cutoff * (1.0 - _CUTOFF_RTOL))
    rs = np.where(keep, r, 1.0)
    n = dx / rs[..., None]
    x = u * rs
    pre = np.where(keep, np.exp(-x) / (4.0 * np.pi * rs ** 3), 0.0)
    weight = pre * np.sqrt(np.outer(alpha_left, alpha_right))
    long = (3.0 + 3.0 * x + x * x)[..., None, None] * n[..., :, None] * n[..., None, :]
    trans = (1.0 + x + x * x)[..., None, None] * np.eye(3)
    blocks = weight[..., None, None] * (long - trans)
    nl, nr = len(left), len(right)
    return blocks.transpose(0, 2, 1, 3).reshape(3 * nl, 3 * nr)


def _symmetric_blocks(u: float, lattice: DipoleLattice, cutoff: float) -> np.ndarray:
    s, a = lattice.sites, lattice.alpha_at(u)
    m = _coupling_blocks(u, s, s, a, a, cutoff)
    return 0.5 * (m + m.T)


def build_coupling(lattice: DipoleLattice, u: float) -> CouplingMatrix:
    if not u >= 0:
        raise DomainError(f"frequency must be >= 0, got {u}")
    return CouplingMatrix(_symmetric_blocks(u, lattice, lattice.cutoff), u, len(lattice))


def spectral_radius(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    ev = linalg.eigvalsh(matrix)
    return float(max(abs(ev[0]), abs(ev[-1])))


def _logdet(matrix: np.ndarray, u: float, label: str) -> LogDet:
    try:
        return logdet_one_minus(matrix)
    except NonConvergenceError as exc:
        exc.args = (f"[{label}] {exc.args[0]} at u={u}",)
        raise exc.with_channel(u=u)


def free_energy_spectral(lattice: DipoleLattice, u: float) -> float:
    """
    F(u) = ½ log det(I - M(u)), summed as ½ Σ log1p(-λ) over the spectrum of M.
    Spectral radius >= 1 raises NonConvergenceError carrying the radius.
    """
    if len(lattice) == 0 or not np.any(lattice.site_alpha0):
        return 0.0
    c = build_coupling(lattice, u)
    return 0.5 * _logdet(c.matrix, u, lattice.label).value


def free_energy_series(lattice: DipoleLattice, u: float, n_max: int) -> float:
    """Truncated -½ Σ_{n=2}^{n_max} Tr(Mⁿ)/n."""
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    c = build_coupling(lattice, u)
    rho = c.spectral_radius
    if rho >= 1.0:
        raise NonConvergenceError(
            f"[{lattice.label}] spectral radius {rho:.6g} >= 1 at u={u}",
            channel={"u": u, "radius": rho},
        )
    m = c.matrix
    power = m
    total = 0.0
    for n in range(2, n_max + 1):
        power = power @ m
        total += np.trace(power) / n
    return -0.5 * float(total)


def series_tail_bound(rho: float, n_max: int, dim: int) -> float:
    """Bound on |series(n_max) - spectral| for spectral radius rho and matrix size dim."""
    if not 0 <= rho < 1:
        raise DomainError(f"tail bound needs 0 <= rho < 1, got {rho}")
    return rho ** (n_max + 1) / ((n_max + 1) * (1.0 - rho)) * dim


def split_free_energy(a: DipoleLattice, b: DipoleLattice, u: float) -> Tuple[float, float, float]:
    """
    (F_A, F_B, F_AB) with F_A + F_B + F_AB = ½ log det(I - M) of the joint system.
    F_AB = ½ log det(I - C Cᵀ), C = L_A⁻¹ M_AB L_B⁻ᵀ, (I - M_XX) = L_X L_Xᵀ.
    Each diagonal block uses its own lattice's cutoff, so F_A and F_B are the
    isolated free energies; cross pairs use the larger cutoff. With equal
    cutoffs the joint matrix is that of merge(a, b).
    """
    _check_disjoint(a, b)
    m_aa = _symmetric_blocks(u, a, a.cutoff)
    m_bb = _symmetric_blocks(u, b, b.cutoff)
    m_ab = _coupling_blocks(u, a.sites, b.sites, a.alpha_at(u), b.alpha_at(u), max(a.cutoff, b.cutoff))

    f_a = 0.5 * _logdet(m_aa, u, a.label).value
    f_b = 0.5 * _logdet(m_bb, u, b.label).value
    try:
        l_a = cholesky_lower(np.eye(m_aa.shape[0]) - m_aa)
        l_b = cholesky_lower(np.eye(m_bb.shape[0]) - m_bb)
    except NonConvergenceError as exc:
        raise exc.with_channel(u=u)

    c = linalg.solve_triangular(l_a, m_ab, lower=True)
    c = linalg.solve_triangular(l_b, c.T, lower=True).T
    try:
        f_ab = 0.5 * logdet_one_minus_gram(c).value
    except NonConvergenceError as exc:
        raise exc.with_channel(u=u, pair=f"{a.label}/{b.label}")
    return f_a, f_b, f_ab


# frequency integration


System = Union[DipoleLattice, Tuple[DipoleLattice, DipoleLattice]]


def _density(system: System):
    """Spectral density F(u) and the shortest length that controls its decay in u."""
    if isinstance(system, DipoleLattice):
        d = system.min_distance
        return (lambda u: free_energy_spectral(system, u)), d
    a, b = system
    d = _check_disjoint(a, b)
    return (lambda u: split_free_energy(a, b, u)[2]), d


def total_free_energy(
    system: System,
    T: float = 0.0,
    spec: Optional[QuadratureSpec] = None,
    sum_spec: Optional[SumSpec] = None,
    executor: Optional[Executor] = None,
) -> Union[QuadResult, SumResult]:
    """
    Free energy of one lattice, or the interaction part F_AB of a pair (A, B).

    T > 0: T Σ_m (2 - δ_m0) F(u_m);
    T = 0: (1/π) ∫_0^∞ F(u) du.
    """
    if T < 0:
        raise DomainError(f"temperature must be >= 0, got {T}")
    f, d = _density(system)
    if not math.isfinite(d):
        return QuadResult(0.0, 0.0, 0) if T == 0 else SumResult(0.0, 0.0, 0, 0.0)
    if T > 0:
        return matsubara_sum(f, T, sum_spec, executor)

    spec = spec or QuadratureSpec()
    res = integrate_semi_infinite(f, spec, scale=1.0 / d)
    return QuadResult(res.value / math.pi, res.error / math.pi, res.evaluations)


def _axis(axis: Union[int, str]) -> int:
    if isinstance(axis, str):
        if axis not in _AXES:
            raise DomainError(f"axis must be x, y or z, got {axis!r}")
        return _AXES[axis]
    if axis not in (0, 1, 2):
        raise DomainError(f"axis must be 0, 1 or 2, got {axis}")
    return int(axis)


def force_between(
    a: DipoleLattice,
    b: DipoleLattice,
    axis: Union[int, str] = "z",
    h: float = 1e-3,
    T: float = 0.0,
    on: str = "B",
    spec: Optional[QuadratureSpec] = None,
    sum_spec: Optional[SumSpec] = None,
    executor: Optional[Executor] = None,
) -> float:
    """Force component on lattice `on` from -[F_AB(+h) - F_AB(-h)]/(2h) with that lattice displaced."""
    k = _axis(axis)
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    d = _check_disjoint(a, b)
    if h >= 0.5 * d:
        raise DomainError(f"step {h} is not small against the separation {d}")
    shift = np.zeros(3)
    shift[k] = h

    def energy(sign: float) -> float:
        if on == "B":
            pair = (a, translate(b, sign * shift))
        elif on == "A":
            pair = (translate(a, sign * shift), b)
        else:
            raise ValueError(f"on must be 'A' or 'B', got {on!r}")
        return total_free_energy(pair, T, spec, sum_spec, executor).value

    return -(energy(1.0) - energy(-1.0)) / (2.0 * h)


# two-dipole limits


def dipole_pair(
    a0: float,
    d: float,
    axis: int = 2,
    dispersion: Optional[PolarizabilityModel] = None,
) -> Tuple[DipoleLattice, DipoleLattice]:
    """Two single-site lattices a distance d apart; as a pair their F_AB is the whole interaction."""
    far = np.zeros(3)
    far[axis] = d
    return DipoleLattice(np.zeros(3), a0, 0.0, "A", dispersion), DipoleLattice(far, a0, 0.0, "B", dispersion)


def casimir_polder_coefficient(a0: float) -> float:
    """Large-distance d⁷E of two equal isotropic dipoles: -23 a0²/(64π³)."""
    return -23.0 * a0 * a0 / (64.0 * math.pi ** 3)


def classical_pair_energy(a0: float, d: float, T: float) -> float:
    """m = 0 term of the pair free energy: (T/2) [ln(1 - (2q)²) + 2 ln(1 - q²)], q = a0/(4πd³)."""
    if not (d > 0 and T > 0):
        raise DomainError(f"need d > 0 and T > 0, got d={d}, T={T}")
    q = a0 / (4.0 * math.pi * d ** 3)
    if 2.0 * q >= 1.0:
        raise NonConvergenceError(f"static pair coupling {2 * q:.4g} >= 1", channel={"u": 0.0, "d": d})
    return 0.5 * T * (math.log1p(-4.0 * q * q) + 2.0 * math.log1p(-q * q))


def casimir_polder_scaling(
    a0: float,
    d_list: Sequence[float],
    T: float = 0.0,
    spec: Optional[QuadratureSpec] = None,
    dispersion: Optional[PolarizabilityModel] = None,
) -> float:
    """Slope of log|E(d)| against log d for the two-dipole free energy."""
    d = np.asarray(sorted(float(x) for x in d_list))
    if len(d) < 2 or not np.all(d > 0):
        raise DomainError("need at least two positive separations")
    if d[-1] / d[0] < 10.0:
        raise DomainError(f"separations span {d[-1] / d[0]:.3g} < one decade")
    spec = spec or QuadratureSpec(rel_tol=1e-10)
    energies = np.array([total_free_energy(dipole_pair(a0, x, dispersion=dispersion), T, spec).value for x in d])
    if not np.all(np.isfinite(energies)) or np.any(energies == 0):
        raise NonConvergenceError("pair energies not usable for a power-law fit", channel={"a0": a0})
    slope, _ = np.polyfit(np.log(d), np.log(np.abs(energies)), 1)
    log.debug(f"casimir-polder fit: a0={a0} d=[{d[0]:.3g}, {d[-1]:.3g}] slope={slope:.4f}")
    return float(slope)


def depolarization_integral(u: float, a: float, spec: Optional[QuadratureSpec] = None) -> np.ndarray:
    """
    ∫_{|x|<a} D0(iu, x) d³x. The angular integral is done analytically
    (∫dΩ n n = 4π/3 δ) and the contact term of the static kernel gives -δ/3;
    what remains is -(2/3) u² ∫_0^a r e^{-ur} dr δ, integrated numerically.
    """
    if not (u >= 0 and a > 0):
        raise DomainError(f"need u >= 0 and a > 0, got u={u}, a={a}")
    spec = spec or QuadratureSpec(rel_tol=1e-12)
    radial = integrate_finite(lambda r: r * math.exp(-u * r), 0.0, a, spec).value
    return (-1.0 / 3.0 - (2.0 / 3.0) * u * u * radial) * np.eye(3)
