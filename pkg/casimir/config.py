"""
Scenario files.

INI grammar (configparser): `[section]` headers, `key = value` lines, `#` and
`;` comments. Every validation error names the file and the line of the
offending key, or of the section header when a key is missing.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from casimir.dielectric import INTERPOLATIONS, PolarizabilityModel
from casimir.dipole_oracle import DipoleLattice, cubic_slab, random_cloud
from casimir.errors import CasimirError, ConfigError
from casimir.numerics import QUAD_TOL_DEFAULT, SUM_TOL_DEFAULT, QuadratureSpec, SumSpec
from casimir.planar import PlanarCavity, ZeroModePolicy

KINDS = ("pressure", "temperature_sweep", "reflection_table", "sphere_modes", "oracle_run", "validate")
FORMATS = ("csv", "json")
SWEEPS = ("a", "temperature")
SPACINGS = ("linear", "log")
GENERATORS = ("cubic_slab", "random_cloud", "csv")

THREADS_ENV = "CASIMIR_THREADS"

_MISSING = object()

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> Dict[Tuple[str, Optional[str]], int]:
    """(section, key) -> 1-based line; (section, None) is the header line."""
    index: Dict[Tuple[str, Optional[str]], int] = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        if section is None or line[:1].isspace():
            continue
        m = _KEY_RE.match(line)
        if m:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


@dataclass(frozen=True)
class ScenarioConfig:

    kind: str
    output: str
    fmt: str
    workers: int

    path: str
    sha1: str

    sections: Dict[str, Dict[str, str]]
    lines: Dict[Tuple[str, Optional[str]], int]

    # error helpers

    def error(self, message: str, section: Optional[str] = None, key: Optional[str] = None) -> ConfigError:
        line = None
        if section is not None:
            line = self.lines.get((section, key)) or self.lines.get((section, None))
        where = f"[{section}] {key}: " if key else (f"[{section}]: " if section else "")
        return ConfigError(f"{where}{message}", path=self.path, line=line)

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if section not in self.sections:
            return False
        return key is None or key in self.sections[section]

    # typed getters

    def get_str(self, section: str, key: str, default=_MISSING, choices: Optional[Sequence[str]] = None) -> str:
        if not self.has(section):
            if default is _MISSING:
                raise self.error("missing section", section)
            return default
        if key not in self.sections[section]:
            if default is _MISSING:
                raise self.error(f"missing key '{key}'", section)
            return default
        value = self.sections[section][key].strip()
        if choices is not None and value not in choices:
            raise self.error(f"'{value}' is not one of {tuple(choices)}", section, key)
        return value

    def get_float(self, section: str, key: str, default=_MISSING, positive: bool = False, minimum: Optional[float] = None) -> float:
        raw = self.get_str(section, key, default=default)
        if raw is default and default is not _MISSING:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise self.error(f"'{raw}' is not a number", section, key)
        if not math.isfinite(value):
            raise self.error(f"'{raw}' is not finite", section, key)
        if positive and not value > 0:
            raise self.error(f"must be positive, got {value}", section, key)
        if minimum is not None and value < minimum:
            raise self.error(f"must be >= {minimum}, got {value}", section, key)
        return value

    def get_int(self, section: str, key: str, default=_MISSING, minimum: Optional[int] = None) -> int:
        raw = self.get_str(section, key, default=default)
        if raw is default and default is not _MISSING:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise self.error(f"'{raw}' is not an integer", section, key)
        if minimum is not None and value < minimum:
            raise self.error(f"must be >= {minimum}, got {value}", section, key)
        return value

    def get_floats(self, section: str, key: str) -> List[float]:
        raw = self.get_str(section, key)
        try:
            values = [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise self.error(f"'{raw}' is not a comma-separated list of numbers", section, key)
        if not values:
            raise self.error("empty list", section, key)
        return values

    def get_bool(self, section: str, key: str, default: bool = False) -> bool:
        raw = self.get_str(section, key, default=None)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise self.error(f"'{raw}' is not a boolean", section, key)


def worker_count(requested: Optional[int] = None) -> int:
    """Requested workers (default: CPU count), capped by CASIMIR_THREADS."""
    n = requested or os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}='{raw}' is not an integer")
        if cap < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {cap}")
        n = min(n, cap)
    return max(1, n)


def load_config(path: str) -> ScenarioConfig:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=str(p))
    text = raw.decode("utf-8")

    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#", ";"),
        default_section="__defaults__",
    )
    try:
        parser.read_string(text, source=str(p))
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", path=str(p), line=exc.lineno)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ConfigError("malformed line", path=str(p), line=line)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key '{exc.option}' in [{exc.section}]", path=str(p), line=exc.lineno)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", path=str(p), line=exc.lineno)

    sections = {s: dict(parser.items(s)) for s in parser.sections()}
    lines = _line_index(text)

    stub = ScenarioConfig("", "", "csv", 1, str(p), hashlib.sha1(raw).hexdigest(), sections, lines)
    kind = stub.get_str("scenario", "kind", choices=KINDS)
    fmt = stub.get_str("scenario", "format", default="csv", choices=FORMATS)
    output = stub.get_str("scenario", "output", default=f"{kind}.{fmt}")
    requested = stub.get_int("scenario", "workers", default=0, minimum=0)
    try:
        workers = worker_count(requested or None)
    except ConfigError as exc:
        raise ConfigError(str(exc), path=str(p))

    cfg = ScenarioConfig(kind, output, fmt, workers, stub.path, stub.sha1, sections, lines)
    validate_config(cfg)
    return cfg


def default_config(kind: str = "validate", output: str = "validation.csv") -> ScenarioConfig:
    """Config used when a command runs without a file."""
    return ScenarioConfig(kind, output, "csv", worker_count(), "<default>", hashlib.sha1(b"").hexdigest(), {}, {})


# builders


def model_from_section(cfg: ScenarioConfig, section: str) -> PolarizabilityModel:
    kind = cfg.get_str(section, "kind", choices=("plasma", "oscillator", "constant_epsilon", "tabulated"))
    try:
        if kind == "plasma":
            return PolarizabilityModel.plasma(cfg.get_float(section, "u_p", positive=True))
        if kind == "oscillator":
            return PolarizabilityModel.oscillator(
                cfg.get_float(section, "alpha_s", minimum=0.0),
                cfg.get_float(section, "u0", positive=True),
            )
        if kind == "constant_epsilon":
            return PolarizabilityModel.constant_epsilon(cfg.get_float(section, "epsilon", minimum=1.0))
        table = Path(cfg.get_str(section, "table_path"))
        if not table.is_absolute():
            table = Path(cfg.path).parent / table
        interp = cfg.get_str(section, "interpolation", default="linear", choices=INTERPOLATIONS)
        return PolarizabilityModel.from_table(str(table), interpolation=interp)
    except ConfigError:
        raise
    except (CasimirError, OSError) as exc:
        raise cfg.error(str(exc), section, "kind")


def policy_of(cfg: ScenarioConfig) -> ZeroModePolicy:
    return ZeroModePolicy(cfg.get_str("policy", "m0_te", default="microscopic_zero", choices=[p.value for p in ZeroModePolicy]))


def cavity_from_config(cfg: ScenarioConfig, gap: Optional[float] = None) -> PlanarCavity:
    policy = policy_of(cfg)
    left = right = None
    if policy != ZeroModePolicy.PERFECT_CONDUCTOR or cfg.has("left"):
        left = model_from_section(cfg, "left")
        right = model_from_section(cfg, "right") if cfg.has("right") else None
    a = gap if gap is not None else cfg.get_float("geometry", "a", positive=True)
    T = cfg.get_float("geometry", "temperature", default=0.0, minimum=0.0)
    return PlanarCavity(a, left, right, T, policy)


def quad_spec(cfg: ScenarioConfig) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=cfg.get_float("numerics", "quad_tol", default=QUAD_TOL_DEFAULT, positive=True))


def sum_spec(cfg: ScenarioConfig) -> SumSpec:
    return SumSpec(
        rel_tol=cfg.get_float("numerics", "sum_tol", default=SUM_TOL_DEFAULT, positive=True),
        max_terms=cfg.get_int("numerics", "max_terms", default=100000, minimum=1),
    )


def grid(cfg: ScenarioConfig, section: str, start: str, stop: str, count: str, spacing: str = "linear") -> np.ndarray:
    lo = cfg.get_float(section, start, positive=(spacing == "log"), minimum=0.0)
    hi = cfg.get_float(section, stop, positive=(spacing == "log"), minimum=0.0)
    n = cfg.get_int(section, count, minimum=1)
    if hi < lo:
        raise cfg.error(f"{stop}={hi} is below {start}={lo}", section, stop)
    if n == 1:
        return np.array([lo])
    if spacing == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def sweep_values(cfg: ScenarioConfig) -> Tuple[str, np.ndarray]:
    what = cfg.get_str("geometry", "sweep", choices=SWEEPS)
    spacing = cfg.get_str("geometry", "spacing", default="linear", choices=SPACINGS)
    values = grid(cfg, "geometry", "start", "stop", "count", spacing)
    if what == "a" and not np.all(values > 0):
        raise cfg.error("gap sweep must stay positive", "geometry", "start")
    return what, values


def lattice_from_section(cfg: ScenarioConfig, section: str, storage=None) -> DipoleLattice:
    gen = cfg.get_str(section, "generator", choices=GENERATORS)
    alpha0 = cfg.get_float(section, "alpha0", minimum=0.0)
    label = cfg.get_str(section, "label", default=section.replace("lattice_", "").upper())
    try:
        if gen == "cubic_slab":
            spacing = cfg.get_float(section, "spacing", default=1.0, positive=True)
            origin = cfg.get_floats(section, "origin") if cfg.has(section, "origin") else [0.0, 0.0, 0.0]
            if len(origin) != 3:
                raise cfg.error("origin needs three coordinates", section, "origin")
            return cubic_slab(
                cfg.get_int(section, "nx", minimum=1),
                cfg.get_int(section, "ny", minimum=1),
                cfg.get_int(section, "nz", minimum=1),
                spacing,
                alpha0,
                origin,
                cfg.get_float(section, "cutoff", default=spacing, minimum=0.0),
                label,
            )
        if gen == "random_cloud":
            center = cfg.get_floats(section, "center") if cfg.has(section, "center") else [0.0, 0.0, 0.0]
            return random_cloud(
                cfg.get_int(section, "n", minimum=1),
                cfg.get_float(section, "radius", positive=True),
                cfg.get_float(section, "min_distance", minimum=0.0),
                alpha0,
                center,
                cfg.get_int(section, "seed", default=0),
                label,
            )
        path = Path(cfg.get_str(section, "path"))
        if not path.is_absolute():
            path = Path(cfg.path).parent / path
        lattice = storage.get_lattice(str(path), cfg.get_float(section, "cutoff", default=0.0, minimum=0.0), label)
        if cfg.has(section, "alpha0"):
            lattice = lattice.with_alpha0(alpha0)
        return lattice
    except ConfigError:
        raise
    except (CasimirError, OSError) as exc:
        raise cfg.error(str(exc), section, "generator")


# per-kind required content


_REQUIRED = {
    "pressure": [("geometry", "a")],
    "temperature_sweep": [("geometry", "sweep"), ("geometry", "start"), ("geometry", "stop"), ("geometry", "count")],
    "reflection_table": [("left", "kind"), ("reflection", "m_max"), ("reflection", "p_min"), ("reflection", "p_max"), ("reflection", "p_count")],
    "sphere_modes": [("ball", "radius"), ("ball", "kind"), ("ball", "u_min"), ("ball", "u_max"), ("ball", "u_count")],
    "oracle_run": [("lattice_a", "generator"), ("lattice_b", "generator"), ("oracle", "separations")],
    "validate": [],
}


def validate_config(cfg: ScenarioConfig) -> None:
    for section, key in _REQUIRED[cfg.kind]:
        if not cfg.has(section):
            raise ConfigError(f"scenario '{cfg.kind}' needs section [{section}]", path=cfg.path, line=cfg.lines.get(("scenario", "kind")))
        cfg.get_str(section, key)

    if cfg.kind in ("pressure", "temperature_sweep", "reflection_table"):
        if policy_of(cfg) != ZeroModePolicy.PERFECT_CONDUCTOR and not cfg.has("left"):
            raise ConfigError("material section [left] is required unless m0_te = perfect_conductor", path=cfg.path, line=cfg.lines.get(("scenario", "kind")))
        for side in ("left", "right"):
            if cfg.has(side):
                model = model_from_section(cfg, side)
                # частоты интегрирования начинаются с u = 0, выше таблицы - хвост ~u^-2
                if model.kind == "tabulated" and model.samples_u[0] > 0:
                    raise cfg.error(f"table must start at u=0, starts at u={model.samples_u[0]}", side, "table_path")
        if cfg.kind == "pressure":
            cfg.get_float("geometry", "a", positive=True)
        cfg.get_float("geometry", "temperature", default=0.0, minimum=0.0)
        quad_spec(cfg)
        sum_spec(cfg)

    if cfg.kind == "temperature_sweep":
        what, _ = sweep_values(cfg)
        if what == "temperature":
            cfg.get_float("geometry", "a", positive=True)

    if cfg.kind == "reflection_table":
        m_max = cfg.get_int("reflection", "m_max", minimum=0)
        grid(cfg, "reflection", "p_min", "p_max", "p_count")
        if m_max > 0:
            cfg.get_float("geometry", "temperature", positive=True)

    if cfg.kind == "sphere_modes":
        cfg.get_float("ball", "radius", positive=True)
        cfg.get_int("numerics", "l_max", default=60, minimum=1)
        grid(cfg, "ball", "u_min", "u_max", "u_count")
        if cfg.get_float("ball", "u_min", minimum=0.0) == 0:
            raise cfg.error("ball frequencies must be positive", "ball", "u_min")

    if cfg.kind == "oracle_run":
        seps = cfg.get_floats("oracle", "separations")
        if any(s <= 0 for s in seps):
            raise cfg.error("separations must be positive", "oracle", "separations")
        cfg.get_str("oracle", "axis", default="z", choices=("x", "y", "z"))
        cfg.get_float("oracle", "h", default=0.0, minimum=0.0)
