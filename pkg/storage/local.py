from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from casimir.dipole_oracle import DipoleLattice

FORMATS = ("csv", "json")

# 17 significant digits
FLOAT_FORMAT = "%.16e"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Enum):
        return o.value
    if isinstance(o, Path):
        return str(o)
    if is_dataclass(o):
        return asdict(o)
    return str(o)


def _json_value(v: Any) -> Any:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def sha1_file(path: str) -> str:
    return hashlib.sha1(Path(path).read_bytes()).hexdigest()


class LocalStorage:
    """
    <root>/
      <output>.csv | <output>.json
      <output>.csv.manifest.json
      lattices/<name>.csv
    """

    def __init__(self, root: str = "data"):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def resolve(self, output: str) -> Path:
        p = Path(output)
        if not p.is_absolute():
            p = self.root / p
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    # tables

    def emit_table(
        self,
        rows: Iterable[Dict[str, Any]],
        schema: Sequence[str],
        output: str,
        fmt: str = "csv",
    ) -> str:
        """Write rows in schema column order; an empty table still gets its header."""
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
        rows = list(rows)
        columns = list(schema)
        for i, row in enumerate(rows):
            extra = set(row) - set(columns)
            missing = set(columns) - set(row)
            if extra or missing:
                raise ValueError(f"row {i} does not match schema: extra={sorted(extra)} missing={sorted(missing)}")

        path = self.resolve(output)

        if fmt == "csv":
            df = pd.DataFrame(rows, columns=columns)
            df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        else:
            ordered = [{c: _json_value(row[c]) for c in columns} for row in rows]
            text = json.dumps(ordered, ensure_ascii=False, indent=1, default=_json_default)
            path.write_text(text + "\n", encoding="utf-8")

        return str(path)

    def read_table(self, output: str) -> pd.DataFrame:
        path = self.resolve(output)
        if path.suffix == ".json":
            return pd.DataFrame(json.loads(path.read_text(encoding="utf-8")))
        return pd.read_csv(path, float_precision="round_trip")

    # manifests

    def put_manifest(self, table_path: str, manifest: Dict[str, Any]) -> str:
        path = Path(f"{table_path}.manifest.json")
        text = json.dumps(manifest, ensure_ascii=False, indent=1, sort_keys=True, default=_json_default)
        path.write_text(text + "\n", encoding="utf-8")
        return str(path)

    # lattices

    def put_lattice(self, lattice: DipoleLattice, name: Optional[str] = None) -> str:
        path = self.resolve(str(Path("lattices") / f"{name or lattice.label}.csv"))
        lattice.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return str(path)

    def get_lattice(self, path: str, cutoff: float = 0.0, label: str = "A") -> DipoleLattice:
        p = Path(path)
        if not p.is_absolute() and not p.exists():
            p = self.root / p
        return DipoleLattice.from_frame(pd.read_csv(p, float_precision="round_trip"), cutoff=cutoff, label=label)

