import json
import math

import numpy as np
import pytest

from casimir.dipole_oracle import cubic_slab
from casimir.records import as_row, make_pressure_record, schema_of
from storage.local import LocalStorage, sha1_file

SCHEMA = ("m", "u", "p", "r_te", "r_tm", "integrand")


def rows():
    return [
        {"m": 0, "u": 0.0, "p": 0.5, "r_te": 0.0, "r_tm": 1.0, "integrand": -0.25},
        {"m": 1, "u": 0.1, "p": 0.5, "r_te": -0.3, "r_tm": 0.9, "integrand": -0.125},
    ]


def test_csv_columns_follow_schema(tmp_path):
    st = LocalStorage(str(tmp_path))
    shuffled = [dict(reversed(list(r.items()))) for r in rows()]
    path = st.emit_table(shuffled, SCHEMA, "refl.csv")
    header = open(path, encoding="utf-8").readline().strip()
    assert header == ",".join(SCHEMA)
    df = st.read_table("refl.csv")
    assert df["r_te"].tolist() == [0.0, -0.3]


def test_csv_keeps_full_precision(tmp_path):
    st = LocalStorage(str(tmp_path))
    value = math.pi ** 2 / 240.0
    st.emit_table([{"m": 0, "u": value, "p": 1.0, "r_te": 0.0, "r_tm": 0.0, "integrand": 0.0}], SCHEMA, "x.csv")
    assert st.read_table("x.csv")["u"].iloc[0] == value


def test_empty_table_has_header(tmp_path):
    st = LocalStorage(str(tmp_path))
    path = st.emit_table([], SCHEMA, "empty.csv")
    assert open(path, encoding="utf-8").read() == ",".join(SCHEMA) + "\n"
    assert list(st.read_table("empty.csv").columns) == list(SCHEMA)


def test_json_output_and_nan(tmp_path):
    st = LocalStorage(str(tmp_path))
    rec = make_pressure_record(a=1.0, policy="microscopic_zero", pressure=-1.0)
    path = st.emit_table([as_row(rec)], schema_of("pressure"), "p.json", fmt="json")
    data = json.loads(open(path, encoding="utf-8").read())
    assert list(data[0]) == list(schema_of("pressure"))
    assert data[0]["error"] is None


def test_schema_mismatch(tmp_path):
    st = LocalStorage(str(tmp_path))
    with pytest.raises(ValueError):
        st.emit_table([{"m": 0}], SCHEMA, "bad.csv")
    with pytest.raises(ValueError):
        st.emit_table(rows(), SCHEMA, "bad.xlsx", fmt="xlsx")


def test_output_is_deterministic(tmp_path):
    st = LocalStorage(str(tmp_path))
    p1 = st.emit_table(rows(), SCHEMA, "a.csv")
    p2 = st.emit_table(rows(), SCHEMA, "b.csv")
    assert sha1_file(p1) == sha1_file(p2)


def test_manifest(tmp_path):
    st = LocalStorage(str(tmp_path))
    table = st.emit_table(rows(), SCHEMA, "refl.csv")
    m1 = st.put_manifest(table, {"kind": "reflection", "params": {"b": np.float64(2.0), "a": 1}})
    assert m1.endswith("refl.csv.manifest.json")
    text = open(m1, encoding="utf-8").read()
    assert json.loads(text) == {"kind": "reflection", "params": {"a": 1, "b": 2.0}}
    st.put_manifest(table, {"params": {"a": 1, "b": 2.0}, "kind": "reflection"})
    assert open(m1, encoding="utf-8").read() == text


def test_nested_output_directory(tmp_path):
    st = LocalStorage(str(tmp_path))
    path = st.emit_table(rows(), SCHEMA, "runs/2/refl.csv")
    assert (tmp_path / "runs" / "2" / "refl.csv").exists()
    assert path.endswith("refl.csv")


def test_lattice_roundtrip(tmp_path):
    st = LocalStorage(str(tmp_path))
    lat = cubic_slab(2, 3, 1, spacing=0.7, alpha0=0.02, label="plate")
    path = st.put_lattice(lat)
    assert path.endswith("lattices/plate.csv")
    back = st.get_lattice("lattices/plate.csv", cutoff=0.7, label="B")
    np.testing.assert_array_equal(back.sites, lat.sites)
    np.testing.assert_array_equal(back.site_alpha0, lat.site_alpha0)
    assert back.label == "B"
