import io
import json

import numpy as np

from laserstats.device import PRESETS
from laserstats.io import build_metadata, flatten, format_cell, write_record, write_table
from laserstats.noise import Regime


def test_floats_round_trip():
    for x in (0.1, 1e-300, 4.4443888888888877e17, -2.5):
        assert float(format_cell(x)) == x
    assert format_cell(np.float64(0.1)) == "0.1"
    assert format_cell(float("nan")) == ""
    assert format_cell(Regime.ADIABATIC) == "adiabatic"
    assert format_cell(True) == "true"


def test_csv_metadata_and_failures():
    out = io.StringIO()
    meta = build_metadata(PRESETS["reference"], seed=3, timestamp=False)
    write_table(out, ("a", "b"), [{"a": 1.5, "b": "x"}], meta, "csv",
                [{"index": 0, "x": 1.0, "error": "E", "message": "m"}])
    lines = out.getvalue().splitlines()
    assert lines[0] == '# tool: "laserstats 0.1.0"'
    assert lines[1].startswith("# device: ")
    assert json.loads(lines[1].split(": ", 1)[1])["beta"] == 1e-5
    assert lines[2] == "# seed: 3"
    assert lines[3].startswith("# failed row: ")
    assert lines[4:] == ["a,b", "1.5,x"]


def test_failures_kept_without_metadata():
    out = io.StringIO()
    write_table(out, ("a",), [], None, "csv", [{"index": 2}])
    assert out.getvalue().splitlines() == ['# failed row: {"index":2}', "a"]


def test_timestamp_optional():
    assert "generated" in build_metadata()
    assert "generated" not in build_metadata(timestamp=False)


def test_json_envelope():
    out = io.StringIO()
    write_table(out, ("a",), [{"a": float("nan"), "extra": 1}], {"k": 1}, "json")
    doc = json.loads(out.getvalue())
    assert doc == {"metadata": {"k": 1}, "columns": ["a"], "rows": [{"a": None}]}


def test_record_csv_flattens():
    out = io.StringIO()
    write_record(out, {"x": 1, "y": {"z": 2.0}}, None, "csv")
    assert out.getvalue().splitlines() == ["x,y.z", "1,2.0"]
    assert flatten({"a": {"b": {"c": 1}}}) == {"a.b.c": 1}
