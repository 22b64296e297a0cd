import json
import math

import numpy as np
import pytest

from squeezed_mzi.io import csv_text, dumps_json, fmt, write_atomic, write_csv, write_json


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, math.pi):
        assert float(fmt(x)) == x
    assert fmt(3) == "3" and fmt(np.int64(4)) == "4" and fmt(True) == "true"
    assert fmt(float("nan")) == "nan" and fmt(-math.inf) == "-inf"
    assert fmt(0.1) == "0.10000000000000001"


def test_json_sorted_and_parseable():
    obj = {"b": [1.0, 2.5], "a": {"y": None, "x": complex(1, -2)}, "c": np.array([0.1]), "d": float("nan")}
    text = dumps_json(obj)
    assert text == dumps_json(obj)
    parsed = json.loads(text)
    assert list(parsed) == ["a", "b", "c", "d"]
    assert parsed["a"]["x"] == [1.0, -2.0] and parsed["c"] == [0.1] and parsed["d"] is None
    with pytest.raises(TypeError):
        dumps_json({"x": object()})


def test_csv_text():
    assert csv_text(["a", "b"], [[1, 0.5], ["x", 2]]) == "a,b\n1,0.5\nx,2\n"


def test_atomic_write_leaves_no_temp(tmp_path):
    path = write_csv(tmp_path / "sub" / "t.csv", ["a"], [[1]])
    write_json(tmp_path / "sub" / "t.json", {"a": 1})
    assert sorted(p.name for p in path.parent.iterdir()) == ["t.csv", "t.json"]
    write_atomic(path, "new\n")
    assert path.read_text() == "new\n"
