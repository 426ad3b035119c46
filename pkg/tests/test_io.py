import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bdshear import io
from bdshear.errors import GridMismatch


@given(arrays(np.float64, (8, 8), elements=st.floats(allow_nan=False, width=64)))
def test_grd1_round_trip_is_bit_exact(tmp_path_factory, a):
    path = tmp_path_factory.mktemp("g") / "a.grd1"
    io.write_grd1(path, a)
    back = io.read_grd1(path)
    assert back.tobytes() == a.tobytes()


def test_grd1_header_layout(tmp_path):
    io.write_grd1(tmp_path / "a.grd1", np.zeros((4, 4)))
    raw = (tmp_path / "a.grd1").read_bytes()
    assert len(raw) == 64 + 16 * 8
    assert json.loads(raw[:64]) == {"magic": "GRD1", "n": 4, "dtype": "f64le"}


def test_grd1_rejects_bad_files(tmp_path):
    (tmp_path / "x").write_bytes(b"\xff" * 80)
    with pytest.raises(GridMismatch):
        io.read_grd1(tmp_path / "x")
    io.write_grd1(tmp_path / "y", np.zeros((4, 4)))
    (tmp_path / "y").write_bytes((tmp_path / "y").read_bytes()[:-8])
    with pytest.raises(GridMismatch):
        io.read_grd1(tmp_path / "y")


def test_one_dimensional_arrays_carry_their_shape(tmp_path):
    io.write_grd1(tmp_path / "v", np.arange(5.0))
    assert io.read_grd1(tmp_path / "v").tolist() == [0.0, 1.0, 2.0, 3.0, 4.0]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_floats_round_trip(x):
    assert json.loads(io.dumps_json({"x": x}))["x"] == x


def test_json_special_values():
    text = io.dumps_json({"a": math.inf, "b": np.float64(2.0), "c": np.arange(2), "d": np.bool_(True)})
    d = json.loads(text)
    assert d == {"a": math.inf, "b": 2.0, "c": [0, 1], "d": True}
    assert '"b": 2.0' in text


def test_pgm16_export(tmp_path):
    a = np.array([[0.0, 1.0], [2.0, 3.0]])
    io.write_pgm16(tmp_path / "a.pgm", a)
    raw = (tmp_path / "a.pgm").read_bytes()
    header = b"P5\n2 2\n65535\n"
    assert raw.startswith(header)
    pix = np.frombuffer(raw[len(header):], dtype=">u2")
    assert pix.tolist() == [0, 21845, 43690, 65535]
