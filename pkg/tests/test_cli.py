import json
import subprocess
import sys

import numpy as np
import pytest

from bdshear import io
from bdshear.cli import main
from bdshear.system import ShearletSystem, enumerate_indices, read_shc1
from bdshear.generators import build_generator_set

SMALL = {"n": 64, "j_max": 2}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_help_exits_zero():
    res = subprocess.run([sys.executable, "-m", "bdshear.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "synth" in res.stdout and "usage" in res.stdout


def test_synth_bundled_square(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--bundled", "square-in-square", "--out", str(tmp_path))
    assert code == 0
    cert = io.read_json(tmp_path / "certificate.json")
    assert set(cert["flags"].values()) == {"PASS"}
    assert io.read_grd1(tmp_path / "grid.grd1").shape == (256, 256)


def test_synth_amplitude_ten_is_model_violation(tmp_path, capsys):
    code, _, err = run(capsys, "synth", "--bundled", "amplitude-10", "--out", str(tmp_path))
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "C2BoundExceeded" and payload["measured"] > 1


def test_schema_error_names_the_field(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"system": {"n": 100}})
    code, _, err = run(capsys, "transform", "--bundled", "corner", "--config", cfg)
    assert code == 1 and "/system/n" in json.loads(err)["message"]
    cfg = write(tmp_path / "d.json", {"system": SMALL, "bogus": 1})
    code, _, err = run(capsys, "bounds", "--config", cfg)
    assert code == 1 and "bogus" in json.loads(err)["message"]


def test_missing_config_and_bad_scale(tmp_path, capsys):
    assert run(capsys, "bounds", "--config", str(tmp_path / "nope.json"))[0] == 1
    cfg = write(tmp_path / "c.json", {"system": {"n": 64, "j_max": 4}})
    code, _, err = run(capsys, "bounds", "--config", cfg)
    assert code == 1 and "j_max" in err


def test_transform_zero_grid(tmp_path, capsys):
    io.write_grd1(tmp_path / "z.grd1", np.zeros((64, 64)))
    cfg = write(tmp_path / "c.json", {"system": SMALL, "grid": str(tmp_path / "z.grd1"), "out": str(tmp_path)})
    assert run(capsys, "transform", "--config", cfg)[0] == 0
    _, values = read_shc1(tmp_path / "coefficients.shc1")
    assert not np.any(values)
    assert io.read_json(tmp_path / "stats.json")["max_abs"] == 0.0


def test_transform_count_and_determinism(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        cfg = write(tmp_path / f"{name}.json", {"system": {"n": 256, "j_max": 4}, "out": str(tmp_path / name)})
        assert run(capsys, "transform", "--bundled", "square-in-square", "--config", cfg)[0] == 0
        outs.append((tmp_path / name / "coefficients.shc1").read_bytes())
    assert outs[0] == outs[1]
    stats = io.read_json(tmp_path / "a" / "stats.json")
    assert stats["count"] == len(enumerate_indices(1.0, 4, 256, build_generator_set(6, 5, 10)))


def test_transform_grid_mismatch(tmp_path, capsys):
    io.write_grd1(tmp_path / "z.grd1", np.zeros((32, 32)))
    cfg = write(tmp_path / "c.json", {"system": SMALL, "grid": str(tmp_path / "z.grd1"), "out": str(tmp_path)})
    assert run(capsys, "transform", "--config", cfg)[0] == 3


def test_bounds_report(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"system": SMALL, "out": str(tmp_path)})
    code, out, _ = run(capsys, "bounds", "--config", cfg)
    assert code == 0
    rep = io.read_json(tmp_path / "bounds.json")
    assert {"A", "B", "ratio", "tol", "n", "j_max", "c"} <= set(rep)
    assert 0 < rep["A"] <= rep["B"] and rep["n"] == 64


def test_bench_and_reuse_of_bounds(tmp_path, capsys):
    cfg = write(tmp_path / "b.json", {"system": SMALL, "out": str(tmp_path)})
    assert run(capsys, "bounds", "--config", cfg)[0] == 0
    bench = {"system": SMALL, "out": str(tmp_path), "N_range": [16, 512], "bounds_file": str(tmp_path / "bounds.json")}
    cfg = write(tmp_path / "c.json", bench)
    code, out, _ = run(capsys, "bench", "--bundled", "corner", "--config", cfg)
    assert code == 0
    assert set(json.loads(out)) == {"tail", "recon"}
    rows = (tmp_path / "decay.csv").read_text().splitlines()
    assert rows[0] == "N,tail_energy,recon_error,bound" and len(rows) == 12
    assert (tmp_path / "decay.dat").exists() and (tmp_path / "decay.json").exists()


def test_bench_bounds_for_other_grid(tmp_path, capsys):
    write(tmp_path / "bounds.json", {"A": 1.0, "B": 2.0, "n": 128})
    cfg = write(tmp_path / "c.json", {"system": SMALL, "out": str(tmp_path), "bounds_file": str(tmp_path / "bounds.json")})
    assert run(capsys, "bench", "--bundled", "corner", "--config", cfg)[0] == 3


def test_check_on_corner_cartoon(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"system": {"n": 128, "j_max": 3}, "out": str(tmp_path), "j_range": [1, 2, 3]})
    assert run(capsys, "check", "--bundled", "corner", "--config", cfg)[0] == 0
    summary = io.read_json(tmp_path / "check.json")
    assert summary["corner_scaling"]["holder_ok"]
    assert "counts" in summary and (tmp_path / "envelopes.csv").exists() and (tmp_path / "counts.csv").exists()


def test_check_on_curved_edge(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"system": {"n": 128, "j_max": 3}, "out": str(tmp_path), "j_range": [2, 3]})
    assert run(capsys, "check", "--bundled", "curved-edge", "--config", cfg)[0] == 0
    summary = io.read_json(tmp_path / "check.json")
    assert summary["envelopes"]["rows"] > 0
    assert "steep" in summary["envelopes"]["constants"]
    assert summary["envelopes"]["steep_slope"] is not None


def test_export(tmp_path, capsys):
    io.write_grd1(tmp_path / "g.grd1", np.arange(16.0).reshape(4, 4))
    cfg = write(tmp_path / "c.json", {"grid": str(tmp_path / "g.grd1"), "pgm": str(tmp_path / "g.pgm"),
                                      "schemas": str(tmp_path / "schemas"), "generators": str(tmp_path / "gen")})
    assert run(capsys, "export", "--config", cfg)[0] == 0
    assert (tmp_path / "g.pgm").read_bytes().startswith(b"P5\n4 4\n65535\n")
    names = {p.name for p in (tmp_path / "schemas").iterdir()}
    assert names == {f"{c}.schema.json" for c in ("synth", "transform", "bounds", "bench", "check", "export")}
    assert (tmp_path / "gen" / "generators.json").exists()
    assert run(capsys, "export")[0] == 1
