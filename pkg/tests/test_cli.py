import csv
import json
import math
import subprocess
import sys

import pytest

import oracles
from cubic_lab import __version__
from cubic_lab.cli import main


def _rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def _only(directory, suffix):
    files = sorted(directory.glob(f"*{suffix}"))
    assert len(files) == 1, files
    return files[0]


def test_spectrum_positive_axis(tmp_path):
    assert main(["spectrum", "--beta", "1.0@0", "--levels", "4", "--out", str(tmp_path)]) == 0
    f = _only(tmp_path, ".csv")
    rows = _rows(f)
    assert len(rows) == 4
    assert all(abs(float(r["im"])) <= 1e-8 for r in rows)
    assert [int(r["nodes"]) for r in rows] == [0, 1, 2, 3]
    assert float(rows[0]["re"]) == pytest.approx(oracles.level_oracle(1.0, 0, 1.3).real, rel=1e-9)
    text = f.read_text()
    assert f"# cubic-lab {__version__}" in text and "# config_hash" in text


def test_spectrum_on_the_cut(tmp_path):
    assert main(["spectrum", "--beta", "1.0@pi", "--levels", "2", "--out", str(tmp_path)]) == 0
    rows = _rows(_only(tmp_path, ".csv"))
    assert len(rows) == 2 and all(float(r["im"]) > 0 for r in rows)


def test_spectrum_usage_errors(tmp_path, capsys):
    assert main(["spectrum", "--beta", "0@0", "--out", str(tmp_path)]) == 1
    assert "beta = 0" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--beta", "1.0@zz"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["nosuch"])
    assert exc.value.code == 1


def test_series_exact_json(tmp_path):
    assert main(["series", "--n", "0", "--orders", "20", "--out", str(tmp_path)]) == 0
    data = json.loads(_only(tmp_path, ".json").read_text())
    assert data["series"]["coefficients"][0]["value"] == "11/16"
    assert data["provenance"]["version"] == __version__


def test_pade_within_envelope(tmp_path):
    assert main(["pade", "--n", "0", "--j", "8", "--eval", "1.0@0", "--out", str(tmp_path)]) == 0
    data = json.loads(_only(tmp_path, ".json").read_text())
    value = data["evaluations"][0]["re"]
    E = oracles.level_oracle(1.0, 0, 1.3).real
    # the [8/8] relative error at beta = 1 is about 8e-4
    assert abs(value - E) / E < 1e-3
    assert all(float(r) < 0 for r in data["approximant"]["Q_roots"])


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["series", "--n", "1", "--orders", "12", "--out", str(d)]) == 0
        assert main(["wkb", "--out", str(d)]) == 0
    for f in sorted(a.iterdir()):
        assert (b / f.name).read_bytes() == f.read_bytes()
    # names carry the config hash, different configs never collide
    assert main(["series", "--n", "1", "--orders", "13", "--out", str(a)]) == 0
    assert len(list(a.glob("series-*.json"))) == 2


def test_nodes_and_wkb_outputs(tmp_path):
    assert main(["nodes", "--beta", "1.0@0.5", "--n", "2", "--out", str(tmp_path)]) == 0
    data = json.loads(_only(tmp_path, ".json").read_text())
    assert data["count"]["count"] == 2
    assert _only(tmp_path, ".svg").read_text().lstrip().startswith("<")
    out = tmp_path / "w"
    assert main(["wkb", "--distance", "0.05", "--out", str(out)]) == 0
    data = json.loads(_only(out, ".json").read_text())
    assert data["density"]["N0"] == pytest.approx(2 / (math.pi * math.sqrt(3)) * 0.05 ** 1.5)


def test_density_small_range(tmp_path):
    assert main(["density", "--t-min", "1", "--out", str(tmp_path)]) == 0
    rows = _rows(_only(tmp_path, ".csv"))
    assert all(float(r["rho"]) > 0 for r in rows)
    side = json.loads(_only(tmp_path, ".json").read_text())
    assert side["failed_samples"] == 0 and "tunneling_fit" in side
    assert main(["density", "--t-min", "20", "--out", str(tmp_path)]) == 1


def test_accept_exit_codes(tmp_path, capsys):
    assert main(["accept", "--only", "2,6", "--out", str(tmp_path)]) == 0
    assert "[PASS] criterion  2" in capsys.readouterr().out
    report = json.loads(_only(tmp_path, ".json").read_text())
    assert report["all_passed"] and "seconds" not in report["criteria"][0]
    assert main(["accept", "--only", "14", "--out", str(tmp_path / "x")]) == 3
    assert main(["accept", "--only", "99", "--out", str(tmp_path)]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "cubic_lab", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout


def test_thread_cap(monkeypatch):
    from cubic_lab._runtime import config_hash, thread_count

    monkeypatch.setenv("CUBIC_LAB_THREADS", "3")
    assert thread_count() == 3
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
