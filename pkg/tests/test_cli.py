import json

import numpy as np
import pytest

from ballwalk.cli import main
from ballwalk.specfun import gamma_d


def _read_csv(path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_gamma_csv_roundtrip(tmp_path):
    out = tmp_path / "run"
    assert main(["gamma", "--out", str(out), "--d", "2",
                 "--set", "s.points=11"]) == 0
    header, rows = _read_csv(out / "gamma.csv")
    assert header == ["s", "value"]
    assert len(rows) == 11
    # 17-significant-digit floats round-trip exactly
    for s_str, v_str in rows:
        assert float(v_str) == gamma_d(2, float(s_str))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["artifacts"] == ["gamma.csv"]
    assert manifest["config"]["d"] == 2


def test_spectrum_known_row(tmp_path):
    out = tmp_path / "run"
    assert main(["spectrum", "--out", str(out), "--manifold", "flat_torus",
                 "--d", "1", "--h", "0.1", "--set", "resolution=512",
                 "--set", "eigen.count=4"]) == 0
    _, rows = _read_csv(out / "spectrum.csv")
    # row k=1: mu = gamma_1(h^2 * 1) = sin(0.1)/0.1 exactly
    mu1 = float(rows[1][1])
    assert mu1 == pytest.approx(np.sin(0.1) / 0.1, abs=1e-13)
    assert float(rows[1][3]) == pytest.approx(1.0)  # lambda_ref


def test_weyl_counts(tmp_path):
    out = tmp_path / "run"
    assert main(["weyl", "--out", str(out), "--h", "0.1",
                 "--set", "tau.max=16"]) == 0
    header, rows = _read_csv(out / "weyl.csv")
    assert header == ["tau", "count", "phase_volume", "bound"]
    counts = [int(r[1]) for r in rows]
    assert counts == sorted(counts)


def test_idempotent_reruns_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["excursion", "--out", str(out), "--seed", "7",
                     "--set", "trials=2000", "--h", "0.1"]) == 0
        outs.append((out / "excursion.csv").read_bytes())
    assert outs[0] == outs[1]


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("d = 3  # dimension\ns.points = 5\n")
    out = tmp_path / "run"
    assert main(["gamma", "--config", str(cfg), "--out", str(out),
                 "--set", "s.points=7"]) == 0
    _, rows = _read_csv(out / "gamma.csv")
    assert len(rows) == 7
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["d"] == 3


def test_unknown_key_is_usage_error(tmp_path):
    assert main(["gamma", "--out", str(tmp_path / "x"),
                 "--set", "turbo=1"]) == 2


def test_malformed_config_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just some words\n")
    assert main(["gamma", "--config", str(cfg),
                 "--out", str(tmp_path / "x")]) == 2


def test_computation_error_exit_code(tmp_path):
    # h beyond the injectivity radius of the revolution torus
    assert main(["spectrum", "--out", str(tmp_path / "x"),
                 "--manifold", "revolution_torus", "--h", "3.0"]) == 3


def test_paths_artifact_shape(tmp_path):
    out = tmp_path / "run"
    assert main(["paths", "--out", str(out), "--h", "0.2",
                 "--set", "paths.steps=20", "--set", "paths.chains=3"]) == 0
    header, rows = _read_csv(out / "paths.csv")
    assert header == ["chain", "step", "x0"]
    assert len(rows) == 3 * 21
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["held_fraction"] == 0.0
    assert manifest["dt"] == pytest.approx(0.04 / 3)
