import json

import pytest

from ultraspot.cli import main, ring_mounts


def run(*argv):
    return main([str(a) for a in argv])


def read_all(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


NOISY = {"phase_noise_std_rad": 0.05, "rssi_noise_std_db": 3.0, "drop_model": {"kind": "iid", "p": 0.2}}


@pytest.fixture
def noisy_cfg(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(NOISY))
    return p


def test_simulate_detect_byte_identical(tmp_path, noisy_cfg):
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert run("simulate", "--config", noisy_cfg, "--seed", 7, "--out", out / "trace.jsonl") == 0
        assert run("detect", out / "trace.jsonl", "--config", noisy_cfg, "--seed", 7, "--out", out / "det") == 0
    a, b = read_all(tmp_path / "a"), read_all(tmp_path / "b")
    assert a == b
    assert set(a) == {"trace.jsonl", "det/events.csv", "det/events.jsonl", "det/errors.csv"}


def test_calibrate_then_scan(tmp_path, noisy_cfg):
    run("simulate", "--config", noisy_cfg, "--seed", 1, "--out", tmp_path / "t.jsonl")
    assert run("calibrate", tmp_path / "t.jsonl", "--config", noisy_cfg, "--seed", 1,
               "--out", tmp_path / "cal.json") == 0
    cal = json.loads((tmp_path / "cal.json").read_text())
    assert len(cal["scan_model"]["sigma_rssi_db"]) == 4
    assert run("scan", tmp_path / "t.jsonl", "--config", noisy_cfg, "--seed", 1, "--model", tmp_path / "cal.json",
               "--out", tmp_path / "scan") == 0
    est = json.loads((tmp_path / "scan" / "estimates.json").read_text())
    assert abs(est["JointMulti"] - 50.0) < 1.0


def test_montecarlo_outputs(tmp_path, noisy_cfg):
    assert run("montecarlo", "--config", noisy_cfg, "--runs", 3, "--out", tmp_path / "mc", "--format", "jsonl") == 0
    rows = (tmp_path / "mc" / "runs.jsonl").read_text().splitlines()
    assert [json.loads(r)["seed"] for r in rows] == [0, 1, 2]
    summary = json.loads((tmp_path / "mc" / "summary.json").read_text())
    assert summary["n_runs"] == 3 and "eps_entWi" in summary["median"]


def test_verify_exit_code(capsys):
    assert run("verify") == 0
    out = capsys.readouterr().out
    assert out.startswith("check,passed")


def test_devices_flag(tmp_path):
    assert run("simulate", "--devices", 3, "--out", tmp_path / "t.jsonl") == 0
    assert run("detect", tmp_path / "t.jsonl", "--devices", 3, "--out", tmp_path / "d") == 0
    assert len(ring_mounts(6)) == 6


def test_errors_exit_nonzero(tmp_path, capsys):
    assert run("detect", tmp_path / "missing.jsonl") == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"pipeline": {"nope": 1}}))
    assert run("simulate", "--config", bad, "--out", tmp_path / "x.jsonl") == 2
    assert "error:" in capsys.readouterr().err
