import csv
import json

import pytest

from nlfkpp import cli, verification


def write_cfg(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text)
    return str(p)


def test_verify_default_exits_zero(tmp_path, capsys):
    assert cli.main(["verify", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "checks.jsonl").read_text().splitlines()
    assert len(lines) == len(verification.CHECKS)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "verify" and manifest["exit_code"] == 0
    assert manifest["config"]["verify"]["weight"] == "polynomial"
    assert manifest["outputs"] == ["checks.jsonl"]
    assert manifest["version"]


def test_verify_failing_check_exits_one(tmp_path, monkeypatch, capsys):
    monkeypatch.setitem(verification.CHECKS, "always_fails", lambda **_: (False, {}))
    assert cli.main(["verify", "--out", str(tmp_path)]) == 1
    assert "always_fails" in capsys.readouterr().err


def test_malformed_kernel_csv_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,phi\n0,1\n0.5,oops\n")
    cfg = write_cfg(tmp_path, f"[kernel]\nfamily = tabulated\npath = {bad}\n")
    assert cli.main(["dispersion", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "line 3" in err and "non-numeric" in err


@pytest.mark.parametrize("text", ["[grid]\nn = many\n", "[kernel]\nfamily = cauchy\n", "[steady]\nsigma = -1\n"])
def test_bad_config_values_exit_two(tmp_path, text):
    assert cli.main(["steady", "--config", write_cfg(tmp_path, text), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_exits_two(tmp_path):
    assert cli.main(["verify", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == 2


def test_steady_writes_roots_and_fields(tmp_path):
    cfg = write_cfg(tmp_path, "[grid]\nn = 128\n[steady]\nsigma = 0.2\nn_seeds = 3\n")
    assert cli.main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 0
    recs = [json.loads(l) for l in (tmp_path / "roots.jsonl").read_text().splitlines()]
    assert {"zero", "one"} <= {r["classification"] for r in recs}
    for r in recs:
        assert (tmp_path / r["field_file"]).is_file()


def test_sweep_is_byte_identical_across_runs_and_threads(tmp_path):
    cfg = write_cfg(tmp_path, "[grid]\nn = 128\n[sweep]\nsigmas = 0.1, 0.2\nn_seeds = 4\n")
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "9"]) == 0
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "9", "--threads", "2"]) == 0
    for name in ("diagram.csv", "roots.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dispersion_reports_onset_row(tmp_path):
    cfg = write_cfg(tmp_path, "[kernel]\nfamily = tophat\n")
    assert cli.main(["dispersion", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "dispersion.csv")))
    star = [r for r in rows if r["kind"] == "sigma_star"]
    assert len(star) == 1 and float(star[0]["sigma"]) == pytest.approx(18.3521034, abs=1e-6)
    sigmas = [float(r["sigma"]) for r in rows]
    assert sigmas == sorted(sigmas)


def test_continue_and_norms(tmp_path):
    cfg = write_cfg(tmp_path, "[grid]\nn = 128\n[continue]\nsigma_start = 0.3\nds = 0.1\n")
    assert cli.main(["continue", "--config", cfg, "--out", str(tmp_path / "c")]) == 0
    header = (tmp_path / "c" / "branch.csv").read_text().splitlines()[0]
    assert header.startswith("sigma,")
    assert cli.main(["norms", "--out", str(tmp_path / "n")]) == 0
    recs = [json.loads(l) for l in (tmp_path / "n" / "norms.jsonl").read_text().splitlines()]
    assert recs[-1]["name"].startswith("X(")


def test_evolve_trajectory(tmp_path):
    cfg = write_cfg(tmp_path, "[grid]\nn = 64\n[evolve]\nmode = trajectory\nsigma = 1\nt_end = 2\ndt = 0.05\n"
                              "record_every = 10\n")
    assert cli.main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,sup_norm")
    assert (tmp_path / "final.bin").is_file()
