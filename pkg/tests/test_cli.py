import csv
import io
from pathlib import Path

import pytest

from heterodyne import ConfigError
from heterodyne.cli import OUTPUT_ENV, bundled_examples, main
from heterodyne.config import parse_config

SMALL = """\
[experiment]
description = small coherent run
eta = 0.5, 1.0
n_samples = 2000
seed = 11

[state coh]
kind = coherent
amplitude = 1

[moments]
orders = 1:0

[expect]
moments/coh/moment(1,0) = 1 +- 5 ci
"""


def write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_validate_and_list(tmp_path, capsys):
    assert main(["validate", write(tmp_path, SMALL)]) == 0
    assert "2 cell(s)" in capsys.readouterr().out
    assert main(["list-examples"]) == 0
    out = capsys.readouterr().out
    for name in ("reconstruction", "photon_number", "squeezing", "phase_bifurcation", "moments"):
        assert name in out


def test_run_reproducible_is_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    assert main(["run", cfg, "--reproducible", "--out", str(tmp_path / "a")]) == 0
    assert main(["run", cfg, "--reproducible", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "moments.csv").read_bytes()
    assert a == (tmp_path / "b" / "moments.csv").read_bytes()
    assert b"# generated:" not in a
    assert "2/2 expectation checks passed" in capsys.readouterr().out


def test_run_without_flag_has_timestamp(tmp_path):
    assert main(["run", write(tmp_path, SMALL), "--out", str(tmp_path / "o")]) == 0
    assert "# generated:" in (tmp_path / "o" / "moments.csv").read_text()


def test_seed_override_and_env_dir(tmp_path, monkeypatch):
    cfg = write(tmp_path, SMALL)
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["run", cfg, "--reproducible"]) == 0
    assert main(["run", cfg, "--reproducible", "--seed", "12", "--out", str(tmp_path / "s")]) == 0
    a = read_rows(tmp_path / "env" / "moments.csv")
    b = read_rows(tmp_path / "s" / "moments.csv")
    assert [r["value_re"] for r in a] != [r["value_re"] for r in b]
    assert "# seed: 12" in (tmp_path / "s" / "moments.csv").read_text()


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, SMALL.replace("eta = 0.5, 1.0", "eta = 1.5"), "bad.cfg")
    assert main(["validate", bad]) == 2
    assert main(["run", str(tmp_path / "missing.cfg")]) == 4
    failing = write(tmp_path, SMALL.replace("1 +- 5 ci", "7 +- 0.01"), "fail.cfg")
    assert main(["run", failing, "--out", str(tmp_path / "f")]) == 3
    assert "FAIL" in capsys.readouterr().out
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", write(tmp_path, SMALL), "--out", str(blocker / "sub")]) == 4


def test_config_error_locations():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL.replace("eta = 0.5, 1.0", "eta ="))
    assert info.value.field == "experiment.eta"
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL.replace("amplitude = 1", "amplitude = 1 +"))
    assert info.value.line == 9
    with pytest.raises(ConfigError):
        parse_config(SMALL + "\n[nonsense]\n")
    with pytest.raises(ConfigError):
        parse_config(SMALL.replace("kind = coherent", "kind = coherent\nbogus = 3"))


@pytest.mark.parametrize("name", sorted(bundled_examples()))
def test_bundled_examples_pass(name, tmp_path):
    assert main(["run", name, "--reproducible", "--out", str(tmp_path)]) == 0


def test_photon_number_noise_and_reconstruction_cell(tmp_path):
    assert main(["run", "photon_number", "--reproducible", "--out", str(tmp_path)]) == 0
    noise = [float(r["value_re"]) for r in read_rows(tmp_path / "compare_direct.csv") if r["label"] == "noise_db"]
    assert len(noise) == 12 and min(noise) >= 0
    assert main(["run", "reconstruction", "--reproducible", "--out", str(tmp_path)]) == 0
    row = next(r for r in read_rows(tmp_path / "reconstruct.csv") if r["label"] == "rho[0,0]")
    assert abs(float(row["value_re"]) - 0.5) < 0.05
