from __future__ import annotations

import json
import subprocess
import sys

import pytest

from brwlab import cli
from brwlab.errors import InternalError


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_params_json(capsys):
    code, out, _ = run(["params", "--json"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["params"] == {"q_plus": 1.0, "q_minus": 4.0, "beta": 0.5}


def test_params_complex_spectrum(capsys):
    code, out, _ = run(["params", "--beta", "4", "--json"], capsys)
    assert code == 0
    sp = json.loads(out)["spectral"]
    assert sp["discriminant"] == pytest.approx(-7.0)
    assert sp["eigenvalues"][0][1] == pytest.approx(7 ** 0.5 / 2)
    assert sp["eigenvectors"] == []


@pytest.mark.parametrize("argv", [
    ["params", "--q-plus", "4", "--q-minus", "1"],
    ["params", "--beta", "0"],
    ["series", "--n-max", "1"],
    ["curve", "--tol", "1e-12"],
    ["simulate", "--quantity", "pgf", "--theta", "1.5", "--reps", "10"],
    ["simulate", "--phis", "-1", "--reps", "10"],
    ["sweep", "--betas", "0.7", "--reps", "10"],
    ["verify", "--only", "99"],
    ["verify", "--expect", "nope=1", "--only", "7"],
    ["nonsense"],
    ["params", "--reps", "abc"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err.startswith("brwlab:")


def test_internal_error_exit_3(monkeypatch, capsys):
    def boom(args):
        raise InternalError("broken invariant")

    monkeypatch.setitem(cli.COMMANDS, "params", boom)
    code, _, err = run(["params"], capsys)
    assert code == 3 and "internal error" in err


def test_portrait_bundle(tmp_path, capsys):
    code, _, _ = run(["portrait", "--paper-figure", "crit", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"portrait.svg", "manifest.json", "curve_hpm.csv", "curve_hmp.csv"} <= names
    assert any(n.startswith("traj_") for n in names)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["params"]["beta"] == 0.5
    assert {o["file"] for o in man["outputs"]} == names - {"manifest.json"}


def test_portrait_empty_grid(tmp_path, capsys):
    code, _, _ = run(["portrait", "--paper-figure", "super", "--grid", "", "--out-dir", str(tmp_path)],
                     capsys)
    assert code == 0
    assert not any(p.name.startswith("traj_") for p in tmp_path.iterdir())
    assert (tmp_path / "portrait.svg").read_text().startswith("<?xml")


def test_series_and_curve_outputs(tmp_path, capsys):
    assert run(["series", "--beta", "4", "--n-max", "20", "--out-dir", str(tmp_path)], capsys)[0] == 0
    assert (tmp_path / "series.csv").read_text().splitlines()[0] == "n,a_n"
    code, out, _ = run(["curve", "--which", "hpm", "--beta", "0.4", "--json"], capsys)
    assert code == 0
    assert json.loads(out)["curves"]["hpm"]["value_at_0"] == pytest.approx(0.681168, abs=1e-6)


def test_manifest_replay_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["simulate", "--quantity", "levels", "--root", "minus", "--phis", "0,0.5", "--reps", "2000",
            "--seed", "5", "--horizon", "8", "--out-dir", str(a)]
    assert run(argv, capsys)[0] == 0
    assert run(["simulate", "--config", str(a / "manifest.json"), "--out-dir", str(b)], capsys)[0] == 0
    assert (a / "estimates.csv").read_bytes() == (b / "estimates.csv").read_bytes()


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta": 4.0, "q_plus": 1.0, "q_minus": 4.0}))
    code, out, _ = run(["params", "--config", str(cfg), "--beta", "0.4", "--json"], capsys)
    assert code == 0
    assert json.loads(out)["params"]["beta"] == 0.4
    code, out, _ = run(["params", "--config", str(cfg), "--json"], capsys)
    assert json.loads(out)["params"]["beta"] == 4.0


def test_simulate_kinds(capsys):
    for q in ("pgf", "winding", "dip", "tree"):
        code, out, _ = run(["simulate", "--quantity", q, "--reps", "200", "--horizon", "3"], capsys)
        assert code == 0, q
        assert out.strip()


def test_sweep_and_chain(capsys):
    assert run(["sweep", "--betas", "0.5,0.3", "--reps", "300", "--horizon", "4"], capsys)[0] == 0
    code, out, _ = run(["chain", "--mode", "LargeDeviationFreq", "--times", "1,2", "--reps", "300"],
                       capsys)
    assert code == 0


def test_verify_subset_passes(capsys):
    code, out, _ = run(["verify", "--only", "7,8,15"], capsys)
    assert code == 0
    assert out.count("[PASS]") == 3


def test_verify_tamper_fails(capsys):
    code, out, _ = run(["verify", "--only", "15", "--expect", "c15_hand=3.0"], capsys)
    assert code == 1
    assert "[FAIL]" in out


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "brwlab.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "brwlab" in r.stdout
