import json
import math
import os

import numpy as np
import pytest

from quadmech import cli
from quadmech.config import default_text, load_config
from quadmech.errors import ConfigError

SMALL = """
[model]
g = 0.003
gamma_o = 0.0
gamma_m = 0.0
[hilbert]
n_cav = 6
n_mech = 30
[grid]
t_end = 4.0
n_steps = 20
alpha = 0.1
[sweep]
n_max = 100
g_points = 21
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# config parsing

def test_default_config_round_trips():
    cfg = load_config(text=default_text())
    assert cfg.params.g == 0.003
    assert cfg.params.gamma_o == 0.1
    assert cfg.params.gamma_m == 1e-7
    assert cfg.params.nbar_m == 1000.0
    assert cfg.alpha == 1.0
    assert cfg.spec.n_cav == 10 and cfg.spec.n_mech == 60


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        load_config(text="[model]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(text="[nosuchsection]\nx = 1\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        load_config(text="[model]\ng = banana\n")
    with pytest.raises(ConfigError):
        load_config(text="[model]\ng = -0.1\n")
    with pytest.raises(ConfigError):
        load_config(text="[hilbert]\nn_cav = 0\n")
    with pytest.raises(ConfigError):
        load_config(text="[grid]\nt_end = -1.0\n")


def test_empty_value_means_default():
    cfg = load_config(text="[model]\nnbar_m =\n")
    assert cfg.params.nbar_m == 1000.0


def test_none_unsets_nullable_key():
    cfg = load_config(text="[model]\nnbar_m = none\n")
    assert cfg.params.nbar_m is None
    with pytest.raises(ConfigError):
        load_config(text="[model]\ng = none\n")


def test_condition_n_must_fit_truncation():
    with pytest.raises(ConfigError):
        load_config(text="[hilbert]\nn_cav = 3\n[grid]\ncondition_n = 5\n")


def test_float_list_parsing():
    cfg = load_config(text="[grid]\nwigner_times = 0.5, 1.0 2.5\n")
    assert cfg.wigner_times == (0.5, 1.0, 2.5)


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError):
        load_config(path="/nonexistent/nowhere.ini")


# ---------------------------------------------------------------------------
# CLI runs

def test_squeezeparam_values_and_determinism(tmp_path):
    ini = _write(tmp_path, SMALL)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.run(["squeezeparam", "--config", ini, "--out", out1]) == 0
    assert cli.run(["squeezeparam", "--config", ini, "--out", out2]) == 0
    text1 = open(os.path.join(out1, "squeezeparam.csv")).read()
    text2 = open(os.path.join(out2, "squeezeparam.csv")).read()
    assert text1 == text2
    rows = {int(line.split(",")[0]): float(line.split(",")[1])
            for line in text1.splitlines()[1:]}
    assert rows[0] == 0.0
    assert rows[100] == pytest.approx(0.19711434009106751, abs=1e-12)


def test_manifest_checksums_match_files(tmp_path):
    ini = _write(tmp_path, SMALL)
    out = str(tmp_path / "m")
    assert cli.run(["mandel", "--config", ini, "--out", out]) == 0
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    import hashlib
    for name, rec in manifest["outputs"].items():
        text = open(os.path.join(out, name)).read()
        assert hashlib.sha256(text.encode()).hexdigest() == rec["sha256"]
        assert len(text) == rec["bytes"]
    assert manifest["subcommand"] == "mandel"


def test_config_error_exit_code_and_no_files(tmp_path, capsys):
    ini = _write(tmp_path, "[model]\nbogus = 1\n")
    out = str(tmp_path / "never")
    assert cli.run(["squeezeparam", "--config", ini, "--out", out]) == 2
    assert not os.path.exists(out)
    assert "unknown key" in capsys.readouterr().err


def test_spectrum_ladder_at_zero_coupling(tmp_path):
    ini = _write(tmp_path, SMALL.replace("g = 0.003", "g = 0.0"))
    out = str(tmp_path / "s")
    assert cli.run(["spectrum", "--config", ini, "--out", out]) == 0
    lines = open(os.path.join(out, "spectrum.csv")).read().splitlines()[1:]
    for line in lines:
        g, k, n, e = line.split(",")
        if float(g) == 0.0:
            assert float(e) == pytest.approx(2.0 * int(n) + int(k), abs=1e-13)


def test_evolve_initial_row(tmp_path):
    ini = _write(tmp_path, SMALL)
    out = str(tmp_path / "e")
    assert cli.run(["evolve", "--config", ini, "--out", out]) == 0
    first = open(os.path.join(out, "evolve.csv")).read().splitlines()[1]
    t, phonon, q, entropy, v_min, db = (float(x) for x in first.split(","))
    assert t == 0.0
    assert phonon == pytest.approx(0.0, abs=1e-12)
    assert q == -1.0
    assert entropy == pytest.approx(0.0, abs=1e-12)
    assert v_min == pytest.approx(0.5, abs=1e-12)
    assert db == pytest.approx(0.0, abs=1e-12)


def test_evolve_oracle_flag(tmp_path):
    ini = _write(tmp_path, SMALL)
    out = str(tmp_path / "eo")
    assert cli.run(["evolve", "--config", ini, "--out", out, "--oracle"]) == 0
    lines = open(os.path.join(out, "evolve.csv")).read().splitlines()
    assert lines[0].endswith(",fidelity")
    fids = [float(line.split(",")[-1]) for line in lines[1:]]
    assert min(fids) >= 1.0 - 1e-7


def test_lindblad_zero_rates_matches_evolve(tmp_path):
    ini = _write(tmp_path, SMALL)
    out_e, out_l = str(tmp_path / "ze"), str(tmp_path / "zl")
    assert cli.run(["evolve", "--config", ini, "--out", out_e]) == 0
    assert cli.run(["lindblad", "--config", ini, "--out", out_l]) == 0
    ev = np.array([[float(x) for x in line.split(",")] for line in
                   open(os.path.join(out_e, "evolve.csv")).read().splitlines()[1:]])
    li = np.array([[float(x) for x in line.split(",")] for line in
                   open(os.path.join(out_l, "lindblad.csv")).read().splitlines()[1:]])
    # phonon number columns agree; the frames differ only in photon phases
    assert np.max(np.abs(ev[:, 1] - li[:, 1])) < 1e-8
    assert np.max(np.abs(li[:, 3] - 1.0)) < 1e-7  # trace column


def test_condition_degenerate_exit(tmp_path, capsys):
    # alpha = 0 leaves no amplitude in the n = 1 photon sector
    ini = _write(tmp_path, SMALL.replace("alpha = 0.1", "alpha = 0.0"))
    out = str(tmp_path / "c")
    assert cli.run(["condition", "--config", ini, "--out", out]) == 4
    assert "degenerate" in capsys.readouterr().err


def test_condition_reports_formula_agreement(tmp_path):
    ini = _write(tmp_path, SMALL.replace("g = 0.003", "g = 0.08")
                 .replace("alpha = 0.1", "alpha = 1.0"))
    out = str(tmp_path / "cf")
    assert cli.run(["condition", "--config", ini, "--out", out]) == 0
    doc = json.load(open(os.path.join(out, "condition.json")))
    rec = doc["records"][0]
    assert rec["db"] == pytest.approx(rec["db_formula"], abs=1e-6)
    assert 0.0 < rec["probability"] < 1.0


def test_env_var_out_dir(tmp_path, monkeypatch):
    ini = _write(tmp_path, SMALL)
    envdir = str(tmp_path / "fromenv")
    monkeypatch.setenv(cli.ENV_OUT, envdir)
    assert cli.run(["dressed", "--config", ini]) == 0
    assert os.path.exists(os.path.join(envdir, "dressed.csv"))
    # the --out flag wins over the environment
    flagdir = str(tmp_path / "fromflag")
    assert cli.run(["dressed", "--config", ini, "--out", flagdir]) == 0
    assert os.path.exists(os.path.join(flagdir, "dressed.csv"))


def test_nmech_scale_reports_drift(tmp_path):
    ini = _write(tmp_path, SMALL)
    out = str(tmp_path / "n")
    assert cli.run(["evolve", "--config", ini, "--out", out,
                    "--nmech-scale", "1.5"]) == 0
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    conv = manifest["convergence"]
    assert conv["nmech_scale"] == 1.5
    assert conv["n_mech_scaled"] == 45
    assert conv["drift"] < 1e-8


def test_workers_do_not_change_output(tmp_path):
    ini = _write(tmp_path, SMALL)
    out1, out2 = str(tmp_path / "w1"), str(tmp_path / "w2")
    assert cli.run(["evolve", "--config", ini, "--out", out1]) == 0
    assert cli.run(["evolve", "--config", ini, "--out", out2,
                    "--workers", "3"]) == 0
    assert open(os.path.join(out1, "evolve.csv")).read() == \
        open(os.path.join(out2, "evolve.csv")).read()


def test_dressed_residuals_small(tmp_path):
    ini = _write(tmp_path, SMALL)
    out = str(tmp_path / "d")
    assert cli.run(["dressed", "--config", ini, "--out", out]) == 0
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["extras"]["max_residual"] < 1e-9


def test_wigner_csv_emission(tmp_path):
    text = SMALL + "\n[output]\nwigner = true\n"
    text = text.replace("[grid]\n", "[grid]\nwigner_times = 1.0 2.0\nn_grid = 21\n")
    ini = _write(tmp_path, text, name="wig.ini")
    out = str(tmp_path / "w")
    assert cli.run(["evolve", "--config", ini, "--out", out]) == 0
    for i in (0, 1):
        path = os.path.join(out, f"wigner_evolve_{i}.csv")
        assert os.path.exists(path)
        lines = open(path).read().splitlines()
        assert lines[0] == "q,p,w"
        assert len(lines) == 1 + 21 * 21


def test_dissipation_changes_wigner(tmp_path):
    base = (
        "[model]\ng = 0.08\ngamma_o = {go}\ngamma_m = {gm}\nnbar_m = 1\n"
        "[hilbert]\nn_cav = 4\nn_mech = 20\n"
        "[grid]\nt_end = 4\nn_steps = 8\nalpha = 0.5\n"
        "wigner_times = 4.0\nn_grid = 21\nq_max = 3\n"
        "[output]\nwigner = true\n")
    ini_closed = _write(tmp_path, base.format(go=0, gm=0), "closed.ini")
    ini_open = _write(tmp_path, base.format(go=0.1, gm=0.05), "open.ini")
    out_c, out_o = str(tmp_path / "wc"), str(tmp_path / "wo")
    assert cli.run(["evolve", "--config", ini_closed, "--out", out_c]) == 0
    assert cli.run(["lindblad", "--config", ini_open, "--out", out_o]) == 0
    wc = np.loadtxt(os.path.join(out_c, "wigner_evolve_0.csv"),
                    delimiter=",", skiprows=1)
    wo = np.loadtxt(os.path.join(out_o, "wigner_lindblad_0.csv"),
                    delimiter=",", skiprows=1)
    assert np.array_equal(wc[:, :2], wo[:, :2])  # same grid
    l2 = math.sqrt(float(np.sum((wc[:, 2] - wo[:, 2]) ** 2)))
    assert l2 > 1e-3


def test_print_default_config(capsys):
    assert cli.run(["squeezeparam", "--print-default-config"]) == 0
    text = capsys.readouterr().out
    load_config(text=text)  # what we print must parse back
    assert "[model]" in text and "[output]" in text
