import json

import pytest

from finslermt.cli import main

BASE = """
seed = 7

[norm]
family = "euclidean"
dim = 2

[domain]
kind = "disk"
scale = 1.0

[mesh]
h = 0.03125
"""


def write_cfg(tmp_path, extra=""):
    p = tmp_path / "cfg.toml"
    p.write_text(BASE + extra)
    return str(p)


def test_identities_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "[identities]\nn_max = 12\n")
    out = tmp_path / "run"
    assert main(["identities", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "identities.json").read_text())
    assert rep["all_exact"] is True
    manifest = json.loads((out / "manifest.json").read_text())
    assert "identities.txt" in manifest["artifacts"]


def test_kappa_subcommand(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "run"
    assert main(["kappa", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "kappa.json").read_text())
    assert rep["kappa"] == pytest.approx(3.141592653589793, abs=1e-9)


def test_bad_config_exit_code(tmp_path):
    p = tmp_path / "broken.toml"
    p.write_text("[norm]\nfamily = 'p_norm'\n")  # missing p
    assert main(["kappa", "--config", str(p), "--out", str(tmp_path / "r")]) == 1


def test_missing_file_exit_code(tmp_path):
    assert main(["kappa", "--config", str(tmp_path / "nope.toml")]) == 1


def test_eigen_subcommand_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path, "[eigen]\ntol = 1e-7\n")
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["eigen", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["eigen", "--config", cfg, "--out", str(out2)]) == 0
    rep = json.loads((out1 / "eigen.json").read_text())
    assert rep["lambda1"] == pytest.approx(5.7832, rel=0.05)
    assert (out1 / "eigen.json").read_bytes() == (out2 / "eigen.json").read_bytes()


def test_norm_check_seeded(tmp_path):
    cfg = write_cfg(tmp_path, "[norm_check]\nsamples = 200\n")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["norm-check", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["norm-check", "--config", cfg, "--out", str(out2), "--seed", "7"]) == 0
    assert (out1 / "duality.json").read_bytes() == (out2 / "duality.json").read_bytes()
    rep = json.loads((out1 / "duality.json").read_text())
    assert rep["max_violation"] < 1e-10


def test_symmetrize_subcommand_determinism(tmp_path):
    cfg = write_cfg(tmp_path)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["symmetrize", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["symmetrize", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "symmetrized.csv").read_bytes() == (out2 / "symmetrized.csv").read_bytes()


def test_moser_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, """
[moser]
alpha = "lambda1"
epsilons = [1e-2, 1e-3]
t_coeff = 2.4
t_exponent = 0.49
""")
    out = tmp_path / "m"
    assert main(["moser", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "moser.json").read_text())
    assert rep["ratio"] > 1.0
    table = (out / "moser_ladder.csv").read_text().splitlines()
    assert table[0].startswith("epsilon,")
    assert len(table) == 3


def test_glued_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "[glued]\nepsilons = [1e-2, 1e-3]\n")
    out = tmp_path / "g"
    assert main(["glued", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "glued.json").read_text())
    assert rep["upper_bound"] == pytest.approx(3.141592653589793 * (1 + 2.718281828459045), rel=1e-9)
    manifest = json.loads((out / "manifest.json").read_text())
    for name in ("glued_ladder.csv", "glued.json"):
        assert name in manifest["artifacts"]


def test_bubble_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "[bubble]\nr_max = 1e4\npoints = 5000\n")
    out = tmp_path / "bub"
    assert main(["bubble", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "bubble.json").read_text())
    assert rep["mass"] == pytest.approx(1.0, abs=1e-4)
    assert rep["max_residual"] < 1e-3
