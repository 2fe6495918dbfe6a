import filecmp
import os

import pytest

from bershift.cli import COMMANDS, run
from bershift.config import parse_config
from bershift.errors import ConfigurationError

BASE = """[process]
distribution = gaussian
mean = 0
std = 1
kind = linear
coeffs = 0:1.0, 1:0.5

[kernel]
name = variance
"""

SMALL = BASE + """
[experiment]
n = 60
R = 6
K_max = 4
sigma_path = 20000
center_R = 2000
M = 256
tail_samples = 256
center_samples = 4000
theta_R = 500
n_max = 400
checkpoints = 100, 200
n_grid = 30, 60
ps = 1, 2
seed = 7
"""


def test_parse_defaults():
    cfg = parse_config(BASE)
    assert cfg.process.halfwidth == 1
    assert cfg.kernel.name == "variance"
    assert cfg.experiment["K_max"] == 4
    assert cfg.experiment["p"] == 1.5
    assert "process.coeffs=0:1.0, 1:0.5" in cfg.echo()
    assert len(cfg.sha256) == 64


def test_lln_rejects_p2():
    with pytest.raises(ConfigurationError, match=r"p in \[1,2\)") as exc:
        parse_config(BASE + "[experiment]\np = 2.0\n", "lln")
    assert exc.value.key == "experiment.p"
    parse_config(BASE + "[experiment]\np = 2.0\n", "clt")


@pytest.mark.parametrize("text, key", [
    (BASE.replace("0:1.0", "a:1.0"), "process.coeffs"),
    (BASE + "colour = red\n", "kernel.colour"),
    (BASE + "[plot]\nx = 1\n", "plot"),
    (BASE.replace("variance", "cubic"), "kernel.name"),
    (BASE + "[experiment]\nn_grid = 400, 200\n", "experiment.n_grid"),
    (BASE + "[experiment]\nR = 1\n", "experiment.R"),
])
def test_rejections(text, key):
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    assert exc.value.key == key


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return str(path)


def test_exit_codes(tmp_path, small_cfg, capsys):
    assert run(["frobnicate", "--config", small_cfg]) == 2
    assert run(["clt"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text(BASE.replace("[kernel]", "colour = blue\n[kernel]"))
    assert run(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 3
    assert "[process.colour]" in capsys.readouterr().err
    degen = tmp_path / "degen.cfg"
    degen.write_text("[process]\ndistribution = rademacher\nkind = linear\ncoeffs = 0:1.0\n"
                     "[kernel]\nname = variance\n[experiment]\nn = 50\nR = 10\nsigma_path = 20000\n")
    assert run(["clt", "--config", str(degen), "--out", str(tmp_path)]) == 4
    assert "degenerate-variance" in capsys.readouterr().err


def test_env_out_dir(tmp_path, small_cfg, monkeypatch):
    monkeypatch.setenv("BERSHIFT_OUT_DIR", str(tmp_path / "env"))
    assert run(["simulate", "--config", small_cfg]) == 0
    assert os.path.exists(tmp_path / "env" / "simulate.csv")


@pytest.mark.parametrize("command", COMMANDS)
def test_outputs_deterministic_across_workers(tmp_path, small_cfg, command):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run([command, "--config", small_cfg, "--out", str(a), "--workers", "1"]) == 0
    assert run([command, "--config", small_cfg, "--out", str(b), "--workers", "3"]) == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert f"{command}.csv" in names and f"{command}_summary.txt" in names
    for name in names:
        assert filecmp.cmp(a / name, b / name, shallow=False), name
    text = (a / f"{command}.csv").read_text()
    assert "# seed=7" in text and "# config_sha256=" in text and "# config process.kind=linear" in text


def test_seed_override(tmp_path, small_cfg):
    run(["simulate", "--config", small_cfg, "--out", str(tmp_path / "a"), "--seed", "8"])
    run(["simulate", "--config", small_cfg, "--out", str(tmp_path / "b")])
    ta = (tmp_path / "a" / "simulate.csv").read_text()
    tb = (tmp_path / "b" / "simulate.csv").read_text()
    assert "# seed=8" in ta and ta != tb
