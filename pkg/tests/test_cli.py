import json
import math

import pytest

from fourier_boltzmann.cli import main
from fourier_boltzmann.config import apply_overrides, dumps, load_config, parse_value
from fourier_boltzmann.errors import ConfigError


def read_csv(path):
    lines = path.read_text().splitlines()
    head = lines[0].split(",")
    return [dict(zip(head, ln.split(","))) for ln in lines[1:]]


def test_defaults_roundtrip_through_dump(tmp_path):
    cfg = load_config()
    assert json.loads(dumps(cfg))["solver"]["alpha"] == cfg.solver.alpha


def test_parse_value():
    assert parse_value("1.5") == 1.5
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value('"ode"') == "ode"
    assert parse_value("ode") == "ode"


def test_overrides_nest():
    data = apply_overrides({}, ["solver.alpha=1.2", "seed=4"])
    assert data == {"solver": {"alpha": 1.2}, "seed": 4}


def test_unknown_keys_are_listed(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[solver]\nalpah = 1.2\nbeat = 0.5\n")
    with pytest.raises(ConfigError, match="alpah, beat"):
        load_config(str(path))


def test_constants_subcommand(tmp_path):
    out = tmp_path / "run"
    assert main(["constants", "--out", str(out), "--set", "constants.exponents=[0, 1, 2]"]) == 0
    rows = {float(r["exponent"]): r for r in read_csv(out / "constants.csv")}
    assert float(rows[1.0]["lambda"]) == pytest.approx(2 * math.pi / 3, abs=1e-12)
    man = json.loads((out / "manifest.json").read_text())
    assert man["exit_code"] == 0
    assert man["config"]["kernel"]["form"] == "constant"
    assert man["constants"]["rows"][0]["residual"] < 1e-10
    assert man["versions"]["numpy"]


def test_csv_uses_full_precision(tmp_path):
    main(["constants", "--out", str(tmp_path)])
    row = read_csv(tmp_path / "constants.csv")[1]
    assert row["lambda"] == format(2 * math.pi / 3, ".17g")


def test_constraint_violation_exits_2(tmp_path, capsys):
    code = main(["evolve", "--out", str(tmp_path), "--set", "solver.alpha=1.0",
                 "--set", "solver.beta=1.2"])
    assert code == 2
    assert "2 > alpha > beta > max(alpha_0, alpha/2)" in capsys.readouterr().err


def test_unknown_section_exits_2(tmp_path, capsys):
    assert main(["norms", "--out", str(tmp_path), "--set", "bogus.x=1"]) == 2
    assert "bogus" in capsys.readouterr().err


def test_malformed_file_exits_2(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[solver\nalpha=")
    assert main(["norms", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_identical_runs_are_byte_identical(tmp_path):
    args = ["dsmc", "--set", "dsmc.N=500", "--set", "dsmc.dt=0.01", "--set", "dsmc.horizon=0.1",
            "--set", "dsmc.record_times=[0.05, 0.1]", "--set", 'solver.integrator="ode"',
            "--seed", "9"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("dsmc_moments.csv", "dsmc_gap.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_classify_and_norms(tmp_path):
    assert main(["classify", "--out", str(tmp_path / "c"),
                 "--set", 'initial.family="stable(alpha=1.5)"']) == 0
    row = read_csv(tmp_path / "c" / "classify.csv")[0]
    assert (row["in_K_alpha"], row["in_M_tilde_alpha"]) == ("true", "false")
    assert main(["norms", "--out", str(tmp_path / "n")]) == 0


def test_evolve_and_stability(tmp_path):
    common = ["--set", "solver.horizon=0.2", "--set", "solver.n_records=3",
              "--set", 'solver.integrator="ode"']
    assert main(["evolve", "--out", str(tmp_path / "e")] + common) == 0
    assert len(read_csv(tmp_path / "e" / "trace.csv")) == 3
    assert main(["stability", "--out", str(tmp_path / "s")] + common) == 0


def test_povzner_subcommand(tmp_path):
    assert main(["povzner-check", "--out", str(tmp_path), "--set", "povzner.samples=300"]) == 0


def test_verify_all_exit_codes(tmp_path):
    assert main(["verify-all", "--only", "1", "--out", str(tmp_path / "ok")]) == 0
    assert main(["verify-all", "--only", "2", "--out", str(tmp_path / "bad")]) == 1
    man = json.loads((tmp_path / "bad" / "manifest.json").read_text())
    assert man["summary"]["failed"] == [2]
