import csv
import io
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from teamdyn.cli import run
from teamdyn.config import ConfigError, parse_config
from teamdyn.dynamics import ArrivalPolicy, vector_field
from teamdyn.export import field_records
from teamdyn.model import AgentTypeSpec, ModelParams

GOLDEN = Path(__file__).parent / "golden"
MINIMAL = '{"lambda":0.025,"alpha":5,"beta":0.1,"types":[{"loss":0.1},{"loss":0.1}]}'


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj), encoding="utf-8")
    return str(p)


def cli(tmp_path, *args, cfg=None):
    out = tmp_path / "out.txt"
    argv = list(args) + ["--out", str(out)]
    if cfg is not None:
        argv += ["--config", write(tmp_path, cfg)]
    code = run(argv)
    return code, (out.read_text(encoding="utf-8") if out.exists() else None)


# -- parse_config ------------------------------------------------------------

def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.params == ModelParams(0.025, 5.0, 0.1)
    assert cfg.types == (AgentTypeSpec(0.1), AgentTypeSpec(0.1))
    assert cfg.assessment.utility_gain_bias == 0 and cfg.assessment.noise_std == 0
    assert cfg.mc.samples == 100_000
    assert cfg.output.format == "csv"


def test_defaults_without_params():
    cfg = parse_config('{"types":[{"loss":0.1},{"loss":0.2}]}')
    assert cfg.params == ModelParams(0.0, 1.0, 0.0)


@pytest.mark.parametrize(
    "text, needle",
    [
        ('{"lambda":1.5,"types":[{"loss":0.1},{"loss":0.1}]}', '"lambda" = 1.5 is outside [0, 1]'),
        ('{"types":[]}', "at least 2 types"),
        ('{"types":[{"loss":0.1}]}', "at least 2 types"),
        ('{"types":[{"loss":0.1},{"loss":0.1}],"gamma":1}', 'unknown key "gamma"'),
        ('{"types":[{"loss":0.1,"sigma":1},{"loss":0.1}]}', 'unknown key "sigma" in types[0]'),
        ('{"types":[{"loss":0.5},{"loss":0.1},{"loss":0.1}]}', "infeasible losses"),
        ('{"types":[{"loss":0.1},{"loss":0.1}],"beta":"x"}', '"beta" must be a finite number'),
        ('{"types":[{"loss":0.1},{"loss":0.1}],"grid":{"n_max_a":0,"n_max_b":3}}', "grid.n_max_a"),
        ('{"types":[{"loss":0.1},{"loss":0.1}],"output":{"format":"png"}}', "output.format"),
        ('{"types":[{"loss":0.1},{"loss":0.1}],"dynamics":{"initial":[1]}}', "dynamics.initial"),
        ('{"types":[{"loss":0.1},{"loss":0.1}],"assessment":{"noise_std":-1}}', "assessment.noise_std"),
    ],
)
def test_config_errors_name_the_field(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        parse_config('{"types":\n [1,, 2]}')


def test_with_seed_replaces_all_seeds():
    cfg = parse_config(json.dumps({
        "types": [{"loss": 0.1}, {"loss": 0.1}],
        "assessment": {"noise_std": 0.1, "seed": 1},
        "mc": {"seed": 2},
        "dynamics": {"initial": [1, 1], "policy": {"kind": "seeded-uniform-random", "seed": 3}},
    })).with_seed(99)
    assert cfg.assessment.seed == cfg.mc.seed == cfg.dynamics.policy.seed == 99
    assert cfg.dynamics.policy == ArrivalPolicy("seeded-uniform-random", None, 99)


# -- commands ----------------------------------------------------------------

def test_field_single_cell(tmp_path):
    cfg = {"types": [{"loss": 0.1}, {"loss": 0.1}], "grid": {"n_max_a": 1, "n_max_b": 1}}
    code, text = cli(tmp_path, "field", cfg=cfg)
    assert code == 0
    lines = text.split("\n")
    assert lines[0] == "n_a,n_b,gain_a,gain_b,class"
    assert lines[1].startswith("1,1,") and lines[1].endswith(",STAY")
    assert lines[2:] == [""]
    assert "\r" not in text


def test_field_lambda_zero_never_add_either(tmp_path):
    cfg = {"alpha": 2.5, "types": [{"loss": 0.1, "noise_var": 0.03}, {"loss": 0.05}],
           "grid": {"n_max_a": 15, "n_max_b": 15}}
    code, text = cli(tmp_path, "field", cfg=cfg)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 225
    assert not any(r["class"] == "ADD_EITHER" for r in rows)


def test_field_json_round_trip(tmp_path):
    cfg = parse_config((GOLDEN / "field.json").read_text())
    grid = vector_field(cfg.grid.n_max_a, cfg.grid.n_max_b, cfg.types, cfg.params, cfg.assessment)
    code, text = cli(tmp_path, "field", "--format", "json",
                     "--config", str(GOLDEN / "field.json"))
    assert code == 0
    assert json.loads(text) == list(field_records(grid))


def test_field_svg_well_formed(tmp_path):
    code, text = cli(tmp_path, "field", "--format", "svg", "--config", str(GOLDEN / "field.json"))
    assert code == 0
    root = ET.fromstring(text)
    cells = [el for el in root.iter() if "cell" in el.get("class", "").split()]
    assert len(cells) == 20 * 20
    n_stay = sum(1 for el in cells if el.tag.endswith("circle"))
    golden = list(csv.DictReader(io.StringIO((GOLDEN / "field.csv").read_text())))
    assert n_stay == sum(1 for r in golden if r["class"] == "STAY")
    assert all(el.get("marker-end") for el in cells if el.tag.endswith("line"))


def test_optima_reports_closed_forms(tmp_path):
    cfg = {"alpha": 1, "types": [{"loss": 0.1}, {"loss": 0.05}], "optima": {"n_a": 10}}
    code, text = cli(tmp_path, "optima", cfg=cfg)
    rows = {r["quantity"]: r for r in csv.DictReader(io.StringIO(text))}
    assert code == 0
    acc = rows["accuracy_optimal"]
    assert float(acc["value"]) == 20.0 and float(acc["delta"]) < 1e-6
    for name in ("utility_optimal_beta0", "utility_optimal_beta1"):
        assert float(rows[name]["delta"]) < 1e-6


def test_dynamics_final_row(tmp_path):
    cfg = {"types": [{"loss": 0.1}, {"loss": 0.1}], "dynamics": {"initial": [5, 0]}}
    code, text = cli(tmp_path, "dynamics", cfg=cfg)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0
    assert rows[0]["step"] == "0" and rows[0]["accepted"] == ""
    assert (rows[-1]["n_a"], rows[-1]["n_b"]) == ("5", "5")


def test_eval_single_row(tmp_path):
    cfg = {"lambda": 0.5, "types": [{"loss": 0.1}, {"loss": 0.05}], "eval": {"counts": [1, 1]}}
    code, text = cli(tmp_path, "eval", "--format", "json", cfg=cfg)
    (rec,) = json.loads(text)
    assert code == 0
    assert rec["disutility"] == pytest.approx(0.09375, rel=1e-14)
    assert rec["mse"] == pytest.approx(0.0375) and rec["disagreement"] == pytest.approx(0.15)


def test_sweep_streams_product(tmp_path):
    cfg = {"alpha": 5, "types": [{"loss": 0.1}, {"loss": 0.1}],
           "grid": {"n_max_a": 8, "n_max_b": 8}, "dynamics": {"initial": [3, 1]},
           "sweep": {"lambda": [0, 0.025, 0.05], "beta": [0.1, 0.2]}}
    code, text = cli(tmp_path, "sweep", "--threads", "3", cfg=cfg)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 6
    assert [(r["lambda"], r["beta"]) for r in rows[:2]] == [("0.0", "0.1"), ("0.0", "0.2")]
    assert all(sum(int(r[k]) for k in ("stay", "add_a", "add_b", "add_either")) == 64 for r in rows)
    assert rows[0]["add_either"] == "0"


def test_mc_check_passes(tmp_path):
    code, text = cli(tmp_path, "mc-check", "--config", str(GOLDEN / "mc_check.json"))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0
    assert len(rows) == 26 and all(r["pass"] == "true" for r in rows)


def test_mc_check_failure_exit(tmp_path, monkeypatch, capsys):
    import teamdyn.checks as checks

    monkeypatch.setattr(checks, "Z_LIMIT", 0.0)
    code, _ = cli(tmp_path, "mc-check", "--config", str(GOLDEN / "mc_check.json"))
    assert code == 2
    assert "mc-check failed: two-avg/mse" in capsys.readouterr().err


# -- exit codes --------------------------------------------------------------

def test_exit_codes(tmp_path, capsys):
    bad = {"lambda": 2, "types": [{"loss": 0.1}, {"loss": 0.1}]}
    assert cli(tmp_path, "eval", cfg=bad)[0] == 1
    assert cli(tmp_path, "eval", cfg={"types": [{"loss": 0.1}, {"loss": 0.1}]})[0] == 1
    assert 'missing required section "eval"' in capsys.readouterr().err
    assert run(["eval", "--config", str(tmp_path / "missing.json")]) == 1
    cfg = write(tmp_path, {"types": [{"loss": 0.1}, {"loss": 0.1}],
                           "grid": {"n_max_a": 2, "n_max_b": 2}})
    assert run(["field", "--config", cfg, "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 2
    assert "error:" in capsys.readouterr().err
    assert run(["dynamics", "--config", cfg, "--format", "svg"]) == 1


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("TEAMDYN_THREADS", "zero")
    assert cli(tmp_path, "field", "--config", str(GOLDEN / "field.json"))[0] == 1
    monkeypatch.setenv("TEAMDYN_THREADS", "4")
    code, text = cli(tmp_path, "field", "--config", str(GOLDEN / "field.json"))
    assert code == 0 and text == (GOLDEN / "field.csv").read_text()


# -- determinism -------------------------------------------------------------

GOLDEN_RUNS = [
    ("field", "field.json", "csv", "field.csv"),
    ("field", "field.json", "json", "field.out.json"),
    ("dynamics", "dynamics.json", "csv", "dynamics.csv"),
    ("dynamics", "dynamics.json", "json", "dynamics.out.json"),
    ("mc-check", "mc_check.json", "csv", "mc_check.csv"),
]


@pytest.mark.parametrize("command, config, fmt, expected", GOLDEN_RUNS)
@pytest.mark.parametrize("threads", ["1", "8"])
def test_golden_bytes(tmp_path, command, config, fmt, expected, threads):
    out = tmp_path / "out"
    code = run([command, "--config", str(GOLDEN / config), "--format", fmt,
                "--threads", threads, "--out", str(out)])
    assert code == 0
    assert out.read_bytes() == (GOLDEN / expected).read_bytes()


def test_seed_override_changes_noisy_output(tmp_path):
    a = tmp_path / "a.csv"
    run(["field", "--config", str(GOLDEN / "field.json"), "--seed", "18", "--out", str(a)])
    assert a.read_bytes() != (GOLDEN / "field.csv").read_bytes()
    assert run(["field", "--config", str(GOLDEN / "field.json"), "--seed", "-1"]) == 1
