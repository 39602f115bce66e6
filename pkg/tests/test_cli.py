import csv
import math

import pytest
import yaml

from iotaml import cli
from iotaml.config import (ConfigError, config_from_dict, config_to_dict, dump_config,
                           parse_config, preset)
from iotaml.protocol import ScenarioConfig

SMALL = {"train_slots": 200, "test_slots": 120, "retrain_slots": 200,
         "nnet": {"training_steps": 40, "batch_size": 50}}


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_config_is_default(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    assert cfg == ScenarioConfig()
    assert cfg.attack.kind == "none" and cfg.n_new == 10


def test_jamming_config(tmp_path):
    cfg = parse_config(write(tmp_path, "attack:\n  kind: jamming\n  phase: test\n"))
    assert cfg.attack.kind == "jamming" and cfg.attack.phase == "test"
    assert cfg == preset("jamming")


@pytest.mark.parametrize("text, path", [
    ("n_new: 0\n", "n_new"),
    ("channel:\n  sigma: 1\n", "channel.sigma"),
    ("bogus: 1\n", "bogus"),
    ("attack:\n  kind: laser\n", "attack"),
    ("n_new: 2.5\n", "n_new"),
    ("defense:\n  p_d: 2\n", "defense"),
])
def test_bad_configs_name_key(tmp_path, text, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, text))
    assert exc.value.key_path == path


def test_malformed_yaml(tmp_path):
    with pytest.raises(ConfigError, match="malformed"):
        parse_config(write(tmp_path, "attack: [unclosed\n"))


def test_echo_round_trip():
    for name in ("no_attack", "priority_violation_retrain", "poisoning"):
        cfg = preset(name, master_seed=7)
        assert config_from_dict(yaml.safe_load(dump_config(cfg))) == cfg


def test_echo_lists_open_defaults():
    d = config_to_dict(ScenarioConfig())
    assert d["channel"]["power_std"] == 0.6
    assert d["background"]["activation_prob"] == 0.5
    assert d["nnet"]["decision_threshold"] == 0.5
    assert d["nnet"]["learning_rates"] == [0.1, 0.03, 0.01]
    assert d["sensing_to_transmission_ratio"] == "1/9"


def read_rows(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_run_writes_deterministic_csv(tmp_path):
    cfg_path = write(tmp_path, yaml.safe_dump({**SMALL, "attack": {"kind": "jamming"}}))
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        assert cli.main(["run", str(cfg_path), "--reps", "2", "--out", str(out), "--trace"]) == 0
        outs.append(out)
    a, b = read_rows(outs[0] / "results.csv"), read_rows(outs[1] / "results.csv")
    assert a == b
    assert tuple(a[0]) == cli.CSV_COLUMNS
    assert [r[0] for r in a[1:]] == ["0", "1", "mean", "std"]
    assert (outs[0] / "trace.csv").exists() and (outs[0] / "phase_metrics.csv").exists()
    # the echoed config reproduces the run
    again = tmp_path / "again"
    assert cli.main(["run", str(outs[0] / "config.yaml"), "--reps", "2", "--out", str(again)]) == 0
    assert read_rows(again / "results.csv") == a


def test_run_experiment_report():
    cfg = preset("poisoning", **SMALL)
    rep = cli.run_experiment(cfg, 1)
    row = rep.rows[0]
    assert row["attack_kind"] == "spectrum_poisoning"
    assert row["attack_energy"] == pytest.approx(row["attack_count"] * 1000 / 9)
    assert set(rep.phase_metrics[0]) == {"observe", "test"}
    with pytest.raises(ValueError):
        cli.run_experiment(cfg, 0)


def test_main_error_exit_codes(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 2
    assert cli.main(["run", str(write(tmp_path, "n_new: -1\n"))]) == 2
    assert "n_new" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code != 0


def test_replicate_shape(tmp_path):
    tables = cli.replicate_tables(tmp_path, reps=1, seed=3, overrides=SMALL)
    for name in cli.TABLES:
        rows = read_rows(tmp_path / f"{name}.csv")
        assert tuple(rows[0]) == cli.TABLE_COLUMNS
        assert len(rows) == 4
        assert all(len(r) == 5 for r in rows)
        for r in rows[1:]:
            assert all(math.isnan(float(v)) or 0 <= float(v) <= 1 for v in r[1:])
    trace = read_rows(tmp_path / "defense_trace.csv")
    assert len(trace) == 12
    assert len(tables["defense_trace"]) == 11
    assert (tmp_path / "defense_summary.csv").exists()


def test_defense_search_command(tmp_path):
    cfg_path = write(tmp_path, yaml.safe_dump(
        {**SMALL, "priority": {}, "background": {"arrival_rate": 0.0},
         "attack": {"kind": "priority_violation", "observe_slots": 200}}))
    out = tmp_path / "d"
    assert cli.main(["defense-search", str(cfg_path), "--out", str(out)]) == 0
    assert len(read_rows(out / "defense_trace.csv")) == 12
