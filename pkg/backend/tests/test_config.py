import json

import pytest

from errors import ConfigError
from run_config import (
    DEFAULT_TRAIN_CONFIG,
    CompareConfig,
    RunConfig,
    TrainConfig,
    get_default_run_config,
    load_compare_config,
    load_run_config,
    parse_config,
    split_optimizer_name,
    validate_run_config,
)


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_defaults():
    cfg = get_default_run_config()
    assert (cfg.steps, cfg.batch, cfg.seed, cfg.clip) == (2000, 64, 1203, 1.0)
    assert (cfg.schedule.lr, cfg.schedule.min_lr, cfg.schedule.warmup_steps) == (1e-3, 1e-4, 500)
    assert cfg.betas == (0.9, 0.95) and cfg.beta_momentum == 0.95 and cfg.weight_decay == 1e-2
    assert cfg.format == "csv" and cfg.output_path is None
    assert DEFAULT_TRAIN_CONFIG["optimizer"] == "mud"


def test_load_run_config_from_file(tmp_path):
    path = write_config(tmp_path, {"optimizer": "muon", "steps": 10, "schedule": {"lr": 0.01, "min_lr": 0.0, "warmup_steps": 2}})
    cfg = load_run_config(path)
    assert cfg.optimizer == "muon" and cfg.steps == 10 and cfg.schedule.lr == 0.01


@pytest.mark.parametrize(
    "payload",
    [
        {"optimiser": "mud"},
        {"schedule": {"lr": 0.01, "decay": "linear"}},
        {"optimizer": "sgd"},
        {"steps": -1},
        {"betas": [0.9, 1.0]},
        {"schedule": {"lr": 1e-3, "min_lr": 1e-2}},
        [1, 2, 3],
    ],
)
def test_bad_run_configs_are_rejected(tmp_path, payload):
    with pytest.raises(ConfigError):
        load_run_config(write_config(tmp_path, payload))


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{steps: 3", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_run_config(broken)


def test_parse_config_names_the_field():
    with pytest.raises(ConfigError, match="schedule.warmup_steps"):
        parse_config(TrainConfig, {"schedule": {"warmup_steps": -3}}, "run config")


def test_env_seed_overrides_file(tmp_path, monkeypatch):
    path = write_config(tmp_path, {"seed": 5})
    monkeypatch.setenv("MUDKIT_SEED", "77")
    assert load_run_config(path).seed == 77
    monkeypatch.setenv("MUDKIT_SEED", "0x10")
    assert load_run_config(path).seed == 16
    monkeypatch.setenv("MUDKIT_SEED", "seven")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_compare_config(tmp_path, monkeypatch):
    path = write_config(tmp_path, {"optimizers": ["adamw", "mud2", "muon3"], "seeds": [1, 2]}, "compare.json")
    cfg = load_compare_config(path)
    assert cfg.optimizers == ["adamw", "mud2", "muon3"] and cfg.seeds == [1, 2]
    monkeypatch.setenv("MUDKIT_SEED", "9")
    assert load_compare_config(path).seeds == [9]


@pytest.mark.parametrize(
    "payload",
    [{"optimizers": []}, {"optimizers": ["lion"]}, {"seeds": []}, {"targets": [0.1, -1.0]}, {"target_mode": "ratio"}],
)
def test_bad_compare_configs(payload):
    with pytest.raises(ConfigError):
        parse_config(CompareConfig, payload, "compare config")


def test_validate_run_config_cross_fields():
    assert validate_run_config({"optimizer": "mud", "matrix_lr": 0.02})
    with pytest.raises(ConfigError):
        validate_run_config({"optimizer": "adamw", "matrix_lr": 0.02})
    with pytest.raises(ConfigError):
        validate_run_config(RunConfig(optimizer="adamw", deny_prefixes=["emb"]))


def test_split_optimizer_name():
    assert split_optimizer_name("mud2") == ("mud", 2)
    assert split_optimizer_name("adamw") == ("adamw", None)
    with pytest.raises(ConfigError):
        split_optimizer_name("rmsprop")
