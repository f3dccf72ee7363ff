import csv
import io
import json

import pytest
from click.testing import CliRunner

from main import cli

TRAIN_HEADER_LINE = "step,loss,lr,grad_norm_preclip,elapsed_seconds"

SMALL_RUN = {
    "task": "matreg",
    "optimizer": "mud",
    "steps": 25,
    "rows": 8,
    "cols": 8,
    "batch": 16,
    "schedule": {"lr": 0.02, "min_lr": 0.002, "warmup_steps": 5},
}


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, **kwargs):
    return runner.invoke(cli, [str(a) for a in args], **kwargs)


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def config_file(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


# --- whiten -----------------------------------------------------------------

def test_whiten_polar_on_orthonormal_input(runner):
    result = invoke(runner, "whiten", "--op", "polar", "--cond", 1, "--rows", 8, "--cols", 32, "--seed", 1)
    assert result.exit_code == 0, result.output
    report = json.loads(result.stdout)
    assert set(report) == {"op", "k", "d", "ortho_residual", "flops", "convention", "wall_seconds"}
    assert report["convention"] == "gemm-flops + trsm-multiply-adds"
    assert report["ortho_residual"] <= 1e-9


def test_whiten_flop_ratio(runner):
    mud = json.loads(invoke(runner, "whiten", "--op", "mud", "--rows", 64, "--cols", 256).stdout)
    muon = json.loads(invoke(runner, "whiten", "--op", "muon", "--rows", 64, "--cols", 256).stdout)
    assert mud["flops"] / muon["flops"] == pytest.approx(1.0 / 12.0, rel=0.1)


def test_whiten_cholqr_ill_conditioned_is_numerical_failure(runner):
    result = invoke(runner, "whiten", "--op", "cholqr", "--cond", "1e9", "--rows", 16, "--cols", 64)
    assert result.exit_code == 3
    assert "not SPD" in result.stderr


@pytest.mark.parametrize("args", [["--op", "svd"], ["--op", "polar2"], ["--rows", 0], ["--bogus"]])
def test_whiten_usage_errors(runner, args):
    assert invoke(runner, "whiten", *args).exit_code == 2


def test_whiten_writes_out_file(runner, tmp_path):
    target = tmp_path / "report.json"
    result = invoke(runner, "whiten", "--rows", 4, "--cols", 9, "--out", target)
    assert result.exit_code == 0 and result.stdout == ""
    assert json.loads(target.read_text())["op"] == "mud1"


# --- trace / sgs-check ------------------------------------------------------

def test_trace_two_by_two(runner):
    result = invoke(runner, "trace", "--dim", 2, "--seed", 4)
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "pass,linf,l1,fro"
    assert lines[2] == "1,0.0,0.0,0.0"
    assert len(lines) == 3


def test_trace_identity_start(runner):
    result = invoke(runner, "trace", "--eps0", 0)
    assert result.stdout.splitlines() == ["pass,linf,l1,fro", "0,0.0,0.0,0.0"]


def test_trace_slope_row(runner):
    result = invoke(runner, "trace", "--dim", 16, "--eps0", 0.003, "--seed", 2)
    rows = csv_rows(result.stdout)
    assert rows[-1]["pass"] == "slope"
    assert float(rows[-1]["linf"]) == pytest.approx(2.0, abs=0.3)


def test_sgs_check(runner):
    result = invoke(runner, "sgs-check", "--dim", 24, "--instances", 3)
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["passed"] is True and report["max_discrepancy"] <= 1e-8


def test_sgs_check_rejects_non_dominant_scale(runner):
    assert invoke(runner, "sgs-check", "--dim", 5, "--eps0", 0.5).exit_code == 2


# --- bench ------------------------------------------------------------------

def test_bench_rows(runner):
    result = invoke(runner, "bench", "--k", 16, "--d", 64, "--repeats", 3)
    assert result.exit_code == 0
    rows = csv_rows(result.stdout)
    assert [r["op"] for r in rows] == ["muon5", "mud1", "mud2"]
    assert int(rows[0]["flops"]) == 30 * 16 * 16 * 64


def test_bench_table(runner):
    rows = csv_rows(invoke(runner, "bench", "--table", "--k", 16, "--d", 64, "--op", "mud1", "--op", "muon5").stdout)
    assert [(r["method"], r["flops_per_k2d"]) for r in rows] == [("mud1", "2.5"), ("muon5", "30.0")]


@pytest.mark.parametrize("args", [["--repeats", 2], ["--k", 64, "--d", 16], ["--op", "qr"]])
def test_bench_usage_errors(runner, args):
    assert invoke(runner, "bench", "--k", 8, "--d", 32, *args).exit_code == 2


# --- train ------------------------------------------------------------------

def test_train_zero_steps_is_header_only(runner):
    result = invoke(runner, "train", "--steps", 0)
    assert result.exit_code == 0
    assert result.stdout == TRAIN_HEADER_LINE + "\n"


def test_train_output_is_byte_identical(runner, tmp_path):
    path = config_file(tmp_path, SMALL_RUN)
    first = invoke(runner, "train", "--config", path, "--no-wall-clock")
    second = invoke(runner, "train", "--config", path, "--no-wall-clock")
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    rows = csv_rows(first.stdout)
    assert len(rows) == 25 and float(rows[-1]["loss"]) < float(rows[0]["loss"])


def test_train_env_seed_matches_flag(runner, tmp_path):
    path = config_file(tmp_path, SMALL_RUN)
    by_flag = invoke(runner, "train", "--config", path, "--no-wall-clock", "--seed", 99)
    by_env = invoke(runner, "train", "--config", path, "--no-wall-clock", env={"MUDKIT_SEED": "99"})
    default = invoke(runner, "train", "--config", path, "--no-wall-clock")
    assert by_flag.stdout == by_env.stdout
    assert by_flag.stdout != default.stdout


def test_train_json_format(runner, tmp_path):
    path = config_file(tmp_path, {**SMALL_RUN, "steps": 3})
    payload = json.loads(invoke(runner, "train", "--config", path, "--format", "json").stdout)
    assert payload["optimizer"] == "mud1" and payload["status"] == "ok"
    assert len(payload["records"]) == 3


def test_train_divergence_exit_code(runner, tmp_path):
    path = config_file(tmp_path, {**SMALL_RUN, "schedule": {"lr": 1e300, "min_lr": 0.0, "warmup_steps": 0}})
    result = invoke(runner, "train", "--config", path)
    assert result.exit_code == 4
    assert result.stdout.startswith(TRAIN_HEADER_LINE)


@pytest.mark.parametrize("payload", [{"optimiser": "mud"}, {"optimizer": "adamw", "matrix_lr": 0.1}])
def test_train_bad_config_exit_code(runner, tmp_path, payload):
    result = invoke(runner, "train", "--config", config_file(tmp_path, payload))
    assert result.exit_code == 2
    assert "Error" in result.stderr


# --- compare ----------------------------------------------------------------

def test_compare_summary(runner, tmp_path):
    path = config_file(
        tmp_path,
        {"base": SMALL_RUN, "optimizers": ["adamw", "mud1"], "seeds": [1], "targets": [0.5]},
        "compare.json",
    )
    result = invoke(runner, "compare", "--config", path, "--workers", 2)
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert set(summary["optimizers"]) == {"adamw", "mud1"}
    assert summary["diverged"] == []
    row = summary["optimizers"]["mud1"]["targets"][0]
    assert set(row) == {"target", "reached", "steps", "seconds", "speedup_steps_vs_adamw", "speedup_seconds_vs_adamw"}


def test_compare_reports_divergence(runner, tmp_path):
    base = {**SMALL_RUN, "schedule": {"lr": 1e300, "min_lr": 0.0, "warmup_steps": 0}}
    path = config_file(tmp_path, {"base": base, "optimizers": ["mud1"], "seeds": [1]}, "compare.json")
    result = invoke(runner, "compare", "--config", path)
    assert result.exit_code == 4
    assert json.loads(result.stdout)["diverged"][0]["optimizer"] == "mud1"
