import numpy as np
import pytest
from threadpoolctl import threadpool_info

import analysis.bench as bench_module
from analysis.bench import bench, table_rows
from analysis.compare import compare_runs, moving_average_rises, rolling_mean, run_config_for, steps_to_target
from analysis.convergence import cluster_bound, fit_convergence_order, trace_convergence
from analysis.generators import (
    SpectrumSpec,
    random_row_orthonormal,
    random_unit_diag_spd,
    random_with_spectrum,
)
from errors import ConfigError
from linalg.jacobi import jacobi_eig_sym, svd_thin
from run_config import CompareConfig, TrainConfig
from whitening.gram_space import GramTrace, deviation_norms
from whitening.operators import ortho_residual


# --- generators -------------------------------------------------------------

def test_unit_spectrum_gives_orthonormal_rows():
    M = random_with_spectrum(SpectrumSpec(6, 20, singular_values=(1.0,) * 6), seed=3)
    assert ortho_residual(M) <= 1e-9


def test_condition_number_is_recovered():
    M = random_with_spectrum(SpectrumSpec(16, 48, condition_number=1e4), seed=11)
    _, sigma, _ = svd_thin(M)
    assert sigma[0] / sigma[-1] == pytest.approx(1e4, rel=0.01)


def test_explicit_singular_values_are_recovered():
    values = (5.0, 2.0, 0.5, 0.1)
    _, sigma, _ = svd_thin(random_with_spectrum(SpectrumSpec(4, 9, singular_values=values), seed=2))
    np.testing.assert_allclose(sigma, values, atol=1e-8)


def test_generators_repeat_with_seed():
    spec = SpectrumSpec(5, 12, condition_number=10.0)
    np.testing.assert_array_equal(random_with_spectrum(spec, 7), random_with_spectrum(spec, 7))
    assert not np.array_equal(random_with_spectrum(spec, 7), random_with_spectrum(spec, 8))
    np.testing.assert_array_equal(random_row_orthonormal(3, 8, 1), random_row_orthonormal(3, 8, 1))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dim_k=5, dim_d=3, condition_number=2.0),
        dict(dim_k=2, dim_d=3),
        dict(dim_k=2, dim_d=3, condition_number=2.0, singular_values=(1.0, 1.0)),
        dict(dim_k=2, dim_d=3, singular_values=(1.0, 2.0)),
        dict(dim_k=2, dim_d=3, condition_number=0.5),
    ],
)
def test_spectrum_spec_rejects(kwargs):
    with pytest.raises(ConfigError):
        SpectrumSpec(**kwargs)


def test_unit_diag_spd_zero_scale_is_identity():
    np.testing.assert_array_equal(random_unit_diag_spd(7, 0.0, 1), np.eye(7))


def test_unit_diag_spd_two_by_two_eigenvalues():
    G = random_unit_diag_spd(2, 0.3, 5)
    e = abs(G[0, 1])
    np.testing.assert_allclose(jacobi_eig_sym(G).eigenvalues, [1.0 - e, 1.0 + e], atol=1e-14)


@pytest.mark.parametrize("k,eps0", [(8, 0.1), (32, 0.02)])
def test_unit_diag_spd_structure(k, eps0):
    G = random_unit_diag_spd(k, eps0, 9)
    E = G - np.eye(k)
    np.testing.assert_array_equal(np.diagonal(G), np.ones(k))
    np.testing.assert_array_equal(E, E.T)
    assert np.abs(E).max() <= eps0
    assert deviation_norms(G)["linf"] <= (k - 1) * eps0


def test_unit_diag_spd_rejects_non_dominant_scale():
    with pytest.raises(ConfigError):
        random_unit_diag_spd(5, 0.25, 0)
    with pytest.raises(ConfigError):
        random_unit_diag_spd(5, 0.1, 0, linf=1.5)


# --- convergence ------------------------------------------------------------

def test_trace_of_identity_is_one_row():
    rows = trace_convergence(np.eye(5)).rows()
    assert rows == [{"pass": 0, "linf": 0.0, "l1": 0.0, "fro": 0.0}]


def test_trace_two_by_two_vanishes_after_one_pass():
    rows = trace_convergence(np.array([[1.0, 0.7], [0.7, 1.0]])).rows()
    assert len(rows) == 2
    assert rows[1]["linf"] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_trace_contracts_quadratically(seed):
    G0 = random_unit_diag_spd(16, 0.01, seed, linf=0.05)
    trace = trace_convergence(G0)
    series = trace.series("linf")
    for before, after in zip(series, series[1:]):
        assert after <= 6.0 * before ** 2 + 1e-13
    slope = fit_convergence_order(trace, "linf")
    assert slope == pytest.approx(2.0, abs=0.3)


def test_fit_rules():
    trace = GramTrace()
    assert fit_convergence_order(trace) is None
    for t, value in enumerate([1e-2, 1e-4]):
        trace.record(t, np.array([[1.0, value], [value, 1.0]]))
    assert fit_convergence_order(trace, "linf") == pytest.approx(2.0)
    trace.record(2, np.array([[1.0, 1e-8], [1e-8, 1.0]]))
    assert fit_convergence_order(trace, "linf") == pytest.approx(2.0)


def test_fit_ignores_points_outside_window():
    trace = GramTrace()
    for t, value in enumerate([0.5, 1e-3]):
        trace.record(t, np.array([[1.0, value], [value, 1.0]]))
    assert fit_convergence_order(trace, "linf") is None


@pytest.mark.parametrize("seed", range(4))
def test_cluster_bound_holds(seed):
    bound = cluster_bound(random_unit_diag_spd(16, 0.01, seed, linf=0.05))
    assert bound.holds
    assert bound.r < 1.0
    assert bound.r <= 6.0 * 0.05 ** 2 * 16


# --- bench ------------------------------------------------------------------

def test_bench_ledger_ratios():
    spec = SpectrumSpec(64, 256, condition_number=10.0)
    M = random_with_spectrum(spec, 0)
    rows = {name: bench(name, spec, repeats=3, matrix=M) for name in ("muon5", "mud1", "mud2")}
    assert rows["muon5"].flops / rows["mud1"].flops == pytest.approx(12.0, rel=0.1)
    assert rows["mud2"].flops / rows["mud1"].flops == pytest.approx(2.0, rel=0.05)
    assert rows["mud1"].op == "mud1" and (rows["mud1"].k, rows["mud1"].d) == (64, 256)
    assert set(rows["mud1"].as_row()) == {"op", "k", "d", "flops", "wall_seconds", "flops_per_second"}


def test_bench_requires_three_repeats():
    with pytest.raises(ConfigError):
        bench("mud1", SpectrumSpec(4, 8, condition_number=2.0), repeats=2)


def test_bench_holds_blas_to_one_thread(monkeypatch):
    requested, active, threads, calls = [], [], [], []
    real_limits, real_run = bench_module.threadpool_limits, bench_module.run_whiten

    class RecordingLimits:
        def __init__(self, limits=None):
            self.inner = real_limits(limits=limits)
            requested.append(limits)

        def __enter__(self):
            active.append(True)
            return self.inner.__enter__()

        def __exit__(self, *exc):
            active.pop()
            return self.inner.__exit__(*exc)

    def run_inside_limit(*args, **kwargs):
        assert active
        threads.extend(info["num_threads"] for info in threadpool_info())
        calls.append(args[0])
        return real_run(*args, **kwargs)

    monkeypatch.setattr(bench_module, "threadpool_limits", RecordingLimits)
    monkeypatch.setattr(bench_module, "run_whiten", run_inside_limit)
    bench("mud1", SpectrumSpec(8, 32, condition_number=4.0), repeats=3)

    assert requested == [1]
    assert calls == ["mud1"] * 4
    assert all(n == 1 for n in threads)
    assert not active


def test_table_rows_match_cost_model():
    rows = {row["method"]: row for row in table_rows(16, 64)}
    assert rows["muon5"] == {"method": "muon5", "grams": 5, "applies": 10, "trsm": 0, "flops_per_k2d": 30.0}
    assert rows["mud1"] == {"method": "mud1", "grams": 1, "applies": 0, "trsm": 1, "flops_per_k2d": 2.5}
    assert rows["mud2"]["flops_per_k2d"] == 5.0
    assert rows["muon3"]["flops_per_k2d"] == 18.0


@pytest.mark.slow
def test_mud1_is_faster_than_muon5():
    spec = SpectrumSpec(256, 1024, condition_number=10.0)
    M = random_with_spectrum(spec, 0)
    mud = bench("mud1", spec, repeats=5, matrix=M)
    muon = bench("muon5", spec, repeats=5, matrix=M)
    assert mud.wall_seconds < muon.wall_seconds


@pytest.mark.slow
def test_bench_medians_are_stable():
    spec = SpectrumSpec(256, 1024, condition_number=10.0)
    M = random_with_spectrum(spec, 0)
    first = bench("mud1", spec, repeats=5, matrix=M).wall_seconds
    second = bench("mud1", spec, repeats=5, matrix=M).wall_seconds
    assert abs(first - second) < 0.25 * min(first, second)


# --- compare ----------------------------------------------------------------

def test_rolling_mean_is_trailing():
    np.testing.assert_allclose(rolling_mean([1.0, 2.0, 3.0, 4.0], window=2), [1.0, 1.5, 2.5, 3.5])
    np.testing.assert_allclose(rolling_mean([3.0, 1.0], window=7), [3.0, 2.0])
    assert rolling_mean([], window=3).size == 0


def test_steps_to_target():
    assert steps_to_target([5.0, 3.0, 1.0, 0.5], 1.0) == 2
    assert steps_to_target([5.0, 3.0], 1.0) is None


def test_moving_average_rises():
    assert moving_average_rises([4.0, 3.0, 2.0, 1.0], window=2) == []
    assert moving_average_rises([4.0, 3.0, 5.0, 6.0, 1.0], window=2) == [0, 1]
    assert moving_average_rises([1.0, 2.0], window=2) == []
    with pytest.raises(ConfigError):
        moving_average_rises([1.0, 2.0, 3.0], window=0)


def test_moving_average_rises_ignores_noise_floor():
    descent = [100.0 * 0.5 ** t for t in range(12)]
    wobble = [1e-4, 3e-4] * 10
    assert moving_average_rises(descent + wobble, window=1, floor_ratio=1e-2) == []
    assert moving_average_rises(descent + wobble, window=1, floor_ratio=0.0) != []


def test_run_config_for_suffixes():
    base = TrainConfig(steps=10)
    cfg = run_config_for(base, "mud2", 5)
    assert (cfg.optimizer, cfg.mud_passes, cfg.seed, cfg.steps) == ("mud", 2, 5, 10)
    assert run_config_for(base, "muon3", 1).ns_iters == 3
    with pytest.raises(ConfigError):
        run_config_for(base, "sgd", 1)


def test_compare_small_run():
    cfg = CompareConfig(
        base=TrainConfig(steps=60, rows=8, cols=8, batch=32, schedule={"lr": 0.02, "min_lr": 0.002, "warmup_steps": 5}),
        optimizers=["adamw", "mud1"],
        seeds=[1, 2],
        targets=[0.5],
        workers=2,
    )
    summary = compare_runs(cfg)
    assert summary["diverged"] == []
    assert set(summary["optimizers"]) == {"adamw", "mud1"}
    adamw = summary["optimizers"]["adamw"]
    assert [run["seed"] for run in adamw["runs"]] == [1, 2]
    assert all(isinstance(run["held_out_rises"], int) for run in adamw["runs"])
    row = summary["optimizers"]["mud1"]["targets"][0]
    assert row["target"] == 0.5 and row["reached"] == 2
    assert row["speedup_steps_vs_adamw"] is not None
    assert adamw["targets"][0]["speedup_steps_vs_adamw"] == pytest.approx(1.0)
