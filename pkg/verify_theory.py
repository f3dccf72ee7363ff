#!/usr/bin/env python3
"""
Acceptance script: runs the headline properties of mudkit end to end
and reports each one as PASSED / FAILED.

Usage:
    python verify_theory.py            # everything
    python verify_theory.py --quick    # skip the wall-clock and training checks
"""
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "backend"))

import numpy as np  # noqa: E402

from analysis.bench import bench  # noqa: E402
from analysis.convergence import cluster_bound, fit_convergence_order, trace_convergence  # noqa: E402
from analysis.generators import (  # noqa: E402
    SpectrumSpec,
    random_row_orthonormal,
    random_unit_diag_spd,
    random_with_spectrum,
)
from analysis.compare import moving_average_rises, rolling_mean  # noqa: E402
from harness.gradcheck import fd_gradient_check  # noqa: E402
from harness.rng import SplitMix64  # noqa: E402
from harness.tasks import task_matreg, task_mlp  # noqa: E402
from harness.trainer import train  # noqa: E402
from optim.optimizers import OptimizerState, ParamGroup, adamw_step  # noqa: E402
from run_config import TrainConfig  # noqa: E402
from whitening.gram_space import gram_map, sgs_preconditioned_spectrum, spectrum_discrepancy  # noqa: E402
from whitening.operators import NS_COEFFS, WhitenConfig, cholqr_whiten, mud_whiten, muon_ns, polar_exact  # noqa: E402


def header(number, title):
    print("\n" + "=" * 60)
    print(f"TEST {number}: {title}")
    print("=" * 60)


def report(ok, detail, started):
    took = time.perf_counter() - started
    if ok:
        print(f"✅ PASSED: {detail} ({took:.1f}s)")
    else:
        print(f"❌ FAILED: {detail} ({took:.1f}s)")
    return ok


def verify_fixed_point():
    header(1, "Orthonormal rows are a fixed point of MUD")
    started = time.perf_counter()
    worst = 0.0
    shapes = [(4, 8), (32, 128), (128, 512)]
    for i in range(50):
        k, d = shapes[i % 3]
        Q = random_row_orthonormal(k, d, seed=i)
        for p in (1, 2, 3):
            gap = np.linalg.norm(mud_whiten(Q, WhitenConfig(passes=p)).output - Q) / np.sqrt(k)
            worst = max(worst, gap)
    return report(worst <= 1e-10, f"max ||MUD(Q) - Q||_F / sqrt(k) = {worst:.2e}", started)


def verify_quadratic_convergence():
    header(2, "Quadratic contraction of the Gram map")
    started = time.perf_counter()
    rng = SplitMix64(2)
    levels = np.exp(rng.uniform_range(np.log(1e-4), np.log(0.05), 100))
    bad_steps, slopes = 0, []
    for i, level in enumerate(levels):
        trace = trace_convergence(random_unit_diag_spd(16, 0.01, seed=i, linf=float(level)))
        series = trace.series("linf")
        bad_steps += sum(after > 6.0 * before ** 2 + 1e-13 for before, after in zip(series, series[1:]))
        slope = fit_convergence_order(trace, "linf")
        if slope is not None:
            slopes.append(slope)
    off = [s for s in slopes if abs(s - 2.0) > 0.3]
    ok = bad_steps == 0 and not off and bool(slopes)
    return report(ok, f"{bad_steps} steps above 6 E^2, {len(off)}/{len(slopes)} slopes outside 2 +- 0.3", started)


def verify_two_by_two():
    header(3, "2x2 Gram map is exact in one pass")
    started = time.perf_counter()
    worst = max(
        np.abs(gram_map(np.array([[1.0, rho], [rho, 1.0]])) - np.eye(2)).max()
        for rho in (0.1, -0.1, 0.5, -0.5, 0.9, -0.9)
    )
    return report(worst <= 1e-12, f"max |G1 - I| = {worst:.2e}", started)


def verify_sgs():
    header(4, "Congruence spectrum equals SGS-preconditioned spectrum")
    started = time.perf_counter()
    worst = 0.0
    for i in range(100):
        k = (4, 16, 64)[i % 3]
        G = random_unit_diag_spd(k, 0.9 / (k - 1), seed=500 + i)
        worst = max(worst, spectrum_discrepancy(*sgs_preconditioned_spectrum(G)))
    return report(worst <= 1e-8, f"max sorted-spectrum discrepancy {worst:.2e}", started)


def verify_clustering():
    header(5, "Eigenvalues of G1 cluster around 1")
    started = time.perf_counter()
    failures = 0
    for i, level in enumerate(np.geomspace(1e-4, 0.05, 20)):
        bound = cluster_bound(random_unit_diag_spd(16, 0.01, seed=i, linf=float(level)))
        if not bound.holds or bound.r > 6.0 * level ** 2 * 16:
            failures += 1
    return report(failures == 0, f"{failures}/20 instances outside [1 - r, 1 + r] or above the bound", started)


def verify_flop_model():
    header(6, "FLOP ledger ratios")
    started = time.perf_counter()
    ok = True
    for k, d in ((256, 1024), (512, 2048)):
        M = random_with_spectrum(SpectrumSpec(k, d, condition_number=10.0), k)
        mud1 = mud_whiten(M).ledger.table_flops
        mud2 = mud_whiten(M, WhitenConfig(passes=2)).ledger.table_flops
        muon5 = muon_ns(M).ledger.table_flops
        r1, r2 = muon5 / mud1, mud2 / mud1
        print(f"   k={k} d={d}: muon5/mud1 = {r1:.2f}, mud2/mud1 = {r2:.2f}")
        ok = ok and abs(r1 - 12.0) <= 1.2 and abs(r2 - 2.0) <= 0.1
    return report(ok, "ratios 12 +- 1.2 and 2 +- 0.1", started)


def verify_wall_ordering():
    header(7, "MUD1 runs faster than Muon5")
    started = time.perf_counter()
    spec = SpectrumSpec(256, 1024, condition_number=10.0)
    M = random_with_spectrum(spec, 0)
    mud = bench("mud1", spec, repeats=5, matrix=M)
    muon = bench("muon5", spec, repeats=5, matrix=M)
    return report(
        mud.wall_seconds < muon.wall_seconds,
        f"median mud1 {mud.wall_seconds * 1e3:.1f} ms vs muon5 {muon.wall_seconds * 1e3:.1f} ms",
        started,
    )


def verify_transport():
    header(8, "Newton-Schulz keeps singular vectors")
    started = time.perf_counter()
    a, b, c = NS_COEFFS
    worst = 0.0
    for i in range(20):
        rng = SplitMix64(100 + i)
        U = random_row_orthonormal(8, 8, seed=200 + i)
        Vt = random_row_orthonormal(8, 24, seed=300 + i)
        sigma = np.sort(rng.uniform_range(0.05, 3.0, 8))[::-1]
        x = sigma / (np.linalg.norm(sigma) + 1e-8)
        for _ in range(5):
            x = a * x + b * x ** 3 + c * x ** 5
        worst = max(worst, np.abs(muon_ns((U * sigma) @ Vt).output - (U * x) @ Vt).max())
    return report(worst <= 1e-8, f"max entry gap {worst:.2e}", started)


def verify_polar_optimality():
    header(9, "Polar factor is the closest isometry")
    started = time.perf_counter()
    losses = 0
    for i in range(20):
        M = SplitMix64(40 + i).normal((8, 32))
        best = np.linalg.norm(M - polar_exact(M).output)
        rivals = [cholqr_whiten(M).output] + [random_row_orthonormal(8, 32, seed=1000 * i + j) for j in range(20)]
        losses += sum(best > np.linalg.norm(M - R) + 1e-12 for R in rivals)
    return report(losses == 0, f"{losses} candidates closer than the polar factor", started)


def verify_gradients():
    header(10, "Analytic gradients match central differences")
    started = time.perf_counter()
    matreg = task_matreg(3, n=6, m=5, batch=16)
    err_matreg = fd_gradient_check(matreg.evaluator(matreg.sample_batch()), {"W": SplitMix64(9).normal((6, 5))})
    mlp = task_mlp(3, inputs=6, hidden=7, classes=3, batch=12)
    err_mlp = fd_gradient_check(mlp.evaluator(mlp.sample_batch()), mlp.init_params(), coords=200)
    return report(
        err_matreg <= 1e-6 and err_mlp <= 1e-4,
        f"matreg {err_matreg:.2e}, mlp {err_mlp:.2e}",
        started,
    )


def verify_training():
    header(11, "Training sanity on matreg 32x32")
    started = time.perf_counter()
    ok = True
    for name in ("adamw", "muon", "mud"):
        cfg = TrainConfig(optimizer=name, wall_clock=False)
        run = train(cfg)
        smooth = rolling_mean(run.losses, 7)
        reached = not run.diverged and smooth[-1] <= 1e-2 * smooth[0]
        rises = moving_average_rises(run.held_out_losses, window=50)
        repeat = train(cfg).to_dict() == run.to_dict()
        print(f"   {name}: {smooth[0]:.3e} -> {smooth[-1]:.3e}, held-out rises={len(rises)}, repeatable={repeat}")
        ok = ok and reached and not rises and repeat
    return report(ok, "all optimizers reach 1% of the initial loss with a falling held-out average, bit-identical reruns", started)


def verify_adamw_units():
    header(12, "AdamW three-step scalar run")
    started = time.perf_counter()
    lr, b1, b2, eps, wd = 1e-2, 0.9, 0.95, 1e-8, 1e-2
    theta, m, v = 0.7, 0.0, 0.0
    grads = [0.5, -0.25, 2.0]
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta = theta * (1 - lr * wd) - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)

    params, state = {"w": np.array([0.7])}, OptimizerState()
    group = ParamGroup(names=["w"], lr=lr, weight_decay=wd, adam_betas=(b1, b2), eps=eps)
    for g in grads:
        adamw_step(group, params, {"w": np.array([g])}, state, lr)
    gap = abs(params["w"][0] - theta)
    return report(gap <= 1e-14, f"|theta - oracle| = {gap:.2e}", started)


def main():
    quick = "--quick" in sys.argv[1:]
    print("\n🔍 MUDKIT THEORY VERIFICATION")
    print("=" * 60)

    checks = [
        verify_fixed_point,
        verify_quadratic_convergence,
        verify_two_by_two,
        verify_sgs,
        verify_clustering,
        verify_flop_model,
        verify_transport,
        verify_polar_optimality,
        verify_gradients,
        verify_adamw_units,
    ]
    if not quick:
        checks += [verify_wall_ordering, verify_training]

    results = [check() for check in checks]

    print("\n" + "=" * 60)
    print("FINAL RESULT")
    print("=" * 60)
    if all(results):
        print(f"✅ ALL {len(results)} CHECKS PASSED")
        return 0
    print(f"❌ {results.count(False)} OF {len(results)} CHECKS FAILED")
    return 1


if __name__ == "__main__":
    sys.exit(main())
