"""
Optimizer comparison: steps and seconds to reach target losses
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError
from harness.trainer import TrainRun, train
from run_config import CompareConfig, TrainConfig, split_optimizer_name
from utils.log import get_logger

logger = get_logger(__name__)

BASELINE = "adamw"


def rolling_mean(values: Sequence[float], window: int = 7) -> np.ndarray:
    """Trailing mean; the first window-1 entries average what is available"""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        return x
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def moving_average_rises(values: Sequence[float], window: int = 50, floor_ratio: float = 1e-2) -> List[int]:
    """
    Window starts where the full-window moving average goes up

    A rise only counts while the average it rises from is above
    floor_ratio times the first average; below that the run sits at its
    noise floor.

    Returns:
        Indices i with avg[i + 1] > avg[i], empty when the series is shorter
        than window + 1
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    x = np.asarray(values, dtype=np.float64)
    if x.size <= window:
        return []
    avg = np.convolve(x, np.ones(window) / window, mode="valid")
    floor = floor_ratio * avg[0]
    rising = (np.diff(avg) > 0.0) & (avg[:-1] > floor)
    return [int(i) for i in np.flatnonzero(rising)]


def steps_to_target(losses: Sequence[float], target: float) -> Optional[int]:
    """First index at or below target, None if never reached"""
    hits = np.flatnonzero(np.asarray(losses, dtype=np.float64) <= target)
    return int(hits[0]) if hits.size else None


def run_config_for(base: TrainConfig, name: str, seed: int) -> TrainConfig:
    family, count = split_optimizer_name(name)
    update = {"optimizer": family, "seed": seed}
    if family == "mud" and count:
        update["mud_passes"] = count
    if family == "muon" and count:
        update["ns_iters"] = count
    return TrainConfig(**{**base.model_dump(), **update})


def _summarize_run(run: TrainRun, seed: int, targets: List[float], mode: str, window: int) -> Dict:
    smooth = rolling_mean(run.losses, window)
    result = {
        "seed": seed,
        "status": run.status,
        "stopped_at": run.stopped_at,
        "final_loss": float(run.losses[-1]) if run.records else None,
        "held_out_rises": len(moving_average_rises(run.held_out_losses)),
        "hits": [],
    }
    if not run.records:
        result["hits"] = [{"target": t, "loss": None, "steps": None, "seconds": None} for t in targets]
        return result
    reference = float(smooth[0])
    for t in targets:
        level = t * reference if mode == "relative" else t
        idx = steps_to_target(smooth, level)
        result["hits"].append({
            "target": t,
            "loss": level,
            "steps": idx,
            "seconds": run.records[idx].elapsed_seconds if idx is not None else None,
        })
    return result


def _stats(values: List[Optional[float]]) -> Dict:
    reached = [v for v in values if v is not None]
    if len(reached) < len(values) or not reached:
        return {"mean": None, "min": None, "max": None}
    return {"mean": float(np.mean(reached)), "min": float(np.min(reached)), "max": float(np.max(reached))}


def compare_runs(cfg: CompareConfig) -> Dict:
    """
    Train every optimizer on every seed and summarize target crossings

    Losses are smoothed with a trailing rolling mean before the crossing
    is located. Relative targets are fractions of the first smoothed loss.
    Speedups are baseline mean seconds (or steps) over the optimizer's.

    Returns:
        JSON-ready summary; "diverged" lists runs that stopped early
    """
    jobs: List[Tuple[str, int, TrainConfig]] = [
        (name, seed, run_config_for(cfg.base, name, seed)) for name in cfg.optimizers for seed in cfg.seeds
    ]
    logger.info(f"🔄 comparing {len(cfg.optimizers)} optimizers x {len(cfg.seeds)} seeds on {cfg.workers} worker(s)")
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        runs = list(pool.map(lambda job: train(job[2]), jobs))

    per_optimizer: Dict[str, Dict] = {}
    diverged = []
    for (name, seed, _), run in zip(jobs, runs):
        entry = per_optimizer.setdefault(name, {"runs": [], "targets": []})
        entry["runs"].append(_summarize_run(run, seed, cfg.targets, cfg.target_mode, cfg.smooth_window))
        if run.diverged:
            diverged.append({"optimizer": name, "seed": seed, "step": run.stopped_at})

    for name, entry in per_optimizer.items():
        for i, t in enumerate(cfg.targets):
            hits = [r["hits"][i] for r in entry["runs"]]
            entry["targets"].append({
                "target": t,
                "reached": sum(h["steps"] is not None for h in hits),
                "steps": _stats([h["steps"] for h in hits]),
                "seconds": _stats([h["seconds"] for h in hits]),
            })

    baseline = per_optimizer.get(BASELINE)
    for name, entry in per_optimizer.items():
        for i, row in enumerate(entry["targets"]):
            row["speedup_steps_vs_adamw"] = None
            row["speedup_seconds_vs_adamw"] = None
            if baseline is None:
                continue
            base_row = baseline["targets"][i]
            for kind in ("steps", "seconds"):
                ours, theirs = row[kind]["mean"], base_row[kind]["mean"]
                if ours and theirs:
                    row[f"speedup_{kind}_vs_adamw"] = theirs / ours

    return {
        "task": cfg.base.task,
        "steps": cfg.base.steps,
        "seeds": list(cfg.seeds),
        "target_mode": cfg.target_mode,
        "smooth_window": cfg.smooth_window,
        "optimizers": per_optimizer,
        "diverged": diverged,
    }
