"""
Training loop over the synthetic tasks
"""

import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Union

import numpy as np
from humanfriendly import format_timespan
from tqdm import tqdm

from errors import NonFiniteError
from harness.tasks import MatRegTask, MLPTask, task_matreg, task_mlp
from optim.optimizers import build_optimizer
from optim.schedule import Schedule, clip_global_norm, global_norm, lr_at
from run_config import TrainConfig, validate_run_config
from utils.log import get_logger

logger = get_logger(__name__)

STATUS_OK = "ok"
STATUS_DIVERGED = "diverged"


@dataclass
class TrainRecord:
    step: int
    loss: float
    lr: float
    grad_norm_preclip: float
    elapsed_seconds: float


@dataclass
class TrainRun:
    """
    Records of one run; a diverged run keeps the records before the bad step

    held_out_losses runs parallel to records: the loss at the same
    parameters on data that never drives an update.
    """

    optimizer: str
    records: List[TrainRecord] = field(default_factory=list)
    status: str = STATUS_OK
    stopped_at: Optional[int] = None
    seconds: float = 0.0
    held_out_losses: List[float] = field(default_factory=list)

    @property
    def diverged(self) -> bool:
        return self.status == STATUS_DIVERGED

    @property
    def losses(self) -> List[float]:
        return [r.loss for r in self.records]

    def to_dict(self):
        return {
            "optimizer": self.optimizer,
            "status": self.status,
            "stopped_at": self.stopped_at,
            "records": [asdict(r) for r in self.records],
            "held_out_losses": list(self.held_out_losses),
        }


def build_task(cfg: TrainConfig) -> Union[MatRegTask, MLPTask]:
    if cfg.task == "matreg":
        return task_matreg(cfg.seed, n=cfg.rows, m=cfg.cols, batch=cfg.batch)
    return task_mlp(cfg.seed, inputs=cfg.inputs, hidden=cfg.hidden, classes=cfg.classes, batch=cfg.batch)


def _schedule(cfg: TrainConfig) -> Schedule:
    warmup = cfg.schedule.warmup_steps
    if warmup >= cfg.steps:
        logger.warning(f"⚠️ warmup_steps {warmup} >= steps {cfg.steps}, shortening warmup to {cfg.steps - 1}")
        warmup = cfg.steps - 1
    return Schedule(
        peak_lr=cfg.schedule.lr,
        min_lr=cfg.schedule.min_lr,
        warmup_steps=warmup,
        total_steps=cfg.steps,
    )


def optimizer_label(cfg: TrainConfig) -> str:
    if cfg.optimizer == "mud":
        return f"mud{cfg.mud_passes}"
    if cfg.optimizer == "muon":
        return f"muon{cfg.ns_iters}"
    return cfg.optimizer


def train(cfg: TrainConfig, progress: bool = False) -> TrainRun:
    """
    Run one training job

    Per step: sample a batch, evaluate loss, gradients and the held-out
    loss, clip, look up the scheduled lr, step the optimizer and append a
    record. A non-finite loss or gradient stops the run with status
    "diverged".

    Args:
        cfg: Validated training config
        progress: Show a tqdm bar on stderr

    Returns:
        TrainRun with the records produced
    """
    validate_run_config(cfg)
    run = TrainRun(optimizer=optimizer_label(cfg))
    if cfg.steps == 0:
        return run

    task = build_task(cfg)
    params = task.init_params()
    optimizer = build_optimizer(
        cfg.optimizer,
        params,
        lr=cfg.schedule.lr,
        weight_decay=cfg.weight_decay,
        adam_betas=cfg.betas,
        beta_momentum=cfg.beta_momentum,
        eps=cfg.eps,
        mud_passes=cfg.mud_passes,
        ns_iters=cfg.ns_iters,
        deny_prefixes=cfg.deny_prefixes,
        matrix_lr=cfg.matrix_lr,
    )
    schedule = _schedule(cfg)

    logger.info(f"🔄 training {run.optimizer} on {cfg.task} for {cfg.steps} steps (seed {cfg.seed})")
    started = time.perf_counter()
    steps = tqdm(range(cfg.steps), disable=not progress, file=sys.stderr, desc=run.optimizer, leave=False)
    for step in steps:
        batch = task.sample_batch()
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = task.loss_and_grad(params, batch)
            held_out = task.held_out_loss(params)
            pre_clip = global_norm(grads)
        if not (math.isfinite(loss) and math.isfinite(pre_clip)):
            run.status = STATUS_DIVERGED
            run.stopped_at = step
            logger.warning(f"⚠️ {run.optimizer} diverged at step {step} (loss {loss})")
            break
        if cfg.clip > 0.0:
            grads = clip_global_norm(grads, cfg.clip)
        lr = lr_at(schedule, step)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                optimizer.step(params, grads, lr)
        except NonFiniteError:
            run.status = STATUS_DIVERGED
            run.stopped_at = step
            logger.warning(f"⚠️ {run.optimizer} update became non-finite at step {step}")
            break
        elapsed = time.perf_counter() - started if cfg.wall_clock else 0.0
        run.records.append(TrainRecord(step, loss, lr, pre_clip, elapsed))
        run.held_out_losses.append(held_out)

    run.seconds = time.perf_counter() - started
    if not run.diverged:
        run.stopped_at = cfg.steps
        final = run.records[-1].loss
        logger.info(
            f"✅ {run.optimizer} took {optimizer.step_count} steps in {format_timespan(run.seconds)}: "
            f"loss {run.records[0].loss:.4g} -> {final:.4g}"
        )
    return run
