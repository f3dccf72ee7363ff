"""
FLOP and wall-time benchmarks of the whitening operators

The ledger of a single call gives the operation count; wall time is the
median over repeats after one discarded warmup call. Only the kernel is
timed, the residual check each report carries is outside the timer.
BLAS pools are held to one thread while a benchmark runs.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from humanfriendly import format_timespan
from threadpoolctl import threadpool_limits

from analysis.generators import SpectrumSpec, random_with_spectrum
from errors import ConfigError
from linalg.dense import Matrix
from whitening.operators import WhitenConfig, run_whiten
from utils.log import get_logger

logger = get_logger(__name__)

MIN_REPEATS = 3
BENCH_THREADS = 1
TABLE_OPS = ("muon5", "muon3", "mud1", "mud2", "mud3")


@dataclass(frozen=True)
class BenchRow:
    op: str
    k: int
    d: int
    flops: int
    wall_seconds: float
    flops_per_second: float

    def as_row(self) -> Dict:
        return {
            "op": self.op,
            "k": self.k,
            "d": self.d,
            "flops": self.flops,
            "wall_seconds": self.wall_seconds,
            "flops_per_second": self.flops_per_second,
        }


def bench(
    op_name: str,
    spec: SpectrumSpec,
    repeats: int = 5,
    seed: int = 0,
    matrix: Optional[Matrix] = None,
    base: Optional[WhitenConfig] = None,
) -> BenchRow:
    """
    Time one operator on a random instance

    Args:
        op_name: Operator name, e.g. "mud1" or "muon5"
        spec: Shape and spectrum of the input
        repeats: Timed calls, at least 3
        seed: Input seed
        matrix: Use this input instead of generating one from spec

    Returns:
        BenchRow with table-convention FLOPs and median wall time
    """
    if repeats < MIN_REPEATS:
        raise ConfigError(f"repeats must be >= {MIN_REPEATS}, got {repeats}")
    M = matrix if matrix is not None else random_with_spectrum(spec, seed)

    with threadpool_limits(limits=BENCH_THREADS):
        warmup = run_whiten(op_name, M, base)
        times = [run_whiten(op_name, M, base).wall_seconds for _ in range(repeats)]
    wall = float(np.median(times))
    flops = warmup.ledger.table_flops
    logger.info(f"⏱️ {warmup.op} k={warmup.k} d={warmup.d}: {format_timespan(wall, detailed=True)} median")
    return BenchRow(
        op=warmup.op,
        k=warmup.k,
        d=warmup.d,
        flops=flops,
        wall_seconds=wall,
        flops_per_second=flops / wall if wall > 0.0 else 0.0,
    )


def table_rows(k: int = 64, d: int = 256, ops: Sequence[str] = TABLE_OPS, seed: int = 0) -> List[Dict]:
    """
    Structural cost rows: Gram count, apply count, TRSM count and FLOPs / k^2 d

    Counts come from the ledger of one real call per operator.
    """
    M = random_with_spectrum(SpectrumSpec(k, d, condition_number=10.0), seed)
    rows = []
    for name in ops:
        report = run_whiten(name, M)
        ledger = report.ledger
        rows.append({
            "method": report.op,
            "grams": ledger.grams,
            "applies": ledger.applies,
            "trsm": ledger.trsms,
            "flops_per_k2d": round(ledger.per_k2d(report.k, report.d), 4),
        })
    return rows
