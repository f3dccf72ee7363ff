"""
Convergence-order tracing and eigenvalue clustering of the Gram map
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from linalg.dense import Matrix
from linalg.jacobi import jacobi_eig_sym, svd_thin
from utils.log import get_logger
from whitening.gram_space import GramTrace, gram_map

logger = get_logger(__name__)

STOP_DEVIATION = 1e-14
FIT_LOW = 1e-12
FIT_HIGH = 1e-1
MAX_PASSES = 8


def trace_convergence(G0: Matrix, max_passes: int = MAX_PASSES) -> GramTrace:
    """
    Iterate gram_map from G0, recording ||G_t - I|| after every pass

    Pass 0 is G0 itself. Stops once the Frobenius deviation drops below
    1e-14 or after max_passes applications.
    """
    trace = GramTrace()
    G = np.array(G0, dtype=np.float64, copy=True)
    norms = trace.record(0, G)
    for t in range(1, max_passes + 1):
        if norms["fro"] < STOP_DEVIATION:
            break
        G = gram_map(G)
        norms = trace.record(t, G)
    logger.debug(f"📉 {len(trace.passes) - 1} gram-map passes, final fro deviation {norms['fro']:.3e}")
    return trace


def fit_convergence_order(
    trace: GramTrace, norm: str = "linf", low: float = FIT_LOW, high: float = FIT_HIGH
) -> Optional[float]:
    """
    Estimated order q in E_{t+1} ~ C E_t^q

    Only consecutive pairs with both deviations in [low, high] are used.
    Two or more pairs give the least-squares slope of log E_{t+1} on
    log E_t; a single pair gives log E_{t+1} / log E_t. None when no
    pair qualifies.
    """
    series = trace.series(norm)
    xs, ys = [], []
    for before, after in zip(series, series[1:]):
        if low <= before <= high and low <= after <= high:
            xs.append(np.log(before))
            ys.append(np.log(after))
    if not xs:
        return None
    if len(xs) == 1:
        return float(ys[0] / xs[0])
    slope, _ = np.polyfit(np.array(xs), np.array(ys), 1)
    return float(slope)


@dataclass(frozen=True)
class ClusterBound:
    """Where the spectrum of G1 = gram_map(G0) sits relative to 1"""

    r: float  # ||G1 - I||_2
    eigen_min: float
    eigen_max: float
    enclosed: bool
    kappa: float
    kappa_bound: float

    @property
    def holds(self) -> bool:
        return self.enclosed and self.kappa <= self.kappa_bound * (1.0 + 1e-12)


def cluster_bound(G0: Matrix, slack: float = 1e-12) -> ClusterBound:
    """
    Check that sigma(G1) lies in [1 - r, 1 + r] and kappa(G1) <= (1 + r) / (1 - r)

    r is the spectral norm of G1 - I taken from its singular values, so
    the enclosure is checked against an independent measurement.
    """
    G1 = gram_map(G0)
    spectrum = jacobi_eig_sym(G1)
    _, sigma, _ = svd_thin(G1 - np.eye(G1.shape[0]))
    r = float(sigma[0])
    enclosed = spectrum.min >= 1.0 - r - slack and spectrum.max <= 1.0 + r + slack
    kappa_bound = (1.0 + r) / (1.0 - r) if r < 1.0 else float("inf")
    return ClusterBound(
        r=r,
        eigen_min=spectrum.min,
        eigen_max=spectrum.max,
        enclosed=enclosed,
        kappa=spectrum.condition_number,
        kappa_bound=kappa_bound,
    )
