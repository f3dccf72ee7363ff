"""
Central-difference gradient check
"""

from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from errors import ConfigError
from harness.rng import SplitMix64
from utils.log import get_logger

logger = get_logger(__name__)

MIN_COORDS = 64
RELATIVE_FLOOR = 1e-4  # denominator floor so near-zero gradient entries compare absolutely

Evaluator = Callable[[Dict[str, np.ndarray]], Tuple[float, Mapping[str, np.ndarray]]]


def fd_gradient_check(
    evaluator: Evaluator,
    point: Mapping[str, np.ndarray],
    h: float = 1e-5,
    coords: int = MIN_COORDS,
    seed: int = 0,
    floor: float = RELATIVE_FLOOR,
) -> float:
    """
    Max relative error between analytic and central-difference gradients

    Coordinates are drawn at random over all parameters together; every
    coordinate is checked when there are no more than `coords` of them.
    The relative error per coordinate is |a - n| / max(|a|, |n|, floor).

    Args:
        evaluator: f(params) -> (loss, grads)
        point: Parameters to check at (left untouched)
        h: Step, within [1e-7, 1e-3]
        coords: Number of coordinates to sample, at least 64
        seed: Seed for the coordinate subset

    Returns:
        The largest relative error over the checked coordinates
    """
    if not 1e-7 <= h <= 1e-3:
        raise ConfigError(f"h must lie in [1e-7, 1e-3], got {h}")
    coords = max(int(coords), MIN_COORDS)

    params = {name: np.array(value, dtype=np.float64, copy=True) for name, value in point.items()}
    _, analytic = evaluator(params)

    names: List[str] = list(params)
    sizes = np.array([params[name].size for name in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    chosen = SplitMix64(seed).sample_indices(int(offsets[-1]), coords)

    worst = 0.0
    worst_at: Optional[Tuple[str, int]] = None
    for flat in chosen:
        slot = int(np.searchsorted(offsets, flat, side="right")) - 1
        name, local = names[slot], int(flat - offsets[slot])
        view = params[name].reshape(-1)
        original = view[local]

        view[local] = original + h
        f_plus, _ = evaluator(params)
        view[local] = original - h
        f_minus, _ = evaluator(params)
        view[local] = original

        numeric = (f_plus - f_minus) / (2.0 * h)
        exact = float(np.asarray(analytic[name]).reshape(-1)[local])
        error = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
        if error > worst:
            worst, worst_at = error, (name, local)

    logger.debug(f"🔍 gradient check: {len(chosen)} coords, max rel error {worst:.3e} at {worst_at}")
    return worst
