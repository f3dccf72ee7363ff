"""
Random test instances with controlled spectra

All generators draw from the portable SplitMix64 stream, so an instance
is fully determined by its arguments and seed.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import ConfigError, NotSPDError
from harness.rng import SplitMix64
from linalg.dense import Matrix, cholesky
from utils.log import get_logger

logger = get_logger(__name__)

SPD_ATTEMPTS = 10


@dataclass(frozen=True)
class SpectrumSpec:
    """
    Target shape and singular values for random_with_spectrum

    Give exactly one of singular_values (descending, positive, length k)
    or condition_number (>= 1, filled log-uniformly from 1 down to 1/cond).
    """

    dim_k: int
    dim_d: int
    singular_values: Optional[Tuple[float, ...]] = None
    condition_number: Optional[float] = None

    def __post_init__(self):
        if self.dim_k < 1 or self.dim_d < 1:
            raise ConfigError(f"dimensions must be positive, got {self.dim_k} x {self.dim_d}")
        if self.dim_k > self.dim_d:
            raise ConfigError(f"spectrum spec needs k <= d, got {self.dim_k} x {self.dim_d}")
        if (self.singular_values is None) == (self.condition_number is None):
            raise ConfigError("give exactly one of singular_values / condition_number")
        if self.singular_values is not None:
            sv = np.asarray(self.singular_values, dtype=np.float64)
            if sv.shape != (self.dim_k,):
                raise ConfigError(f"need {self.dim_k} singular values, got {sv.size}")
            if np.any(sv <= 0.0) or np.any(np.diff(sv) > 0.0):
                raise ConfigError("singular values must be positive and descending")
        elif not self.condition_number >= 1.0:
            raise ConfigError(f"condition_number must be >= 1, got {self.condition_number}")

    def sigma(self) -> np.ndarray:
        if self.singular_values is not None:
            return np.asarray(self.singular_values, dtype=np.float64)
        if self.dim_k == 1:
            return np.ones(1)
        exponents = np.arange(self.dim_k) / (self.dim_k - 1)
        return self.condition_number ** (-exponents)


def random_orthonormal(rng: SplitMix64, k: int, d: int) -> Matrix:
    """k x d matrix with orthonormal rows from the QR factor of a Gaussian"""
    if k > d:
        raise ConfigError(f"cannot have {k} orthonormal rows in dimension {d}")
    Q, R = np.linalg.qr(rng.normal((d, k)))
    signs = np.where(np.diagonal(R) < 0.0, -1.0, 1.0)
    return np.ascontiguousarray((Q * signs).T)


def random_row_orthonormal(k: int, d: int, seed: int) -> Matrix:
    return random_orthonormal(SplitMix64(seed), k, d)


def random_with_spectrum(spec: SpectrumSpec, seed: int) -> Matrix:
    """U diag(sigma) V^T with random orthonormal U (k x k) and V (d x k)"""
    rng = SplitMix64(seed)
    U = random_orthonormal(rng, spec.dim_k, spec.dim_k)
    Vt = random_orthonormal(rng, spec.dim_k, spec.dim_d)
    return (U * spec.sigma()) @ Vt


def random_unit_diag_spd(
    k: int, offdiag_scale: float, seed: int, linf: Optional[float] = None
) -> Matrix:
    """
    G = I + E with E symmetric, zero diagonal, entries uniform in [-eps0, eps0]

    Args:
        k: Dimension
        offdiag_scale: eps0, below 1 / (k - 1) so G is diagonally dominant
        seed: Stream seed
        linf: When given, E is rescaled to this max-row-sum norm (< 1)

    Returns:
        Unit-diagonal SPD matrix, checked by Cholesky
    """
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    if offdiag_scale < 0.0:
        raise ConfigError(f"offdiag_scale must be >= 0, got {offdiag_scale}")
    if k > 1 and offdiag_scale >= 1.0 / (k - 1):
        raise ConfigError(f"offdiag_scale {offdiag_scale} must be below 1/(k-1) = {1.0 / (k - 1):.4g}")
    if linf is not None and not 0.0 <= linf < 1.0:
        raise ConfigError(f"linf must lie in [0, 1), got {linf}")

    rng = SplitMix64(seed)
    failure: Optional[NotSPDError] = None
    for attempt in range(SPD_ATTEMPTS):
        E = np.triu(rng.uniform_range(-offdiag_scale, offdiag_scale, (k, k)), 1)
        E = E + E.T
        if linf is not None:
            row_sum = float(np.abs(E).sum(axis=1).max())
            if row_sum > 0.0:
                E *= linf / row_sum
        G = np.eye(k) + E
        try:
            cholesky(G)
            return G
        except NotSPDError as e:
            failure = e
            logger.debug(f"🔄 SPD check failed on attempt {attempt + 1}, regenerating")
    raise failure
