"""
Whitening operators: MUDp, Muon Newton-Schulz, exact polar, CholeskyQR

All operators follow the same convention: a tall input is transposed so
the work happens on a k x d matrix with k <= d, and the result is
transposed back. Each call returns a WhitenReport carrying its own FLOP
ledger and timer.
"""

import re
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from errors import ConfigError, RankDeficientError
from linalg.dense import (
    Matrix,
    as_matrix,
    cholesky,
    forward_trsm,
    frob_norm,
    gram,
    matmul,
    row_norms,
    transpose,
    tril,
)
from linalg.jacobi import svd_thin
from linalg.ledger import TABLE_CONVENTION, FlopLedger
from utils.log import get_logger

logger = get_logger(__name__)

NS_COEFFS = (3.4445, -4.7750, 2.0315)
RANK_THRESHOLD = 1e-10


@dataclass(frozen=True)
class WhitenConfig:
    """Knobs shared by the whitening operators"""

    passes: int = 1
    ns_iters: int = 5
    eps: float = 1e-8
    ns_coeffs: Tuple[float, float, float] = NS_COEFFS

    def __post_init__(self):
        if int(self.passes) < 1:
            raise ConfigError(f"passes must be >= 1, got {self.passes}")
        if int(self.ns_iters) < 1:
            raise ConfigError(f"ns_iters must be >= 1, got {self.ns_iters}")
        if not self.eps > 0.0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if len(self.ns_coeffs) != 3:
            raise ConfigError("ns_coeffs must be a triple (a, b, c)")


@dataclass
class WhitenReport:
    """Result of one whitening call"""

    op: str
    output: Matrix
    ortho_residual: float
    ledger: FlopLedger = field(default_factory=FlopLedger)
    wall_seconds: float = 0.0
    k: int = 0
    d: int = 0
    transposed: bool = False

    def summary(self) -> Dict:
        """JSON-ready view without the output matrix"""
        return {
            "op": self.op,
            "k": self.k,
            "d": self.d,
            "ortho_residual": self.ortho_residual,
            "flops": self.ledger.table_flops,
            "convention": TABLE_CONVENTION,
            "wall_seconds": self.wall_seconds,
        }


_default_config: Optional[WhitenConfig] = None


def get_default_whiten_config() -> WhitenConfig:
    """Get or create the shared default config"""
    global _default_config
    if _default_config is None:
        _default_config = WhitenConfig()
    return _default_config


def shape_normalize(M: Matrix) -> Tuple[Matrix, bool]:
    """
    Put the small dimension first

    Returns:
        (matrix with rows <= cols, True iff the input was transposed)
    """
    if M.shape[0] > M.shape[1]:
        return transpose(M), True
    return M, False


def _restore(Q: Matrix, transposed: bool) -> Matrix:
    return transpose(Q) if transposed else Q


def _row_normalize(Q: Matrix, eps: float, ledger: FlopLedger) -> Matrix:
    """Divide each row by max(||row||, eps)"""
    r = row_norms(Q, ledger)
    return Q / np.maximum(r, eps)[:, None]


def ortho_residual(Q: Matrix) -> float:
    """||Q Q^T - I||_F along the small dimension"""
    X, _ = shape_normalize(np.asarray(Q, dtype=np.float64))
    G = gram(X)
    return frob_norm(G - np.eye(G.shape[0]))


def _report(op: str, X: Matrix, transposed: bool, ledger: FlopLedger, started: float) -> WhitenReport:
    wall = time.perf_counter() - started
    out = _restore(X, transposed)
    k, d = X.shape
    return WhitenReport(
        op=op,
        output=out,
        ortho_residual=ortho_residual(out),
        ledger=ledger,
        wall_seconds=wall,
        k=k,
        d=d,
        transposed=transposed,
    )


def mud_whiten(M: Matrix, cfg: Optional[WhitenConfig] = None) -> WhitenReport:
    """
    MUDp: p passes of triangular Gram decorrelation

    Per pass: row-normalize, G = Q Q^T, T = tril(G), Q <- T^{-1} Q,
    row-normalize again. Row norms are clamped below at eps, so a zero
    row stays zero; its T diagonal is replaced by 1 before the solve.

    Args:
        M: n x m update direction
        cfg: passes and eps are used

    Returns:
        WhitenReport with op "mud<p>"
    """
    cfg = cfg or get_default_whiten_config()
    started = time.perf_counter()
    X, transposed = shape_normalize(as_matrix(M, "M"))
    ledger = FlopLedger()

    Q = X
    for _ in range(cfg.passes):
        Q = _row_normalize(Q, cfg.eps, ledger)
        T = tril(gram(Q, ledger))
        collapsed = np.flatnonzero(np.diagonal(T) < cfg.eps)
        if collapsed.size:
            T[collapsed, collapsed] = 1.0
        Q = forward_trsm(T, Q, ledger)
        Q = _row_normalize(Q, cfg.eps, ledger)

    return _report(f"mud{cfg.passes}", Q, transposed, ledger, started)


def muon_ns(M: Matrix, cfg: Optional[WhitenConfig] = None) -> WhitenReport:
    """
    Muon quintic Newton-Schulz iteration

    X_0 = M / (||M||_F + eps), then ns_iters times
    A = X X^T, X <- aX + b(AX) + c(A(AX)). No renormalization afterwards.
    """
    cfg = cfg or get_default_whiten_config()
    started = time.perf_counter()
    X, transposed = shape_normalize(as_matrix(M, "M"))
    ledger = FlopLedger()
    a, b, c = cfg.ns_coeffs

    X = X / (frob_norm(X, ledger) + cfg.eps)
    for _ in range(cfg.ns_iters):
        A = gram(X, ledger)
        AX = matmul(A, X, ledger)
        AAX = matmul(A, AX, ledger)
        X = a * X + b * AX + c * AAX

    return _report(f"muon{cfg.ns_iters}", X, transposed, ledger, started)


def polar_exact(M: Matrix, cfg: Optional[WhitenConfig] = None) -> WhitenReport:
    """Polar factor U V^T from a thin Jacobi SVD"""
    started = time.perf_counter()
    X, transposed = shape_normalize(as_matrix(M, "M"))
    ledger = FlopLedger()

    U, sigma, V = svd_thin(X)
    ratio = float(sigma[-1] / sigma[0]) if sigma[0] > 0.0 else 0.0
    if ratio <= RANK_THRESHOLD:
        raise RankDeficientError(ratio, RANK_THRESHOLD)
    Q = matmul(U, transpose(V), ledger)

    return _report("polar", Q, transposed, ledger, started)


def cholqr_whiten(M: Matrix, cfg: Optional[WhitenConfig] = None) -> WhitenReport:
    """Q = chol(M M^T)^{-1} M; NotSPDError surfaces when the Gram is too ill-conditioned"""
    started = time.perf_counter()
    X, transposed = shape_normalize(as_matrix(M, "M"))
    ledger = FlopLedger()

    L = cholesky(gram(X, ledger))
    Q = forward_trsm(L, X, ledger)

    return _report("cholqr", Q, transposed, ledger, started)


WHITEN_OPS: Dict[str, Callable[[Matrix, Optional[WhitenConfig]], WhitenReport]] = {
    "mud": mud_whiten,
    "muon": muon_ns,
    "polar": polar_exact,
    "cholqr": cholqr_whiten,
}

_OP_PATTERN = re.compile(r"^(mud|muon|polar|cholqr)(\d*)$")


def resolve_op(
    name: str, base: Optional[WhitenConfig] = None
) -> Tuple[Callable[[Matrix, Optional[WhitenConfig]], WhitenReport], WhitenConfig]:
    """
    Map an op name to its operator and config

    A numeric suffix sets the pass / iteration count: "mud2" is two MUD
    passes, "muon3" three Newton-Schulz iterations.
    """
    base = base or get_default_whiten_config()
    match = _OP_PATTERN.match(name.strip().lower())
    if not match:
        raise ConfigError(f"unknown whitening op '{name}', expected one of {sorted(WHITEN_OPS)}")
    family, count = match.groups()
    cfg = base
    if count:
        if family == "mud":
            cfg = replace(base, passes=int(count))
        elif family == "muon":
            cfg = replace(base, ns_iters=int(count))
        else:
            raise ConfigError(f"op '{family}' takes no count suffix")
    return WHITEN_OPS[family], cfg


def run_whiten(name: str, M: Matrix, base: Optional[WhitenConfig] = None) -> WhitenReport:
    """Resolve an op name and run it"""
    op, cfg = resolve_op(name, base)
    report = op(M, cfg)
    logger.debug(
        f"🧮 {report.op} k={report.k} d={report.d} residual={report.ortho_residual:.3e} "
        f"flops={report.ledger.table_flops}"
    )
    return report
