"""
FLOP ledger for the dominant dense kernels

Counts only the kernel classes of the cost model: Gram formation and
Gram application GEMMs, triangular solves and row-norm reductions.
Scalar work is ignored.

TRSM is stored in both conventions: multiply-adds (how the cost model
quotes it, 1/2 k^2 d) and FLOPs (2 per multiply-add).
"""

from dataclasses import asdict, dataclass
from typing import Dict, Union

TABLE_CONVENTION = "gemm-flops + trsm-multiply-adds"


@dataclass
class FlopLedger:
    """Per-call counter, never shared between calls"""

    gemm_flops: int = 0
    trsm_flops: int = 0
    trsm_multiply_adds: int = 0
    reduction_flops: int = 0
    grams: int = 0
    applies: int = 0
    trsms: int = 0

    def add_gemm(self, m: int, k: int, n: int, kind: str = "apply") -> None:
        """Record an (m x k) @ (k x n) product"""
        self.gemm_flops += 2 * m * k * n
        if kind == "gram":
            self.grams += 1
        elif kind == "apply":
            self.applies += 1

    def add_trsm(self, k: int, d: int) -> None:
        """Record a k x k triangular solve against a k x d right-hand side"""
        multiply_adds = -(-(k * k * d) // 2)
        self.trsm_multiply_adds += multiply_adds
        self.trsm_flops += 2 * multiply_adds
        self.trsms += 1

    def add_reduction(self, count: int) -> None:
        self.reduction_flops += count

    @property
    def table_flops(self) -> int:
        """Leading-order total in the cost-model convention (TRSM as multiply-adds)"""
        return self.gemm_flops + self.trsm_multiply_adds

    @property
    def total_flops(self) -> int:
        """Every counted FLOP, TRSM at 2 per multiply-add, reductions included"""
        return self.gemm_flops + self.trsm_flops + self.reduction_flops

    def per_k2d(self, k: int, d: int) -> float:
        """Leading-order total normalized by k^2 d"""
        return self.table_flops / float(k * k * d)

    def to_dict(self) -> Dict[str, Union[int, str]]:
        data = asdict(self)
        data["table_flops"] = self.table_flops
        data["total_flops"] = self.total_flops
        data["convention"] = TABLE_CONVENTION
        return data
