"""
Dense 64-bit kernels: GEMM, Gram, forward TRSM, Cholesky, norms

Every kernel is a pure function of its inputs. Kernels that belong to the
cost model take an optional FlopLedger and add their count to it; the
ledger is owned by the caller.
"""

from typing import Optional

import numpy as np
import numpy.typing as npt

from errors import NonFiniteError, NotSPDError, ShapeError, SingularTriangularError
from linalg.ledger import FlopLedger

Matrix = npt.NDArray[np.float64]

DIAG_FLOOR = 1e-12  # forward_trsm: |T[i][i]| below this is singular
PIVOT_FLOOR = 1e-12  # cholesky: relative to the largest diagonal entry
TRSM_BLOCK = 64  # rows per block in forward substitution


def as_matrix(data, name: str = "matrix") -> Matrix:
    """
    Coerce input to a finite, C-contiguous float64 2-D array

    Args:
        data: Anything numpy can turn into a 2-D array
        name: Used in error messages

    Returns:
        A fresh float64 matrix
    """
    M = np.array(data, dtype=np.float64, order="C", copy=True)
    if M.ndim != 2 or M.shape[0] == 0 or M.shape[1] == 0:
        raise ShapeError("as_matrix", M.shape, detail=f"{name} must be a non-empty 2-D array")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return M


def matmul(
    A: Matrix, B: Matrix, ledger: Optional[FlopLedger] = None, kind: str = "apply"
) -> Matrix:
    """C = A @ B, counted as 2 * rows * inner * cols FLOPs"""
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError("matmul", A.shape, B.shape, detail="A.cols must equal B.rows")
    if ledger is not None:
        ledger.add_gemm(A.shape[0], A.shape[1], B.shape[1], kind=kind)
    return A @ B


def gram(M: Matrix, ledger: Optional[FlopLedger] = None) -> Matrix:
    """Row Gram M @ M.T, symmetrized as (G + G.T) / 2"""
    G = matmul(M, M.T, ledger=ledger, kind="gram")
    return 0.5 * (G + G.T)


def transpose(M: Matrix) -> Matrix:
    return np.ascontiguousarray(M.T)


def tril(G: Matrix) -> Matrix:
    """Lower triangle including the diagonal; strictly-upper entries zeroed"""
    return np.tril(G)


def row_norms(M: Matrix, ledger: Optional[FlopLedger] = None) -> npt.NDArray[np.float64]:
    if ledger is not None:
        ledger.add_reduction(2 * M.size)
    return np.sqrt(np.einsum("ij,ij->i", M, M))


def frob_norm(M: Matrix, ledger: Optional[FlopLedger] = None) -> float:
    if ledger is not None:
        ledger.add_reduction(2 * M.size)
    return float(np.sqrt(np.einsum("ij,ij->", M, M)))


def forward_trsm(
    T: Matrix,
    B: Matrix,
    ledger: Optional[FlopLedger] = None,
    diag_floor: float = DIAG_FLOOR,
    block: int = TRSM_BLOCK,
) -> Matrix:
    """
    Solve T X = B by blocked forward substitution

    Only the lower triangle of T is read. Off-diagonal blocks are applied
    with one GEMM per block row, rows inside a block are eliminated one by one.

    Args:
        T: k x k lower-triangular factor
        B: k x d right-hand side
        ledger: Optional FLOP ledger, gains ceil(k^2 d / 2) multiply-adds
        diag_floor: Smallest admissible |T[i][i]|
        block: Block size for the GEMM updates

    Returns:
        X with T @ X = B
    """
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ShapeError("forward_trsm", T.shape, detail="T must be square")
    if B.ndim != 2 or B.shape[0] != T.shape[0]:
        raise ShapeError("forward_trsm", T.shape, B.shape, detail="T.rows must equal B.rows")

    diag = np.diagonal(T)
    bad = np.flatnonzero(~(np.abs(diag) >= diag_floor))
    if bad.size:
        row = int(bad[0])
        raise SingularTriangularError(row, float(diag[row]), diag_floor)

    k, d = B.shape
    X = np.array(B, dtype=np.float64, copy=True)
    for start in range(0, k, block):
        stop = min(start + block, k)
        if start:
            X[start:stop] -= T[start:stop, :start] @ X[:start]
        for i in range(start, stop):
            if i > start:
                X[i] -= T[i, start:i] @ X[start:i]
            X[i] /= T[i, i]

    if ledger is not None:
        ledger.add_trsm(k, d)
    return X


def cholesky(G: Matrix, pivot_floor: float = PIVOT_FLOOR) -> Matrix:
    """
    Lower Cholesky factor L with L @ L.T = G

    Reads the lower triangle of G. A pivot at or below
    pivot_floor * max(diag(G)) raises NotSPDError naming the pivot.
    """
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ShapeError("cholesky", G.shape, detail="G must be square")

    n = G.shape[0]
    floor = pivot_floor * float(np.max(np.diagonal(G)))
    L = np.zeros_like(G, dtype=np.float64)
    for j in range(n):
        row = L[j, :j]
        pivot = G[j, j] - row @ row
        if not (pivot > floor and pivot > 0.0) or not np.isfinite(pivot):
            raise NotSPDError(j, float(pivot), floor)
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (G[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L
