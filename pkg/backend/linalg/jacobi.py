"""
Jacobi eigensolver and one-sided Jacobi SVD

Both routines sweep over index pairs in round-robin (tournament) order:
each round is a set of disjoint pairs, so all rotations of a round are
applied at once with vectorized row/column updates.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np
import numpy.typing as npt

from errors import IterationLimitError, ShapeError
from linalg.dense import Matrix, frob_norm, row_norms

MAX_SWEEPS = 50
JACOBI_TOL = 1e-12
MAX_DIM = 1024

Pairs = Tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]]


@dataclass(frozen=True)
class SymSpectrum:
    """Eigenvalues of a symmetric matrix, ascending"""

    eigenvalues: npt.NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def condition_number(self) -> float:
        """lambda_max / lambda_min, inf when the smallest eigenvalue is not positive"""
        if self.min <= 0.0:
            return float("inf")
        return self.max / self.min


@lru_cache(maxsize=64)
def _round_robin(n: int) -> Tuple[Pairs, ...]:
    """Disjoint pair sets covering every (p, q), p < q, once per sweep"""
    m = n + (n % 2)
    players = list(range(m))
    rounds: List[Pairs] = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _rotation(zeta: npt.NDArray[np.float64], active: npt.NDArray[np.bool_]):
    """cos/sin of the smaller rotation root t = sgn(zeta) / (|zeta| + sqrt(1 + zeta^2))"""
    with np.errstate(over="ignore"):
        sign = np.where(zeta >= 0.0, 1.0, -1.0)
        t = sign / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c


def _off_norm(A: Matrix) -> float:
    off = A - np.diag(np.diagonal(A))
    return frob_norm(off)


def jacobi_eig_sym(
    G: Matrix, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS
) -> SymSpectrum:
    """
    Eigenvalues of a symmetric matrix by cyclic Jacobi rotations

    Args:
        G: Symmetric n x n matrix, n <= 1024
        tol: Stop once the off-diagonal Frobenius mass is below tol * ||G||_F
        max_sweeps: Sweep cap, IterationLimitError beyond it

    Returns:
        SymSpectrum with eigenvalues sorted ascending
    """
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ShapeError("jacobi_eig_sym", G.shape, detail="G must be square")
    n = G.shape[0]
    if n > MAX_DIM:
        raise ShapeError("jacobi_eig_sym", G.shape, detail=f"dimension above {MAX_DIM}")

    A = 0.5 * (G + G.T)
    scale = frob_norm(A)
    rounds = _round_robin(n) if n > 1 else ()

    for sweep in range(max_sweeps + 1):
        off = _off_norm(A)
        if off <= tol * scale:
            break
        if sweep == max_sweeps:
            raise IterationLimitError("jacobi_eig_sym", max_sweeps, off / scale)
        for p, q in rounds:
            if p.size == 0:
                continue
            app, aqq, apq = A[p, p], A[q, q], A[p, q]
            active = apq != 0.0
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                zeta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
            c, s = _rotation(zeta, active)

            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0

    return SymSpectrum(np.sort(np.diagonal(A).copy()))


def _complete_columns(V: Matrix, null: npt.NDArray[np.intp]) -> None:
    """Fill the listed columns of V with unit vectors orthogonal to the rest"""
    d = V.shape[0]
    candidate = 0
    for col in null:
        while candidate < d:
            v = np.zeros(d)
            v[candidate] = 1.0
            candidate += 1
            for _ in range(2):
                v -= V @ (V.T @ v)
            norm = np.linalg.norm(v)
            if norm > 0.5:
                V[:, col] = v / norm
                break


def svd_thin(
    M: Matrix, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS
) -> Tuple[Matrix, npt.NDArray[np.float64], Matrix]:
    """
    Thin SVD M = U diag(sigma) V^T by one-sided (Hestenes) Jacobi on the rows

    Rows of a working copy W are rotated pairwise until mutually orthogonal;
    the same rotations accumulate into U so that M = U W throughout.

    Args:
        M: k x d matrix with k <= d (transpose first otherwise)
        tol: Pairwise cosine below which two rows count as orthogonal
        max_sweeps: Sweep cap, IterationLimitError beyond it

    Returns:
        (U k x k, sigma descending length k, V d x k)
    """
    if M.ndim != 2 or M.shape[0] > M.shape[1]:
        raise ShapeError("svd_thin", M.shape, detail="expects rows <= cols")
    k, d = M.shape
    if k > MAX_DIM:
        raise ShapeError("svd_thin", M.shape, detail=f"dimension above {MAX_DIM}")

    W = np.array(M, dtype=np.float64, copy=True)
    U = np.eye(k)
    rounds = _round_robin(k) if k > 1 else ()

    for sweep in range(max_sweeps + 1):
        worst = 0.0
        for p, q in rounds:
            if p.size == 0:
                continue
            alpha = np.einsum("ij,ij->i", W[p], W[p])
            beta = np.einsum("ij,ij->i", W[q], W[q])
            gamma = np.einsum("ij,ij->i", W[p], W[q])
            denom = np.sqrt(alpha * beta)
            positive = denom > 0.0
            cosine = np.where(positive, np.abs(gamma) / np.where(positive, denom, 1.0), 0.0)
            active = positive & (cosine > tol)
            if not active.any():
                continue
            worst = max(worst, float(cosine.max()))
            if sweep == max_sweeps:
                raise IterationLimitError("svd_thin", max_sweeps, worst)

            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                zeta = np.where(active, (beta - alpha) / (2.0 * np.where(active, gamma, 1.0)), 0.0)
            c, s = _rotation(zeta, active)

            Wp, Wq = W[p].copy(), W[q].copy()
            W[p] = c[:, None] * Wp - s[:, None] * Wq
            W[q] = s[:, None] * Wp + c[:, None] * Wq
            Up, Uq = U[:, p].copy(), U[:, q].copy()
            U[:, p] = c * Up - s * Uq
            U[:, q] = s * Up + c * Uq
        if worst == 0.0:
            break

    sigma = row_norms(W)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    U = np.ascontiguousarray(U[:, order])
    W = W[order]

    V = np.zeros((d, k))
    cutoff = sigma[0] * 1e-14 if k else 0.0
    live = sigma > cutoff
    V[:, live] = (W[live] / sigma[live, None]).T
    if not live.all():
        _complete_columns(V, np.flatnonzero(~live))
    return U, sigma, V
