"""
Gram-space view of MUD

One MUD pass acts on the row Gram as G -> Corr(T^-1 G T^-T) with
T = tril(G). Working in Gram space lets the convergence and spectral
properties be checked directly on k x k matrices.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from errors import ConfigError, NotSPDError
from linalg.dense import Matrix, cholesky, forward_trsm, frob_norm, matmul, transpose, tril
from linalg.jacobi import SymSpectrum, jacobi_eig_sym
from linalg.ledger import FlopLedger

UNIT_DIAG_TOL = 1e-10
NORM_NAMES = ("linf", "l1", "fro")


def _symmetrize(A: Matrix) -> Matrix:
    return 0.5 * (A + A.T)


def _require_unit_diagonal(G: Matrix, op: str) -> None:
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ConfigError(f"{op} expects a square matrix, got shape {G.shape}")
    off = np.abs(np.diagonal(G) - 1.0)
    if off.size and float(off.max()) > UNIT_DIAG_TOL:
        i = int(np.argmax(off))
        raise ConfigError(
            f"{op} expects a unit diagonal, G[{i}][{i}] = {G[i, i]:.6g}; apply corr_normalize first"
        )


def corr_normalize(G: Matrix) -> Matrix:
    """
    Symmetric scaling D^-1/2 G D^-1/2 with D = diag(G)

    The diagonal of the result is set to exactly 1, which also makes the
    map idempotent.
    """
    diag = np.diagonal(G)
    bad = np.flatnonzero(~(diag > 0.0))
    if bad.size:
        i = int(bad[0])
        raise NotSPDError(i, float(diag[i]))
    s = 1.0 / np.sqrt(diag)
    C = _symmetrize(G * s[:, None] * s[None, :])
    np.fill_diagonal(C, 1.0)
    return C


def _triangular_congruence(T: Matrix, G: Matrix, ledger: Optional[FlopLedger] = None) -> Matrix:
    """T^-1 G T^-T from two forward solves, symmetrized"""
    X = forward_trsm(T, G, ledger)
    return _symmetrize(forward_trsm(T, transpose(X), ledger))


def gram_map(G: Matrix, ledger: Optional[FlopLedger] = None) -> Matrix:
    """
    One MUD pass in Gram space: Corr(T^-1 G T^-T), T = tril(G)

    Args:
        G: Symmetric SPD matrix with unit diagonal
        ledger: Optional FLOP ledger for the two solves

    Returns:
        The next Gram iterate, symmetric with unit diagonal
    """
    _require_unit_diagonal(G, "gram_map")
    return corr_normalize(_triangular_congruence(tril(G), G, ledger))


def sgs_preconditioned_spectrum(G: Matrix) -> Tuple[SymSpectrum, SymSpectrum]:
    """
    Spectrum of the MUD congruence next to the SGS-preconditioned spectrum

    The first spectrum is sigma(T^-1 G T^-T). The second is sigma(M^-1 G)
    for the symmetric Gauss-Seidel preconditioner M = T T^T, obtained from
    the generalized problem G x = lambda M x: M is formed explicitly,
    factored as L L^T, and the eigenvalues of L^-1 G L^-T are taken.

    Returns:
        (sigma(B), sigma(M^-1 G)), each sorted ascending
    """
    _require_unit_diagonal(G, "sgs_preconditioned_spectrum")
    T = tril(G)
    congruence = jacobi_eig_sym(_triangular_congruence(T, G))

    M = _symmetrize(matmul(T, transpose(T)))
    L = cholesky(M)
    preconditioned = jacobi_eig_sym(_triangular_congruence(L, G))
    return congruence, preconditioned


def spectrum_discrepancy(first: SymSpectrum, second: SymSpectrum) -> float:
    """Max elementwise gap between two sorted spectra"""
    if len(first) != len(second):
        raise ConfigError(f"spectra differ in length: {len(first)} vs {len(second)}")
    if len(first) == 0:
        return 0.0
    return float(np.max(np.abs(first.eigenvalues - second.eigenvalues)))


def deviation_norms(G: Matrix) -> Dict[str, float]:
    """||G - I|| in the max-row-sum, max-column-sum and Frobenius norms"""
    E = np.abs(G - np.eye(G.shape[0]))
    return {
        "linf": float(E.sum(axis=1).max()),
        "l1": float(E.sum(axis=0).max()),
        "fro": frob_norm(G - np.eye(G.shape[0])),
    }


@dataclass
class GramTrace:
    """Per-pass deviations ||G_t - I|| as (pass_index, norm_name, value)"""

    deviations: List[Tuple[int, str, float]] = field(default_factory=list)

    def record(self, pass_index: int, G: Matrix) -> Dict[str, float]:
        if self.deviations and pass_index <= self.deviations[-1][0]:
            raise ConfigError(
                f"pass index {pass_index} does not follow {self.deviations[-1][0]}"
            )
        norms = deviation_norms(G)
        for name in NORM_NAMES:
            self.deviations.append((pass_index, name, norms[name]))
        return norms

    @property
    def passes(self) -> List[int]:
        seen: List[int] = []
        for index, _, _ in self.deviations:
            if not seen or seen[-1] != index:
                seen.append(index)
        return seen

    def series(self, norm: str = "linf") -> List[float]:
        if norm not in NORM_NAMES:
            raise ConfigError(f"unknown norm '{norm}', expected one of {NORM_NAMES}")
        return [value for _, name, value in self.deviations if name == norm]

    def rows(self) -> List[Dict[str, float]]:
        """One dict per pass: pass, linf, l1, fro"""
        table: Dict[int, Dict[str, float]] = {}
        for index, name, value in self.deviations:
            table.setdefault(index, {"pass": index})[name] = value
        return [table[i] for i in sorted(table)]
