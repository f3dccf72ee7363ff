import numpy as np


def orthonormal_rows(rng, k, d):
    """k x d with orthonormal rows"""
    Q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return np.ascontiguousarray(Q.T)


def random_spd(rng, n, shift=1.0):
    A = rng.standard_normal((n, n))
    return A.T @ A + shift * np.eye(n)


def rel_frob(A, B):
    return np.linalg.norm(A - B) / max(np.linalg.norm(B), 1e-300)
