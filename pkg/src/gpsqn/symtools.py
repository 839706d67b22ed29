"""Symmetric-matrix bookkeeping.

Half-vectorization (column-wise lower-triangular stacking, Magnus-Neudecker
convention), the duplication and elimination matrices that move between
vec and vech, and the measurement map that turns a step vector s into the
linear operator sending vech(A) to A @ s for symmetric A.

Everything here is dense; the dimensions in play are small (n <= ~20).
"""

from __future__ import annotations

import math

import numpy as np


def sym_dim(n: int) -> int:
    """Length of vech(A) for an n x n symmetric matrix."""
    return n * (n + 1) // 2


def matrix_dim(half_len: int) -> int:
    """Invert ``sym_dim``; raise if ``half_len`` is not a triangular number."""
    n = int(round((math.sqrt(8 * half_len + 1) - 1) / 2))
    if sym_dim(n) != half_len:
        raise ValueError(f"length {half_len} is not a triangular number")
    return n


def vech(a: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Stack the lower triangle of a symmetric matrix column-wise.

    Raises ``ValueError`` if ``a`` is not square or not symmetric within
    relative tolerance ``rtol``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("vech expects a square matrix")
    scale = max(float(np.abs(a).max(initial=0.0)), 1.0)
    if float(np.abs(a - a.T).max(initial=0.0)) > rtol * scale:
        raise ValueError("not symmetric")
    n = a.shape[0]
    return np.concatenate([a[j:, j] for j in range(n)])


def unvech(h: np.ndarray) -> np.ndarray:
    """Rebuild the symmetric matrix whose vech is ``h``.

    The result is exactly symmetric: the upper triangle is copied from the
    lower one, never recomputed.
    """
    h = np.asarray(h, dtype=float).ravel()
    n = matrix_dim(h.size)
    a = np.zeros((n, n))
    pos = 0
    for j in range(n):
        m = n - j
        a[j:, j] = h[pos : pos + m]
        pos += m
    lower = np.tril(a, -1)
    return a + lower.T


def _vech_slot(i: int, j: int, n: int) -> int:
    # position of element (i, j), i >= j, in the column-wise vech ordering
    return j * n - j * (j - 1) // 2 + (i - j)


def duplication_matrix(n: int) -> np.ndarray:
    """0/1 matrix D of shape (n^2, n(n+1)/2) with vec(A) == D @ vech(A)
    for every symmetric A."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = np.zeros((n * n, sym_dim(n)))
    for j in range(n):
        for i in range(n):
            row = i + j * n  # column-major vec index
            d[row, _vech_slot(max(i, j), min(i, j), n)] = 1.0
    return d


def elimination_matrix(n: int) -> np.ndarray:
    """0/1 matrix L of shape (n(n+1)/2, n^2) with vech(A) == L @ vec(A)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ell = np.zeros((sym_dim(n), n * n))
    for j in range(n):
        for i in range(j, n):
            ell[_vech_slot(i, j, n), i + j * n] = 1.0
    return ell


def dbar(s: np.ndarray, dup: np.ndarray) -> np.ndarray:
    """Measurement map (s^T kron I) @ D of shape (n, n(n+1)/2).

    For every symmetric A, ``dbar(s, D) @ vech(A) == A @ s``.
    """
    s = np.asarray(s, dtype=float).ravel()
    n = s.size
    if dup.shape != (n * n, sym_dim(n)):
        raise ValueError(
            f"duplication matrix shape {dup.shape} does not match step of length {n}"
        )
    return np.kron(s[None, :], np.eye(n)) @ dup
