"""Dense third-order tensor algebra: unfoldings, Khatri-Rao products,
rank-R reconstruction.

A third-order tensor is a plain ``numpy`` array of shape ``(I, J, K)``
with pixels along the first mode, spectral bands along the second and
transforms (time stamps, filters, shifts) along the third.  Unfolding
shapes follow the tall convention: mode-1 is ``JK x I``, mode-2 is
``IK x J``, mode-3 is ``IJ x K``.  Within a mode-d unfolding the rows
enumerate the two remaining indices with the later mode fastest, so
that ``unfold(reconstruct(A, B, P), 1) == khatri_rao(B, P) @ A.T`` and
cyclically for the other modes.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "unfold",
    "fold",
    "khatri_rao",
    "reconstruct",
    "frobenius",
    "scaled_endmembers",
]


def _as_tensor3(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    return t


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Matricize ``t`` along ``mode`` (1, 2 or 3).

    Returns ``JK x I`` for mode 1, ``IK x J`` for mode 2 and ``IJ x K``
    for mode 3; row order puts the higher remaining mode fastest.
    """
    t = _as_tensor3(t)
    i, j, k = t.shape
    if mode == 1:
        return t.transpose(1, 2, 0).reshape(j * k, i)
    if mode == 2:
        return t.transpose(0, 2, 1).reshape(i * k, j)
    if mode == 3:
        return t.reshape(i * j, k)
    raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def fold(m: np.ndarray, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    m = np.asarray(m, dtype=float)
    i, j, k = dims
    expected = {1: (j * k, i), 2: (i * k, j), 3: (i * j, k)}
    if mode not in expected:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    if m.shape != expected[mode]:
        raise ValueError(
            f"matrix shape {m.shape} does not match mode-{mode} unfolding "
            f"{expected[mode]} of dims {tuple(dims)}"
        )
    if mode == 1:
        return m.reshape(j, k, i).transpose(2, 0, 1)
    if mode == 2:
        return m.reshape(i, k, j).transpose(0, 2, 1)
    return m.reshape(i, j, k)


def khatri_rao(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column
    counts.  Row ``p * rows2 + q`` of the result is ``m1[p] * m2[q]``.
    """
    m1 = np.atleast_2d(np.asarray(m1, dtype=float))
    m2 = np.atleast_2d(np.asarray(m2, dtype=float))
    if m1.shape[1] != m2.shape[1]:
        raise ValueError(
            f"column counts differ: {m1.shape[1]} vs {m2.shape[1]}"
        )
    r = m1.shape[1]
    out = m1[:, None, :] * m2[None, :, :]
    return out.reshape(m1.shape[0] * m2.shape[0], r)


def reconstruct(a: np.ndarray, b: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Assemble the rank-R tensor ``sum_r a[:,r] o b[:,r] o psi[:,r]``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    if not (a.shape[1] == b.shape[1] == psi.shape[1]):
        raise ValueError(
            "factor column counts differ: "
            f"{a.shape[1]}, {b.shape[1]}, {psi.shape[1]}"
        )
    return np.einsum("ir,jr,kr->ijk", a, b, psi, optimize=True)


def frobenius(t: np.ndarray) -> float:
    """Frobenius norm (square root of the sum of squared entries)."""
    return float(np.linalg.norm(np.asarray(t, dtype=float).ravel()))


def scaled_endmembers(b: np.ndarray, psi: np.ndarray, k: int) -> np.ndarray:
    """Per-slice endmember matrix ``B diag(psi[k, :])`` for frontal
    slice ``k`` (0-based).  Column r is the r-th endmember scaled by its
    third-mode factor in that slice.
    """
    b = np.atleast_2d(np.asarray(b, dtype=float))
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    if not 0 <= k < psi.shape[0]:
        raise ValueError(f"slice index {k} out of range [0, {psi.shape[0]})")
    return b * psi[k, :]
