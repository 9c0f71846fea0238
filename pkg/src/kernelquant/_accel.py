"""Batch evaluation of the closed-form kernels.

Two code paths compute the same block arrays: a numba ``njit`` loop path and a
vectorized numpy path.  The numba path is used when numba imports cleanly and
``KERNELQUANT_DISABLE_NUMBA`` is unset (or ``0``).
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    _HAVE_NUMBA = False


def _flag_disabled() -> bool:
    return os.environ.get("KERNELQUANT_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")


USE_NUMBA = _HAVE_NUMBA and not _flag_disabled()


def njit(func):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if not _HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


# -- bidisc kernel blocks ----------------------------------------------------


def bidisc_blocks_numpy(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Blocks ``K(z_i, w_j)`` of the bidisc kernel, shape ``(J, L, 2, 2)``."""
    zb = np.conj(z)
    p1 = zb[:, None, 0] * w[None, :, 0]
    p2 = zb[:, None, 1] * w[None, :, 1]
    out = np.empty((z.shape[0], w.shape[0], 2, 2), dtype=np.complex128)
    out[..., 0, 0] = 1.0 + 1.0 / (1.0 - p1)
    out[..., 0, 1] = np.broadcast_to(w[None, :, 0], p1.shape)
    out[..., 1, 0] = np.broadcast_to(zb[:, None, 0], p1.shape)
    out[..., 1, 1] = 1.0 + 1.0 / (1.0 - p2) + p1
    return out


@njit
def _bidisc_blocks_loop(z, w):
    J = z.shape[0]
    L = w.shape[0]
    out = np.empty((J, L, 2, 2), dtype=np.complex128)
    for i in range(J):
        a1 = np.conj(z[i, 0])
        a2 = np.conj(z[i, 1])
        for j in range(L):
            p1 = a1 * w[j, 0]
            p2 = a2 * w[j, 1]
            out[i, j, 0, 0] = 1.0 + 1.0 / (1.0 - p1)
            out[i, j, 0, 1] = w[j, 0]
            out[i, j, 1, 0] = a1
            out[i, j, 1, 1] = 1.0 + 1.0 / (1.0 - p2) + p1
    return out


def bidisc_blocks_numba(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return _bidisc_blocks_loop(np.ascontiguousarray(z, dtype=np.complex128),
                               np.ascontiguousarray(w, dtype=np.complex128))


# -- discrete characteristic function ------------------------------------------


def discrete_chi_numpy(s: np.ndarray, atoms: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``chi(s) = sum_k w_k exp(-i s omega_k)`` for an array of complex ``s``."""
    s = np.asarray(s, dtype=np.complex128)
    phase = np.exp(-1j * s[..., None] * atoms)
    return phase @ weights.astype(np.complex128)


@njit
def _discrete_chi_loop(s, atoms, weights):
    out = np.empty(s.shape[0], dtype=np.complex128)
    for i in range(s.shape[0]):
        acc = 0.0 + 0.0j
        for k in range(atoms.shape[0]):
            acc += weights[k] * np.exp(-1j * s[i] * atoms[k])
        out[i] = acc
    return out


def discrete_chi_numba(s: np.ndarray, atoms: np.ndarray, weights: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    flat = _discrete_chi_loop(np.ascontiguousarray(s.ravel()),
                              np.ascontiguousarray(atoms, dtype=np.float64),
                              np.ascontiguousarray(weights, dtype=np.float64))
    return flat.reshape(s.shape)


def bidisc_blocks(z, w):
    if USE_NUMBA:
        return bidisc_blocks_numba(z, w)
    return bidisc_blocks_numpy(np.asarray(z, dtype=np.complex128), np.asarray(w, dtype=np.complex128))


def discrete_chi(s, atoms, weights):
    if USE_NUMBA:
        return discrete_chi_numba(s, atoms, weights)
    return discrete_chi_numpy(s, np.asarray(atoms, float), np.asarray(weights, float))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
