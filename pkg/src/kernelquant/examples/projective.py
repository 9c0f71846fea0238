"""Scalar kernel ``(1 + zbar . w)^n`` on ``C^d``.

Every unitary matrix preserves it with trivial cocycle, so the linear flows
``z -> exp(t H) z`` (``H`` anti-Hermitian) give non-commuting kernel-preserving
flows; used to fix the bracket and commutator conventions.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from ..gauge_geometry import FlowSpec
from ..kernel_core import ChartKernel, Representation, complex_to_real, real_to_complex


def projective_kernel(d: int = 2, power: int = 2) -> ChartKernel:
    def func(x, y):
        return np.array([[(1 + np.vdot(real_to_complex(x), real_to_complex(y))) ** power]])

    def block_func(P, Q):
        G = 1 + real_to_complex(P).conj() @ real_to_complex(Q).T
        return (G ** power)[..., None, None]

    return ChartKernel(f"projective(d={d},n={power})", 1, 2 * d, func, holomorphic=True,
                       block_func=block_func, params={"d": d, "power": power})


def su2_generators() -> list[np.ndarray]:
    """``i`` times the Pauli matrices (anti-Hermitian)."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0 + 0j, -1.0])
    return [0.5j * s for s in (sx, sy, sz)]


def linear_flow(H: np.ndarray, name: str = "linear") -> FlowSpec:
    H = np.asarray(H, dtype=complex)

    def sigma(t, x):
        return complex_to_real(expm(t * H) @ real_to_complex(x))

    def velocity(x):
        return complex_to_real(H @ real_to_complex(x))

    return FlowSpec(sigma, lambda t, x: 0.0, Representation("u1", 1), velocity, name)
