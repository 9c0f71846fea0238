"""Rank-2 kernel on the bidisc with its circle symmetries.

``K(zbar, w) = [[1 + 1/(1 - zbar1 w1), w1], [zbar1, 1 + 1/(1 - zbar2 w2) + zbar1 w1]]``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _accel
from ..gauge_geometry import FlowSpec, HamiltonianPair, fit_torus_flow
from ..kernel_core import (ChartDomain, ChartKernel, KernelError, Representation, complex_to_real,
                           real_to_complex, register_kernel)

SAFE_RADIUS = 0.8
DOMAIN_RADIUS = 0.95


def _check_radius(z, radius=DOMAIN_RADIUS):
    if np.any(np.abs(z) >= radius):
        raise KernelError(f"bidisc point {z} too close to the boundary")


def kernel_matrix(zbar_src, w) -> np.ndarray:
    """Closed form with the first argument given as the point ``z`` (conjugated inside)."""
    a = np.conj(zbar_src[0]) * w[0]
    b = np.conj(zbar_src[1]) * w[1]
    return np.array([[1 + 1 / (1 - a), w[0]],
                     [np.conj(zbar_src[0]), 1 + 1 / (1 - b) + a]], dtype=complex)


@register_kernel("bidisc")
def bidisc_kernel(radius: float = DOMAIN_RADIUS) -> ChartKernel:
    """Holomorphic bidisc kernel on the real chart ``(x1, y1, x2, y2)``."""

    def func(x, y):
        return kernel_matrix(real_to_complex(x), real_to_complex(y))

    def block_func(P, Q):
        return _accel.bidisc_blocks(real_to_complex(P), real_to_complex(Q))

    dom = ChartDomain((-1.0,) * 4, (1.0,) * 4, radius)
    return ChartKernel("bidisc", 2, 4, func, holomorphic=True, domain=dom,
                       block_func=block_func, params={"radius": radius})


def random_points(n: int, rng: np.random.Generator, radius: float = SAFE_RADIUS) -> np.ndarray:
    """``n`` points uniform in the polydisc of the given radius, real coordinates."""
    r = radius * np.sqrt(rng.uniform(size=(n, 2)))
    ang = rng.uniform(0, 2 * np.pi, size=(n, 2))
    return complex_to_real(r * np.exp(1j * ang))


# -- flows --------------------------------------------------------------------------


def rotation(s1: float, s2: float):
    """Base flow ``(z1, z2) -> (e^{i s1 t} z1, e^{i s2 t} z2)`` and its velocity field."""

    def sigma(t, x):
        z = real_to_complex(x)
        return complex_to_real(z * np.exp(1j * t * np.array([s1, s2])))

    def velocity(x):
        z = real_to_complex(x)
        return complex_to_real(1j * np.array([s1, s2]) * z)

    return sigma, velocity


def bidisc_flow(t: float, z) -> np.ndarray:
    """Displayed holomorphic flow ``(e^{it} z1, e^{-it} z2)`` on complex coordinates."""
    z = np.asarray(z, dtype=complex)
    return np.array([np.exp(1j * t) * z[0], np.exp(-1j * t) * z[1]])


def displayed_cocycle(t: float) -> np.ndarray:
    """Cocycle ``diag(e^{it}, e^{-it})`` as displayed alongside the flow."""
    return np.diag([np.exp(1j * t), np.exp(-1j * t)])


ANCHORS = complex_to_real(np.array([[0.3 + 0.1j, -0.2 + 0.25j], [-0.15 + 0.4j, 0.35 - 0.1j],
                                    [0.05 - 0.3j, 0.2 + 0.2j]]))


def solved_rotation_flow(k: ChartKernel, s1: float = 1.0, s2: float = -1.0) -> tuple[FlowSpec, np.ndarray]:
    """Rotation flow with the cocycle found by :func:`cocycle_solve` (torus, first phase 0)."""
    sigma, vel = rotation(s1, s2)
    return fit_torus_flow(k, sigma, Representation("torus", 2), ANCHORS, velocity=vel,
                          name=f"rotation({s1:g},{s2:g})")


# -- Hamiltonian functions ------------------------------------------------------------


def bidisc_F_hol(z) -> np.ndarray:
    """The displayed matrix function paired with the rotation field, holomorphic gauge."""
    z = np.asarray(z, dtype=complex)
    _check_radius(z)
    a = abs(z[0]) ** 2
    b = abs(z[1]) ** 2
    den = 4 - a - 2 * b
    f11 = 1j * (4 - 3 * a - 2 * b + 2 * a * a + a * b - a * a * b) / ((1 - b) * den)
    f12 = 1j * z[0] * (1 - a) * (2 - 4 * b + b * b) / ((1 - b) * den)
    f21 = 1j * np.conj(z[0]) * a * (1 - b) / ((1 - a) * den)
    f22 = (1j * (1 - a) * (-4 + 2 * a + 8 * b - 2 * b * b - 4 * a * b - a * b * b)
           / ((1 - b) * den))
    return np.array([[f11, f12], [f21, f22]])


def theta_hol_rotation(z, s1: float = 1.0, s2: float = 1.0) -> np.ndarray:
    """Closed form of ``theta^hol(X) = K^{-1} X_n K|_{n=m}`` for the rotation field."""
    z = np.asarray(z, dtype=complex)
    a = abs(z[0]) ** 2
    b = abs(z[1]) ** 2
    K = kernel_matrix(z, z)
    XK = 1j * np.array([[s1 * a / (1 - a) ** 2, s1 * z[0]],
                        [0.0, s1 * a + s2 * b / (1 - b) ** 2]])
    return np.linalg.solve(K, XK)


def consistent_F_hol(z, s1: float = 1.0, s2: float = 1.0, rates=(0.0, 1.0)) -> np.ndarray:
    """``F = -phi - theta^hol(X)`` for the rotation with torus cocycle ``exp(i t rates)``.

    ``rates = (alpha, alpha + s1)`` are the kernel-preserving choices; ``phi = -i diag(rates)``.
    """
    phi = -1j * np.diag(np.asarray(rates, dtype=float))
    return -phi - theta_hol_rotation(z, s1, s2)


def displayed_pair(s1: float = 1.0, s2: float = 1.0) -> HamiltonianPair:
    _, vel = rotation(s1, s2)
    return HamiltonianPair(lambda x: bidisc_F_hol(real_to_complex(x)), vel, "displayed F_hol")


def consistent_pair(s1: float = 1.0, s2: float = 1.0, alpha: float = 0.0) -> HamiltonianPair:
    _, vel = rotation(s1, s2)
    rates = (alpha, alpha + s1)
    return HamiltonianPair(lambda x: consistent_F_hol(real_to_complex(x), s1, s2, rates), vel,
                           f"F_hol(rates={rates})")


# -- Kostant-Souriau reference -----------------------------------------------------------


@dataclass(frozen=True)
class PsiCoefficients:
    """Kernel-section combination ``psi = sum_k K(., w_k) v_k``.

    ``w`` has shape ``(n, 2)`` (complex points), ``v`` shape ``(n, 2)``.
    """

    w: np.ndarray
    v: np.ndarray

    @property
    def c(self) -> complex:
        return complex(np.sum(self.v[:, 0] + self.w[:, 0] * self.v[:, 1]))


def bidisc_psi(coef: PsiCoefficients, zbar, displayed_form: bool = False) -> np.ndarray:
    """Rational form of ``psi(zbar)``; ``zbar`` are the conjugated coordinates.

    The second component carries the constant ``sum_k v_2k`` contributed by the
    ``1`` in the ``(2, 2)`` kernel entry; ``displayed_form=True`` drops it.
    """
    zb = np.asarray(zbar, dtype=complex)
    w, v = coef.w, coef.v
    psi1 = np.sum(v[:, 0] / (1 - zb[0] * w[:, 0])) + coef.c
    psi2 = np.sum(v[:, 1] / (1 - zb[1] * w[:, 1])) + coef.c * zb[0]
    if not displayed_form:
        psi2 = psi2 + np.sum(v[:, 1])
    return np.array([psi1, psi2])


def bidisc_ks_reference(coef: PsiCoefficients, zbar, diag=(1.0, -1.0), c=None,
                        tol: float = 1e-12, displayed_form: bool = False) -> np.ndarray:
    """Displayed operator ``i(zbar . d psi + diag * psi)`` with exact derivatives.

    ``c`` (if given) must match the coefficient constraint.
    """
    if c is not None and abs(c - coef.c) > tol:
        raise KernelError("coefficients violate the c-constraint")
    zb = np.asarray(zbar, dtype=complex)
    w, v = coef.w, coef.v
    psi = bidisc_psi(coef, zb, displayed_form)
    d1psi1 = np.sum(v[:, 0] * w[:, 0] / (1 - zb[0] * w[:, 0]) ** 2)
    d1psi2 = coef.c
    d2psi2 = np.sum(v[:, 1] * w[:, 1] / (1 - zb[1] * w[:, 1]) ** 2)
    out = np.array([zb[0] * d1psi1, zb[0] * d1psi2 + zb[1] * d2psi2]) + np.asarray(diag) * psi
    return 1j * out
