"""Difference kernels ``chi(v - zbar)`` built from probability measures on the line.

``chi(s) = int exp(-i s w) dsigma(w)`` is the characteristic function of the
measure.  The coherent states are ``K(z) = exp(-i z w)`` in ``L^2(sigma)``, so
``<K(z)|K(v)> = chi(v - zbar)`` and translations ``z -> z + t`` preserve the
kernel with trivial cocycle.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import _accel
from ..gauge_geometry import FlowSpec, HamiltonianPair
from ..kernel_core import ChartKernel, KernelError, Representation, register_kernel


@dataclass(frozen=True)
class MomentMeasure:
    """Gaussian (standard normal) or finitely supported probability measure.

    Parameters
    ----------
    kind : {"gaussian", "discrete"}
    atoms, weights : array_like, optional
        Support and positive weights of a discrete measure (renormalized to 1
        within 1e-12, otherwise rejected).
    """

    kind: str = "gaussian"
    atoms: tuple = field(default=())
    weights: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "gaussian":
            return
        if self.kind != "discrete":
            raise KernelError(f"unknown measure kind {self.kind!r}")
        a = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if a.ndim != 1 or a.shape != w.shape or a.size == 0:
            raise KernelError("discrete measure needs matching atoms and weights")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise KernelError("weights must be positive and sum to one")
        if len(np.unique(a)) != a.size:
            raise KernelError("atoms must be distinct")
        object.__setattr__(self, "atoms", tuple(a.tolist()))
        object.__setattr__(self, "weights", tuple(w.tolist()))

    @classmethod
    def discrete(cls, atoms, weights=None) -> "MomentMeasure":
        atoms = list(atoms)
        if weights is None:
            weights = [1.0 / len(atoms)] * len(atoms)
        return cls("discrete", tuple(atoms), tuple(weights))

    @classmethod
    def from_config(cls, cfg: dict) -> "MomentMeasure":
        kind = cfg.get("kind", "gaussian")
        if kind == "gaussian":
            return cls()
        return cls.discrete(cfg["atoms"], cfg.get("weights"))

    @property
    def label(self) -> str:
        if self.kind == "gaussian":
            return "gaussian"
        return f"discrete[{len(self.atoms)}]"

    @property
    def support_size(self) -> float:
        return math.inf if self.kind == "gaussian" else len(self.atoms)

    # moments ---------------------------------------------------------------------------

    def moment(self, n: int) -> float:
        if self.kind == "gaussian":
            return 0.0 if n % 2 else float(_double_factorial(n - 1))
        a, w = np.asarray(self.atoms), np.asarray(self.weights)
        return float(np.sum(w * a ** n))

    def abs_moment(self, n: int) -> float:
        if self.kind == "gaussian":
            return 2 ** (n / 2) * math.gamma((n + 1) / 2) / math.sqrt(math.pi)
        a, w = np.asarray(self.atoms), np.asarray(self.weights)
        return float(np.sum(w * np.abs(a) ** n))

    def moment_growth(self, n_max: int = 30) -> np.ndarray:
        """``|mu|_n^{1/n} / n`` for ``n = 1..n_max``; tends to zero for admissible measures."""
        n = np.arange(1, n_max + 1)
        return np.array([self.abs_moment(k) ** (1.0 / k) / k for k in n])

    def check_moment_condition(self, n_max: int = 30) -> bool:
        """Exact for the built-in kinds; a warning-level heuristic otherwise."""
        if self.kind in ("gaussian", "discrete"):
            return True
        g = self.moment_growth(n_max)
        ok = bool(g[-1] < g[len(g) // 2])
        if not ok:
            warnings.warn("moment growth does not appear to decay", RuntimeWarning)
        return ok

    # characteristic function ------------------------------------------------------------

    def chi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if self.kind == "gaussian":
            return np.exp(-s * s / 2)
        return _accel.discrete_chi(s, np.asarray(self.atoms), np.asarray(self.weights))

    def dlogchi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if self.kind == "gaussian":
            return -s
        a, w = np.asarray(self.atoms), np.asarray(self.weights)
        e = np.exp(-1j * s[..., None] * a) * w
        return np.sum(-1j * a * e, axis=-1) / np.sum(e, axis=-1)

    def d2logchi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if self.kind == "gaussian":
            return -np.ones_like(s)
        a, w = np.asarray(self.atoms), np.asarray(self.weights)
        e = np.exp(-1j * s[..., None] * a) * w
        c0 = np.sum(e, axis=-1)
        c1 = np.sum(-1j * a * e, axis=-1)
        c2 = np.sum(-(a ** 2) * e, axis=-1)
        return c2 / c0 - (c1 / c0) ** 2


def _double_factorial(n: int) -> int:
    return 1 if n <= 0 else n * _double_factorial(n - 2)


# -- orthogonal polynomials ---------------------------------------------------------------


@dataclass(frozen=True)
class OrthoPolyBasis:
    """Orthonormal polynomials; row ``n`` of ``coeffs`` holds ``P_n`` in the monomial basis."""

    coeffs: np.ndarray

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, w) -> np.ndarray:
        """Values ``P_n(w)``, shape ``(size,) + shape(w)``."""
        w = np.asarray(w)
        V = np.stack([w ** k for k in range(self.size)])
        return np.tensordot(self.coeffs, V, axes=1)


def ortho_polys(measure: MomentMeasure, n: int) -> OrthoPolyBasis:
    """First ``n`` orthonormal polynomials from the Cholesky factor of the Hankel matrix."""
    if n < 1:
        raise KernelError("need n >= 1")
    if n > measure.support_size:
        raise KernelError("Hankel matrix singular: n exceeds the support size")
    H = np.array([[measure.moment(i + j) for j in range(n)] for i in range(n)])
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise KernelError("Hankel matrix is not positive definite") from None
    C = np.linalg.solve(L, np.eye(n))
    return OrthoPolyBasis(np.tril(C))


def chi_n(measure: MomentMeasure, n: int, z) -> np.ndarray:
    """``chi_n(z) = int exp(-i z w) P_n(w) dsigma(w)``."""
    z = np.asarray(z, dtype=complex)
    if measure.kind == "gaussian":
        return (-1j * z) ** n / math.sqrt(math.factorial(n)) * np.exp(-z * z / 2)
    P = ortho_polys(measure, n + 1)
    a, w = np.asarray(measure.atoms), np.asarray(measure.weights)
    vals = P(a)[n] * w
    return np.exp(-1j * z[..., None] * a) @ vals


def sigma_kernel_value(measure: MomentMeasure, z, v) -> np.ndarray:
    """``K(zbar, v) = chi(v - zbar)`` for complex ``z`` and ``v``."""
    return measure.chi(np.asarray(v) - np.conj(z))


def kernel_series(measure: MomentMeasure, z, v, terms: int) -> complex:
    """Truncated factorization ``sum_{n<terms} conj(chi_n(z)) chi_n(v)``."""
    return complex(sum(np.conj(chi_n(measure, n, z)) * chi_n(measure, n, v) for n in range(terms)))


def sigma_kernel(measure: MomentMeasure) -> ChartKernel:
    """Scalar kernel on the complex line (real chart ``(x, y)``)."""

    def func(x, y):
        return np.array([[measure.chi(complex(y[0], y[1]) - complex(x[0], -x[1]))]])

    def block_func(P, Q):
        z = P[:, 0] + 1j * P[:, 1]
        v = Q[:, 0] + 1j * Q[:, 1]
        return measure.chi(v[None, :] - np.conj(z)[:, None])[..., None, None]

    return ChartKernel(f"moment:{measure.label}", 1, 2, func, holomorphic=True,
                       block_func=block_func, params={"measure": measure})


@register_kernel("moment:gaussian")
def _gaussian_kernel() -> ChartKernel:
    return sigma_kernel(MomentMeasure())


@register_kernel("moment:discrete")
def _discrete_kernel(atoms=(-1.0, 1.0), weights=None) -> ChartKernel:
    return sigma_kernel(MomentMeasure.discrete(atoms, weights))


def translation_model(measure: MomentMeasure, chi_floor: float = 1e-10) -> tuple[HamiltonianPair, FlowSpec]:
    """Translations ``z -> z + t`` with ``F(z) = -(log chi)'(z - zbar)`` and ``X = d/dx``."""

    def F(x):
        z = complex(x[0], x[1])
        s = z - np.conj(z)
        if abs(measure.chi(s)) <= chi_floor:
            raise KernelError("log chi undefined: chi vanishes at this point")
        return np.array([[-measure.dlogchi(s)]])

    def X(x):
        return np.array([1.0, 0.0])

    def sigma(t, x):
        return np.asarray(x, float) + np.array([t, 0.0])

    flow = FlowSpec(sigma, lambda t, x: 0.0, Representation("u1", 1), X, "translation")
    return HamiltonianPair(F, X, "translation"), flow


# -- exact finite model ---------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteOracle:
    """Atom-basis realization: ``K(z) = (sqrt(w_k) exp(-i z w_k))_k``, ``Fhat = diag(atoms)``."""

    measure: MomentMeasure

    def __post_init__(self):
        if self.measure.kind != "discrete" or len(self.measure.atoms) > 64:
            raise KernelError("discrete oracle needs a discrete measure with <= 64 atoms")

    @property
    def Fhat(self) -> np.ndarray:
        return np.diag(np.asarray(self.measure.atoms, dtype=complex))

    def coherent(self, z) -> np.ndarray:
        a, w = np.asarray(self.measure.atoms), np.asarray(self.measure.weights)
        return np.sqrt(w) * np.exp(-1j * complex(z) * a)

    def frame(self, zs) -> np.ndarray:
        return np.stack([self.coherent(z) for z in zs], axis=1)

    def evolve(self, t: float) -> np.ndarray:
        """``exp(-i t Fhat)``, which maps ``K(z)`` to ``K(z + t)``."""
        return np.diag(np.exp(-1j * t * np.asarray(self.measure.atoms)))


def discrete_oracle(measure: MomentMeasure) -> DiscreteOracle:
    return DiscreteOracle(measure)
