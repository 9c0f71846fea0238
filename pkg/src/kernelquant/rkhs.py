"""Finite-sample Hilbert space of a kernel: Gram matrices, positivity
certificates, feature factorizations and the reproducing property."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernel_core import ChartKernel, KernelError, as_coords


class PositivityError(KernelError):
    """Raised when a Gram matrix fails the positivity certificate."""


@dataclass(frozen=True, eq=False)
class GramSystem:
    """Sample points with their block Gram matrix ``G[(i,a),(j,b)] = K(p_i,p_j)_ab``."""

    points: np.ndarray
    gram: np.ndarray
    fiber_dim: int
    eig_floor: float = 1e-12
    kernel: ChartKernel | None = None

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.gram, 2)) if self.gram.size else 0.0

    def block(self, i: int, j: int) -> np.ndarray:
        N = self.fiber_dim
        return self.gram[i * N:(i + 1) * N, j * N:(j + 1) * N]

    def with_points(self, extra) -> "GramSystem":
        """System on the sample points followed by ``extra``."""
        if self.kernel is None:
            raise KernelError("extending a Gram system needs its kernel")
        pts = np.vstack([self.points, np.atleast_2d([as_coords(p) for p in extra])])
        return assemble_gram(self.kernel, pts, self.eig_floor)

    def save(self, path: str | Path) -> None:
        """Row-major JSON dump with complex entries as (re, im) pairs."""
        import json

        Path(path).write_text(json.dumps({
            "points": self.points.tolist(),
            "fiber_dim": self.fiber_dim,
            "gram": np.stack([self.gram.real, self.gram.imag], -1).tolist(),
        }))


@dataclass(frozen=True)
class Certificate:
    min_eig: float
    norm: float
    passed: bool

    def __bool__(self):
        return self.passed


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Coordinates of the vectors ``K(p_i) e_a`` in an orthonormal basis of their span.

    ``columns`` has shape ``(r, J N)``; column ``(i, a)`` is the image of
    ``e_a`` at sample point ``i``.
    """

    columns: np.ndarray

    @property
    def rank(self) -> int:
        return self.columns.shape[0]

    def gram(self) -> np.ndarray:
        return self.columns.conj().T @ self.columns


@dataclass(frozen=True)
class SpanElement:
    """``f = sum_i K(., p_i) v_i`` with coefficients ``coeffs[i] = v_i``."""

    coeffs: np.ndarray

    def vector(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex).ravel()


def assemble_gram(k: ChartKernel, pts, eig_floor: float = 1e-12) -> GramSystem:
    """Evaluate the block Gram matrix of ``k`` on ``pts``."""
    pts = np.atleast_2d(np.asarray([as_coords(p) for p in pts], dtype=float))
    if len(pts) == 0:
        raise KernelError("need at least one point")
    G = k.block_matrix(pts, pts)
    return GramSystem(pts, G, k.fiber_dim, eig_floor, k)


def _check_hermitian(G: np.ndarray, tol: float = 1e-12) -> None:
    scale = max(1.0, float(np.max(np.abs(G)))) if G.size else 1.0
    if np.max(np.abs(G - G.conj().T), initial=0.0) > tol * scale:
        raise KernelError("Gram matrix is not Hermitian")


def certify_positivity(g: GramSystem) -> Certificate:
    """Hermitian eigensolve; pass iff ``min_eig >= -eig_floor * ||G||_2``."""
    _check_hermitian(g.gram)
    ev = np.linalg.eigvalsh(g.gram)
    norm = float(np.max(np.abs(ev)))
    lo = float(ev[0])
    return Certificate(lo, norm, lo >= -g.eig_floor * norm)


def factorize(g: GramSystem) -> FeatureMap:
    """Feature factorization ``G = F^* F`` from the truncated eigendecomposition."""
    cert = certify_positivity(g)
    if not cert:
        raise PositivityError(f"Gram matrix not positive: min eig {cert.min_eig:.3e}")
    ev, V = np.linalg.eigh(g.gram)
    keep = ev > g.eig_floor * cert.norm
    cols = np.sqrt(ev[keep])[:, None] * V[:, keep].conj().T
    return FeatureMap(cols[::-1])


def _coefficient_vector(g: GramSystem, f: SpanElement) -> np.ndarray:
    c = f.vector()
    if c.size != g.gram.shape[0]:
        raise KernelError("span element does not match the sample points")
    return c


def evaluate_span(g: GramSystem, f: SpanElement, p) -> np.ndarray:
    """``f(p)`` by direct kernel evaluation (not through the Gram matrix)."""
    if g.kernel is None:
        raise KernelError("pointwise evaluation needs the kernel")
    c = _coefficient_vector(g, f).reshape(g.size, g.fiber_dim)
    row = g.kernel.blocks([as_coords(p)], g.points)[0]
    return np.einsum("iab,ib->a", row, c)


def reproducing_residual(g: GramSystem, f: SpanElement, p: int, v) -> float:
    """``|<K(., p_p) v | f> - <v, f(p_p)>|`` for sample index ``p``.

    The left side uses Gram entries, the right side evaluates ``f`` from the
    kernel.
    """
    N = g.fiber_dim
    c = _coefficient_vector(g, f)
    e = np.zeros(g.gram.shape[0], dtype=complex)
    e[p * N:(p + 1) * N] = v
    lhs = np.vdot(e, g.gram @ c)
    rhs = np.vdot(np.asarray(v, dtype=complex), evaluate_span(g, f, g.points[p]))
    return float(abs(lhs - rhs))


def span_norm(g: GramSystem, f: SpanElement) -> float:
    c = _coefficient_vector(g, f)
    return float(np.sqrt(max(np.real(np.vdot(c, g.gram @ c)), 0.0)))


def norm_bound_check(g: GramSystem, f: SpanElement, p: int) -> bool:
    """Pointwise bound ``||f(p)|| <= sqrt(||K(p,p)||_2) ||f|| + 1e-10``."""
    val = np.linalg.norm(evaluate_span(g, f, g.points[p]))
    kpp = np.linalg.norm(g.block(p, p), 2)
    return bool(val <= np.sqrt(kpp) * span_norm(g, f) + 1e-10)


def factorization_equivalence(F1: FeatureMap, F2: FeatureMap, tol: float = 1e-9) -> np.ndarray:
    """Unitary ``U`` with ``U F1 = F2``, recovered by least squares.

    Both maps must factorize the same Gram matrix.
    """
    G1, G2 = F1.gram(), F2.gram()
    scale = max(1.0, float(np.linalg.norm(G1)))
    if G1.shape != G2.shape or np.linalg.norm(G1 - G2) > tol * scale:
        raise KernelError("feature maps factorize different Gram matrices")
    # U F1 = F2  <=>  F1^T U^T = F2^T
    Ut, *_ = np.linalg.lstsq(F1.columns.T, F2.columns.T, rcond=None)
    return Ut.T
