"""Operator-valued kernels on a chart, structural-group representations and
bundle extension.

Points on complex charts are stored as real coordinate vectors with
interleaved ``(re, im)`` pairs, so ``(z1, z2)`` becomes
``[Re z1, Im z1, Re z2, Im z2]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np


class KernelError(ValueError):
    """Raised for invalid kernel evaluations."""


class DomainError(KernelError):
    """Raised when a point lies outside the declared chart domain."""


# -- points ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """A point of a coordinate chart.

    Parameters
    ----------
    coords : array_like
        Real chart coordinates. Complex charts interleave real and imaginary
        parts.
    is_complex : bool
        Whether ``coords`` encodes complex coordinates.
    """

    coords: np.ndarray
    is_complex: bool = True

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).copy()
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise KernelError("chart coordinates must be a finite 1-d vector")
        if self.is_complex and c.size % 2:
            raise KernelError("complex chart needs an even number of coordinates")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_complex(cls, z) -> "ChartPoint":
        return cls(complex_to_real(z), True)

    @property
    def z(self) -> np.ndarray:
        if not self.is_complex:
            raise KernelError("real chart point has no complex coordinates")
        return real_to_complex(self.coords)

    def __len__(self):
        return self.coords.size

    def __repr__(self):
        if self.is_complex:
            return f"ChartPoint(z={np.array2string(self.z, precision=6)})"
        return f"ChartPoint(x={np.array2string(self.coords, precision=6)})"


def complex_to_real(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def real_to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def as_coords(p) -> np.ndarray:
    """Coordinates of a ``ChartPoint`` or of a plain real array."""
    if isinstance(p, ChartPoint):
        return p.coords
    return np.asarray(p, dtype=float)


def complex_direction(k: int, dim: int, kind: str = "z") -> np.ndarray:
    """Wirtinger tangent ``d/dz_k`` (``kind='z'``) or ``d/dzbar_k`` in the
    real basis of a chart with ``dim`` complex coordinates."""
    u = np.zeros(2 * dim, dtype=complex)
    s = -1.0 if kind == "z" else 1.0
    u[2 * k] = 0.5
    u[2 * k + 1] = 0.5j * s
    return u


# -- domains -----------------------------------------------------------------------


@dataclass(frozen=True)
class ChartDomain:
    """Coordinate box, optionally intersected with discs ``|z_k| <= radius``."""

    lo: tuple
    hi: tuple
    disc_radius: float | None = None

    def contains(self, x: np.ndarray) -> bool:
        if np.any(x < np.asarray(self.lo)) or np.any(x > np.asarray(self.hi)):
            return False
        if self.disc_radius is not None:
            if np.any(np.abs(real_to_complex(x)) > self.disc_radius):
                return False
        return True


# -- kernels -------------------------------------------------------------------------


BlockFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ChartKernel:
    """Kernel ``K(m, n)`` on a chart with values in ``N x N`` complex matrices.

    ``func`` takes two real coordinate vectors. The optional ``block_func``
    evaluates all pairs of two point sets at once, shape ``(J, L, N, N)``.
    """

    name: str
    fiber_dim: int
    chart_dim: int
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    holomorphic: bool = False
    is_complex: bool = True
    domain: ChartDomain | None = None
    block_func: BlockFunc | None = None
    params: dict = field(default_factory=dict)

    def check(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.chart_dim,):
            raise KernelError(f"{self.name}: expected {self.chart_dim} coordinates, got {x.shape}")
        if self.domain is not None and not self.domain.contains(x):
            raise DomainError(f"{self.name}: point {x} outside chart domain")
        return x

    def __call__(self, m, n) -> np.ndarray:
        x, y = self.check(as_coords(m)), self.check(as_coords(n))
        out = np.asarray(self.func(x, y), dtype=complex)
        return out.reshape(self.fiber_dim, self.fiber_dim)

    def blocks(self, P, Q) -> np.ndarray:
        P = np.atleast_2d(np.asarray([as_coords(p) for p in P], dtype=float))
        Q = np.atleast_2d(np.asarray([as_coords(q) for q in Q], dtype=float))
        for x in P:
            self.check(x)
        for y in Q:
            self.check(y)
        if self.block_func is not None:
            return np.asarray(self.block_func(P, Q), dtype=complex)
        N = self.fiber_dim
        out = np.empty((len(P), len(Q), N, N), dtype=complex)
        for i, x in enumerate(P):
            for j, y in enumerate(Q):
                out[i, j] = np.asarray(self.func(x, y), dtype=complex).reshape(N, N)
        return out

    def block_matrix(self, P, Q) -> np.ndarray:
        """All-pairs evaluation flattened to a ``(J N, L N)`` matrix."""
        b = self.blocks(P, Q)
        J, L, N, _ = b.shape
        return b.transpose(0, 2, 1, 3).reshape(J * N, L * N)

    def point(self, coords) -> ChartPoint:
        return ChartPoint(coords, self.is_complex)


def eval_kernel(k: ChartKernel, m, n) -> np.ndarray:
    """Evaluate ``K(m, n)``; raises ``DomainError`` outside the chart."""
    return k(m, n)


def hermitian_residual(k: ChartKernel, pts: Sequence) -> float:
    """Max over sampled pairs of ``||K(m,n) - K(n,m)^*||_F``."""
    if len(pts) == 0:
        raise KernelError("need at least one point")
    B = k.blocks(pts, pts)
    return float(np.max(np.linalg.norm(B - np.conj(B.transpose(1, 0, 3, 2)), axis=(2, 3))))


def cauchy_riemann_residual(k: ChartKernel, m, n, h: float = 1e-6) -> float:
    """FD size of ``d/dz K(., n)`` at ``m`` and ``d/dwbar K(m, .)`` at ``n``.

    Zero for a kernel anti-holomorphic in the first slot and holomorphic in the
    second.
    """
    x, y = as_coords(m), as_coords(n)
    worst = 0.0
    for j in range(x.size // 2):
        for slot in (0, 1):
            base = x if slot == 0 else y
            kind = "z" if slot == 0 else "zbar"
            u = complex_direction(j, base.size // 2, kind)
            d = np.zeros((k.fiber_dim, k.fiber_dim), dtype=complex)
            for c in np.nonzero(u)[0]:
                e = np.zeros_like(base)
                e[c] = h
                if slot == 0:
                    d += u[c] * (k(x + e, y) - k(x - e, y)) / (2 * h)
                else:
                    d += u[c] * (k(x, y + e) - k(x, y - e)) / (2 * h)
            worst = max(worst, float(np.linalg.norm(d)))
    return worst


def constant_kernel(C, chart_dim: int = 2, name: str = "constant") -> ChartKernel:
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    return ChartKernel(name, C.shape[0], chart_dim, lambda x, y: C, holomorphic=True)


def corrupt_kernel(k: ChartKernel, amount: float = 1e-3) -> ChartKernel:
    """Inject a non-Hermitian defect: add ``amount`` to the ``(0, 1)`` entry
    (``i*amount`` to the single entry of scalar kernels)."""
    N = k.fiber_dim
    defect = np.zeros((N, N), dtype=complex)
    if N > 1:
        defect[0, 1] = amount
    else:
        defect[0, 0] = 1j * amount

    def func(x, y):
        return np.asarray(k.func(x, y), dtype=complex).reshape(N, N) + defect

    return ChartKernel(k.name + "+corrupt", N, k.chart_dim, func, k.holomorphic,
                       k.is_complex, k.domain, params=dict(k.params, corrupt=amount))


# -- representations -------------------------------------------------------------------


@dataclass(frozen=True)
class Representation:
    """Representation ``T`` of a matrix structural group on ``C^N``.

    ``kind`` is ``"u1"`` (one angle, acting by a scalar phase), ``"torus"``
    (vector of angles, diagonal phases) or ``"matrix"`` (explicit invertible
    matrices, composition by matrix product).
    """

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("u1", "torus", "matrix"):
            raise KernelError(f"unknown representation kind {self.kind!r}")

    @property
    def unitary(self) -> bool:
        return self.kind != "matrix"

    def identity(self):
        if self.kind == "u1":
            return 0.0
        if self.kind == "torus":
            return np.zeros(self.dim)
        return np.eye(self.dim, dtype=complex)

    def apply(self, g) -> np.ndarray:
        if self.kind == "u1":
            return np.exp(1j * float(g)) * np.eye(self.dim, dtype=complex)
        if self.kind == "torus":
            g = np.asarray(g, dtype=float)
            if g.shape != (self.dim,):
                raise KernelError("torus parameter has wrong length")
            return np.diag(np.exp(1j * g))
        g = np.asarray(g, dtype=complex)
        if g.shape != (self.dim, self.dim):
            raise KernelError("matrix parameter has wrong shape")
        return g

    def compose(self, g, h):
        if self.kind == "matrix":
            return np.asarray(g, dtype=complex) @ np.asarray(h, dtype=complex)
        return np.asarray(g, dtype=float) + np.asarray(h, dtype=float)

    def inverse(self, g):
        if self.kind == "matrix":
            return np.linalg.inv(np.asarray(g, dtype=complex))
        return -np.asarray(g, dtype=float)

    def homomorphism_residual(self, g, h) -> float:
        return float(np.linalg.norm(self.apply(g) @ self.apply(h) - self.apply(self.compose(g, h))))


@dataclass(frozen=True, eq=False)
class BundlePoint:
    """Point ``s(m) g`` of the trivialized bundle."""

    base: Any
    group: Any


def bundle_extend(k: ChartKernel, T: Representation, cond_max: float = 1e12):
    """Extend ``k`` to bundle points by ``K((m,g),(n,h)) = T(g)^* K(m,n) T(h)``."""

    def _rep(g):
        M = T.apply(g)
        if np.linalg.cond(M) > cond_max:
            raise KernelError("singular representation matrix")
        return M

    def extended(p: BundlePoint, q: BundlePoint) -> np.ndarray:
        return _rep(p.group).conj().T @ k(p.base, q.base) @ _rep(q.group)

    return extended


def transition_amplitude(k: ChartKernel, mv, nw) -> complex:
    """Normalized overlap ``<v, K(m,n) w> / sqrt(<v,K(m,m)v> <w,K(n,n)w>)``."""
    (m, v), (n, w) = mv, nw
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    a = np.real(np.vdot(v, k(m, m) @ v))
    b = np.real(np.vdot(w, k(n, n) @ w))
    if a <= 0 or b <= 0:
        raise KernelError("degenerate coherent state (zero self-amplitude)")
    return complex(np.vdot(v, k(m, n) @ w) / np.sqrt(a * b))


# -- registry ------------------------------------------------------------------------


_REGISTRY: dict[str, Callable[..., ChartKernel]] = {}


def register_kernel(name: str):
    def deco(factory):
        _REGISTRY[name] = factory
        return factory

    return deco


def make_kernel(name: str, **params) -> ChartKernel:
    """Build a registered kernel (``bidisc``, ``moment:gaussian``,
    ``moment:discrete``, ``tabulated``)."""
    import kernelquant.examples  # noqa: F401  (registers the built-in kernels)

    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KernelError(f"unknown kernel {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(**params)


def available_kernels() -> list[str]:
    import kernelquant.examples  # noqa: F401

    return sorted(_REGISTRY)


def _decode_complex(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


@register_kernel("tabulated")
def load_tabulated_kernel(path: str | Path, tol: float = 1e-12) -> ChartKernel:
    """Kernel given by a table of values on a finite point grid.

    The JSON file holds ``fiber_dim``, ``complex`` (bool), ``points`` (list of
    coordinate vectors) and ``values`` with shape ``[J][J][N][N][2]`` storing
    ``K(p_i, p_j)`` as (re, im) pairs. Evaluation away from the grid raises
    ``DomainError``.
    """
    data = json.loads(Path(path).read_text())
    pts = np.asarray(data["points"], dtype=float)
    N = int(data["fiber_dim"])
    vals = _decode_complex(data["values"])
    if vals.shape != (len(pts), len(pts), N, N):
        raise KernelError("tabulated values do not match points/fiber_dim")

    def index(x):
        d = np.max(np.abs(pts - x), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise DomainError("point not on the tabulated grid")
        return i

    def func(x, y):
        return vals[index(x), index(y)]

    return ChartKernel(f"tabulated:{Path(path).name}", N, pts.shape[1], func,
                       is_complex=bool(data.get("complex", True)),
                       params={"path": str(path), "points": pts})


def save_tabulated_kernel(path: str | Path, k: ChartKernel, pts) -> None:
    """Write ``k`` sampled on ``pts`` in the tabulated-kernel format."""
    B = k.blocks(pts, pts)
    payload = {
        "fiber_dim": k.fiber_dim,
        "complex": k.is_complex,
        "points": [list(map(float, as_coords(p))) for p in pts],
        "values": np.stack([B.real, B.imag], axis=-1).tolist(),
    }
    Path(path).write_text(json.dumps(payload))
