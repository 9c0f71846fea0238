"""Connection, curvature and Hamiltonian pairs of a kernel, by finite differences.

Conventions (see :mod:`kernelquant.conventions`):

* ``theta(m)(u) = K(m,m)^{-1} d_n K(m,n)|_{n=m}(u)``
* ``Omega(u,v) = u(theta(v)) - v(theta(u)) + [theta(u), theta(v)]`` in
  coordinate frames
* a flow cocycle ``c(t,m)`` is given in the kernel frame,
  ``K(s_t m, s_t n) = T(c(t,m))^* K(m,n) T(c(t,n))``, and
  ``phi(m) = -d/dt T(c(t,m))`` at ``t = 0``.  With this ``phi`` a pair
  generated by the flow has ``F = -phi - theta(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .conventions import DEFAULT, Conventions
from .fd import DEFAULT_STEPS, FDSteps, derivative, directional, scaled_step
from .kernel_core import ChartKernel, KernelError, Representation, as_coords

MatrixField = Callable[[np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray], np.ndarray]


class DegenerateKernelError(KernelError):
    """``K(m,m)`` is numerically singular."""


class CocycleError(KernelError):
    """No cocycle of the searched class preserves the kernel."""


def _comm(a, b):
    return a @ b - b @ a


# -- forms ---------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Chart1Form:
    """Matrix-valued 1-form; ``jac(x)[k]`` is its value on the k-th coordinate vector."""

    jac: Callable[[np.ndarray], np.ndarray]
    steps: FDSteps = DEFAULT_STEPS
    direct: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def eval(self, m, u) -> np.ndarray:
        return np.tensordot(np.asarray(u), self.jac(as_coords(m)), axes=1)

    __call__ = eval

    def eval_direct(self, m, u) -> np.ndarray:
        """Value on ``u`` from a difference quotient taken along ``u`` itself."""
        if self.direct is None:
            return self.eval(m, u)
        return self.direct(as_coords(m), np.asarray(u))


@dataclass(frozen=True, eq=False)
class Chart2Form:
    """Matrix-valued 2-form; ``jac(x)[i, j]`` is its value on coordinate vectors ``(i, j)``."""

    jac: Callable[[np.ndarray], np.ndarray]

    def eval(self, m, u, v) -> np.ndarray:
        return np.einsum("i,j,ijab->ab", np.asarray(u), np.asarray(v), self.jac(as_coords(m)))

    __call__ = eval


def _require_invertible(K0: np.ndarray) -> None:
    ev = np.linalg.eigvalsh(0.5 * (K0 + K0.conj().T))
    if ev[0] <= 1e-10 * max(abs(ev[-1]), 1e-300):
        raise DegenerateKernelError("K(m,m) is singular at the evaluation point")


def connection_form(k: ChartKernel, steps: FDSteps = DEFAULT_STEPS) -> Chart1Form:
    """Kernel connection ``theta = K(m,m)^{-1} d_n K(m,n)|_{n=m}``."""
    d = k.chart_dim

    def jac(x):
        x = as_coords(x)
        K0 = k(x, x)
        _require_invertible(K0)
        h = scaled_step(x, steps.first)
        out = np.empty((d, k.fiber_dim, k.fiber_dim), dtype=complex)
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            D = derivative(lambda s: k(x, x + s * e), h, steps.richardson)
            out[i] = np.linalg.solve(K0, D)
        return out

    def direct(x, u):
        K0 = k(x, x)
        _require_invertible(K0)
        D = directional(lambda y: k(x, y), x, u, steps.first, steps.richardson)
        return np.linalg.solve(K0, D)

    return Chart1Form(jac, steps, direct)


def curvature(theta: Chart1Form, steps: FDSteps | None = None) -> Chart2Form:
    """Raw curvature ``u(theta(v)) - v(theta(u)) + [theta(u), theta(v)]``."""
    steps = steps or theta.steps

    def jac(x):
        x = as_coords(x)
        T0 = theta.jac(x)
        d = T0.shape[0]
        h = scaled_step(x, steps.nested)
        D = np.empty((d,) + T0.shape, dtype=complex)
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            D[i] = derivative(lambda s: theta.jac(x + s * e), h, steps.richardson)
        dtheta = D - D.transpose(1, 0, 2, 3)
        prod = np.einsum("iab,jbc->ijac", T0, T0)
        return dtheta + prod - prod.transpose(1, 0, 2, 3)

    return Chart2Form(jac)


# -- Hamiltonian pairs and flows -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HamiltonianPair:
    """Matrix function ``F`` and base vector field ``X`` (real chart coordinates)."""

    F: MatrixField
    X: VectorField
    name: str = "pair"

    @classmethod
    def zero(cls, chart_dim: int, fiber_dim: int) -> "HamiltonianPair":
        return cls(lambda x: np.zeros((fiber_dim, fiber_dim), dtype=complex),
                   lambda x: np.zeros(chart_dim), "zero")


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """Base flow ``sigma(t, x)`` with kernel-frame cocycle ``cocycle(t, x)``."""

    sigma: Callable[[float, np.ndarray], np.ndarray]
    cocycle: Callable[[float, np.ndarray], Any]
    representation: Representation
    velocity: VectorField | None = None
    name: str = "flow"
    steps: FDSteps = DEFAULT_STEPS

    def T(self, t, x) -> np.ndarray:
        return self.representation.apply(self.cocycle(t, as_coords(x)))

    def X(self, x) -> np.ndarray:
        x = as_coords(x)
        if self.velocity is not None:
            return np.asarray(self.velocity(x), dtype=float)
        return np.real(derivative(lambda t: self.sigma(t, x), self.steps.first, self.steps.richardson))

    def phi(self, x) -> np.ndarray:
        x = as_coords(x)
        return -derivative(lambda t: self.T(t, x), self.steps.first, self.steps.richardson)

    def composition_residual(self, s: float, t: float, x) -> float:
        """Base flow group law and cocycle law ``c(s+t, x) = c(t, x) c(s, sigma_t x)``."""
        x = as_coords(x)
        base = np.linalg.norm(self.sigma(s + t, x) - self.sigma(s, self.sigma(t, x)))
        coc = np.linalg.norm(self.T(s + t, x) - self.T(t, x) @ self.T(s, self.sigma(t, x)))
        return float(max(base, coc))


def identity_flow(chart_dim: int, fiber_dim: int) -> FlowSpec:
    return FlowSpec(lambda t, x: np.asarray(x, float), lambda t, x: 0.0,
                    Representation("u1", fiber_dim), lambda x: np.zeros(chart_dim), "identity")


def pair_from_flow(theta: Chart1Form, flow: FlowSpec, name: str | None = None) -> HamiltonianPair:
    """Pair ``(F, X)`` generated by a kernel-preserving flow: ``F = -phi - theta(X)``."""

    def F(x):
        return -flow.phi(x) - theta.eval(x, flow.X(x))

    return HamiltonianPair(F, flow.X, name or f"pair[{flow.name}]")


def phi_from_pair(pair: HamiltonianPair, theta: Chart1Form, m) -> np.ndarray:
    """``phi = -(F + theta(X))``."""
    x = as_coords(m)
    return -(pair.F(x) + theta.eval(x, pair.X(x)))


def covariant_diff(F: MatrixField, theta: Chart1Form, m, u, steps: FDSteps | None = None) -> np.ndarray:
    """``DF(u) = u(F) + [theta(u), F]``."""
    steps = steps or theta.steps
    x = as_coords(m)
    dF = directional(F, x, u, steps.first, steps.richardson)
    return dF + _comm(theta.eval(x, u), F(x))


def hamiltonian_residual(pair: HamiltonianPair, omega: Chart2Form, theta: Chart1Form, m,
                         conv: Conventions = DEFAULT) -> float:
    """``max_k || c * Omega(X, e_k) - DF(e_k) ||_F`` over coordinate directions."""
    x = as_coords(m)
    W = omega.jac(x)
    Xm = pair.X(x)
    lhs = conv.form_factor * np.tensordot(Xm, W, axes=1)
    worst = 0.0
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = 1.0
        worst = max(worst, float(np.linalg.norm(lhs[k] - covariant_diff(pair.F, theta, x, e))))
    return worst


def lie_bracket(X: VectorField, Y: VectorField, m, steps: FDSteps = DEFAULT_STEPS) -> np.ndarray:
    """Vector field bracket ``[X, Y]^i = X(Y^i) - Y(X^i)``."""
    x = as_coords(m)
    dY = directional(Y, x, X(x), steps.first, steps.richardson)
    dX = directional(X, x, Y(x), steps.first, steps.richardson)
    return np.real(dY - dX)


def bracket(pair1: HamiltonianPair, pair2: HamiltonianPair, omega: Chart2Form, theta: Chart1Form,
            m, conv: Conventions = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Pair bracket: ``(b * Omega(X, Y) + [F, G], [X, Y])``."""
    x = as_coords(m)
    X, Y = pair1.X(x), pair2.X(x)
    mat = conv.bracket_factor * omega.eval(x, X, Y) + _comm(pair1.F(x), pair2.F(x))
    return mat, lie_bracket(pair1.X, pair2.X, x, theta.steps)


def bracket_pair(pair1: HamiltonianPair, pair2: HamiltonianPair, omega: Chart2Form,
                 theta: Chart1Form, conv: Conventions = DEFAULT) -> HamiltonianPair:
    """The bracket as a new pair of fields (for nesting)."""
    return HamiltonianPair(lambda x: bracket(pair1, pair2, omega, theta, x, conv)[0],
                           lambda x: lie_bracket(pair1.X, pair2.X, x, theta.steps),
                           f"{{{pair1.name},{pair2.name}}}")


def jacobi_residual(p1, p2, p3, omega, theta, m, conv: Conventions = DEFAULT) -> float:
    """Norm of the cyclic sum of nested brackets at ``m`` (matrix and vector parts)."""
    x = as_coords(m)
    mats, vecs = [], []
    for a, b, c in ((p1, p2, p3), (p2, p3, p1), (p3, p1, p2)):
        mat, vec = bracket(a, bracket_pair(b, c, omega, theta, conv), omega, theta, x, conv)
        mats.append(mat)
        vecs.append(vec)
    return float(max(np.linalg.norm(sum(mats)), np.linalg.norm(sum(vecs))))


def metric_compat_residual(k: ChartKernel, theta: Chart1Form, m, u) -> float:
    """``|| u(K(m,m)) - K theta(u) - theta(conj u)^* K ||``."""
    x = as_coords(m)
    u = np.asarray(u)
    steps = theta.steps
    dK = directional(lambda y: k(y, y), x, u, steps.first, steps.richardson)
    K0 = k(x, x)
    tu = theta.eval(x, u)
    tbar = theta.eval(x, np.conj(u))
    return float(np.linalg.norm(dK - K0 @ tu - tbar.conj().T @ K0))


def flow_invariance_residual(k: ChartKernel, flow: FlowSpec, T: Representation | None, t: float,
                             pairs: Sequence) -> float:
    """``max || K(s_t m, s_t n) - T(c(t,m))^* K(m,n) T(c(t,n)) ||``."""
    T = T or flow.representation
    worst = 0.0
    for m, n in pairs:
        x, y = as_coords(m), as_coords(n)
        lhs = k(flow.sigma(t, x), flow.sigma(t, y))
        cm = T.apply(flow.cocycle(t, x))
        cn = T.apply(flow.cocycle(t, y))
        worst = max(worst, float(np.linalg.norm(lhs - cm.conj().T @ k(x, y) @ cn)))
    return worst


@dataclass(frozen=True)
class CocycleSolution:
    params: Any
    residual: float


def cocycle_solve(k: ChartKernel, sigma, t: float, anchors: Sequence, T: Representation,
                  max_residual: float = 1e-6) -> CocycleSolution:
    """Constant (point-independent) cocycle preserving the kernel at time ``t``.

    Searches diagonal phases with the first phase fixed to zero; for ``u1``
    the scalar phase cancels and the identity is returned.
    """
    if T.kind not in ("u1", "torus"):
        raise KernelError("cocycle_solve supports u1 and torus representations")
    xs = [as_coords(a) for a in anchors]
    K0 = np.array([[k(x, y) for y in xs] for x in xs])
    K1 = np.array([[k(sigma(t, x), sigma(t, y)) for y in xs] for x in xs])

    def resid(g):
        M = T.apply(g)
        return K1 - np.einsum("ba,ijbc,cd->ijad", M.conj(), K0, M)

    def worst(g):
        return float(np.max(np.linalg.norm(resid(g), axis=(2, 3))))

    if T.kind == "u1" or T.dim == 1:
        g = T.identity()
        r = worst(g)
    else:
        N = T.dim
        g0 = np.zeros(N)
        for b in range(1, N):
            acc = np.sum(np.conj(K0[..., 0, b]) * K1[..., 0, b])
            acc += np.conj(np.sum(np.conj(K0[..., b, 0]) * K1[..., b, 0]))
            g0[b] = np.angle(acc) if abs(acc) > 0 else 0.0

        def fun(free):
            R = resid(np.concatenate([[0.0], free]))
            return np.concatenate([R.real.ravel(), R.imag.ravel()])

        sol = least_squares(fun, g0[1:], xtol=1e-15, ftol=1e-15, gtol=1e-15)
        g = np.concatenate([[0.0], sol.x])
        g = np.angle(np.exp(1j * g))
        r = worst(g)
    if r > max_residual:
        raise CocycleError(f"no constant cocycle found: residual {r:.3e}")
    return CocycleSolution(g, r)


def fit_torus_flow(k: ChartKernel, sigma, T: Representation, anchors: Sequence, t0: float = 0.1,
                   velocity: VectorField | None = None, name: str = "solved") -> tuple[FlowSpec, np.ndarray]:
    """Flow with cocycle ``exp(i t rates)`` whose rates come from ``cocycle_solve`` at ``t0``."""
    sol = cocycle_solve(k, sigma, t0, anchors, T)
    rates = np.atleast_1d(np.asarray(sol.params, dtype=float)) / t0
    if T.kind == "u1":
        rates = float(rates[0])
    flow = FlowSpec(sigma, lambda t, x: rates * t, T, velocity, name)
    return flow, rates


def kernel_slot_derivative(k: ChartKernel, m, n, u, slot: int, steps: FDSteps = DEFAULT_STEPS) -> np.ndarray:
    """Derivative of ``K(m, n)`` along ``u`` in the first (``slot=0``) or second slot."""
    x, y = as_coords(m), as_coords(n)
    if slot == 0:
        return directional(lambda s: k(s, y), x, u, steps.first, steps.richardson)
    return directional(lambda s: k(x, s), y, u, steps.first, steps.richardson)


def kernel_mixed_derivative(k: ChartKernel, m, n, u, v, steps: FDSteps = DEFAULT_STEPS) -> np.ndarray:
    """``u`` derivative in the first slot of the ``v`` derivative in the second slot."""
    x, y = as_coords(m), as_coords(n)
    return directional(lambda s: kernel_slot_derivative(k, s, y, v, 1, steps), x, u,
                       steps.nested, steps.richardson)


def selfadjoint_relation_residual(k: ChartKernel, X: VectorField, phi: MatrixField, m, n,
                                  steps: FDSteps = DEFAULT_STEPS) -> float:
    """``|| X_m K + X_n K + phi(m)^* K + K phi(n) ||`` at ``(m, n)``.

    Vanishes when the flow of ``X`` with cocycle derivative ``phi`` preserves
    the kernel.
    """
    x, y = as_coords(m), as_coords(n)
    K = k(x, y)
    r = (kernel_slot_derivative(k, x, y, X(x), 0, steps) + kernel_slot_derivative(k, x, y, X(y), 1, steps)
         + phi(x).conj().T @ K + K @ phi(y))
    return float(np.linalg.norm(r))


def lie_deriv_connection_residual(theta: Chart1Form, X: VectorField, phi: MatrixField, m) -> float:
    """``max_k || (L_X theta)(e_k) + d phi(e_k) + [theta(e_k), phi] ||``.

    ``phi`` follows the kernel-frame sign convention of this module.
    """
    x = as_coords(m)
    steps = theta.steps
    d = x.size
    T0 = theta.jac(x)
    Xm = X(x)
    dtheta = directional(theta.jac, x, Xm, steps.nested, steps.richardson)
    P = phi(x)
    worst = 0.0
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        dX = np.real(directional(X, x, e, steps.first, steps.richardson))
        lie = dtheta[k] + np.tensordot(dX, T0, axes=1)
        dphi = directional(phi, x, e, steps.first, steps.richardson)
        worst = max(worst, float(np.linalg.norm(lie + dphi + _comm(T0[k], P))))
    return worst
