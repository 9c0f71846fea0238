"""Quantization of kernel-preserving flows on finite coherent frames.

For a flow with velocity ``X`` and cocycle derivative ``phi`` the generator
``Fhat`` acts on coherent states by ``i Fhat K(m) v = (X K)(m) v + K(m) phi(m) v``
and ``U(t) = exp(i t Fhat)`` carries ``K(m)`` to ``K(sigma_t m) T(c(t,m))^{-1}``.
All operator statements are made on the span of a finite frame.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .conventions import DEFAULT, Conventions
from .fd import DEFAULT_STEPS, FDSteps, derivative, scaled_step
from .gauge_geometry import (Chart1Form, Chart2Form, FlowSpec, HamiltonianPair, bracket_pair,
                             connection_form, curvature, hamiltonian_residual,
                             kernel_mixed_derivative, kernel_slot_derivative, phi_from_pair)
from .kernel_core import ChartKernel, KernelError, Representation, as_coords
from .rkhs import PositivityError, assemble_gram, certify_positivity, factorize

Source = Union[HamiltonianPair, FlowSpec]


class GeneratorError(KernelError):
    """Generator is not (numerically) self-adjoint on the frame."""


# -- frames ---------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoherentFrame:
    """Coherent states ``K(p_i) e_a`` with Gram metric and whitener.

    ``W`` (``JN x r``) whitens the retained span, ``P = W^+`` maps frame
    coordinates to whitened ones, so that ``W^* G W = I`` and ``W P`` is the
    ``G``-orthogonal projector onto the retained span.
    """

    kernel: ChartKernel
    points: np.ndarray
    gram: np.ndarray
    W: np.ndarray
    P: np.ndarray
    cond: float

    @property
    def fiber_dim(self) -> int:
        return self.kernel.fiber_dim

    @property
    def rank(self) -> int:
        return self.W.shape[1]

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    def block(self, M: np.ndarray, i: int, j: int) -> np.ndarray:
        N = self.fiber_dim
        return M[i * N:(i + 1) * N, j * N:(j + 1) * N]

    def whiten(self, M: np.ndarray) -> np.ndarray:
        """Form ``M`` in the orthonormal basis of the span."""
        return self.W.conj().T @ M @ self.W


def build_frame(k: ChartKernel, pts, floor: float = 1e-12) -> CoherentFrame:
    """Frame on ``pts`` with eigenvalue floor ``floor * ||G||_2`` for the whitener."""
    g = assemble_gram(k, pts, floor)
    cert = certify_positivity(g)
    if not cert:
        raise PositivityError(f"frame Gram not positive: min eig {cert.min_eig:.3e}")
    ev, V = np.linalg.eigh(g.gram)
    keep = ev > floor * cert.norm
    lam, Vr = ev[keep], V[:, keep]
    W = Vr / np.sqrt(lam)
    P = np.sqrt(lam)[:, None] * Vr.conj().T
    cond = float(lam.max() / lam.min()) if lam.size else np.inf
    return CoherentFrame(k, g.points, g.gram, W, P, cond)


# -- generators ------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Sesquilinear form ``A[(i,a),(j,b)] = <K(p_i) e_a | Fhat K(p_j) e_b>``."""

    A: np.ndarray
    source: str = ""


def _velocity_and_phi(source: Source, theta: Chart1Form | None):
    if isinstance(source, FlowSpec):
        return source.X, source.phi
    if theta is None:
        raise KernelError("a Hamiltonian pair needs the connection to supply phi")
    return source.X, (lambda x: phi_from_pair(source, theta, x))


def generator_matrix(frame: CoherentFrame, source: Source, k: ChartKernel | None = None,
                     theta: Chart1Form | None = None, steps: FDSteps = DEFAULT_STEPS) -> GeneratorMatrix:
    """``A = -i [ (X_n K)(p_i, p_j) + K(p_i, p_j) phi(p_j) ]`` blockwise."""
    k = k or frame.kernel
    if isinstance(source, HamiltonianPair) and theta is None:
        theta = connection_form(k, steps)
    X, phi = _velocity_and_phi(source, theta)
    P = frame.points
    J, N = len(P), k.fiber_dim
    K = k.blocks(P, P)
    A = np.empty((J, J, N, N), dtype=complex)
    for j, y in enumerate(P):
        Xj = np.asarray(X(y), dtype=float)
        if np.any(Xj):
            h = scaled_step(y, steps.first)
            dK = derivative(lambda s: k.blocks(P, [y + s * Xj])[:, 0], h, steps.richardson)
        else:
            dK = np.zeros((J, N, N), dtype=complex)
        A[:, j] = -1j * (dK + K[:, j] @ phi(y))
    name = getattr(source, "name", "")
    return GeneratorMatrix(A.transpose(0, 2, 1, 3).reshape(J * N, J * N), name)


def _form(A) -> np.ndarray:
    return A.A if isinstance(A, GeneratorMatrix) else np.asarray(A)


def selfadjointness_residual(frame: CoherentFrame, A) -> float:
    """``max |<psi|A chi> - <A psi|chi>|`` over frame basis pairs."""
    M = _form(A)
    return float(np.max(np.abs(M - M.conj().T)))


def whitened_generator(frame: CoherentFrame, A) -> np.ndarray:
    return frame.whiten(_form(A))


def generator_spectrum(frame: CoherentFrame, A) -> tuple[np.ndarray, float]:
    """Eigenvalues of the whitened generator and the largest imaginary part before symmetrizing."""
    H = whitened_generator(frame, A)
    raw = np.linalg.eigvals(H)
    return np.linalg.eigvalsh(0.5 * (H + H.conj().T)), float(np.max(np.abs(raw.imag), initial=0.0))


@dataclass(frozen=True, eq=False)
class Propagator:
    """``U(t)`` in frame coordinates: ``U(t) K(p_j) e_b = sum_(i,a) K(p_i) e_a U[(i,a),(j,b)]``."""

    U: np.ndarray
    t: float

    def g_unitarity_residual(self, frame: CoherentFrame) -> float:
        G = frame.gram
        return float(np.linalg.norm(self.U.conj().T @ G @ self.U - G))


def propagate(frame: CoherentFrame, A, t: float, conv: Conventions = DEFAULT,
              max_residual: float = 1e-4) -> Propagator:
    """``U(t) = W exp(sign i t H) P`` with ``H`` the whitened generator."""
    M = _form(A)
    r = selfadjointness_residual(frame, M)
    if r > max_residual:
        raise GeneratorError(f"generator not self-adjoint on the frame (residual {r:.3e})")
    H = frame.whiten(M)
    lam, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    Ur = (V * np.exp(conv.propagator_sign * 1j * t * lam)) @ V.conj().T
    return Propagator(frame.W @ Ur @ frame.P, t)


def propagator_vs_flow_residual(frame: CoherentFrame, U: Propagator, k: ChartKernel | None,
                                flow: FlowSpec) -> float:
    """``max_(i,a) || K(sigma_t p_i) T(c)^{-1} e_a - U(t) K(p_i) e_a ||``.

    Norms are taken in feature coordinates of the frame plus the moved points.
    """
    k = k or frame.kernel
    t = U.t
    P = frame.points
    moved = np.array([flow.sigma(t, x) for x in P])
    g = assemble_gram(k, np.vstack([P, moved]))
    F = factorize(g).columns
    n = frame.size
    Ff, Fm = F[:, :n], F[:, n:]
    N = k.fiber_dim
    target = np.empty_like(Fm)
    for i, x in enumerate(P):
        Tinv = np.linalg.inv(flow.T(t, x))
        target[:, i * N:(i + 1) * N] = Fm[:, i * N:(i + 1) * N] @ Tinv
    pred = Ff @ U.U
    return float(np.max(np.linalg.norm(target - pred, axis=0)))


# -- Kostant-Souriau action --------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSection:
    """Section ``m -> K(m, n) v``."""

    n: np.ndarray
    v: np.ndarray


def ks_apply(k: ChartKernel, section: KernelSection, source, phi, m,
             steps: FDSteps = DEFAULT_STEPS) -> np.ndarray:
    """``Q(K(., n) v)(m) = -(X K(., n))(m) v - phi(m)^* K(m, n) v``.

    The first slot is differentiated along ``X(m)``; for kernels
    anti-holomorphic in that slot only the ``(0,1)`` part of ``X`` contributes.
    """
    x = as_coords(m)
    v = np.asarray(section.v, dtype=complex)
    if not np.any(v):
        return np.zeros(k.fiber_dim, dtype=complex)
    X = source.X if hasattr(source, "X") else source
    dK = kernel_slot_derivative(k, x, section.n, X(x), 0, steps)
    return -(dK @ v) - phi(x).conj().T @ (k(x, section.n) @ v)


def ks_generator_form(frame: CoherentFrame, source, phi, steps: FDSteps = DEFAULT_STEPS) -> np.ndarray:
    """``-i <e_a, Q(K(., p_j) e_b)(p_i)>``, which equals the generator form."""
    k = frame.kernel
    N = k.fiber_dim
    P = frame.points
    M = np.empty((frame.size, frame.size), dtype=complex)
    for j, y in enumerate(P):
        for b in range(N):
            sec = KernelSection(y, np.eye(N)[b])
            for i, x in enumerate(P):
                M[i * N:(i + 1) * N, j * N + b] = -1j * ks_apply(k, sec, source, phi, x, steps)
    return M


# -- commutators --------------------------------------------------------------------------------


def second_moment_form(frame: CoherentFrame, srcA: Source, srcB: Source, theta: Chart1Form | None = None,
                       steps: FDSteps = DEFAULT_STEPS) -> np.ndarray:
    """``<Fhat_A K(p_i) e_a | Fhat_B K(p_j) e_b>`` from kernel derivatives.

    Exact on the frame (no compression of ``Fhat`` to the span is involved).
    """
    k = frame.kernel
    XA, phiA = _velocity_and_phi(srcA, theta)
    XB, phiB = _velocity_and_phi(srcB, theta)
    P = frame.points
    N = k.fiber_dim
    S = np.empty((frame.size, frame.size), dtype=complex)
    for i, x in enumerate(P):
        xa, pa = XA(x), phiA(x)
        for j, y in enumerate(P):
            yb, pb = XB(y), phiB(y)
            K = k(x, y)
            dA = kernel_slot_derivative(k, x, y, xa, 0, steps)
            dB = kernel_slot_derivative(k, x, y, yb, 1, steps)
            dAB = kernel_mixed_derivative(k, x, y, xa, yb, steps) if np.any(xa) and np.any(yb) else 0.0
            S[i * N:(i + 1) * N, j * N:(j + 1) * N] = (dAB + pa.conj().T @ dB + dA @ pb
                                                       + pa.conj().T @ K @ pb)
    return S


@dataclass(frozen=True)
class CommutatorResult:
    residual: float
    bracket_hamiltonian: float
    commutator_norm: float


def prequantization_commutator_residual(pairA: Source, pairB: Source, frame: CoherentFrame,
                                        conv: Conventions = DEFAULT, theta: Chart1Form | None = None,
                                        omega: Chart2Form | None = None, bracket_tol: float = 1e-3,
                                        steps: FDSteps = DEFAULT_STEPS) -> CommutatorResult:
    """``|| [A, B] - kappa C ||_G`` with ``C`` the generator of the bracket pair.

    ``[A, B]`` is the form of ``Fhat_A Fhat_B - Fhat_B Fhat_A`` on the frame.
    """
    from .gauge_geometry import pair_from_flow

    k = frame.kernel
    theta = theta or connection_form(k, steps)
    omega = omega or curvature(theta)
    pA = pair_from_flow(theta, pairA) if isinstance(pairA, FlowSpec) else pairA
    pB = pair_from_flow(theta, pairB) if isinstance(pairB, FlowSpec) else pairB
    comm = (second_moment_form(frame, pairA, pairB, theta, steps)
            - second_moment_form(frame, pairB, pairA, theta, steps))
    pC = bracket_pair(pA, pB, omega, theta, conv)
    hres = max(hamiltonian_residual(pC, omega, theta, x, conv) for x in frame.points)
    if hres > bracket_tol:
        raise KernelError(f"bracket pair fails the Hamiltonian equation ({hres:.3e})")
    C = generator_matrix(frame, pC, k, theta, steps).A
    R = frame.whiten(comm - conv.commutator_factor * C)
    return CommutatorResult(float(np.linalg.norm(R, 2)), hres, float(np.linalg.norm(frame.whiten(comm), 2)))


# -- reconstruction -------------------------------------------------------------------------------


def reconstruct_F(frame: CoherentFrame, p: int, A, conv: Conventions = DEFAULT) -> np.ndarray:
    """``F(p) = r K(p,p)^{-1} <K(p)|Fhat K(p)>`` at frame point index ``p``."""
    Kpp = frame.block(frame.gram, p, p)
    ev = np.linalg.eigvalsh(Kpp)
    if ev[0] <= 1e-10 * abs(ev[-1]):
        raise KernelError("K(p,p) is singular")
    return conv.reconstruction_factor * np.linalg.solve(Kpp, frame.block(_form(A), p, p))


# -- unitary gauge --------------------------------------------------------------------------------


def _inv_sqrt(K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, V = np.linalg.eigh(0.5 * (K + K.conj().T))
    if lam[0] <= 1e-10 * abs(lam[-1]):
        raise KernelError("singular diagonal block")
    return (V / np.sqrt(lam)) @ V.conj().T, (V * np.sqrt(lam)) @ V.conj().T


def unitary_gauge(k_hol: ChartKernel) -> ChartKernel:
    """``K_u(m, n) = K(m,m)^{-1/2} K(m, n) K(n,n)^{-1/2}``."""

    def func(x, y):
        return _inv_sqrt(k_hol(x, x))[0] @ k_hol(x, y) @ _inv_sqrt(k_hol(y, y))[0]

    def block_func(P, Q):
        B = k_hol.blocks(P, Q)
        SP = np.array([_inv_sqrt(k_hol(x, x))[0] for x in P])
        SQ = np.array([_inv_sqrt(k_hol(y, y))[0] for y in Q])
        return np.einsum("iab,ijbc,jcd->ijad", SP, B, SQ)

    return ChartKernel(k_hol.name + ":unitary", k_hol.fiber_dim, k_hol.chart_dim, func, False,
                       k_hol.is_complex, k_hol.domain, block_func, dict(k_hol.params, gauge="unitary"))


def unitary_gauge_flow(k_hol: ChartKernel, flow: FlowSpec) -> FlowSpec:
    """Kernel-frame cocycle ``K(m,m)^{1/2} T(c(t,m)) K(s_t m, s_t m)^{-1/2}`` of the unitary gauge."""

    def cocycle(t, x):
        return (_inv_sqrt(k_hol(x, x))[1] @ flow.T(t, x)
                @ _inv_sqrt(k_hol(flow.sigma(t, x), flow.sigma(t, x)))[0])

    return FlowSpec(flow.sigma, cocycle, Representation("matrix", k_hol.fiber_dim), flow.velocity,
                    flow.name + ":unitary", flow.steps)


def unitary_gauge_pair(k_hol: ChartKernel, pair: HamiltonianPair) -> HamiltonianPair:
    """``F_u = K(m,m)^{1/2} F K(m,m)^{-1/2}``."""

    def F(x):
        S, R = _inv_sqrt(k_hol(x, x))
        return R @ pair.F(x) @ S

    return HamiltonianPair(F, pair.X, pair.name + ":unitary")


def gauge_congruence(frame: CoherentFrame) -> np.ndarray:
    """Block diagonal ``D = diag(K(p_i,p_i)^{-1/2})``; unitary-gauge forms are ``D^* M D``."""
    N = frame.fiber_dim
    D = np.zeros_like(frame.gram)
    for i in range(len(frame.points)):
        D[i * N:(i + 1) * N, i * N:(i + 1) * N] = _inv_sqrt(frame.block(frame.gram, i, i))[0]
    return D
