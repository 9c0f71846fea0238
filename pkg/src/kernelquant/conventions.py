"""Sign and factor conventions shared by geometry and quantization.

The defaults are the values singled out by the calibration routines in
:mod:`kernelquant.calibration`; every report carries them.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Conventions:
    """Global conventions.

    Attributes
    ----------
    form_factor : float
        ``c`` in the Hamiltonian equation ``c * Omega(X, u) = DF(u)`` where
        ``Omega(u,v) = u(theta(v)) - v(theta(u)) + [theta(u), theta(v)]``.
    bracket_factor : float
        ``b`` in the pair bracket ``b * Omega(X, Y) + [F, G]``.
    propagator_sign : int
        ``U(t) = exp(sign * i * t * Fhat)``.
    reconstruction_factor : complex
        ``F(p) = r * K(p,p)^{-1} <K(p)|Fhat K(p)>``.
    commutator_factor : complex
        ``kappa`` in ``[A, B] = kappa * C`` for generator forms.
    """

    form_factor: float = 1.0
    bracket_factor: float = -1.0
    propagator_sign: int = 1
    reconstruction_factor: complex = -1j
    commutator_factor: complex = 1j
    cocycle: str = "kernel-frame: K(s_t m, s_t n) = T(c)^* K(m,n) T(c(n)); phi = -dT(c)/dt at t=0"

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("reconstruction_factor", "commutator_factor"):
            z = complex(d[key])
            d[key] = {"re": z.real, "im": z.imag}
        return d


DEFAULT = Conventions()
