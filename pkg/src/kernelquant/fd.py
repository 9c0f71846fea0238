"""Central finite differences with Richardson extrapolation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FDSteps:
    """Relative step sizes; the actual step is ``base * (1 + max|x|)``.

    ``first`` is used for derivatives of closed-form quantities, ``nested``
    for derivatives of quantities that are themselves difference quotients.
    """

    first: float = 1e-3
    nested: float = 1e-3
    richardson: int = 1

    def as_dict(self) -> dict:
        return {"first": self.first, "nested": self.nested, "richardson": self.richardson}


DEFAULT_STEPS = FDSteps()


def scaled_step(x: np.ndarray, base: float) -> float:
    return base * (1.0 + float(np.max(np.abs(x), initial=0.0)))


def derivative(f: Callable[[float], np.ndarray], h: float, levels: int = 1) -> np.ndarray:
    """``f'(0)`` from central differences at ``h, h/2, ...`` and Richardson steps."""
    table = []
    for k in range(levels + 1):
        s = h / 2 ** k
        table.append((np.asarray(f(s)) - np.asarray(f(-s))) / (2 * s))
    for lvl in range(1, levels + 1):
        fac = 4.0 ** lvl
        table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
    return table[0]


def directional(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray, u, base: float,
                levels: int = 1) -> np.ndarray:
    """Derivative of ``g`` at ``x`` along a (possibly complex) real-basis tangent ``u``.

    Complex tangents are split by linearity into real and imaginary parts.
    """
    u = np.asarray(u)
    h = scaled_step(x, base)
    if np.iscomplexobj(u):
        out = 0
        if np.any(u.real):
            out = out + directional(g, x, u.real, base, levels)
        if np.any(u.imag):
            out = out + 1j * directional(g, x, u.imag, base, levels)
        if isinstance(out, int):
            return np.zeros_like(np.asarray(g(x)), dtype=complex)
        return out
    if not np.any(u):
        return np.zeros_like(np.asarray(g(x)), dtype=complex)
    return derivative(lambda s: g(x + s * u), h, levels)
