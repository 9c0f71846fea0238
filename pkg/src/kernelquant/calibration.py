"""Fix the global sign and factor conventions on models with closed forms.

Each routine scores a small set of candidate values and returns the best one
with the residual of every candidate.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .conventions import DEFAULT, Conventions
from .gauge_geometry import connection_form, covariant_diff, curvature
from .kernel_core import KernelError, complex_to_real
from .quantization import (build_frame, generator_matrix, prequantization_commutator_residual, propagate,
                           propagator_vs_flow_residual)


@dataclass(frozen=True)
class Calibration:
    name: str
    chosen: object
    scores: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return self.scores[_key(self.chosen)]


def _key(v) -> str:
    if isinstance(v, complex):
        return f"{v.real + 0.0:+g}{v.imag + 0.0:+g}j"
    return f"{v:+g}"


def _pick(name, scores: dict, values) -> Calibration:
    best = min(values, key=lambda v: scores[_key(v)])
    return Calibration(name, best, scores)


def calibrate_form_factor(candidates=(0.5, 1.0, 2.0, -0.5, -1.0, -2.0)) -> Calibration:
    """Factor ``c`` in ``c * Omega(X, .) = DF`` on the Gaussian translation pair."""
    from .examples.moment import MomentMeasure, sigma_kernel, translation_model

    meas = MomentMeasure()
    k = sigma_kernel(meas)
    theta = connection_form(k)
    omega = curvature(theta)
    pair, _ = translation_model(meas)
    pts = complex_to_real(np.array([[0.3 + 0.2j], [-0.4 + 0.5j], [0.1 - 0.3j]]))
    data = []
    for x in pts:
        W = np.tensordot(pair.X(x), omega.jac(x), axes=1)
        for j in range(x.size):
            e = np.zeros(x.size)
            e[j] = 1.0
            data.append((W[j], covariant_diff(pair.F, theta, x, e)))
    scores = {_key(c): max(float(np.linalg.norm(c * w - d)) for w, d in data) for c in candidates}
    return _pick("form_factor", scores, candidates)


def calibrate_propagator_sign(t: float = 0.5) -> Calibration:
    """Sign in ``U(t) = exp(sign i t Fhat)`` on the exact two-atom model."""
    from .examples.moment import MomentMeasure, sigma_kernel, translation_model

    meas = MomentMeasure.discrete([-1.0, 1.0])
    k = sigma_kernel(meas)
    _, flow = translation_model(meas)
    frame = build_frame(k, complex_to_real(np.array([[0.0], [np.pi / 4]])))
    A = generator_matrix(frame, flow)
    scores = {}
    for s in (1, -1):
        U = propagate(frame, A, t, replace(DEFAULT, propagator_sign=s))
        scores[_key(s)] = propagator_vs_flow_residual(frame, U, k, flow)
    return _pick("propagator_sign", scores, (1, -1))


def calibrate_reconstruction_factor(z: complex = 0.3 + 0.45j) -> Calibration:
    """Factor ``r`` in ``F = r K^{-1} <K|Fhat K>`` on the Gaussian at complex ``z``."""
    from .examples.moment import MomentMeasure, sigma_kernel, translation_model

    meas = MomentMeasure()
    k = sigma_kernel(meas)
    pair, flow = translation_model(meas)
    x = complex_to_real([z])
    frame = build_frame(k, [x])
    A = generator_matrix(frame, flow).A
    raw = np.linalg.solve(frame.gram, A)
    scores = {_key(r): float(np.linalg.norm(r * raw - pair.F(x))) for r in (1j, -1j)}
    return _pick("reconstruction_factor", scores, (1j, -1j))


def calibrate_bracket(bracket_factors=(-2.0, -1.0, 1.0, 2.0), kappas=(1j, -1j)) -> tuple[Calibration, Calibration]:
    """Bracket factor and commutator factor on non-commuting unitary flows of
    the projective kernel (first two SU(2) generators)."""
    from .examples.projective import linear_flow, projective_kernel, su2_generators

    k = projective_kernel()
    theta = connection_form(k)
    omega = curvature(theta)
    gens = su2_generators()
    fa, fb = linear_flow(gens[0]), linear_flow(gens[1])
    pts = complex_to_real(np.array([[0.3 + 0.1j, -0.2 + 0.4j], [0.1j, 0.5], [-0.3, 0.2 - 0.2j]]))
    frame = build_frame(k, pts)
    table = {}
    for b in bracket_factors:
        for kap in kappas:
            conv = replace(DEFAULT, bracket_factor=b, commutator_factor=kap)
            try:
                r = prequantization_commutator_residual(fa, fb, frame, conv, theta, omega).residual
            except KernelError:
                r = np.inf
            table[(b, kap)] = r
    best = min(table, key=table.get)
    bscores = {_key(b): min(table[(b, q)] for q in kappas) for b in bracket_factors}
    kscores = {_key(q): min(table[(b, q)] for b in bracket_factors) for q in kappas}
    return Calibration("bracket_factor", best[0], bscores), Calibration("commutator_factor", best[1], kscores)


def calibrate_all() -> dict[str, Calibration]:
    out = {c.name: c for c in (calibrate_form_factor(), calibrate_propagator_sign(),
                                calibrate_reconstruction_factor())}
    for c in calibrate_bracket():
        out[c.name] = c
    return out


def calibrated_conventions(cal: dict[str, Calibration] | None = None) -> Conventions:
    cal = cal or calibrate_all()
    return replace(DEFAULT, **{name: c.chosen for name, c in cal.items()})
