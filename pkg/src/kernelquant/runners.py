"""Verification suites behind the command line interface."""
from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .calibration import calibrate_all
from .conventions import DEFAULT
from .config import ExperimentConfig
from .examples import bidisc, moment
from .fd import DEFAULT_STEPS
from .gauge_geometry import (FlowSpec, HamiltonianPair, cocycle_solve, connection_form, curvature,
                             flow_invariance_residual, hamiltonian_residual, jacobi_residual,
                             lie_deriv_connection_residual, metric_compat_residual, pair_from_flow,
                             selfadjoint_relation_residual)
from .kernel_core import (BundlePoint, ChartKernel, KernelError, Representation, bundle_extend,
                          cauchy_riemann_residual, complex_direction, complex_to_real, corrupt_kernel,
                          hermitian_residual, make_kernel, real_to_complex, transition_amplitude)
from .quantization import (KernelSection, build_frame, gauge_congruence, generator_matrix,
                           generator_spectrum, ks_apply, ks_generator_form,
                           prequantization_commutator_residual, propagate, propagator_vs_flow_residual,
                           reconstruct_F, selfadjointness_residual, unitary_gauge, unitary_gauge_flow,
                           unitary_gauge_pair)
from .report import Record, Report, environment_block
from .rkhs import (FeatureMap, SpanElement, assemble_gram, certify_positivity, factorization_equivalence,
                   factorize, norm_bound_check, reproducing_residual)

BIDISC_FRAME = complex_to_real(np.array([[0, 0], [0.3 + 0.1j, -0.2 + 0.2j],
                                         [-0.25 + 0.3j, 0.1 - 0.35j], [0.4j, 0.3]]))
GAUSSIAN_FRAME = complex_to_real(np.array([[0.0], [0.5], [-0.4 + 0.3j]]))

TOLERANCES = {
    "bidisc": {"hamiltonian": 1e-4, "lie": 1e-4, "selfadjoint": 1e-5, "reconstruct": 1e-5,
               "commutator": 1e-4, "ks": 1e-5, "spectrum_imag": 1e-8},
    "moment:gaussian": {"hamiltonian": 1e-6, "lie": 1e-5, "selfadjoint": 1e-8, "reconstruct": 1e-6,
                        "commutator": 1e-8, "ks": 1e-6, "spectrum_imag": 1e-8},
    "moment:discrete": {"hamiltonian": 1e-6, "lie": 1e-5, "selfadjoint": 1e-12, "reconstruct": 1e-10,
                        "commutator": 1e-12, "ks": 1e-9, "spectrum_imag": 1e-12},
}


@dataclass
class Model:
    name: str
    kernel: ChartKernel
    points: np.ndarray
    frame: np.ndarray | None = None
    flow: FlowSpec | None = None
    pair: HamiltonianPair | None = None
    rep: Representation | None = None
    measure: moment.MomentMeasure | None = None
    commuting: list = field(default_factory=list)


def _sample_points(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if "explicit" in cfg.points:
        return np.atleast_2d(np.asarray(cfg.points["explicit"], dtype=float))
    spec = cfg.points.get("random") or {}
    count = int(spec.get("count", 10))
    if cfg.kernel == "bidisc":
        return bidisc.random_points(count, rng, float(spec.get("radius", bidisc.SAFE_RADIUS)))
    half = float(spec.get("radius", 1.0))
    return rng.uniform(-half, half, size=(count, 2))


def build_model(cfg: ExperimentConfig) -> Model:
    rng = np.random.default_rng(cfg.seed)
    frame = None if cfg.frame is None else np.atleast_2d(np.asarray(cfg.frame, dtype=float))
    if cfg.kernel == "tabulated":
        k = make_kernel("tabulated", **cfg.kernel_params)
        if cfg.corrupt:
            k = corrupt_kernel(k, cfg.corrupt)
        return Model("tabulated", k, k.params["points"], rep=Representation("u1", k.fiber_dim))
    k = make_kernel(cfg.kernel, **cfg.kernel_params)
    clean = k
    if cfg.corrupt:
        k = corrupt_kernel(k, cfg.corrupt)
    pts = _sample_points(cfg, rng)
    if cfg.kernel == "bidisc":
        flow, rates = bidisc.solved_rotation_flow(clean, 1.0, -1.0)
        pair = bidisc.consistent_pair(1.0, -1.0, alpha=float(rates[0]))
        f1, _ = bidisc.solved_rotation_flow(clean, 1.0, 0.0)
        f2, _ = bidisc.solved_rotation_flow(clean, 0.0, 1.0)
        return Model("bidisc", k, pts, BIDISC_FRAME if frame is None else frame, flow, pair,
                     Representation("matrix", 2), commuting=[f1, f2])
    meas = k.params["measure"]
    pair, flow = moment.translation_model(meas)
    if frame is None:
        if meas.kind == "gaussian":
            frame = GAUSSIAN_FRAME
        else:
            frame = complex_to_real(np.arange(len(meas.atoms))[:, None] * np.pi / 4 + 0j)
    return Model(cfg.kernel, k, pts, frame, flow, pair, Representation("u1", 1), meas, [flow, flow])


def _tol(cfg: ExperimentConfig, model: Model, name: str, default: float | None = None) -> float:
    base = TOLERANCES.get(model.name, TOLERANCES["bidisc"]).get(name, default)
    return cfg.tol(name, base)


class _Runner:
    """Collects records; exceptions inside a check become failed records."""

    def __init__(self, report: Report, cfg: ExperimentConfig, prefix: str):
        self.report, self.cfg, self.prefix = report, cfg, prefix

    def run(self, name, tag, tol, fn, inputs=None, kind="check"):
        note = ""
        try:
            out = fn()
            if isinstance(out, tuple):
                res, note = out
            else:
                res = out
        except (KernelError, np.linalg.LinAlgError, ValueError) as exc:
            res, note = np.inf, f"{type(exc).__name__}: {exc}"
        return self.report.add(Record(self.prefix + name, tag, float(res), tol,
                                      {"cfg": self.cfg.as_dict(), "inputs": inputs}, kind, note))


@functools.lru_cache(maxsize=1)
def _calibration():
    return calibrate_all()


def _conventions_block() -> dict:
    cal = _calibration()
    block = DEFAULT.as_dict()
    block["calibration"] = {name: {"chosen": c.chosen, "scores": c.scores} for name, c in cal.items()}
    block["calibration_agrees"] = all(
        complex(c.chosen) == complex(getattr(DEFAULT, name)) for name, c in cal.items())
    return block


def new_report(command: str, cfg: ExperimentConfig) -> Report:
    return Report(command, conventions=_conventions_block(),
                  environment=environment_block(cfg.seed, DEFAULT_STEPS, _accel.backend(), cfg.tol_scale),
                  timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))


# -- check ------------------------------------------------------------------------------------


def run_check(cfg: ExperimentConfig, report: Report | None = None, prefix: str = "") -> Report:
    """Kernel axioms and finite-sample Hilbert space identities."""
    report = report or new_report("check", cfg)
    model = build_model(cfg)
    k, pts = model.kernel, model.points
    rng = np.random.default_rng(cfg.seed + 1)
    r = _Runner(report, cfg, prefix + f"check.{model.name}.")
    N = k.fiber_dim

    def herm():
        scale = max(np.max(np.linalg.norm(k.blocks(pts, pts), axis=(2, 3))), 1.0)
        return hermitian_residual(k, pts) / scale

    r.run("hermitian", "kernel.hermitian", cfg.tol("hermitian", 1e-12), herm)
    if k.holomorphic:
        r.run("cauchy_riemann", "kernel.holomorphic", cfg.tol("cauchy_riemann", 1e-6),
              lambda: max(cauchy_riemann_residual(k, pts[i], pts[(i + 1) % len(pts)])
                          for i in range(min(len(pts), 4))))

    def rand_group():
        if model.rep.kind == "matrix":
            return np.eye(N) + 0.3 * (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
        return rng.uniform(0, 2 * np.pi)

    def equivariance():
        Kb = bundle_extend(k, model.rep)
        worst = 0.0
        for i in range(min(len(pts), 5)):
            g, h, h2 = rand_group(), rand_group(), rand_group()
            p = BundlePoint(pts[i], g)
            q = BundlePoint(pts[-1 - i], h)
            qh = BundlePoint(pts[-1 - i], model.rep.compose(h, h2))
            lhs = Kb(p, qh)
            worst = max(worst, float(np.linalg.norm(lhs - Kb(p, q) @ model.rep.apply(h2))
                                     / max(np.linalg.norm(lhs), 1.0)))
        return worst

    r.run("equivariance", "bundle.equivariance", cfg.tol("equivariance", 1e-12), equivariance)
    r.run("representation", "representation.homomorphism", cfg.tol("representation", 1e-12),
          lambda: max(model.rep.homomorphism_residual(rand_group(), rand_group()) for _ in range(5)))

    g = assemble_gram(k, pts)

    def positivity():
        cert = certify_positivity(g)
        return max(0.0, -cert.min_eig / cert.norm), f"min_eig={cert.min_eig:.3e}"

    r.run("positivity", "kernel.positive_definite", cfg.tol("positivity", 1e-9), positivity)

    def reconstruction():
        F = factorize(g)
        return float(np.linalg.norm(F.gram() - g.gram) / g.norm), f"rank={F.rank}"

    r.run("factorization", "rkhs.factorization", cfg.tol("factorization", 1e-10), reconstruction)

    elems = [SpanElement(rng.normal(size=(len(pts), N)) + 1j * rng.normal(size=(len(pts), N)))
             for _ in range(20)]

    def reproducing():
        worst = 0.0
        for f in elems:
            p = int(rng.integers(len(pts)))
            v = rng.normal(size=N) + 1j * rng.normal(size=N)
            worst = max(worst, reproducing_residual(g, f, p, v))
        return worst

    r.run("reproducing", "rkhs.reproducing", cfg.tol("reproducing", 1e-10), reproducing)
    r.run("norm_bound", "rkhs.norm_bound", 0.5,
          lambda: float(sum(not norm_bound_check(g, f, i % len(pts)) for i, f in enumerate(elems))))

    def equivalence():
        F1 = factorize(g)
        Q, _ = np.linalg.qr(rng.normal(size=(F1.rank, F1.rank)) + 1j * rng.normal(size=(F1.rank, F1.rank)))
        U = factorization_equivalence(F1, FeatureMap(Q @ F1.columns))
        return float(max(np.linalg.norm(U - Q), np.linalg.norm(U.conj().T @ U - np.eye(F1.rank))))

    r.run("factorization_equivalence", "rkhs.unitary_equivalence", cfg.tol("factorization_equivalence", 1e-9),
          equivalence)

    def amplitude():
        worst = 0.0
        for i in range(len(pts)):
            for j in range(len(pts)):
                v = np.eye(N)[i % N]
                worst = max(worst, abs(transition_amplitude(k, (pts[i], v), (pts[j], v))))
        return max(0.0, worst - 1.0)

    r.run("transition_amplitude", "kernel.transition_amplitude", cfg.tol("transition_amplitude", 1e-10),
          amplitude)
    return report


# -- geometry ---------------------------------------------------------------------------------------


def run_geometry(cfg: ExperimentConfig, report: Report | None = None, prefix: str = "") -> Report:
    """Connection, curvature, Hamiltonian pairs, brackets and flow invariance."""
    report = report or new_report("geometry", cfg)
    model = build_model(cfg)
    if model.flow is None:
        raise KernelError("geometry needs a built-in model with a flow")
    k = model.kernel
    pts = model.points[:4]
    r = _Runner(report, cfg, prefix + f"geometry.{model.name}.")
    theta = connection_form(k)
    omega = curvature(theta)
    d = k.chart_dim
    basis = np.eye(d)

    r.run("metric_compatibility", "connection.metric", cfg.tol("metric", 1e-6),
          lambda: max(metric_compat_residual(k, theta, x, u) for x in pts for u in basis))

    def antisym():
        return max(float(np.max(np.abs(W + W.transpose(1, 0, 2, 3)))) for W in map(omega.jac, pts[:2]))

    r.run("curvature_antisymmetry", "curvature.antisymmetry", cfg.tol("antisymmetry", 1e-8), antisym)

    def linearity():
        x = pts[0]
        u, v = basis[0] + 0.5 * basis[-1], basis[1] - 2.0 * basis[0]
        lhs = theta.eval_direct(x, 0.7 * u - 1.3 * v)
        return float(np.linalg.norm(lhs - 0.7 * theta.eval_direct(x, u) + 1.3 * theta.eval_direct(x, v)))

    r.run("connection_linearity", "connection.linearity", cfg.tol("linearity", 1e-8), linearity)
    r.run("hamiltonian", "hamiltonian.equation", _tol(cfg, model, "hamiltonian"),
          lambda: max(hamiltonian_residual(model.pair, omega, theta, x) for x in pts),
          inputs={"form_factor": DEFAULT.form_factor})
    r.run("hamiltonian_from_flow", "hamiltonian.flow_pair", _tol(cfg, model, "hamiltonian"),
          lambda: max(hamiltonian_residual(pair_from_flow(theta, model.flow), omega, theta, x)
                      for x in pts[:2]))
    r.run("lie_derivative", "connection.lie_derivative", _tol(cfg, model, "lie"),
          lambda: max(lie_deriv_connection_residual(theta, model.flow.X, model.flow.phi, x) for x in pts[:2]))
    r.run("selfadjoint_relation", "flow.kernel_derivative", cfg.tol("relation", 1e-6),
          lambda: max(selfadjoint_relation_residual(k, model.flow.X, model.flow.phi, x, y)
                      for x in pts for y in pts))
    pairs = [(x, y) for x in model.points for y in model.points]
    for t in cfg.times:
        r.run(f"flow_invariance[t={t:g}]", "flow.kernel_invariance", cfg.tol("invariance", 1e-9),
              lambda t=t: flow_invariance_residual(k, model.flow, None, t, pairs), inputs={"t": t})
    r.run("flow_composition", "flow.cocycle_law", cfg.tol("composition", 1e-9),
          lambda: max(model.flow.composition_residual(0.3, 0.4, x) for x in pts))

    anchors = model.points[:3]
    for t in cfg.times:
        def solve(t=t):
            rep = Representation("torus", k.fiber_dim) if k.fiber_dim > 1 else Representation("u1", 1)
            sol = cocycle_solve(k, model.flow.sigma, t, anchors, rep)
            return sol.residual, f"params={np.round(np.atleast_1d(sol.params), 12).tolist()}"

        r.run(f"cocycle_solve[t={t:g}]", "flow.cocycle_solve", cfg.tol("invariance", 1e-9), solve,
              inputs={"t": t})

    def jacobi():
        p1 = pair_from_flow(theta, model.commuting[0])
        p2 = pair_from_flow(theta, model.commuting[1])
        return jacobi_residual(p1, p2, model.pair, omega, theta, pts[0])

    r.run("bracket_jacobi", "bracket.jacobi", cfg.tol("jacobi", 1e-4), jacobi)
    return report


# -- quantize ------------------------------------------------------------------------------------------


def run_quantize(cfg: ExperimentConfig, report: Report | None = None, prefix: str = "") -> Report:
    """Frames, generators, propagators, Kostant-Souriau action, commutators, reconstruction."""
    report = report or new_report("quantize", cfg)
    model = build_model(cfg)
    if model.flow is None:
        raise KernelError("quantize needs a built-in model with a flow")
    k = model.kernel
    r = _Runner(report, cfg, prefix + f"quantize.{model.name}.")
    frame = build_frame(k, model.frame)
    flow = model.flow
    A = generator_matrix(frame, flow)

    r.run("frame_whitening", "frame.whitening", cfg.tol("whitening", 1e-10),
          lambda: (float(np.linalg.norm(frame.W.conj().T @ frame.gram @ frame.W - np.eye(frame.rank))),
                   f"rank={frame.rank} cond={frame.cond:.3e}"))
    r.run("selfadjointness", "generator.selfadjoint", _tol(cfg, model, "selfadjoint"),
          lambda: selfadjointness_residual(frame, A))

    def spectrum():
        lam, imag = generator_spectrum(frame, A)
        return imag, f"spectrum={np.round(lam, 10).tolist()}"

    r.run("spectrum_real", "generator.spectrum", _tol(cfg, model, "spectrum_imag"), spectrum)
    U3, U4, U7 = (propagate(frame, A, t) for t in (0.3, 0.4, 0.7))
    r.run("propagator_unitarity", "propagator.unitary", cfg.tol("unitarity", 1e-8),
          lambda: U7.g_unitarity_residual(frame))
    r.run("propagator_group_law", "propagator.group_law", cfg.tol("group_law", 1e-7),
          lambda: float(np.linalg.norm(U3.U @ U4.U - U7.U)))
    r.run("propagator_identity", "propagator.identity", cfg.tol("group_law", 1e-7),
          lambda: float(np.linalg.norm(propagate(frame, A, 0.0).U - frame.W @ frame.P)))

    # exact flow comparison needs an invariant span: the full atom space or a fixed point
    if model.measure is not None and model.measure.kind == "discrete":
        for t in cfg.times:
            r.run(f"propagator_vs_flow[t={t:g}]", "propagator.flow", cfg.tol("propagator_flow", 1e-9),
                  lambda t=t: propagator_vs_flow_residual(frame, propagate(frame, A, t), k, flow),
                  inputs={"t": t})
    elif model.name == "bidisc":
        origin = build_frame(k, BIDISC_FRAME[:1])
        A0 = generator_matrix(origin, flow)
        for t in cfg.times:
            r.run(f"propagator_vs_flow_origin[t={t:g}]", "propagator.flow", cfg.tol("propagator_flow", 1e-9),
                  lambda t=t: propagator_vs_flow_residual(origin, propagate(origin, A0, t), k, flow),
                  inputs={"t": t})

    r.run("ks_vs_generator", "kostant_souriau.generator", _tol(cfg, model, "ks"),
          lambda: float(np.max(np.abs(ks_generator_form(frame, flow, flow.phi) - A.A))))

    def commutator():
        a, b = model.commuting
        res = prequantization_commutator_residual(a, b, frame)
        return res.residual, f"bracket_hamiltonian={res.bracket_hamiltonian:.2e}"

    r.run("prequantization_commutator", "prequantization.commutator", _tol(cfg, model, "commutator"),
          commutator)

    def reconstruction():
        return max(float(np.linalg.norm(reconstruct_F(frame, i, A) - model.pair.F(x)))
                   for i, x in enumerate(frame.points))

    r.run("reconstruct_F", "reconstruction.mean_values", _tol(cfg, model, "reconstruct"), reconstruction)

    if model.name == "bidisc":
        def gauges():
            ku = unitary_gauge(k)
            fu = build_frame(ku, model.frame)
            Au = generator_matrix(fu, unitary_gauge_flow(k, flow))
            D = gauge_congruence(frame)
            return float(max(np.max(np.abs(D.conj().T @ A.A @ D - Au.A)),
                             np.max(np.abs(D.conj().T @ frame.gram @ D - fu.gram))))

        r.run("gauge_consistency", "gauge.unitary_holomorphic", cfg.tol("gauge", 1e-8), gauges)
    return report


# -- examples ---------------------------------------------------------------------------------------------


def run_example(name: str, cfg: ExperimentConfig, report: Report | None = None, prefix: str = "") -> Report:
    report = report or new_report(f"example {name}", cfg)
    if name == "bidisc":
        return _example_bidisc(cfg, report, prefix)
    if name == "moment":
        return _example_moment(cfg, report, prefix)
    raise KernelError(f"unknown example {name!r}")


def _example_bidisc(cfg, report, prefix):
    from .examples.bidisc import (PsiCoefficients, bidisc_F_hol, bidisc_ks_reference, consistent_F_hol,
                                  displayed_pair, displayed_cocycle, rotation, solved_rotation_flow)

    r = _Runner(report, cfg, prefix + "example.bidisc.")
    k = bidisc.bidisc_kernel()
    rng = np.random.default_rng(cfg.seed)
    pts = bidisc.random_points(10, rng)
    x0 = np.zeros(4)
    r.run("kernel_origin", "example.kernel", 1e-14, lambda: float(np.linalg.norm(k(x0, x0) - 2 * np.eye(2))))
    xh = complex_to_real([0.5, 0])
    r.run("kernel_half", "example.kernel", 1e-14,
          lambda: float(np.linalg.norm(k(xh, xh) - np.array([[7 / 3, 0.5], [0.5, 2.25]]))))
    r.run("amplitude_half", "kernel.transition_amplitude", 1e-14,
          lambda: abs(transition_amplitude(k, (x0, [1, 0]), (xh, [1, 0])) - np.sqrt(6 / 7)))
    theta = connection_form(k)
    r.run("connection_origin", "connection.origin", 1e-9,
          lambda: float(np.linalg.norm(theta(x0, complex_direction(0, 2, "z"))
                                       - np.array([[0, 0.5], [0, 0]]))))
    r.run("flow_half_turn", "example.flow", 1e-14,
          lambda: float(np.linalg.norm(bidisc.bidisc_flow(np.pi, [0.5, 0.3]) + np.array([0.5, 0.3]))))

    sigma, _ = rotation(1.0, -1.0)
    rep = Representation("torus", 2)

    def solved_gap():
        worst = 0.0
        for t in cfg.times:
            sol = cocycle_solve(k, sigma, t, bidisc.ANCHORS, rep)
            gap = np.angle(np.exp(1j * (sol.params[1] - sol.params[0] - t)))
            worst = max(worst, abs(gap), sol.residual)
        return worst

    r.run("cocycle_phase_gap", "flow.cocycle_solve", cfg.tol("invariance", 1e-9), solved_gap)
    flow, rates = solved_rotation_flow(k, 1.0, -1.0)
    pairs = [(a, b) for a in pts for b in pts]
    r.run("flow_invariance_solved", "flow.kernel_invariance", cfg.tol("invariance", 1e-9),
          lambda: max(flow_invariance_residual(k, flow, None, t, pairs) for t in cfg.times))

    def displayed_h():
        worst = 0.0
        for t in cfg.times:
            for a, b in pairs[:20]:
                h = displayed_cocycle(t)
                worst = max(worst, float(np.linalg.norm(k(sigma(t, a), sigma(t, b)) - h.conj().T @ k(a, b) @ h)))
        return worst, "displayed cocycle diag(e^{it}, e^{-it}) does not preserve the kernel"

    r.run("displayed_cocycle_invariance", "flow.kernel_invariance", 1e-9, displayed_h, kind="discrepancy")

    omega = curvature(theta)
    sub = pts[:3]
    r.run("hamiltonian_consistent_F", "hamiltonian.equation", 1e-4,
          lambda: max(hamiltonian_residual(bidisc.consistent_pair(1.0, 1.0), omega, theta, x) for x in sub))
    r.run("consistent_F_vs_flow_pair", "hamiltonian.flow_pair", 1e-6,
          lambda: max(float(np.linalg.norm(pair_from_flow(theta, flow).F(x)
                                           - consistent_F_hol(real_to_complex(x), 1, -1, rates))) for x in sub))
    ku = unitary_gauge(k)
    thu = connection_form(ku)
    omu = curvature(thu)
    r.run("hamiltonian_consistent_F_unitary", "hamiltonian.equation", 1e-4,
          lambda: max(hamiltonian_residual(unitary_gauge_pair(k, bidisc.consistent_pair(1.0, 1.0)), omu, thu, x)
                      for x in sub[:2]))
    r.run("displayed_F_hamiltonian", "hamiltonian.equation", 1e-4,
          lambda: (max(hamiltonian_residual(displayed_pair(1.0, 1.0), omega, theta, x) for x in sub),
                   "displayed F_hol fails X|Omega = DF for every sign/transpose reading"),
          kind="discrepancy")

    frame = build_frame(k, BIDISC_FRAME)
    A = generator_matrix(frame, flow)
    r.run("reconstruct_origin_consistent", "reconstruction.mean_values", 1e-5,
          lambda: float(np.linalg.norm(reconstruct_F(frame, 0, A) - consistent_F_hol(np.zeros(2), 1, -1, rates))))
    r.run("reconstruct_origin_displayed", "reconstruction.mean_values", 1e-5,
          lambda: (float(np.linalg.norm(reconstruct_F(frame, 0, A) - bidisc_F_hol(np.zeros(2)))),
                   "displayed F_hol(0) = diag(i,-i); kernel-preserving cocycles give diag(i a, i(a+1))"),
          kind="discrepancy")

    # Kostant-Souriau operator on kernel-section combinations
    crng = np.random.default_rng(cfg.seed + 7)
    coefs = []
    for _ in range(10):
        w = 0.6 * (crng.uniform(-1, 1, (3, 2)) + 1j * crng.uniform(-1, 1, (3, 2))) / np.sqrt(2)
        v = crng.normal(size=(3, 2)) + 1j * crng.normal(size=(3, 2))
        coefs.append((PsiCoefficients(w, v), bidisc.random_points(1, crng, 0.7)[0]))
    X = rotation(1.0, 1.0)[1]  # rotation field as displayed (both circles same direction)
    phi_display = lambda x: np.diag([1j, -1j])  # derivative of the displayed cocycle

    def ks_gap(phi):
        worst = 0.0
        for coef, m in coefs:
            q = sum(ks_apply(k, KernelSection(complex_to_real(coef.w[j]), coef.v[j]), X, phi, m)
                    for j in range(len(coef.v)))
            ref = bidisc_ks_reference(coef, np.conj(real_to_complex(m)))
            worst = max(worst, float(np.linalg.norm(q - ref)))
        return worst

    r.run("ks_display_with_displayed_cocycle", "kostant_souriau.display", 1e-6, lambda: ks_gap(phi_display))
    solved = solved_rotation_flow(k, 1.0, 1.0)[0]
    r.run("ks_display_with_solved_cocycle", "kostant_souriau.display", 1e-6,
          lambda: (ks_gap(solved.phi), "display constants diag(1,-1) need the non-preserving cocycle"),
          kind="discrepancy")

    def psi_form():
        worst = 0.0
        for coef, m in coefs:
            zb = np.conj(real_to_complex(m))
            sections = sum(k(m, complex_to_real(coef.w[j])) @ coef.v[j] for j in range(len(coef.v)))
            worst = max(worst, float(np.linalg.norm(sections - bidisc.bidisc_psi(coef, zb))))
        return worst

    r.run("psi_kernel_sections", "kostant_souriau.domain", 1e-12, psi_form)
    r.run("psi_displayed_form", "kostant_souriau.domain", 1e-12,
          lambda: (max(float(np.linalg.norm(bidisc.bidisc_psi(c, np.conj(real_to_complex(m)))
                                            - bidisc.bidisc_psi(c, np.conj(real_to_complex(m)), displayed_form=True)))
                       for c, m in coefs), "displayed psi_2 omits the constant sum_k v_2k"),
          kind="discrepancy")
    return report


def _example_moment(cfg, report, prefix):
    from .examples.moment import (MomentMeasure, chi_n, discrete_oracle, kernel_series, ortho_polys,
                                  sigma_kernel)

    if cfg.kernel.startswith("moment:"):
        meas = MomentMeasure.from_config({"kind": cfg.kernel.split(":")[1], **cfg.kernel_params})
    else:
        meas = MomentMeasure.discrete([-1.0, 1.0])
    r = _Runner(report, cfg, prefix + f"example.moment.{meas.label}.")
    k = sigma_kernel(meas)
    theta = connection_form(k)
    omega = curvature(theta)
    pair, flow = moment.translation_model(meas)
    rng = np.random.default_rng(cfg.seed)
    zs = rng.uniform(-0.6, 0.6, 4) + 1j * rng.uniform(-0.4, 0.4, 4)
    dz, dzb = complex_direction(0, 1, "z"), complex_direction(0, 1, "zbar")

    r.run("moment_condition", "measure.moments", 0.5, lambda: float(not meas.check_moment_condition()))
    n = min(6, meas.support_size)
    P = ortho_polys(meas, n)

    def orthonormality():
        if meas.kind == "gaussian":
            nodes, weights = np.polynomial.hermite_e.hermegauss(40)
            weights = weights / np.sqrt(2 * np.pi)
        else:
            nodes, weights = np.asarray(meas.atoms), np.asarray(meas.weights)
        V = P(nodes)
        return float(np.max(np.abs((V * weights) @ V.T - np.eye(n))))

    r.run("ortho_polys", "measure.orthonormal_polynomials", 1e-10, orthonormality)

    def chi_quadrature():
        if meas.kind == "gaussian":
            nodes, weights = np.polynomial.hermite_e.hermegauss(120)
            weights = weights / np.sqrt(2 * np.pi)
        else:
            nodes, weights = np.asarray(meas.atoms), np.asarray(meas.weights)
        nmax = 10 if meas.kind == "gaussian" else n - 1
        Pn = ortho_polys(meas, nmax + 1)(nodes)
        zz = np.array([0.0, 1.0, -1.5 + 0.5j, 2j, 1.2 - 1.4j])
        E = np.exp(-1j * zz[:, None] * nodes) * weights
        return float(np.max(np.abs(E @ Pn.T - np.array([[chi_n(meas, j, z) for j in range(nmax + 1)]
                                                         for z in zz]))))

    r.run("chi_n_quadrature", "measure.chi_n", 1e-10, chi_quadrature)
    terms = 30 if meas.kind == "gaussian" else len(meas.atoms)

    def series():
        zz = 2 * np.exp(1j * np.linspace(0, 2 * np.pi, 7))[:-1]
        return max(abs(kernel_series(meas, z, v, terms) - meas.chi(v - np.conj(z))) for z in zz for v in zz[::2])

    r.run("kernel_series", "measure.kernel_factorization", 1e-10, series)

    r.run("connection_oracle", "connection.closed_form", 1e-6,
          lambda: max(abs(theta(complex_to_real([z]), dz)[0, 0] - meas.dlogchi(z - np.conj(z))) for z in zs))
    r.run("curvature_oracle", "curvature.closed_form", 1e-6,
          lambda: max(abs(-omega(complex_to_real([z]), dzb, dz)[0, 0] - meas.d2logchi(z - np.conj(z)))
                      for z in zs))
    r.run("hamiltonian", "hamiltonian.equation", 1e-6,
          lambda: max(hamiltonian_residual(pair, omega, theta, complex_to_real([z])) for z in zs))

    def ks_derivative():
        worst = 0.0
        for z in zs:
            for v in zs[::-1]:
                m, n_ = complex_to_real([z]), complex_to_real([v])
                q = ks_apply(k, KernelSection(n_, np.ones(1)), flow, flow.phi, m)[0]
                # I Fhat I^{-1} = -i Q; compare with i d/dzbar of K(zbar, v) = chi(v - zbar)
                s = v - np.conj(z)
                dzbar = -meas.dlogchi(s) * meas.chi(s)
                worst = max(worst, abs(-1j * q - 1j * dzbar))
        return worst

    r.run("ks_i_d_dzbar", "kostant_souriau.translation", 1e-6, ks_derivative)

    if meas.kind == "discrete":
        oracle = discrete_oracle(meas)
        zf = np.arange(len(meas.atoms)) * np.pi / 4
        frame = build_frame(k, complex_to_real(zf[:, None] + 0j))
        A = generator_matrix(frame, flow)

        def spectrum():
            lam, _ = generator_spectrum(frame, A)
            return float(np.max(np.abs(np.sort(lam) - np.sort(-np.asarray(meas.atoms)))))

        r.run("generator_spectrum", "generator.spectrum", cfg.tol("spectrum", 1e-12), spectrum)
        r.run("first_moment", "generator.mean", 1e-12,
              lambda: abs(A.A[0, 0] + np.vdot(oracle.coherent(0), oracle.Fhat @ oracle.coherent(0))))

        def oracle_flow():
            F0 = oracle.frame(zf)
            worst = 0.0
            for t in cfg.times:
                U = propagate(frame, A, t)
                worst = max(worst, float(np.max(np.abs(F0 @ U.U - oracle.evolve(t) @ F0))),
                            float(np.max(np.abs(oracle.evolve(t) @ F0 - oracle.frame(zf + t)))))
            return worst

        r.run("propagator_vs_oracle", "propagator.flow", cfg.tol("propagator_flow", 1e-9), oracle_flow)
    return report


# -- all --------------------------------------------------------------------------------------------------


def run_all(cfg: ExperimentConfig) -> Report:
    report = new_report("all", cfg)
    from dataclasses import replace

    for name in ("bidisc", "moment:gaussian", "moment:discrete"):
        params = {"atoms": [-1.0, 1.0]} if name == "moment:discrete" else {}
        sub = replace(cfg, kernel=name, kernel_params=params,
                      points={"random": {"count": 10 if name == "bidisc" else 6}}, frame=None)
        run_check(sub, report)
        run_geometry(sub, report)
        run_quantize(sub, report)
    run_example("bidisc", replace(cfg, kernel="bidisc", kernel_params={}), report)
    for params in ({}, {"atoms": [-1.0, 1.0]}):
        kern = "moment:discrete" if params else "moment:gaussian"
        run_example("moment", replace(cfg, kernel=kern, kernel_params=params), report)
    return report
