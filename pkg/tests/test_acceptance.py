"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line that is printed in the terminal summary.
"""
import subprocess
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from kernelquant import _accel
from kernelquant.conventions import DEFAULT
from kernelquant.examples import bidisc, moment
from kernelquant.gauge_geometry import (cocycle_solve, connection_form, curvature, flow_invariance_residual,
                                        hamiltonian_residual)
from kernelquant.kernel_core import (BundlePoint, Representation, bundle_extend, complex_direction,
                                     complex_to_real, hermitian_residual, real_to_complex)
from kernelquant.quantization import (KernelSection, build_frame, generator_matrix, generator_spectrum,
                                      ks_apply, prequantization_commutator_residual, propagate,
                                      propagator_vs_flow_residual, reconstruct_F)
from kernelquant.rkhs import (FeatureMap, SpanElement, assemble_gram, certify_positivity,
                              factorization_equivalence, factorize, reproducing_residual)

from conftest import ACCEPTANCE_LINES


def _verdict(number, title, clauses):
    """Record one summary line; ``clauses`` maps label -> (value, bound, ok)."""
    ok = all(c[2] for c in clauses.values())
    detail = "; ".join(f"{k}={v:.2e} (<{b:g})" if isinstance(v, float) else f"{k}={v}"
                       for k, (v, b, _) in clauses.items())
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}")
    failed = [k for k, c in clauses.items() if not c[2]]
    assert ok, f"criterion {number} failed on {failed}: {detail}"


def _lt(v, bound):
    v = float(v)
    return v, bound, v < bound


@pytest.fixture(scope="module", autouse=True)
def _warm_numba():
    # compile the accelerated loops before anything is timed
    z = np.zeros((2, 2), complex)
    _accel.bidisc_blocks(z, z)
    _accel.discrete_chi(np.zeros(2, complex), np.ones(2), np.full(2, 0.5))
    bidisc.bidisc_kernel().blocks(np.zeros((1, 4)), np.zeros((1, 4)))


def test_criterion_1_kernel_axioms(bidisc_k):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    pts = bidisc.random_points(10, rng)
    herm = hermitian_residual(bidisc_k, pts) / np.max(np.abs(bidisc_k.blocks(pts, pts)))
    rep = Representation("matrix", 2)
    Kb = bundle_extend(bidisc_k, rep)
    eq = 0.0
    for i in range(10):
        g = np.eye(2) + 0.3 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        h = np.eye(2) + 0.3 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        p, q = BundlePoint(pts[i], g), BundlePoint(pts[9 - i], h)
        direct = g.conj().T @ bidisc_k(pts[i], pts[9 - i]) @ h
        eq = max(eq, np.linalg.norm(Kb(p, q) - direct) / np.linalg.norm(direct))
    cert = certify_positivity(assemble_gram(bidisc_k, pts))
    elapsed = time.perf_counter() - t0
    _verdict(1, "kernel axioms", {
        "hermitian": _lt(herm, 1e-12),
        "equivariance": _lt(eq, 1e-12),
        "min_eig/|G|>=-1e-9": (f"{cert.min_eig / cert.norm:.2e}", None, cert.min_eig >= -1e-9 * cert.norm),
        "runtime_s": _lt(elapsed, 1.0),
    })


def test_criterion_2_rkhs_equivalences(bidisc_k):
    rng = np.random.default_rng(2)
    pts = bidisc.random_points(10, rng)
    g = assemble_gram(bidisc_k, pts)
    F = factorize(g)
    recon = np.linalg.norm(F.gram() - g.gram) / g.norm
    worst = 0.0
    for _ in range(20):
        f = SpanElement(rng.normal(size=(10, 2)) + 1j * rng.normal(size=(10, 2)))
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        worst = max(worst, reproducing_residual(g, f, int(rng.integers(10)), v))
    Q, _ = np.linalg.qr(rng.normal(size=(F.rank, F.rank)) + 1j * rng.normal(size=(F.rank, F.rank)))
    U = factorization_equivalence(F, FeatureMap(Q @ F.columns))
    _verdict(2, "RKHS equivalences", {
        "factorization/|G|": _lt(recon, 1e-10),
        "reproducing": _lt(worst, 1e-10),
        "planted_unitary": _lt(np.linalg.norm(U - Q), 1e-9),
    })


def test_criterion_3_gaussian_geometry_oracle(gaussian):
    t0 = time.perf_counter()
    k = moment.sigma_kernel(gaussian)
    theta = connection_form(k)
    omega = curvature(theta)
    pair, _ = moment.translation_model(gaussian)
    dz, dzb = complex_direction(0, 1, "z"), complex_direction(0, 1, "zbar")
    zs = [0.0, 0.3 + 0.2j, -0.5 + 0.1j, 0.7 - 0.4j]
    th = max(abs(theta(complex_to_real([z]), dz)[0, 0] - (np.conj(z) - z)) for z in zs)
    # d2 log chi = -1 for the standard normal measure
    om = max(abs(-omega(complex_to_real([z]), dzb, dz)[0, 0] - (-1.0)) for z in zs)
    ham = max(hamiltonian_residual(pair, omega, theta, complex_to_real([z])) for z in zs)
    # F = (log chi)'(zbar - z) with (log chi)'(s) = -s
    fval = max(abs(pair.F(complex_to_real([z]))[0, 0] - (z - np.conj(z))) for z in zs)
    elapsed = time.perf_counter() - t0
    _verdict(3, "Gaussian geometry oracle", {
        "theta": _lt(th, 1e-6), "curvature": _lt(om, 1e-6), "F": _lt(fval, 1e-6),
        "hamiltonian": _lt(ham, 1e-6), "runtime_s": _lt(elapsed, 1.0),
    })


def test_criterion_4_two_atom_quantization(two_atom):
    k = moment.sigma_kernel(two_atom)
    _, flow = moment.translation_model(two_atom)
    frame = build_frame(k, complex_to_real(np.array([[0.0], [np.pi / 4]]) + 0j))
    A = generator_matrix(frame, flow)
    lam, imag = generator_spectrum(frame, A)
    spec = float(np.max(np.abs(np.sort(lam.real) - np.array([-1.0, 1.0])))) + imag
    pvf = max(propagator_vs_flow_residual(frame, propagate(frame, A, t), k, flow) for t in (0.1, 0.5, 1.0))
    real_frame = build_frame(k, complex_to_real(np.array([[0.0], [0.4], [-0.9]]) + 0j))
    Ar = generator_matrix(real_frame, flow)
    recon = max(np.abs(reconstruct_F(real_frame, i, Ar)).max() for i in range(3))
    _verdict(4, "two-atom quantization", {
        "spectrum": _lt(spec, 1e-12), "propagator_vs_flow": _lt(pvf, 1e-9), "reconstruct_F": _lt(recon, 1e-10),
    })


def test_criterion_5_gaussian_model(gaussian):
    nodes, weights = np.polynomial.hermite_e.hermegauss(120)
    weights = weights / np.sqrt(2 * np.pi)
    P = moment.ortho_polys(gaussian, 11)(nodes)
    zs = np.concatenate([2 * np.exp(1j * np.linspace(0, 2 * np.pi, 9)[:-1]), [0, 1j, -0.7 + 1.1j]])
    quad = (np.exp(-1j * zs[:, None] * nodes) * weights) @ P.T
    closed = np.array([[moment.chi_n(gaussian, n, z) for n in range(11)] for z in zs])
    chi_err = float(np.max(np.abs(quad - closed)))
    series = max(abs(moment.kernel_series(gaussian, z, v, 30) - gaussian.chi(v - np.conj(z)))
                 for z in zs for v in zs)
    k = moment.sigma_kernel(gaussian)
    _, flow = moment.translation_model(gaussian)
    h = 1e-4
    ks = 0.0
    for z in (0.2 + 0.1j, -0.3 - 0.2j, 0.5j):
        for v in (0.0, 0.4 - 0.3j):
            q = ks_apply(k, KernelSection(complex_to_real([v]), np.ones(1)), flow, flow.phi,
                         complex_to_real([z]))[0]
            s = v - np.conj(z)
            d_dzbar = (gaussian.chi(s - h) - gaussian.chi(s + h)) / (2 * h)
            # Q_F acts as -i times the generator route applied to sections
            ks = max(ks, abs(-1j * q - 1j * d_dzbar))
    _verdict(5, "Gaussian model", {
        "chi_n_vs_quadrature": _lt(chi_err, 1e-10), "kernel_series": _lt(series, 1e-10),
        "Q_F=i d/dzbar": _lt(ks, 1e-6),
    })


def test_criterion_6_bidisc_end_to_end(bidisc_k):
    from kernelquant.config import parse_config
    from kernelquant.runners import run_example

    rng = np.random.default_rng(6)
    pts = bidisc.random_points(10, rng)
    sigma, _ = bidisc.rotation(1.0, -1.0)
    pairs = [(a, b) for a in pts for b in pts]
    inv = 0.0
    for t in (0.1, 0.5, 1.0):
        sol = cocycle_solve(bidisc_k, sigma, t, bidisc.ANCHORS, Representation("torus", 2))
        flow, _ = bidisc.solved_rotation_flow(bidisc_k, 1.0, -1.0)
        inv = max(inv, sol.residual, flow_invariance_residual(bidisc_k, flow, None, t, pairs))
    rep = run_example("bidisc", parse_config({}))
    flagged = {r.check for r in rep.records if r.kind == "discrepancy" and not r.passed}
    h_flag = "example.bidisc.displayed_cocycle_invariance" in flagged

    theta = connection_form(bidisc_k)
    omega = curvature(theta)
    ham = max(hamiltonian_residual(bidisc.displayed_pair(1.0, 1.0), omega, theta, x) for x in pts[:5])

    X = bidisc.rotation(1.0, 1.0)[1]
    flow11, _ = bidisc.solved_rotation_flow(bidisc_k, 1.0, 1.0)
    ks = 0.0
    for _ in range(10):
        w = 0.6 * (rng.uniform(-1, 1, (3, 2)) + 1j * rng.uniform(-1, 1, (3, 2))) / np.sqrt(2)
        v = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        coef = bidisc.PsiCoefficients(w, v)
        m = bidisc.random_points(1, rng, 0.7)[0]
        q = sum(ks_apply(bidisc_k, KernelSection(complex_to_real(w[j]), v[j]), X, flow11.phi, m) for j in range(3))
        ks = max(ks, float(np.linalg.norm(q - bidisc.bidisc_ks_reference(coef, np.conj(real_to_complex(m))))))

    flow, _ = bidisc.solved_rotation_flow(bidisc_k, 1.0, -1.0)
    frame = build_frame(bidisc_k, np.zeros((1, 4)))
    rec = reconstruct_F(frame, 0, generator_matrix(frame, flow))
    rec_err = float(np.linalg.norm(rec - bidisc.bidisc_F_hol(np.zeros(2))))
    _verdict(6, "bidisc end to end", {
        "cocycle_invariance": _lt(inv, 1e-9),
        "h(t)_flagged": (h_flag, True, h_flag),
        "displayed_hamiltonian": _lt(ham, 1e-4),
        "ks_display_vs_ks_apply": _lt(ks, 1e-6),
        "reconstruct_origin_vs_F_hol(0)": _lt(rec_err, 1e-5),
    })


def test_criterion_7_prequantization(bidisc_k, two_atom):
    conv = replace(DEFAULT, commutator_factor=-1j)
    f1, _ = bidisc.solved_rotation_flow(bidisc_k, 1.0, 0.0)
    f2, _ = bidisc.solved_rotation_flow(bidisc_k, 0.0, 1.0)
    frame_pts = complex_to_real(np.array([[0, 0], [0.3 + 0.1j, -0.2 + 0.2j],
                                          [-0.25 + 0.3j, 0.1 - 0.35j], [0.4j, 0.3]]))
    res_b = prequantization_commutator_residual(f1, f2, build_frame(bidisc_k, frame_pts), conv)
    k2 = moment.sigma_kernel(two_atom)
    _, flow = moment.translation_model(two_atom)
    frame2 = build_frame(k2, complex_to_real(np.array([[0.0], [np.pi / 4]]) + 0j))
    res_a = prequantization_commutator_residual(flow, flow, frame2, conv)
    _verdict(7, "prequantization commutator", {
        "bidisc_circle_flows": _lt(res_b.residual, 1e-4), "two_atom_translation": _lt(res_a.residual, 1e-12),
    })


def test_criterion_8_cli_all():
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "kernelquant", "all", "-q"], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    _verdict(8, "cli all", {
        "exit_code": (proc.returncode, 0, proc.returncode == 0), "runtime_s": _lt(elapsed, 30.0),
    })
