import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelquant.examples import bidisc, moment
from kernelquant.kernel_core import KernelError, complex_to_real
from kernelquant.quantization import (build_frame, gauge_congruence,
                                      generator_matrix, generator_spectrum, ks_generator_form, propagate,
                                      propagator_vs_flow_residual, reconstruct_F, selfadjointness_residual,
                                      unitary_gauge, unitary_gauge_flow, whitened_generator)

FRAME = complex_to_real(np.array([[0, 0], [0.3 + 0.1j, -0.2 + 0.2j], [-0.25 + 0.3j, 0.1 - 0.35j], [0.4j, 0.3]]))


@pytest.fixture(scope="module")
def atoms3():
    meas = moment.MomentMeasure.discrete([-1.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    k = moment.sigma_kernel(meas)
    pair, flow = moment.translation_model(meas)
    frame = build_frame(k, complex_to_real(np.array([[0.0], [0.7], [1.3]]) + 0j))
    return meas, k, pair, flow, frame, generator_matrix(frame, flow)


@pytest.fixture(scope="module")
def bidisc_setup():
    k = bidisc.bidisc_kernel()
    flow, _ = bidisc.solved_rotation_flow(k, 1.0, -1.0)
    frame = build_frame(k, FRAME)
    return k, flow, frame, generator_matrix(frame, flow)


def test_frame_whitening(atoms3):
    *_, frame, _ = atoms3
    assert frame.rank == 3
    np.testing.assert_allclose(frame.W.conj().T @ frame.gram @ frame.W, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(frame.P @ frame.W, np.eye(3), atol=1e-10)


def test_atom_spectrum(atoms3):
    # Fhat acts as minus the multiplication by the atom
    meas, k, pair, flow, frame, A = atoms3
    lam, imag = generator_spectrum(frame, A)
    np.testing.assert_allclose(np.sort(lam), [-2.0, 0.0, 1.0], atol=1e-10)
    assert imag < 1e-10
    assert selfadjointness_residual(frame, A) < 1e-12


def test_first_moment_mean_value(atoms3):
    # <K(0)|Fhat K(0)> = -(mean of the measure) = -0.25
    *_, A = atoms3
    assert A.A[0, 0] == pytest.approx(-0.25, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-3.0, 3.0))
def test_propagator_properties(t):
    meas = moment.MomentMeasure.discrete([-1.0, 1.0])
    k = moment.sigma_kernel(meas)
    _, flow = moment.translation_model(meas)
    frame = build_frame(k, complex_to_real(np.array([[0.0], [np.pi / 4]]) + 0j))
    A = generator_matrix(frame, flow)
    U = propagate(frame, A, t)
    assert U.g_unitarity_residual(frame) < 1e-10
    assert propagator_vs_flow_residual(frame, U, k, flow) < 1e-9


def test_propagator_group_law(atoms3):
    *_, frame, A = atoms3
    U = propagate(frame, A, 0.3).U @ propagate(frame, A, 0.5).U
    np.testing.assert_allclose(U, propagate(frame, A, 0.8).U, atol=1e-12)


def test_wrong_sign_fails(atoms3):
    from dataclasses import replace

    from kernelquant.conventions import DEFAULT

    meas, k, pair, flow, frame, A = atoms3
    U = propagate(frame, A, 0.5, replace(DEFAULT, propagator_sign=-1))
    assert propagator_vs_flow_residual(frame, U, k, flow) > 1e-2


def test_reconstruction(atoms3):
    meas, k, pair, flow, frame, A = atoms3
    for i, x in enumerate(frame.points):
        np.testing.assert_allclose(reconstruct_F(frame, i, A), pair.F(x), atol=1e-10)


def test_ks_generator_route(atoms3, bidisc_setup):
    *_, flow, frame, A = atoms3
    np.testing.assert_allclose(ks_generator_form(frame, flow, flow.phi), A.A, atol=1e-9)
    k, flow, frame, A = bidisc_setup
    np.testing.assert_allclose(ks_generator_form(frame, flow, flow.phi), A.A, atol=1e-6)


def test_bidisc_generator(bidisc_setup):
    k, flow, frame, A = bidisc_setup
    assert selfadjointness_residual(frame, A) < 1e-8
    lam, imag = generator_spectrum(frame, A)
    assert imag < 1e-8
    Wg = whitened_generator(frame, A)
    assert np.linalg.norm(Wg - Wg.conj().T) < 1e-8


def test_bidisc_reconstruct_origin(bidisc_setup):
    # solved cocycle rates (0, 1): F(0) = i diag(0, 1)
    k, flow, frame, A = bidisc_setup
    np.testing.assert_allclose(reconstruct_F(frame, 0, A), np.diag([0, 1j]), atol=1e-6)


def test_origin_is_fixed_point(bidisc_setup):
    k, flow, *_ = bidisc_setup
    f0 = build_frame(k, np.zeros((1, 4)))
    A0 = generator_matrix(f0, flow)
    for t in (0.2, 1.5):
        assert propagator_vs_flow_residual(f0, propagate(f0, A0, t), k, flow) < 1e-12


def test_generic_frame_span_not_invariant(bidisc_setup):
    # small frames approach invariance; the residual decays with the frame radius
    k, flow, *_ = bidisc_setup
    res = []
    for r in (0.3, 0.1):
        f = build_frame(k, FRAME * r / 0.5)
        res.append(propagator_vs_flow_residual(f, propagate(f, generator_matrix(f, flow), 0.2), k, flow))
    assert res[1] < res[0] / 5


def test_gauge_consistency(bidisc_setup):
    k, flow, frame, A = bidisc_setup
    ku = unitary_gauge(k)
    fu = build_frame(ku, FRAME)
    Au = generator_matrix(fu, unitary_gauge_flow(k, flow))
    D = gauge_congruence(frame)
    np.testing.assert_allclose(D.conj().T @ A.A @ D, Au.A, atol=1e-8)
    # the unitary gauge kernel is the identity on the diagonal
    np.testing.assert_allclose(ku(FRAME[1], FRAME[1]), np.eye(2), atol=1e-12)


def test_singular_frame_point():
    from kernelquant.kernel_core import constant_kernel

    k = constant_kernel([[1.0, 1.0], [1.0, 1.0]])
    frame = build_frame(k, np.zeros((1, 2)))
    assert frame.rank == 1
    A = np.zeros((2, 2), complex)
    with pytest.raises(KernelError):
        reconstruct_F(frame, 0, A)
