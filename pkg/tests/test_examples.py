import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelquant.examples import bidisc, moment
from kernelquant.gauge_geometry import connection_form, curvature, hamiltonian_residual
from kernelquant.kernel_core import KernelError, complex_to_real
from kernelquant.quantization import KernelSection, ks_apply

# frozen exact values (symbolic Gaussian integrals of orthonormal Hermite polynomials at z = 1/2 + i/3)
CHI_N_GAUSS = {
    0: 0.9199848153798850972 - 0.15476648637166015798j,
    1: 0.22927836194079828674 - 0.51158123648049593459j,
    3: -0.082617735534223585034 - 0.0021935879305408421294j,
    5: 0.00240231728688991743 + 0.0062260875896001336618j,
}
# orthonormal polynomials of {-1, 0, 2} with weights (1/4, 1/2, 1/4), evaluated at w = 1
POLYS_AT_1 = [1.0, 0.688247201611685, -1.18962375495893]


@pytest.mark.parametrize("n", sorted(CHI_N_GAUSS))
def test_gaussian_chi_n_frozen(gaussian, n):
    assert moment.chi_n(gaussian, n, 0.5 + 1j / 3) == pytest.approx(CHI_N_GAUSS[n], abs=1e-13)


def test_discrete_polys_frozen():
    meas = moment.MomentMeasure.discrete([-1.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    np.testing.assert_allclose(moment.ortho_polys(meas, 3)(np.array([1.0]))[:, 0], POLYS_AT_1, atol=1e-12)


def test_gaussian_moments(gaussian):
    assert [gaussian.moment(n) for n in range(7)] == [1, 0, 1, 0, 3, 0, 15]
    assert gaussian.check_moment_condition()


def test_measure_validation():
    with pytest.raises(KernelError):
        moment.MomentMeasure.discrete([0.0, 0.0])
    with pytest.raises(KernelError):
        moment.MomentMeasure.discrete([0.0, 1.0], [0.2, 0.2])
    with pytest.raises(KernelError):
        moment.MomentMeasure("cauchy")


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.0, 1.0), st.floats(-1.5, 1.5), st.floats(-1.0, 1.0))
def test_gaussian_series_reconstruction(a, b, c, d):
    g = moment.MomentMeasure()
    z, v = complex(a, b), complex(c, d)
    assert abs(moment.kernel_series(g, z, v, 30) - g.chi(v - np.conj(z))) < 1e-10


def test_two_atom_kernel_is_cosine(two_atom):
    z, v = 0.3 + 0.2j, -0.1 + 0.4j
    assert two_atom.chi(v - np.conj(z)) == pytest.approx(np.cos(v - np.conj(z)), abs=1e-15)
    k = moment.sigma_kernel(two_atom)
    assert k(complex_to_real([z]), complex_to_real([v]))[0, 0] == pytest.approx(np.cos(v - np.conj(z)))


def test_oracle_consistency(two_atom):
    o = moment.discrete_oracle(two_atom)
    zs = np.array([0.0, 0.4, 1.1])
    F = o.frame(zs)
    k = moment.sigma_kernel(two_atom)
    pts = complex_to_real(zs[:, None] + 0j)
    np.testing.assert_allclose(F.conj().T @ F, k.block_matrix(pts, pts), atol=1e-14)
    np.testing.assert_allclose(o.evolve(0.3) @ F, o.frame(zs + 0.3), atol=1e-14)


def test_dlogchi_closed_forms(gaussian, two_atom):
    s = 0.3 - 0.2j
    assert gaussian.dlogchi(s) == pytest.approx(-s)
    assert gaussian.d2logchi(s) == pytest.approx(-1.0)
    assert two_atom.dlogchi(s) == pytest.approx(-np.tan(s))


def test_ks_translation_is_i_d_dzbar(two_atom):
    k = moment.sigma_kernel(two_atom)
    _, flow = moment.translation_model(two_atom)
    z, v = 0.2 + 0.1j, 0.5 - 0.2j
    q = ks_apply(k, KernelSection(complex_to_real([v]), np.ones(1)), flow, flow.phi, complex_to_real([z]))[0]
    # d/dzbar cos(v - zbar) = sin(v - zbar)
    assert -1j * q == pytest.approx(1j * np.sin(v - np.conj(z)), abs=1e-8)


# -- bidisc fixture ---------------------------------------------------------------------------


def test_flow_display():
    np.testing.assert_allclose(bidisc.bidisc_flow(np.pi / 2, [0.5, 0.2j]), [0.5j, 0.2], atol=1e-15)


def test_consistent_F_hamiltonian(bidisc_k, rng):
    theta = connection_form(bidisc_k)
    omega = curvature(theta)
    for s1, s2 in ((1, 1), (1, -1)):
        pair = bidisc.consistent_pair(s1, s2)
        for x in bidisc.random_points(2, rng):
            assert hamiltonian_residual(pair, omega, theta, x) < 1e-4


def test_displayed_F_hol_values():
    np.testing.assert_allclose(bidisc.bidisc_F_hol(np.zeros(2)), np.diag([1j, -1j]))
    np.testing.assert_allclose(bidisc.consistent_F_hol(np.zeros(2), 1, -1), np.diag([0, 1j]), atol=1e-15)


def test_psi_matches_kernel_sections(bidisc_k, rng):
    w = 0.5 * (rng.uniform(-1, 1, (3, 2)) + 1j * rng.uniform(-1, 1, (3, 2)))
    v = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    coef = bidisc.PsiCoefficients(w, v)
    m = bidisc.random_points(1, rng)[0]
    direct = sum(bidisc_k(m, complex_to_real(w[j])) @ v[j] for j in range(3))
    zb = np.conj(m[0::2] + 1j * m[1::2])
    np.testing.assert_allclose(bidisc.bidisc_psi(coef, zb), direct, atol=1e-12)
    gap = bidisc.bidisc_psi(coef, zb) - bidisc.bidisc_psi(coef, zb, displayed_form=True)
    np.testing.assert_allclose(gap, [0, v[:, 1].sum()], atol=1e-14)
    with pytest.raises(KernelError):
        bidisc.bidisc_ks_reference(coef, zb, c=coef.c + 1.0)


def test_ks_display_with_displayed_constants(bidisc_k, rng):
    # the display corresponds to phi = diag(i, -i) with the corrected psi
    X = bidisc.rotation(1.0, 1.0)[1]
    w = 0.5 * (rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2)))
    v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    coef = bidisc.PsiCoefficients(w, v)
    m = bidisc.random_points(1, rng, 0.6)[0]
    q = sum(ks_apply(bidisc_k, KernelSection(complex_to_real(w[j]), v[j]), X,
                     lambda x: np.diag([1j, -1j]), m) for j in range(2))
    ref = bidisc.bidisc_ks_reference(coef, np.conj(m[0::2] + 1j * m[1::2]))
    np.testing.assert_allclose(q, ref, atol=1e-6)
