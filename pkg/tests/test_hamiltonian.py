import numpy as np
import pytest
import scipy.linalg

from diraclab.core import SIGMA_X, SIGMA_Y, SIGMA_Z, DiracParams, SpinorField, grid_new, is_hermitian
from diraclab.hamiltonian import (
    DENSE_MAX_POINTS,
    apply_hamiltonian,
    build_dense,
    build_slices,
    kinetic_matrix,
)

ALL_SLOPES = dict(m=0.7, v_sc=0.3, v_el=0.4, v_mag=0.2, v_ps=0.25)


def conjugate_dense(h, c):
    k = np.kron(c, np.eye(h.shape[0] // 2))
    return k @ h.conj() @ k.conj().T


def test_free_slices():
    g = grid_new(16, -4, 4)
    s = build_slices(g, DiracParams(m=1.0))
    assert np.allclose(s.x_slices, SIGMA_Z)
    assert np.allclose(s.p_slices, g.p_kinetic[:, None, None] * SIGMA_X)


def test_single_electric_term():
    g = grid_new(8, -4, 4)  # x = -4 .. 3, index 6 is x = 2
    s = build_slices(g, DiracParams(m=0.0, v_el=1.0))
    assert g.x[6] == 2.0
    assert np.allclose(s.x_slices[6], 2 * np.eye(2))


def test_scalar_cancels_mass():
    g = grid_new(8, -4, 4)
    s = build_slices(g, DiracParams(m=1.0, v_sc=0.5))
    assert g.x[2] == -2.0
    assert abs(s.x_coeffs[3, 2]) < 1e-15


def test_slice_layout_matches_formula():
    g = grid_new(16, -3, 5)
    p = DiracParams(q_sign=-1, **ALL_SLOPES)
    s = build_slices(g, p)
    x = g.x
    q = -1
    for i in range(g.n_points):
        expect = (
            q * p.v_el * x[i] * np.eye(2)
            + (p.rest_energy + p.v_sc * x[i]) * SIGMA_Z
            - q * p.v_ps * x[i] * SIGMA_Y
            - q * p.v_mag * x[i] * SIGMA_X
        )
        assert np.allclose(s.x_slices[i], expect, atol=1e-15)
    assert is_hermitian(s.x_slices) and is_hermitian(s.p_slices)


def test_dense_free_dispersion():
    g = grid_new(64, -10, 10)
    p = DiracParams(m=0.8, c=1.3)
    w = np.linalg.eigvalsh(build_dense(g, p))
    e = np.hypot(p.c * g.p_kinetic, p.rest_energy)
    expected = np.sort(np.concatenate([e, -e]))
    assert np.max(np.abs(w - expected)) < 1e-8


def test_dense_massless_symmetric():
    g = grid_new(32, -5, 5)
    w = np.linalg.eigvalsh(build_dense(g, DiracParams(m=0.0)))
    assert np.max(np.abs(np.sort(w) + np.sort(w)[::-1])) < 1e-12
    assert np.max(np.abs(np.sort(np.abs(w)) - np.sort(np.abs(np.concatenate([g.p_kinetic] * 2))))) < 1e-12


def test_dense_matches_slice_application():
    g = grid_new(32, -6, 6)
    p = DiracParams(**ALL_SLOPES)
    h = build_dense(g, p)
    s = build_slices(g, p)
    cols = []
    for j in range(2 * g.n_points):
        e = np.zeros(2 * g.n_points, complex)
        e[j] = 1
        cols.append(apply_hamiltonian(SpinorField(g, e.reshape(2, -1)), s).vector())
    assert np.max(np.abs(np.array(cols).T - h)) < 1e-10
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_kinetic_matrix_purely_imaginary_hermitian():
    k = kinetic_matrix(grid_new(64, -3, 3))
    assert np.all(k.real == 0)
    assert np.max(np.abs(k - k.conj().T)) == 0


def test_charge_sign_difference_is_odd_terms():
    g = grid_new(16, -3, 3)
    plus = build_dense(g, DiracParams(q_sign=1, **ALL_SLOPES))
    minus = build_dense(g, DiracParams(q_sign=-1, **ALL_SLOPES))
    x = np.diag(g.x)
    p = ALL_SLOPES
    odd = p["v_el"] * np.kron(np.eye(2), x) - p["v_ps"] * np.kron(SIGMA_Y, x) - p["v_mag"] * np.kron(SIGMA_X, x)
    assert np.max(np.abs((plus - minus) - 2 * odd)) < 1e-13


@pytest.mark.parametrize("q", [1, -1])
def test_charge_conjugation_sigma_x(q):
    g = grid_new(64, -8, 8)
    h = build_dense(g, DiracParams(q_sign=q, **ALL_SLOPES))
    h_flip = build_dense(g, DiracParams(q_sign=-q, **ALL_SLOPES))
    assert np.max(np.abs(conjugate_dense(h, SIGMA_X) + h_flip)) < 1e-12
    # the other candidate does not satisfy the identity in this representation
    assert np.max(np.abs(conjugate_dense(h, SIGMA_Y) + h_flip)) > 1.0


def test_callback_potentials():
    g = grid_new(32, -4, 4)
    p = DiracParams(m=1.0)
    s = build_slices(g, p, scalar=lambda x: 0.1 * x**2, electric=np.sin)
    assert np.allclose(s.x_coeffs[3], 1.0 + 0.1 * g.x**2)
    assert np.allclose(s.x_coeffs[0], np.sin(g.x))


def test_hbar_mismatch():
    with pytest.raises(ValueError):
        build_slices(grid_new(16, 0, 1, hbar=2.0), DiracParams())


def test_dense_size_limit():
    with pytest.raises(ValueError):
        build_dense(grid_new(2 * DENSE_MAX_POINTS, 0, 1), DiracParams())


@pytest.mark.parametrize("slopes", [dict(v_sc=0.3), dict(v_ps=0.3), dict(v_mag=0.3), dict(v_sc=0.3, v_ps=0.2, v_mag=0.1)])
def test_spectrum_symmetric_without_electric_term(slopes):
    g = grid_new(128, -20, 20)
    w = scipy.linalg.eigvalsh(build_dense(g, DiracParams(m=0.7, **slopes)))
    assert np.max(np.abs(np.sort(w) - np.sort(-w))) < 1e-8


def test_electric_spectrum_not_symmetric():
    g = grid_new(128, -20, 20)
    w = scipy.linalg.eigvalsh(build_dense(g, DiracParams(m=0.7, v_el=0.3)))
    assert np.max(np.abs(np.sort(w) - np.sort(-w))) > 1e-3
