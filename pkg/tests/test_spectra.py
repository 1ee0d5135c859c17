import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from diraclab.core import DiracParams, SpinorField, expectation_x, grid_new, to_momentum
from diraclab.hamiltonian import build_dense
from diraclab.spectra import (
    InsufficientGridError,
    SpectrumMethod,
    antijc_spectrum_check,
    analytic_ladder,
    dirac_oscillator_spectrum_analytic,
    eigen_spectrum,
    interior_eigenvalues,
    jc_hamiltonian,
    jc_rabi_frequency,
    jc_spectrum,
    orbit_invariant,
    scalar_ladder_report,
    scalar_spectrum_numeric,
    squared_levels,
    track_orbit,
)
from diraclab.states import Branch, PacketSpec, gaussian_packet

SCALAR_GRID = grid_new(1024, -30, 30)


def test_eigen_spectrum_trivial():
    assert np.allclose(eigen_spectrum(np.diag([3.0, 1.0, 2.0])).eigenvalues, [1, 2, 3])
    w = eigen_spectrum(np.kron(np.array([[0, 1], [1, 0]]), np.eye(5))).eigenvalues
    assert np.allclose(w, [-1] * 5 + [1] * 5)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_eigen_spectrum_trace_det(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
    h = a + a.conj().T
    res = eigen_spectrum(h, residuals=True)
    assert abs(res.eigenvalues.sum() - np.trace(h).real) < 1e-10
    sign, _ = np.linalg.slogdet(h)
    assert np.sign(np.prod(np.sign(res.eigenvalues))) == np.sign(sign.real)
    assert np.all(res.metadata["residuals"] <= 1e-8 * res.metadata["matrix_norm"])
    assert np.all(np.diff(res.eigenvalues) >= 0)


def test_eigen_spectrum_rejects():
    with pytest.raises(ValueError):
        eigen_spectrum(np.array([[0, 1], [0, 0]], dtype=float))
    with pytest.raises(ValueError):
        eigen_spectrum(np.zeros((3, 4)))


@pytest.fixture(scope="module")
def scalar_spectra():
    return {m: scalar_spectrum_numeric(DiracParams(m=m, v_sc=1.0), SCALAR_GRID, 20) for m in (0.0, 1.0)}


def test_scalar_ladder(scalar_spectra):
    base = None
    for m, res in scalar_spectra.items():
        assert res.method is SpectrumMethod.DENSE_GRID
        levels = squared_levels(res.eigenvalues)[:20]
        assert np.max(np.abs(np.diff(levels) - 2.0)) < 1e-3
        if base is None:
            base = levels
        assert np.max(np.abs(levels - base)) < 1e-3
        # the zero mode is unpaired, so the outermost selected level may be too
        w = res.eigenvalues
        inner = w[np.abs(w) < np.max(np.abs(w)) - 1e-6]
        assert np.max(np.abs(np.sort(inner) + np.sort(inner)[::-1])) < 1e-8


def test_scalar_report_offset(scalar_spectra):
    levels = squared_levels(scalar_spectra[1.0].eigenvalues)[:20]
    rep = scalar_ladder_report(levels, DiracParams(m=1.0, v_sc=1.0))
    assert rep["spacing"] == pytest.approx(2.0, abs=1e-6)
    assert abs(rep["offset"]) < 1e-6
    assert rep["published_offsets"] == (3.0, -1.0)


def test_scalar_orbit_center_is_negative(scalar_spectra):
    res = scalar_spectra[1.0]
    n = SCALAR_GRID.n_points
    centers = [expectation_x(SpinorField(SCALAR_GRID, res.eigenvectors[:, i].reshape(2, n))) for i in range(6)]
    assert np.allclose(centers, -1.0, atol=1e-8)


def test_scalar_eigenvectors_are_physical(scalar_spectra):
    res = scalar_spectra[0.0]
    h = build_dense(SCALAR_GRID, DiracParams(m=0.0, v_sc=1.0))
    v = res.eigenvectors
    assert np.max(np.linalg.norm(h @ v - v * res.eigenvalues, axis=0)) < 1e-8
    rho = np.abs(v.reshape(2, SCALAR_GRID.n_points, -1)) ** 2
    assert np.max(rho[:, :20, :]) < 1e-10 and np.max(rho[:, -20:, :]) < 1e-10


def test_scalar_insufficient_grid():
    with pytest.raises(InsufficientGridError):
        scalar_spectrum_numeric(DiracParams(m=0.0, v_sc=1.0), grid_new(256, -6, 6), 20)


def test_scalar_preconditions():
    with pytest.raises(ValueError):
        scalar_spectrum_numeric(DiracParams(v_sc=0.0), SCALAR_GRID, 2)
    with pytest.raises(ValueError):
        scalar_spectrum_numeric(DiracParams(v_sc=1.0, v_el=0.1), SCALAR_GRID, 2)


def test_orbit_invariant_free_particle():
    g = grid_new(256, -30, 30)
    p = DiracParams(m=0.8, c=1.2)
    psi = gaussian_packet(g, PacketSpec(0, 1.5, 2.0, Branch.UPPER_COMPONENT, p))
    mom = to_momentum(psi)
    weights = np.sum(np.abs(mom.data) ** 2, axis=0)
    expected = np.sum(weights * ((p.c * g.p_kinetic) ** 2 + p.rest_energy**2)) / np.sum(weights)
    assert orbit_invariant(psi, p) == pytest.approx(expected, rel=1e-12)


def test_orbit_invariant_eigenstate():
    g = grid_new(64, -10, 10)
    p = DiracParams(m=0.5, v_ps=0.2)
    w, v = scipy.linalg.eigh(build_dense(g, p))
    k = 70
    psi = SpinorField(g, v[:, k].reshape(2, -1))
    assert orbit_invariant(psi, p) == pytest.approx(w[k] ** 2, abs=1e-8)


def test_pseudoscalar_orbit_closes():
    omega = 0.01
    p = DiracParams(m=1.0, v_ps=omega)
    g = grid_new(256, -120, 120)
    psi = gaussian_packet(g, PacketSpec(20.0, 0.0, math.sqrt(1 / omega) / math.sqrt(2), Branch.POSITIVE, p))
    period = 2 * math.pi / omega
    tr = track_orbit(psi, p, 1.12 * period, 0.005, 100)
    assert tr.h2_drift < 1e-6
    t_ret, gap = tr.closure(after=0.75 * period)
    assert gap < 0.01
    assert abs(t_ret - period) < 0.05 * period
    assert (tr.x.max() - tr.x.min()) > 30


def test_jc_zero_coupling():
    h = jc_hamiltonian(8, 0.0, DiracParams(m=2.0))
    w = np.linalg.eigvalsh(h)
    assert np.allclose(w, [-2.0] * 9 + [2.0] * 9)


def test_jc_block_pairing():
    h = jc_hamiltonian(6, 1.3, DiracParams(m=1.0))
    n = 7
    up = lambda k: k
    down = lambda k: n + k
    # |up, k> couples only to |down, k+1>
    for k in range(6):
        row = h[up(k)].copy()
        row[up(k)] = 0
        nz = np.nonzero(np.abs(row) > 1e-14)[0]
        assert list(nz) == [down(k + 1)]
    assert np.allclose(h, h.conj().T)
    with pytest.raises(ValueError):
        jc_hamiltonian(3, 1.0, DiracParams())


@pytest.mark.parametrize("mc2, hw", [(1.0, 1.0), (1.0, 0.01), (4.0, 1.0)])
def test_jc_matches_analytic(mc2, hw):
    p = DiracParams(m=mc2)
    res = jc_spectrum(64, p, hw)
    assert res.method is SpectrumMethod.JC_LADDER
    expected = analytic_ladder(64, p, hw)
    assert np.max(np.abs(res.eigenvalues - expected)) < 1e-10
    interior = interior_eigenvalues(res.eigenvalues, 64, p, hw)
    assert len(interior) == 2 * 63


def test_jc_two_by_two_block():
    res = jc_spectrum(8, DiracParams(m=1.0), 1.0)
    assert np.any(np.isclose(res.eigenvalues, math.sqrt(2), atol=1e-12))
    assert np.any(np.isclose(res.eigenvalues, -math.sqrt(2), atol=1e-12))
    assert jc_rabi_frequency(DiracParams(m=1.0), 1.0) == 1.0


def test_analytic_examples():
    p = DiracParams(m=1.0)
    assert dirac_oscillator_spectrum_analytic(0, p, 1.0) == (1.0, -1.0)
    assert dirac_oscillator_spectrum_analytic(3, p, 1.0) == (2.0, -2.0)
    e, _ = dirac_oscillator_spectrum_analytic(10, p, 1e-4)
    bound = 10**2 * (1e-4) ** 2 / 8
    assert abs(e - 1 - 5e-4) <= bound * (1 + 1e-6)
    with pytest.raises(ValueError):
        dirac_oscillator_spectrum_analytic(1, DiracParams(m=0.0), 1.0)
    with pytest.raises(ValueError):
        dirac_oscillator_spectrum_analytic(-1, p, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 200), st.floats(0.1, 10))
def test_nonrelativistic_remainder(n, mc2):
    hw = 1e-3 * mc2
    p = DiracParams(m=mc2)
    e, _ = dirac_oscillator_spectrum_analytic(n, p, hw)
    assert abs(e - mc2 - 0.5 * n * hw) <= n**2 * hw**2 / (8 * mc2) * (1 + 1e-6) + 1e-15 * mc2


def test_anti_jc():
    rep = antijc_spectrum_check(DiracParams(m=1.0), 1.0, 64)
    assert rep["max_mismatch"] < 1e-10
    assert rep["truncation_shift"] < 1e-10
    zero = antijc_spectrum_check(DiracParams(m=1.0), 0.0, 16)
    assert zero["max_mismatch"] == 0.0
