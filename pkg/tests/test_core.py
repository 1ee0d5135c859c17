import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diraclab.core import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DiracParams,
    Grid,
    GridMismatchError,
    Representation,
    RepresentationError,
    SpinorField,
    expectation_p,
    expectation_x,
    grid_new,
    inner,
    norm,
    pauli_exp,
    pauli_matrix,
    to_momentum,
    to_position,
)

finite = st.floats(-5, 5, allow_nan=False)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(2, grid.n_points)) + 1j * rng.normal(size=(2, grid.n_points))
    return SpinorField(grid, data).normalized()


def gaussian(grid, x0=0.0, p0=0.0, w=1.0):
    env = np.exp(-((grid.x - x0) ** 2) / (4 * w**2) + 1j * p0 * grid.x / grid.hbar)
    return SpinorField.from_components(grid, env, np.zeros_like(env)).normalized()


def test_grid_spacing():
    g = grid_new(256, -50, 50)
    assert g.dx == pytest.approx(100 / 256)
    assert g.dp == pytest.approx(2 * math.pi / 100)


def test_grid_eight_points():
    g = grid_new(8, 0, 8)
    assert g.dx == 1.0
    expected = math.pi * np.arange(-4, 4) / 4
    assert np.allclose(g.p_sorted, expected)


@pytest.mark.parametrize("args", [(7, 0, 1), (4, 0, 1), (16, 1, 1), (16, 2, 1)])
def test_grid_rejects(args):
    with pytest.raises(ValueError):
        grid_new(*args)


def test_momentum_range_and_kinetic_nyquist():
    g = grid_new(64, -10, 10, hbar=2.0)
    assert g.p_sorted[0] == pytest.approx(-g.p_max)
    assert g.p_sorted[-1] < g.p_max
    assert g.p_kinetic[32] == 0 and np.count_nonzero(g.p_kinetic) == 62


def test_default_params_are_natural_units():
    p = DiracParams()
    assert (p.c, p.hbar, p.q_sign) == (1.0, 1.0, 1)
    for bad in (dict(m=-1), dict(c=0), dict(hbar=-1), dict(q_sign=2)):
        with pytest.raises(ValueError):
            DiracParams(**bad)


def test_spinor_shape_checked():
    with pytest.raises(ValueError):
        SpinorField(grid_new(16, 0, 1), np.zeros((2, 8)))


def test_normalized():
    f = random_field(grid_new(128, -5, 5), 3)
    assert abs(norm(f) - 1) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([8, 64, 512]))
def test_fourier_round_trip_and_parseval(seed, n):
    g = grid_new(n, -3.0, 7.0)
    f = random_field(g, seed)
    mom = to_momentum(f)
    assert abs(norm(mom) - norm(f)) < 1e-12
    back = to_position(mom)
    assert np.max(np.abs(back.data - f.data)) < 1e-12


def test_transform_representation_guard():
    f = random_field(grid_new(16, 0, 1))
    with pytest.raises(RepresentationError):
        to_position(f)
    with pytest.raises(RepresentationError):
        to_momentum(to_momentum(f))


def test_gaussian_fourier_pair():
    g = grid_new(1024, -40, 40)
    w = 2.0
    mom = to_momentum(gaussian(g, 0.0, 0.0, w))
    # |phi(p)|^2 is a Gaussian with standard deviation hbar/(2w)
    sigma_p = g.hbar / (2 * w)
    got = np.abs(mom.upper) ** 2
    model = np.exp(-(g.p**2) / (2 * sigma_p**2))
    model *= got.max() / model.max()
    assert np.max(np.abs(got - model)) < 1e-6 * got.max() + 1e-12
    width = math.sqrt(np.sum(g.p**2 * got) / np.sum(got))
    assert width == pytest.approx(sigma_p, rel=1e-6)


def test_plane_wave_is_delta():
    g = grid_new(64, -8, 8)
    k = 5
    p0 = k * g.dp
    wave = np.exp(1j * p0 * g.x)
    mom = to_momentum(SpinorField.from_components(g, wave, 0 * wave))
    weights = np.abs(mom.upper) ** 2
    assert np.argmax(weights) == k
    assert np.sum(weights) - weights[k] < 1e-20 * weights[k] + 1e-20


def test_expectations():
    g = grid_new(512, -30, 30)
    f = gaussian(g, 3.0, 4.0, 1.5)
    assert abs(expectation_x(f) - 3.0) < g.dx
    assert abs(expectation_p(f) - 4.0) < g.dp
    rotated = SpinorField(g, f.data * np.exp(0.7j))
    assert norm(rotated) == pytest.approx(norm(f), abs=1e-14)
    assert expectation_x(rotated) == pytest.approx(expectation_x(f), abs=1e-12)
    assert expectation_p(rotated) == pytest.approx(expectation_p(f), abs=1e-12)


def test_inner_mixed_representations_and_grid_mismatch():
    g = grid_new(64, -4, 4)
    a, b = random_field(g, 1), random_field(g, 2)
    assert inner(a, to_momentum(b)) == pytest.approx(inner(a, b), abs=1e-13)
    with pytest.raises(GridMismatchError):
        inner(a, random_field(grid_new(64, -4, 5)))


def test_pauli_exp_examples():
    assert np.allclose(pauli_exp(0, 0, 0, 0), np.eye(2), atol=1e-15)
    assert np.allclose(pauli_exp(0, math.pi / 2, 0, 0), -1j * SIGMA_X, atol=1e-15)


def _taylor_exp(m, terms=40):
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


@settings(max_examples=60, deadline=None)
@given(finite, finite, finite, finite)
def test_pauli_exp_series_unitarity_det(a0, ax, ay, az):
    u = pauli_exp(a0, ax, ay, az)
    h = pauli_matrix(a0, ax, ay, az)
    # scale down so a short series converges, then square back up
    oracle = np.linalg.matrix_power(_taylor_exp(-1j * h / 64, 12), 64)
    assert np.max(np.abs(u - oracle)) < 1e-10
    assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-13
    assert abs(np.linalg.det(u) - np.exp(-2j * a0)) < 1e-13


def test_pauli_exp_vectorized():
    c = np.linspace(0, 1, 5)
    u = pauli_exp(0.1, c, 2 * c, 0.3)
    assert u.shape == (5, 2, 2)
    for k in range(5):
        assert np.allclose(u[k], pauli_exp(0.1, c[k], 2 * c[k], 0.3))


def test_pauli_algebra():
    assert np.max(np.abs(SIGMA_X @ SIGMA_Z + SIGMA_Z @ SIGMA_X)) < 1e-16
    assert np.allclose(SIGMA_X @ SIGMA_Y, 1j * SIGMA_Z)


def test_representation_enum():
    f = random_field(grid_new(16, 0, 1))
    assert f.representation is Representation.POSITION
    assert to_momentum(f).representation is Representation.MOMENTUM
