"""The 1+1 Dirac Hamiltonian with linear potentials.

    H = c sx p + q_sign v_el x + (m c^2 + v_sc x) sz - q_sign v_ps x sy - q_sign v_mag x sx

Position-diagonal terms (including the constant mass) form the ``x`` slices,
the kinetic term ``c p sx`` forms the ``p`` slices. Each slice set is stored as
Pauli coefficients ``(a0, ax, ay, az)`` with shape ``(4, n_points)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    DiracParams,
    Grid,
    SpinorField,
    apply_pointwise,
    as_momentum,
    as_position,
    pauli_matrix,
    to_position,
)

DENSE_MAX_POINTS = 4096

Potential = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HamiltonianSlices:
    grid: Grid
    params: DiracParams
    x_coeffs: np.ndarray
    p_coeffs: np.ndarray

    @property
    def x_slices(self) -> np.ndarray:
        return pauli_matrix(*self.x_coeffs)

    @property
    def p_slices(self) -> np.ndarray:
        return pauli_matrix(*self.p_coeffs)


def _check_units(grid: Grid, params: DiracParams):
    if not np.isclose(grid.hbar, params.hbar, rtol=1e-15, atol=0):
        raise ValueError(f"grid hbar {grid.hbar} differs from params hbar {params.hbar}")


def build_slices(
    grid: Grid,
    params: DiracParams,
    *,
    scalar: Optional[Potential] = None,
    electric: Optional[Potential] = None,
    magnetic: Optional[Potential] = None,
    pseudoscalar: Optional[Potential] = None,
) -> HamiltonianSlices:
    """Pointwise 2x2 slices of H.

    The keyword callbacks replace the corresponding linear potential by an
    arbitrary function of ``x`` (energies, charge already applied); they are an
    extension point and bypass the slope fields of ``params``.
    """
    _check_units(grid, params)
    x = grid.x
    q = params.q_sign
    v_scalar = scalar(x) if scalar else params.v_sc * x
    v_electric = electric(x) if electric else q * params.v_el * x
    v_magnetic = magnetic(x) if magnetic else q * params.v_mag * x
    v_pseudo = pseudoscalar(x) if pseudoscalar else q * params.v_ps * x

    x_coeffs = np.array([
        v_electric,
        -v_magnetic,
        -v_pseudo,
        params.rest_energy + v_scalar,
    ], dtype=float)
    zeros = np.zeros(grid.n_points)
    p_coeffs = np.array([zeros, params.c * grid.p_kinetic, zeros, zeros])
    return HamiltonianSlices(grid, params, x_coeffs, p_coeffs)


def kinetic_matrix(grid: Grid) -> np.ndarray:
    """``F^dagger diag(p) F`` as an exactly Hermitian, purely imaginary circulant."""
    n = grid.n_points
    s = np.fft.ifft(grid.p_kinetic).imag
    s = 0.5 * (s - s[(-np.arange(n)) % n])
    lag = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return 1j * s[lag]


def build_dense(grid: Grid, params: DiracParams, slices: Optional[HamiltonianSlices] = None) -> np.ndarray:
    """Dense ``2n x 2n`` Hamiltonian in the ``[upper..., lower...]`` ordering."""
    if grid.n_points > DENSE_MAX_POINTS:
        raise ValueError(
            f"dense Hamiltonian limited to {DENSE_MAX_POINTS} points, got {grid.n_points}"
        )
    if slices is None:
        slices = build_slices(grid, params)
    n = grid.n_points
    xs = slices.x_slices
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    idx = np.arange(n)
    for a in range(2):
        for b in range(2):
            h[a * n + idx, b * n + idx] = xs[:, a, b]
    kin = params.c * kinetic_matrix(grid)
    h[:n, n:] += kin
    h[n:, :n] += kin
    return h


def apply_hamiltonian(field: SpinorField, slices: HamiltonianSlices) -> SpinorField:
    """``H psi`` by slices and transforms; returned in position representation."""
    pos = as_position(field)
    mom = as_momentum(pos)
    kinetic = to_position(SpinorField(mom.grid, apply_pointwise(slices.p_slices, mom.data), mom.representation))
    potential = apply_pointwise(slices.x_slices, pos.data)
    return SpinorField(pos.grid, potential + kinetic.data)
