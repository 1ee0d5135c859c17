"""Grids, spinor fields, Fourier transforms and 2x2 Pauli algebra.

Conventions
-----------
Positions are ``x_j = x_min + j*dx`` with ``dx = (x_max - x_min)/n``.
Momenta live on the standard DFT lattice ``p_k = 2*pi*hbar*fftfreq(n, dx)``,
covering ``[-pi*hbar/dx, pi*hbar/dx)``.

The momentum amplitudes carry the physical phase of the grid origin,

    phi(p_k) = n**-0.5 * sum_j psi(x_j) exp(-i p_k x_j / hbar),

so multiplying ``psi(x)`` by ``exp(-i dp x / hbar)`` shifts ``phi`` by
exactly ``dp`` and lattice shifts are plain index rolls. The transform is
unitary, so ``norm`` uses the same formula in both representations.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class GridMismatchError(ValueError):
    """Raised when fields defined on different grids are combined."""


class RepresentationError(ValueError):
    """Raised when a field is in the wrong (position/momentum) representation."""


class Representation(enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice and its conjugate momentum lattice."""

    n_points: int
    x_min: float
    x_max: float
    hbar: float = 1.0

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max must exceed x_min (got {self.x_min}, {self.x_max})")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2 * np.pi * self.hbar / self.length

    @property
    def p_max(self) -> float:
        return np.pi * self.hbar / self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def p(self) -> np.ndarray:
        """Momentum lattice in DFT order."""
        return 2 * np.pi * self.hbar * np.fft.fftfreq(self.n_points, d=self.dx)

    @property
    def p_order(self) -> np.ndarray:
        """Index permutation that sorts ``p`` ascending."""
        return np.fft.fftshift(np.arange(self.n_points))

    @property
    def p_sorted(self) -> np.ndarray:
        return self.p[self.p_order]

    @property
    def p_kinetic(self) -> np.ndarray:
        """Momenta used by the kinetic operator: ``p`` with the Nyquist entry set to zero.

        The unpaired Nyquist momentum ``-pi*hbar/dx`` has no ``+p`` partner on the
        lattice; dropping it keeps the discrete derivative real-antisymmetric so
        that charge conjugation is an exact lattice symmetry.
        """
        p = self.p.copy()
        p[self.n_points // 2] = 0.0
        return p

    def phase(self) -> np.ndarray:
        """``exp(-i p_k x_min / hbar)``, the origin phase of the momentum amplitudes."""
        return np.exp(-1j * self.p * self.x_min / self.hbar)


@dataclass(frozen=True)
class DiracParams:
    """Mass, units, charge sign and the four linear potential slopes.

    Each slope is an energy per length with the unit charge absorbed:
    ``V = v_sc x``, ``q*phi = q_sign v_el x``, ``q*A = q_sign v_mag x``,
    ``q*V~ = q_sign v_ps x``.
    """

    m: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    q_sign: int = 1
    v_sc: float = 0.0
    v_el: float = 0.0
    v_mag: float = 0.0
    v_ps: float = 0.0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mass must be non-negative")
        if not self.c > 0 or not self.hbar > 0:
            raise ValueError("c and hbar must be positive")
        if self.q_sign not in (-1, 1):
            raise ValueError("q_sign must be +1 or -1")

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2

    def replace(self, **changes) -> "DiracParams":
        return dataclasses.replace(self, **changes)

    def only_electric(self) -> bool:
        return self.v_sc == 0 and self.v_mag == 0 and self.v_ps == 0


def grid_new(n_points: int, x_min: float, x_max: float, hbar: float = 1.0) -> Grid:
    return Grid(int(n_points), float(x_min), float(x_max), float(hbar))


@dataclass
class SpinorField:
    """Two-component field sampled on a grid; ``data`` has shape ``(2, n_points)``."""

    grid: Grid
    data: np.ndarray
    representation: Representation = Representation.POSITION

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (2, self.grid.n_points):
            raise ValueError(
                f"spinor data must have shape (2, {self.grid.n_points}), got {self.data.shape}"
            )

    @classmethod
    def from_components(cls, grid, upper, lower, representation=Representation.POSITION):
        return cls(grid, np.stack([np.asarray(upper, complex), np.asarray(lower, complex)]),
                   representation)

    @property
    def upper(self) -> np.ndarray:
        return self.data[0]

    @property
    def lower(self) -> np.ndarray:
        return self.data[1]

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.data.copy(), self.representation)

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.data) ** 2, axis=0)

    def vector(self) -> np.ndarray:
        """Flatten to ``[upper..., lower...]``, the ordering used by dense matrices."""
        return self.data.reshape(-1).copy()

    def normalized(self) -> "SpinorField":
        nrm = norm(self)
        if not np.isfinite(nrm) or nrm == 0:
            raise ValueError("cannot normalize a field with zero or non-finite norm")
        return SpinorField(self.grid, self.data / nrm, self.representation)


def to_momentum(field: SpinorField) -> SpinorField:
    if field.representation is not Representation.POSITION:
        raise RepresentationError("field is already in momentum representation")
    data = np.fft.fft(field.data, axis=1, norm="ortho") * field.grid.phase()
    return SpinorField(field.grid, data, Representation.MOMENTUM)


def to_position(field: SpinorField) -> SpinorField:
    if field.representation is not Representation.MOMENTUM:
        raise RepresentationError("field is already in position representation")
    data = np.fft.ifft(field.data * np.conj(field.grid.phase()), axis=1, norm="ortho")
    return SpinorField(field.grid, data, Representation.POSITION)


def as_position(field: SpinorField) -> SpinorField:
    return field if field.representation is Representation.POSITION else to_position(field)


def as_momentum(field: SpinorField) -> SpinorField:
    return field if field.representation is Representation.MOMENTUM else to_momentum(field)


def _check_same_grid(a: SpinorField, b: SpinorField):
    if a.grid != b.grid:
        raise GridMismatchError(f"{a.grid} != {b.grid}")


def norm(field: SpinorField) -> float:
    return float(np.sqrt(field.grid.dx * np.sum(np.abs(field.data) ** 2)))


def inner(a: SpinorField, b: SpinorField) -> complex:
    """``<a|b>``; both fields are brought to position representation."""
    _check_same_grid(a, b)
    if a.representation is not b.representation:
        a, b = as_position(a), as_position(b)
    return complex(a.grid.dx * np.vdot(a.data.reshape(-1), b.data.reshape(-1)))


def expectation_x(field: SpinorField) -> float:
    f = as_position(field)
    rho = f.density()
    return float(np.sum(f.grid.x * rho) / np.sum(rho))


def expectation_p(field: SpinorField) -> float:
    f = as_momentum(field)
    rho = f.density()
    return float(np.sum(f.grid.p * rho) / np.sum(rho))


def pauli_exp(a0, ax, ay, az) -> np.ndarray:
    """``exp(-i (a0 I + ax sx + ay sy + az sz))`` in closed form.

    Accepts scalars or broadcastable arrays; the result has shape
    ``broadcast_shape + (2, 2)``.
    """
    a0, ax, ay, az = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (a0, ax, ay, az)))
    r = np.sqrt(ax * ax + ay * ay + az * az)
    cos_r = np.cos(r)
    # sin(r)/r with the r -> 0 limit
    sinc = np.sinc(r / np.pi)
    out = np.empty(a0.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = cos_r - 1j * sinc * az
    out[..., 1, 1] = cos_r + 1j * sinc * az
    out[..., 0, 1] = -1j * sinc * (ax - 1j * ay)
    out[..., 1, 0] = -1j * sinc * (ax + 1j * ay)
    return out * np.exp(-1j * a0)[..., None, None]


def pauli_matrix(a0, ax, ay, az) -> np.ndarray:
    """``a0 I + ax sx + ay sy + az sz`` (broadcasting like ``pauli_exp``)."""
    a0, ax, ay, az = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (a0, ax, ay, az)))
    out = np.empty(a0.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a0 + az
    out[..., 1, 1] = a0 - az
    out[..., 0, 1] = ax - 1j * ay
    out[..., 1, 0] = ax + 1j * ay
    return out


def apply_pointwise(mats: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Apply ``mats[j]`` (shape ``(n, 2, 2)``) to the spinor ``data[:, j]``."""
    u, d = data[0], data[1]
    return np.stack([
        mats[:, 0, 0] * u + mats[:, 0, 1] * d,
        mats[:, 1, 0] * u + mats[:, 1, 1] * d,
    ])


def is_hermitian(m: np.ndarray, rtol: float = 1e-14) -> bool:
    scale = max(np.max(np.abs(m)), 1.0)
    return bool(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) <= rtol * scale)
