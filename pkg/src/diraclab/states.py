"""Wavepacket preparation, energy-branch projection and charge conjugation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import (
    SIGMA_0,
    SIGMA_X,
    DiracParams,
    Grid,
    Representation,
    SpinorField,
    apply_pointwise,
    as_momentum,
    as_position,
    norm,
    to_momentum,
    to_position,
)

# charge-conjugation matrix for alpha = sx, beta = sz: K psi = sx psi*
CHARGE_CONJUGATION_MATRIX = SIGMA_X

EDGE_DENSITY_LIMIT = 1e-10


class Branch(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UPPER_COMPONENT = "upper"


class DegenerateModeError(ValueError):
    """The massless zero-momentum mode has no distinguished energy branch."""


class BoundaryError(ValueError):
    """A packet reaches the edge of the periodic grid."""


@dataclass(frozen=True)
class PacketSpec:
    x0: float
    p0: float
    width: float
    branch: Branch = Branch.POSITIVE
    params: DiracParams = field(default_factory=DiracParams)

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("packet width must be positive")


def energy_projector(p: float, params: DiracParams, branch: Branch) -> np.ndarray:
    """``(I +- H_p/E_p)/2`` for the free Hamiltonian ``H_p = c p sx + m c^2 sz``."""
    if branch is Branch.UPPER_COMPONENT:
        raise ValueError("energy_projector needs POSITIVE or NEGATIVE")
    if p == 0 and params.m == 0:
        raise DegenerateModeError("branches are undefined at p = 0 for m = 0")
    pos, neg = energy_projectors(np.array([p], dtype=float), params)
    return (pos if branch is Branch.POSITIVE else neg)[0]


def energy_projectors(p: np.ndarray, params: DiracParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projectors ``(P+, P-)`` of shape ``(len(p), 2, 2)``.

    At the degenerate massless ``p = 0`` mode the ``p -> 0+`` limit
    ``(I +- sx)/2`` is used.
    """
    cp = params.c * np.asarray(p, dtype=float)
    mc2 = params.rest_energy
    energy = np.hypot(cp, mc2)
    degenerate = energy == 0
    safe = np.where(degenerate, 1.0, energy)
    nx = np.where(degenerate, 1.0, cp / safe)
    nz = np.where(degenerate, 0.0, mc2 / safe)
    h_hat = nx[:, None, None] * SIGMA_X + nz[:, None, None] * np.diag([1.0, -1.0])
    pos = 0.5 * (SIGMA_0 + h_hat)
    neg = 0.5 * (SIGMA_0 - h_hat)
    return pos, neg


def project_branch(field: SpinorField, params: DiracParams, branch: Branch) -> SpinorField:
    """Apply the free-particle branch projector mode by mode (same representation out)."""
    mom = as_momentum(field)
    pos, neg = energy_projectors(mom.grid.p_kinetic, params)
    proj = pos if branch is Branch.POSITIVE else neg
    out = SpinorField(mom.grid, apply_pointwise(proj, mom.data), Representation.MOMENTUM)
    return out if field.representation is Representation.MOMENTUM else to_position(out)


def branch_population(field: SpinorField, params: DiracParams) -> tuple[float, float]:
    mom = as_momentum(field)
    pos, _ = energy_projectors(mom.grid.p_kinetic, params)
    # <phi|P+|phi> per mode
    weighted = apply_pointwise(pos, mom.data)
    p_pos = float(mom.grid.dx * np.real(np.vdot(mom.data.reshape(-1), weighted.reshape(-1))))
    total = norm(mom) ** 2
    return p_pos, total - p_pos


def _branch_spinor(p0: float, params: DiracParams, branch: Branch) -> np.ndarray:
    if branch is Branch.UPPER_COMPONENT:
        return np.array([1.0, 0.0], dtype=complex)
    pos, neg = energy_projectors(np.array([p0]), params)
    proj = (pos if branch is Branch.POSITIVE else neg)[0]
    # a projector of rank one: its column of largest norm spans the range
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    return col / np.linalg.norm(col)


def gaussian_packet(grid: Grid, spec: PacketSpec) -> SpinorField:
    """Normalized Gaussian packet ``exp(-(x-x0)^2/(4 w^2) + i p0 x/hbar)``.

    ``width`` is the position standard deviation of ``|psi|^2``. For the
    energy branches the envelope is placed in the branch eigenspinor at
    ``p0`` and then projected mode by mode, so the result lies exactly in
    the requested branch.
    """
    if spec.width < 4 * grid.dx or spec.width > grid.length / 8:
        raise ValueError(
            f"packet width {spec.width} outside [{4 * grid.dx}, {grid.length / 8}] for this grid"
        )
    x = grid.x
    envelope = np.exp(-((x - spec.x0) ** 2) / (4 * spec.width**2) + 1j * spec.p0 * x / grid.hbar)
    spinor = _branch_spinor(spec.p0, spec.params, spec.branch)
    psi = SpinorField(grid, spinor[:, None] * envelope[None, :])
    if spec.branch is not Branch.UPPER_COMPONENT:
        psi = project_branch(psi, spec.params, spec.branch)
    psi = psi.normalized()
    check_edges(psi)
    return psi


def check_edges(field: SpinorField, limit: float = EDGE_DENSITY_LIMIT):
    rho = as_position(field).density()
    edge = max(rho[0], rho[-1])
    if edge > limit:
        raise BoundaryError(f"density {edge:.3g} at the grid edge exceeds {limit:g}")


def charge_conjugate(field: SpinorField) -> SpinorField:
    """``K psi = C psi*`` with ``C = sx``; output in the input's representation."""
    pos = as_position(field)
    out = SpinorField(pos.grid, CHARGE_CONJUGATION_MATRIX @ np.conj(pos.data))
    return out if field.representation is Representation.POSITION else to_momentum(out)


def charge_conjugation_operator(n_points: int) -> np.ndarray:
    """Unitary part ``C (x) I`` acting on dense ``[upper..., lower...]`` vectors."""
    return np.kron(CHARGE_CONJUGATION_MATRIX, np.eye(n_points))
