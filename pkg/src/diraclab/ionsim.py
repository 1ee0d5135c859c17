"""Two-ion emulation of the Dirac equation on a truncated Fock space.

The first ion's internal levels carry the spinor, a shared motional mode
carries position and momentum,

    x = (a + a^+) Delta,    p = i hbar (a^+ - a) / (2 Delta),

and an auxiliary ion supplies the electric term through ``sx_2 x``. The
post-RWA Hamiltonian is

    H = hbar eta (Ob e^{i phi_b} a^+ s+ + Or e^{i phi_r} a s+ + h.c.)
        + hbar eta O2 sx_2 x / Delta
        + hbar (Omega + 4 eta Osc^2 x / (omega Delta)) sz.

Units: hbar = 1, time in ms, angular frequencies in rad/ms (so 2 pi x 1 kHz
is ``2 * pi``), lengths in units of Delta unless a different Delta is given.
The Dirac parameters produced by :func:`dirac_params_from_ion` live in the
same units, so a Dirac grid for comparison uses x in Delta and p in hbar/Delta.

Matching the a^+ s+ and a s+ coefficients of ``c sx p - v_mag x sx - v_ps x sy``
gives ``c = 2 eta Ob Delta`` with ``phi_b = pi/2`` and ``phi_r = -pi/2`` for a
free particle; the general mapping is :func:`sideband_coefficients`.

The emulator integrates this Hamiltonian exactly; comparisons with the grid
Dirac solver therefore measure truncation and encoding error only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .core import (
    SIGMA_X,
    SIGMA_Z,
    DiracParams,
    Grid,
    SpinorField,
    as_position,
    norm,
)
from .dynamics import NormDriftError, SplitStepPropagator, comoving_propagate
from .hamiltonian import build_slices
from .states import PacketSpec, branch_population, gaussian_packet

LEAK_ABORT = 1e-3
LEAK_VALID = 1e-4
LAMB_DICKE_WARN = 0.1

_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)


def kilohertz(f: float) -> float:
    """Angular frequency in rad/ms for an ordinary frequency in kHz."""
    return 2 * math.pi * f


class TruncationLeakError(RuntimeError):
    """Population reached the top of the Fock truncation."""


class MappingError(ValueError):
    """Dirac parameters not realizable with this drive scheme."""


@dataclass(frozen=True)
class AncillaMode:
    """Auxiliary ion: replaced by a sx_2 eigenvalue, or kept as a full qubit."""

    full: bool = False
    eigenvalue: int = 1

    def __post_init__(self):
        if self.eigenvalue not in (1, -1):
            raise ValueError("ancilla eigenvalue must be +1 or -1")

    @classmethod
    def reduced(cls, eigenvalue: int = 1) -> "AncillaMode":
        return cls(False, eigenvalue)

    @classmethod
    def full_qubit(cls, eigenvalue: int = 1) -> "AncillaMode":
        # eigenvalue selects the ancilla state used by encode/decode
        return cls(True, eigenvalue)

    @property
    def spin_dim(self) -> int:
        return 4 if self.full else 2


@dataclass(frozen=True)
class IonParams:
    eta: float
    Omega_b: float = 0.0
    Omega_r: float = 0.0
    phi_b: float = 0.0
    phi_r: float = 0.0
    Omega_2: float = 0.0
    Omega_carrier: float = 0.0
    Omega_sc: float = 0.0
    omega_trap: float = kilohertz(1000.0)
    Delta: float = 1.0
    n_max: int = 64
    ancilla_mode: AncillaMode = field(default_factory=AncillaMode)
    hbar: float = 1.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.eta > LAMB_DICKE_WARN:
            warnings.warn(f"eta = {self.eta} is outside the Lamb-Dicke regime", stacklevel=3)
        if self.n_max < 16:
            raise ValueError("n_max must be at least 16")
        if not self.Delta > 0:
            raise ValueError("Delta must be positive")
        if not self.omega_trap > 0:
            raise ValueError("omega_trap must be positive")

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.ancilla_mode.spin_dim * self.fock_dim

    def replace(self, **changes) -> "IonParams":
        return replace(self, **changes)


@dataclass
class IonState:
    amplitudes: np.ndarray
    t: float = 0.0

    def copy(self) -> "IonState":
        return IonState(self.amplitudes.copy(), self.t)


# --- operators ---------------------------------------------------------------


def ladder_operators(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)
    return a, a.T.copy()


def position_operator(ion: IonParams) -> np.ndarray:
    a, ad = ladder_operators(ion.n_max)
    return ion.Delta * (a + ad)


def momentum_operator(ion: IonParams) -> np.ndarray:
    a, ad = ladder_operators(ion.n_max)
    return 1j * ion.hbar * (ad - a) / (2 * ion.Delta)


def _spin1_op(op1: np.ndarray, fock: np.ndarray, mode: AncillaMode) -> np.ndarray:
    if mode.full:
        return np.kron(np.kron(op1, np.eye(2)), fock)
    return np.kron(op1, fock)


def ion_hamiltonian(ion: IonParams) -> np.ndarray:
    """Dense truncated Hamiltonian; ordering spin_1 (x) [spin_2 (x)] Fock."""
    hb, eta, mode = ion.hbar, ion.eta, ion.ancilla_mode
    a, ad = ladder_operators(ion.n_max)
    x = position_operator(ion)
    eye = np.eye(ion.fock_dim)

    blue = hb * eta * ion.Omega_b * np.exp(1j * ion.phi_b)
    red = hb * eta * ion.Omega_r * np.exp(1j * ion.phi_r)
    raising = _spin1_op(_SIGMA_PLUS, blue * ad + red * a, mode)
    h = raising + raising.conj().T

    elec = hb * eta * ion.Omega_2 * x / ion.Delta
    if mode.full:
        h = h + np.kron(np.kron(np.eye(2), SIGMA_X), elec)
    else:
        h = h + np.kron(np.eye(2), mode.eigenvalue * elec)

    drive = hb * ion.Omega_carrier * eye + hb * 4 * eta * ion.Omega_sc**2 * x / (ion.omega_trap * ion.Delta)
    h = h + _spin1_op(SIGMA_Z, drive, mode)
    return 0.5 * (h + h.conj().T)


def reduced_block(h: np.ndarray, ion: IonParams, eigenvalue: Optional[int] = None) -> np.ndarray:
    """Restriction of a full-qubit Hamiltonian to a sx_2 eigenspace."""
    if not ion.ancilla_mode.full:
        return h
    s = ion.ancilla_mode.eigenvalue if eigenvalue is None else eigenvalue
    ket = np.array([1.0, s]) / math.sqrt(2)
    iso = np.kron(np.kron(np.eye(2), ket[:, None]), np.eye(ion.fock_dim))
    return iso.T @ h @ iso


# --- Dirac <-> ion mapping -----------------------------------------------------


def sideband_coefficients(params: DiracParams, delta: float) -> tuple[complex, complex]:
    """Coefficients ``(B, R)`` of ``a^+ s+`` and ``a s+`` in ``c sx p - q v_mag x sx - q v_ps x sy``."""
    hb, q = params.hbar, params.q_sign
    kin = 1j * hb * params.c / (2 * delta)
    common = -q * params.v_mag * delta + 1j * q * params.v_ps * delta
    return kin + common, -kin + common


def map_dirac_to_ion(
    params: DiracParams,
    eta: float,
    omega_trap: float = kilohertz(1000.0),
    delta: float = 1.0,
    n_max: int = 64,
    full_qubit: bool = False,
) -> IonParams:
    """Drive amplitudes and phases that realize ``params`` (in ion units)."""
    hb = params.hbar
    if params.v_sc < 0:
        raise MappingError("v_sc < 0 needs a pi phase flip of the scalar drive, not available here")
    if params.rest_energy < 0:
        raise MappingError("negative carrier term")
    blue, red = sideband_coefficients(params, delta)

    def amp_phase(z: complex) -> tuple[float, float]:
        if abs(z) == 0:
            return 0.0, 0.0
        return abs(z) / (hb * eta), math.atan2(z.imag, z.real)

    omega_b, phi_b = amp_phase(blue)
    omega_r, phi_r = amp_phase(red)
    electric = params.q_sign * params.v_el
    sign = -1 if electric < 0 else 1
    mode = AncillaMode(full_qubit, sign)
    return IonParams(
        eta=eta,
        Omega_b=omega_b,
        Omega_r=omega_r,
        phi_b=phi_b,
        phi_r=phi_r,
        Omega_2=abs(electric) * delta / (hb * eta),
        Omega_carrier=params.rest_energy / hb,
        Omega_sc=math.sqrt(params.v_sc * omega_trap * delta / (4 * hb * eta)),
        omega_trap=omega_trap,
        Delta=delta,
        n_max=n_max,
        ancilla_mode=mode,
        hbar=hb,
    )


def extract_dirac_params(h: np.ndarray, ion: IonParams, tol: float = 1e-9) -> DiracParams:
    """Read ``c``, ``mc^2`` and the four slopes off a truncated ion Hamiltonian.

    Full-qubit matrices are first restricted to the ancilla eigenspace named by
    ``ion.ancilla_mode``. The charge is reported as ``q_sign = +1``.
    """
    hr = reduced_block(h, ion)
    n = ion.fock_dim
    d = ion.Delta
    hb = ion.hbar
    up, dn = 0, n
    blue = hr[up + 1, dn + 0]
    red = hr[up + 0, dn + 1]
    diff, tot = blue - red, blue + red
    if abs(diff.real) > tol * max(1.0, abs(diff)):
        raise MappingError("sideband terms do not combine to c sx p")
    c = diff.imag * d / hb
    if not c > 0:
        raise MappingError("the extracted speed of light is not positive")
    mc2 = hr[up, up].real
    slope_up = hr[up + 1, up].real / d
    slope_dn = hr[dn + 1, dn].real / d

    def snap(value: float, scale: float) -> float:
        # drop round-off residues so that absent potentials read as exactly zero
        return 0.0 if abs(value) <= 1e-13 * scale else float(value)

    side = (abs(blue) + abs(red)) / d
    slope = abs(slope_up) + abs(slope_dn)
    return DiracParams(
        m=mc2 / c**2,
        c=c,
        hbar=hb,
        q_sign=1,
        v_sc=snap(0.5 * (slope_up - slope_dn), slope),
        v_el=snap(0.5 * (slope_up + slope_dn), slope),
        v_mag=snap(-tot.real / (2 * d), side),
        v_ps=snap(tot.imag / (2 * d), side),
    )


def dirac_params_from_ion(ion: IonParams) -> DiracParams:
    return extract_dirac_params(ion_hamiltonian(ion), ion)


# --- propagation ---------------------------------------------------------------


def truncation_leak(state: IonState, ion: IonParams) -> float:
    """Population in the top two Fock levels."""
    amps = state.amplitudes.reshape(ion.ancilla_mode.spin_dim, ion.fock_dim)
    return float(np.sum(np.abs(amps[:, -2:]) ** 2))


class IonPropagator:
    """Exact propagation from one eigendecomposition of the truncated Hamiltonian."""

    def __init__(self, ion: IonParams, leak_limit: float = LEAK_ABORT):
        self.ion = ion
        self.leak_limit = leak_limit
        self.energies, self.vectors = scipy.linalg.eigh(ion_hamiltonian(ion))

    def _check(self, state: IonState):
        leak = truncation_leak(state, self.ion)
        if leak > self.leak_limit:
            raise TruncationLeakError(
                f"truncation leak {leak:.3e} at t={state.t:g} exceeds {self.leak_limit:g} (n_max={self.ion.n_max})"
            )

    def evolve(self, state: IonState, t: float) -> IonState:
        if state.amplitudes.shape != (self.ion.dim,):
            raise ValueError(f"state has shape {state.amplitudes.shape}, expected ({self.ion.dim},)")
        self._check(state)
        coeffs = self.vectors.conj().T @ state.amplitudes
        phases = np.exp(-1j * self.energies * t / self.ion.hbar)
        out = IonState(self.vectors @ (phases * coeffs), state.t + t)
        n0 = np.linalg.norm(state.amplitudes)
        if abs(np.linalg.norm(out.amplitudes) - n0) > 1e-10 * max(n0, 1.0):
            raise NormDriftError("ion propagation lost unitarity")
        self._check(out)
        return out

    def samples(self, state: IonState, times: Sequence[float]) -> list[IonState]:
        return [self.evolve(state, t - state.t) for t in times]


def ion_evolve(
    state: IonState,
    ion: IonParams,
    t: float,
    dt: Optional[float] = None,
    leak_limit: float = LEAK_ABORT,
) -> IonState:
    """Propagate by ``t``; ``dt`` is accepted for interface symmetry but the step is exact."""
    return IonPropagator(ion, leak_limit).evolve(state, t)


# --- grid <-> Fock encoding ----------------------------------------------------


def hermite_functions(x: np.ndarray, n_max: int, length: float) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``phi_n(x)``, shape ``(n_max+1, len(x))``."""
    xi = np.asarray(x, dtype=float) / length
    out = np.empty((n_max + 1, xi.size))
    out[0] = math.pi**-0.25 / math.sqrt(length) * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _basis(grid: Grid, ion: IonParams) -> np.ndarray:
    return hermite_functions(grid.x, ion.n_max, math.sqrt(2) * ion.Delta)


def _ancilla_ket(ion: IonParams) -> np.ndarray:
    return np.array([1.0, ion.ancilla_mode.eigenvalue]) / math.sqrt(2)


def encode_dirac_state(
    field: SpinorField,
    ion: IonParams,
    leak_limit: float = LEAK_ABORT,
    basis: Optional[np.ndarray] = None,
) -> IonState:
    """Project a grid spinor onto the oscillator basis of the motional mode."""
    pos = as_position(field)
    phi = _basis(pos.grid, ion) if basis is None else basis
    fock = pos.grid.dx * (pos.data @ phi.T)  # (2, n_max+1)
    if ion.ancilla_mode.full:
        fock = np.einsum("sn,a->san", fock, _ancilla_ket(ion))
    state = IonState(fock.reshape(-1).astype(complex))
    leak = truncation_leak(state, ion)
    lost = norm(pos) ** 2 - np.vdot(state.amplitudes, state.amplitudes).real
    if max(leak, lost) > leak_limit:
        raise TruncationLeakError(
            f"state not representable with n_max={ion.n_max}: top-level weight {leak:.2e}, lost norm {lost:.2e}"
        )
    return state


def decode(state: IonState, ion: IonParams, grid: Grid, basis: Optional[np.ndarray] = None) -> SpinorField:
    """Grid spinor from Fock amplitudes (ancilla projected on its eigenstate)."""
    phi = _basis(grid, ion) if basis is None else basis
    amps = state.amplitudes.reshape(ion.ancilla_mode.spin_dim, ion.fock_dim)
    if ion.ancilla_mode.full:
        amps = np.einsum("san,a->sn", amps.reshape(2, 2, ion.fock_dim), _ancilla_ket(ion))
    return SpinorField(grid, amps @ phi)


def encoded_operator(grid: Grid, ion: IonParams, h_grid: np.ndarray, n_low: int) -> np.ndarray:
    """Matrix elements of a dense grid operator between the first ``n_low`` oscillator states.

    Ordering matches the reduced ion block restricted to ``n < n_low``.
    """
    phi = hermite_functions(grid.x, n_low - 1, math.sqrt(2) * ion.Delta)
    n = grid.n_points
    iso = np.zeros((2 * n, 2 * n_low))
    iso[:n, :n_low] = phi.T
    iso[n:, n_low:] = phi.T
    return grid.dx * iso.T @ h_grid @ iso


def low_fock_block(h: np.ndarray, ion: IonParams, n_low: int) -> np.ndarray:
    hr = reduced_block(h, ion)
    n = ion.fock_dim
    idx = np.concatenate([np.arange(n_low), n + np.arange(n_low)])
    return hr[np.ix_(idx, idx)]


# --- comparison with the grid solver -------------------------------------------


@dataclass(frozen=True)
class IonScenario:
    """A Dirac packet problem in ion units, with the grid used for reference runs."""

    grid: Grid
    params: DiracParams
    packet: PacketSpec
    dt: float = 1e-4


@dataclass
class FidelityCurve:
    t: np.ndarray
    fidelity: np.ndarray
    ion_transmission: np.ndarray
    dirac_transmission: np.ndarray
    leak: np.ndarray


def _dirac_reference(scenario: IonScenario, psi0: SpinorField, times: Sequence[float]) -> list[SpinorField]:
    if scenario.params.only_electric() and scenario.params.v_el != 0:
        return [as_position(f) for f in comoving_propagate(psi0, scenario.params, times, scenario.dt)]
    slices = build_slices(scenario.grid, scenario.params)
    out, data, t_now = [], psi0.data.copy(), 0.0
    for t in times:
        n_steps = int(round((t - t_now) / scenario.dt))
        if n_steps:
            data = SplitStepPropagator(slices, (t - t_now) / n_steps).run(data, n_steps)
        t_now = t
        out.append(SpinorField(scenario.grid, data))
    return out


def ion_vs_dirac_fidelity(
    scenario: IonScenario,
    ion: IonParams,
    t_samples: Sequence[float],
    leak_limit: float = LEAK_ABORT,
) -> FidelityCurve:
    """Overlap ``|<decode(ion run)|grid run>|^2`` at each sample time.

    Both runs start from the same branch-projected packet; transmissions are
    negative-branch populations of the respective (normalized) states.
    """
    times = sorted(float(t) for t in t_samples)
    psi0 = gaussian_packet(scenario.grid, scenario.packet)
    basis = _basis(scenario.grid, ion)
    prop = IonPropagator(ion, leak_limit)
    start = encode_dirac_state(psi0, ion, leak_limit, basis)
    reference = _dirac_reference(scenario, psi0, times)
    fid, t_ion, t_dirac, leaks = [], [], [], []
    for t, ref in zip(times, reference):
        state = prop.evolve(start, t)
        emulated = decode(state, ion, scenario.grid, basis)
        ov = np.vdot(emulated.data.reshape(-1), ref.data.reshape(-1)) * scenario.grid.dx
        fid.append(abs(ov) ** 2 / (norm(emulated) ** 2 * norm(ref) ** 2))
        t_ion.append(branch_population(emulated, scenario.params)[1] / norm(emulated) ** 2)
        t_dirac.append(branch_population(ref, scenario.params)[1] / norm(ref) ** 2)
        leaks.append(truncation_leak(state, ion))
    return FidelityCurve(np.array(times), np.array(fid), np.array(t_ion), np.array(t_dirac), np.array(leaks))


def conclusion_ion_params(n_max: int = 128) -> IonParams:
    """eta 0.05, sidebands 2 pi x 20 kHz, carrier 2 pi x 1 kHz, ancilla 2 pi x 50 kHz."""
    return IonParams(
        eta=0.05,
        Omega_b=kilohertz(20.0),
        Omega_r=kilohertz(20.0),
        phi_b=math.pi / 2,
        phi_r=-math.pi / 2,
        Omega_2=kilohertz(50.0),
        Omega_carrier=kilohertz(1.0),
        n_max=n_max,
    )


def conclusion_scenario(grid: Optional[Grid] = None, dt: float = 1e-4) -> IonScenario:
    """Packet with mean momentum 4 hbar/Delta and the width of the motional ground state."""
    params = dirac_params_from_ion(conclusion_ion_params())
    grid = grid or Grid(2048, -64.0, 64.0)
    packet = PacketSpec(x0=0.0, p0=4.0, width=1.0, params=params)
    return IonScenario(grid, params, packet, dt)


# --- effective x^2 interaction ---------------------------------------------------


@dataclass
class QuadraticReport:
    ratio: float
    coefficient: float
    predicted: float
    residual: float
    duration: float


def quadratic_effective_check(
    detuning: float,
    ion: IonParams,
    duration: Optional[float] = None,
    x_fit: float = 2.0,
    n_times: int = 41,
) -> QuadraticReport:
    """Far-detuned ``eta O2 x sx_2 / Delta + detuning sz_2`` against ``kappa x^2 sz_2``.

    The full matrix is exponentiated; since it commutes with the truncated
    ``x``, the ancilla-up amplitude on each ``x`` eigenvector carries a phase
    which, after removing ``detuning t``, is fitted to ``-kappa x^2 t``. Nodes
    with ``|x| <= x_fit Delta`` enter the fit. Second-order perturbation
    theory predicts ``kappa = (eta O2 / Delta)^2 / (2 detuning)``. The residual
    is the largest misfit relative to the largest fitted phase.
    """
    if not ion.ancilla_mode.full:
        raise ValueError("the effective-interaction check needs a full ancilla qubit")
    coupling = ion.eta * ion.Omega_2 / ion.Delta
    if detuning < 10 * ion.eta * abs(ion.Omega_2):
        raise ValueError("detuning must be at least 10 eta Omega_2")
    x_op = position_operator(ion)
    h = coupling * np.kron(SIGMA_X, x_op) + detuning * np.kron(SIGMA_Z, np.eye(ion.fock_dim))
    predicted = coupling**2 / (2 * detuning) if detuning else 0.0
    ratio = detuning / (ion.eta * abs(ion.Omega_2)) if ion.Omega_2 else math.inf

    nodes, vecs = np.linalg.eigh(x_op)
    pick = np.abs(nodes) <= x_fit * ion.Delta
    xs, vecs = nodes[pick], vecs[:, pick]
    if duration is None:
        duration = 4 * math.pi / (predicted * (x_fit * ion.Delta) ** 2) if predicted else 1.0
    times = np.linspace(0.0, duration, n_times)

    energies, modes = scipy.linalg.eigh(h)
    up = np.vstack([vecs, np.zeros_like(vecs)])
    coeffs = modes.conj().T @ up
    phases = []
    for t in times:
        evolved = modes @ (np.exp(-1j * energies * t)[:, None] * coeffs)
        amp = np.einsum("ij,ij->j", up.conj(), evolved) * np.exp(1j * detuning * t)
        phases.append(np.angle(amp))
    phases = np.unwrap(np.array(phases), axis=0)  # (n_times, n_nodes)

    design = -(xs[None, :] ** 2) * times[:, None]
    scale = np.max(np.abs(phases))
    if predicted and scale < 1e-2:
        raise ValueError("accumulated phase too small to fit; increase the duration")
    denom = np.sum(design**2)
    kappa = float(np.sum(design * phases) / denom) if denom else 0.0
    misfit = np.max(np.abs(phases - kappa * design))
    residual = float(misfit / scale) if scale > 1e-12 else float(misfit)
    return QuadraticReport(ratio, kappa, predicted, residual, duration)
