"""Time evolution.

Two propagators are provided:

* Strang split-operator stepping ``X/2 - P - X/2`` on the grid, valid for any
  combination of the linear potentials.
* The comoving-frame solver for a pure electric slope. In momentum space the
  electric potential only shifts momenta, ``psi(p, t) = xi(p + q v t, t)``, and
  every comoving mode ``xi(P)`` obeys an independent two-level equation

      i hbar d/dt xi = [c sx (P - q v t) + m c^2 sz] xi,

  a Landau-Zener sweep. Modes are integrated with the fourth-order Magnus
  scheme (two Gauss-Legendre nodes), each step exponentiated exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .core import (
    DiracParams,
    Representation,
    RepresentationError,
    SpinorField,
    apply_pointwise,
    as_momentum,
    norm,
    pauli_exp,
    to_position,
)
from .hamiltonian import HamiltonianSlices, build_slices
from .states import branch_population

log = logging.getLogger(__name__)

NORM_DRIFT_LIMIT = 1e-6

FrameSink = Callable[[float, np.ndarray, tuple[float, float]], None]


class NormDriftError(RuntimeError):
    """Norm drifted beyond tolerance: dt too coarse or the packet hit the grid edge."""


class MomentumWindowError(RuntimeError):
    """The comoving shift moved occupied modes outside the momentum lattice."""


@dataclass(frozen=True)
class EvolutionSpec:
    t_final: float
    dt: float
    frame_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.t_final > 0 and self.dt > self.t_final * (1 + 1e-12):
            raise ValueError("dt must not exceed t_final")
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        if self.t_final == 0:
            return 0
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Step actually taken: ``dt`` shrunk so ``n_steps`` steps land on ``t_final``."""
        return self.t_final / self.n_steps if self.n_steps else 0.0


@dataclass
class Frame:
    t: float
    upper_density: np.ndarray
    lower_density: np.ndarray
    pos: float
    neg: float

    @property
    def density(self) -> np.ndarray:
        return self.upper_density + self.lower_density


@dataclass
class EvolutionResult:
    final: SpinorField
    frames: list[Frame] = field(default_factory=list)
    norm_drift: float = 0.0


class SplitStepPropagator:
    """Cached Strang factors for one ``(slices, dt)`` pair.

    The kinetic factor is diagonal in momentum, so it is applied to the raw
    FFT coefficients; the origin phase of the momentum amplitudes commutes
    with it and is skipped. The constant mass term is moved from the
    position factor into the momentum factor, which then is the exact free
    propagator: splitting error comes from the potentials alone.
    """

    def __init__(self, slices: HamiltonianSlices, dt: float):
        hbar = slices.params.hbar
        self.slices = slices
        self.dt = dt
        x_coeffs = slices.x_coeffs.copy()
        p_coeffs = slices.p_coeffs.copy()
        x_coeffs[3] -= slices.params.rest_energy
        p_coeffs[3] += slices.params.rest_energy
        self.x_half = pauli_exp(*(x_coeffs * (0.5 * dt / hbar)))
        self.x_full = pauli_exp(*(x_coeffs * (dt / hbar)))
        self.p_full = pauli_exp(*(p_coeffs * (dt / hbar)))

    def _kinetic(self, data: np.ndarray) -> np.ndarray:
        k = np.fft.fft(data, axis=1)
        return np.fft.ifft(apply_pointwise(self.p_full, k), axis=1)

    def run(self, data: np.ndarray, n_steps: int) -> np.ndarray:
        """``n_steps`` Strang steps with adjacent half steps merged."""
        if n_steps == 0:
            return data
        data = apply_pointwise(self.x_half, data)
        for _ in range(n_steps - 1):
            data = apply_pointwise(self.x_full, self._kinetic(data))
        data = self._kinetic(data)
        return apply_pointwise(self.x_half, data)


def split_step(field: SpinorField, slices: HamiltonianSlices, dt: float) -> SpinorField:
    if field.representation is not Representation.POSITION:
        raise RepresentationError("split_step needs a position-representation field")
    prop = SplitStepPropagator(slices, dt)
    return SpinorField(field.grid, prop.run(field.data, 1))


def _make_frame(t: float, psi: SpinorField, params: DiracParams) -> Frame:
    pos, neg = branch_population(psi, params)
    dens = np.abs(psi.data) ** 2
    return Frame(t, dens[0], dens[1], pos, neg)


def _emit(frame: Frame, frames: list, sink: Optional[FrameSink]):
    frames.append(frame)
    if sink is not None:
        sink(frame.t, frame.density, (frame.pos, frame.neg))


def _check_drift(n0: float, psi: SpinorField, t: float, limit: float) -> float:
    drift = abs(norm(psi) - n0) / n0
    if drift > limit:
        raise NormDriftError(
            f"norm drift {drift:.3e} at t={t:g} exceeds {limit:g}; reduce dt or enlarge the grid"
        )
    return drift


def evolve(
    field: SpinorField,
    params: DiracParams,
    spec: EvolutionSpec,
    frame_sink: Optional[FrameSink] = None,
    slices: Optional[HamiltonianSlices] = None,
    drift_limit: float = NORM_DRIFT_LIMIT,
) -> EvolutionResult:
    """Split-operator evolution with a density frame every ``frame_stride`` steps.

    The first frame is the initial state; a last frame is added at
    ``t_final`` if it does not fall on the stride.
    """
    if field.representation is not Representation.POSITION:
        raise RepresentationError("evolve needs a position-representation field")
    if slices is None:
        slices = build_slices(field.grid, params)
    n_steps, dt = spec.n_steps, spec.step
    prop = SplitStepPropagator(slices, dt) if n_steps else None
    n0 = norm(field)
    data = field.data.copy()
    frames: list[Frame] = []
    _emit(_make_frame(0.0, field, params), frames, frame_sink)
    drift = 0.0
    done = 0
    while done < n_steps:
        chunk = min(spec.frame_stride, n_steps - done)
        data = prop.run(data, chunk)
        done += chunk
        psi = SpinorField(field.grid, data)
        t = done * dt
        drift = max(drift, _check_drift(n0, psi, t, drift_limit))
        _emit(_make_frame(t, psi, params), frames, frame_sink)
    log.debug("split-operator run: %d steps, norm drift %.2e", n_steps, drift)
    return EvolutionResult(SpinorField(field.grid, data), frames, drift)


# --- comoving Landau-Zener integration -------------------------------------

_GAUSS_OFFSET = math.sqrt(3.0) / 6.0


def _sweep_coeffs(modes: np.ndarray, params: DiracParams, t: float) -> np.ndarray:
    """Pauli coefficients of ``c sx (P - q v t) + m c^2 sz`` for every mode."""
    n = modes.shape[0]
    out = np.zeros((4, n))
    out[1] = params.c * (modes - params.q_sign * params.v_el * t)
    out[3] = params.rest_energy
    return out


def magnus4_step(modes: np.ndarray, params: DiracParams, t: float, h: float) -> np.ndarray:
    """Fourth-order Magnus propagator for ``[t, t+h]``, shape ``(len(modes), 2, 2)``."""
    hbar = params.hbar
    a1 = _sweep_coeffs(modes, params, t + (0.5 - _GAUSS_OFFSET) * h)[1:]
    a2 = _sweep_coeffs(modes, params, t + (0.5 + _GAUSS_OFFSET) * h)[1:]
    # Omega = -i [ h/(2 hbar) (a1 + a2) + sqrt(3)/6 (h/hbar)^2 (a2 x a1) ] . sigma
    vec = 0.5 * h / hbar * (a1 + a2) + (math.sqrt(3) / 6) * (h / hbar) ** 2 * np.cross(a2, a1, axis=0)
    return pauli_exp(0.0, vec[0], vec[1], vec[2])


def _require_electric(params: DiracParams):
    if not params.only_electric():
        raise ValueError("the comoving reduction needs v_sc = v_mag = v_ps = 0")
    if params.v_el == 0:
        raise ValueError("the comoving reduction needs a nonzero electric slope")


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, np.eye(2, dtype=complex)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def lz_mode_solve(p: float, params: DiracParams, t0: float, t1: float, dt: float = 1e-3) -> np.ndarray:
    """2x2 propagator of one comoving mode from ``t0`` to ``t1``."""
    _require_electric(params)
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    n_steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / n_steps
    # one "mode" per step: mode p at time t0 + k h is mode p - q v k h at time t0
    starts = float(p) - params.q_sign * params.v_el * h * np.arange(n_steps)
    return _ordered_product(magnus4_step(starts, params, t0, h))


def default_lz_window(params: DiracParams) -> float:
    """Half-width ``T`` of a symmetric sweep: ``40 m c^2 / (c |v_el|)``.

    The energy scale is floored at ``sqrt(hbar c |v_el|)``, the width of the
    crossing region, so the massless case still gets a finite window.
    """
    rate = params.c * abs(params.v_el)
    return 40.0 * max(params.rest_energy, math.sqrt(params.hbar * rate)) / rate


def _comoving_shift(xi: SpinorField, params: DiracParams, t: float) -> SpinorField:
    """``psi(p) = xi(p + q v t)``: an index roll on the lattice, spectral otherwise."""
    grid = xi.grid
    shift = params.q_sign * params.v_el * t
    # occupied comoving modes must land inside the window
    dest = grid.p - shift
    outside = (dest < -grid.p_max) | (dest >= grid.p_max)
    weight = np.sum(np.abs(xi.data[:, outside]) ** 2)
    total = np.sum(np.abs(xi.data) ** 2)
    if weight > 1e-10 * total:
        raise MomentumWindowError(
            f"momentum shift {shift:g} moves {weight / total:.2e} of the norm outside "
            f"[-{grid.p_max:g}, {grid.p_max:g})"
        )
    s = shift / grid.dp
    s_int = round(s)
    if abs(s - s_int) < 1e-9:
        return SpinorField(grid, np.roll(xi.data, -s_int, axis=1), Representation.MOMENTUM)
    pos = to_position(xi)
    pos.data *= np.exp(-1j * shift * grid.x / grid.hbar)
    return as_momentum(pos)


def comoving_propagate(
    field: SpinorField,
    params: DiracParams,
    times: Iterable[float],
    dt: float = 1e-3,
) -> list[SpinorField]:
    """Momentum-representation fields at each of the ascending ``times``."""
    _require_electric(params)
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise ValueError("times must be non-negative and ascending")
    xi = as_momentum(field)
    modes = xi.grid.p
    data = xi.data.copy()
    t_now = 0.0
    out = []
    for t in times:
        span = t - t_now
        if span > 0:
            n_steps = max(1, math.ceil(span / dt - 1e-9))
            h = span / n_steps
            for k in range(n_steps):
                data = apply_pointwise(magnus4_step(modes, params, t_now + k * h, h), data)
            t_now = t
        out.append(_comoving_shift(SpinorField(xi.grid, data, Representation.MOMENTUM), params, t))
    return out


def klein_evolve_comoving(field: SpinorField, params: DiracParams, t: float, dt: float = 1e-3) -> SpinorField:
    if field.representation is not Representation.MOMENTUM:
        raise RepresentationError("klein_evolve_comoving takes a momentum-representation field")
    return comoving_propagate(field, params, [t], dt)[0]


def evolve_comoving(
    field: SpinorField,
    params: DiracParams,
    spec: EvolutionSpec,
    frame_sink: Optional[FrameSink] = None,
    drift_limit: float = NORM_DRIFT_LIMIT,
) -> EvolutionResult:
    """Frame-emitting counterpart of ``evolve`` built on the comoving solver.

    Frame times match ``evolve`` for the same ``spec``; the Magnus step is
    ``spec.step``.
    """
    n_steps, dt = spec.n_steps, spec.step
    stops = list(range(spec.frame_stride, n_steps, spec.frame_stride))
    if n_steps:
        stops.append(n_steps)
    times = [k * dt for k in stops]
    src = field if field.representation is Representation.POSITION else to_position(field)
    n0 = norm(src)
    frames: list[Frame] = []
    _emit(_make_frame(0.0, src, params), frames, frame_sink)
    drift = 0.0
    final = src
    for t, psi in zip(times, comoving_propagate(src, params, times, dt)):
        final = to_position(psi)
        drift = max(drift, _check_drift(n0, final, t, drift_limit))
        _emit(_make_frame(t, final, params), frames, frame_sink)
    return EvolutionResult(final, frames, drift)


def evolve_dense(field: SpinorField, hamiltonian: np.ndarray, t: float) -> SpinorField:
    """Exact ``exp(-i H t / hbar) psi`` for a dense Hamiltonian (test oracle)."""
    from scipy.linalg import expm

    pos = field if field.representation is Representation.POSITION else to_position(field)
    u = expm(-1j * hamiltonian * t / pos.grid.hbar)
    return SpinorField(pos.grid, (u @ pos.vector()).reshape(2, -1))
