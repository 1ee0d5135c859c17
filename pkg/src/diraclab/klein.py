"""Klein tunneling experiments on a linear electric potential.

A positive-energy packet sent against the slope (``q v_el p0 > 0``) is
decelerated; each momentum mode sweeps through the avoided crossing at
``p = 0`` and ends up on the negative-energy branch with the Landau-Zener
probability ``exp(-pi m^2 c^3 / (hbar |v_el|))``. The exponent does not depend
on the mode momentum, so a whole packet transmits with the same probability
once every mode has crossed; packet width only affects the transient.

Transmission is the final negative-branch population. The spatial estimate
(density beyond ``x_cut``) is kept as an independent cross-check; its default
cut ``x0 + E0/|v_el|`` lies beyond the classical turning point of the
reflected branch and behind the transmitted one at all later times.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import DiracParams, Grid, SpinorField, as_position, norm
from .dynamics import (
    EvolutionResult,
    EvolutionSpec,
    Frame,
    FrameSink,
    evolve,
    evolve_comoving,
)
from .states import Branch, BoundaryError, PacketSpec, branch_population, gaussian_packet

log = logging.getLogger(__name__)


class Solver(enum.Enum):
    SPLIT_OPERATOR = "split"
    COMOVING_LZ = "comoving"


class TransmissionMethod(enum.Enum):
    BRANCH_POPULATION = "branch"
    SPATIAL_REGION = "spatial"


@dataclass(frozen=True)
class ScatteringScenario:
    grid: Grid
    params: DiracParams
    packet: PacketSpec
    evolution: EvolutionSpec
    solver: Solver = Solver.SPLIT_OPERATOR
    transmission_method: TransmissionMethod = TransmissionMethod.BRANCH_POPULATION
    x_cut: Optional[float] = None

    def __post_init__(self):
        p = self.params
        if p.v_el == 0:
            raise ValueError("a scattering scenario needs a nonzero electric slope")
        if self.solver is Solver.COMOVING_LZ and not p.only_electric():
            raise ValueError("the comoving solver needs an electric-only potential")
        if self.packet.branch is not Branch.POSITIVE:
            raise ValueError("scattering packets start on the positive-energy branch")
        if p.q_sign * p.v_el * self.packet.p0 <= 0:
            raise ValueError("the packet must move against the slope (q v_el p0 > 0)")

    @property
    def direction(self) -> int:
        """+1 if the barrier rises towards +x for this charge."""
        return 1 if self.params.q_sign * self.params.v_el > 0 else -1

    def default_x_cut(self) -> float:
        p = self.params
        e0 = math.hypot(p.c * self.packet.p0, p.rest_energy)
        return self.packet.x0 + self.direction * e0 / abs(p.v_el)

    def with_params(self, **changes) -> "ScatteringScenario":
        params = replace(self.params, **changes)
        return replace(self, params=params, packet=replace(self.packet, params=params))


@dataclass
class ScatteringResult:
    frames: list[Frame]
    transmission: float
    reflection: float
    branch_history: list[tuple[float, float, float]]
    norm_drift: float
    spatial_transmission: float
    final: SpinorField = field(repr=False)


def lz_probability(params: DiracParams) -> float:
    """Landau-Zener branch-switching probability ``exp(-pi m^2 c^4 / (hbar c |v_el|))``."""
    if params.v_el == 0:
        raise ValueError("Landau-Zener probability needs v_el != 0")
    return math.exp(-math.pi * params.rest_energy**2 / (params.hbar * params.c * abs(params.v_el)))


def lz_exponent(params: DiracParams) -> float:
    """``m^2 c^4 / (hbar c |v_el|)``."""
    return params.rest_energy**2 / (params.hbar * params.c * abs(params.v_el))


def check_boundaries(scenario: ScatteringScenario, n_sigma: float = 6.0):
    """Ballistic pre-run check: light cone in x, constant force in p."""
    g, p, pk = scenario.grid, scenario.params, scenario.packet
    t = scenario.evolution.t_final
    reach = p.c * t + n_sigma * pk.width
    if pk.x0 - reach < g.x_min or pk.x0 + reach > g.x_max:
        raise BoundaryError(
            f"packet may reach [{pk.x0 - reach:g}, {pk.x0 + reach:g}] outside "
            f"[{g.x_min:g}, {g.x_max:g}) within t={t:g}"
        )
    sigma_p = g.hbar / (2 * pk.width)
    p_end = pk.p0 - p.q_sign * p.v_el * t
    lo = min(pk.p0, p_end) - n_sigma * sigma_p
    hi = max(pk.p0, p_end) + n_sigma * sigma_p
    if lo < -g.p_max or hi >= g.p_max:
        raise BoundaryError(
            f"momentum range [{lo:g}, {hi:g}] leaves the lattice window +-{g.p_max:g}"
        )


def measure_transmission(
    field: SpinorField,
    params: DiracParams,
    method: TransmissionMethod = TransmissionMethod.BRANCH_POPULATION,
    x_cut: Optional[float] = None,
    direction: int = 1,
) -> float:
    """Transmitted fraction of ``field`` (normalized by its norm squared)."""
    total = norm(field) ** 2
    if method is TransmissionMethod.BRANCH_POPULATION:
        return branch_population(field, params)[1] / total
    if x_cut is None:
        raise ValueError("the spatial method needs x_cut")
    pos = as_position(field)
    beyond = pos.grid.x > x_cut if direction > 0 else pos.grid.x < x_cut
    return float(pos.grid.dx * np.sum(pos.density()[beyond]) / total)


def run_scattering(scenario: ScatteringScenario, frame_sink: Optional[FrameSink] = None) -> ScatteringResult:
    check_boundaries(scenario)
    psi = gaussian_packet(scenario.grid, scenario.packet)
    if scenario.solver is Solver.SPLIT_OPERATOR:
        res: EvolutionResult = evolve(psi, scenario.params, scenario.evolution, frame_sink)
    else:
        res = evolve_comoving(psi, scenario.params, scenario.evolution, frame_sink)
    x_cut = scenario.x_cut if scenario.x_cut is not None else scenario.default_x_cut()
    by_branch = measure_transmission(res.final, scenario.params)
    spatial = measure_transmission(
        res.final, scenario.params, TransmissionMethod.SPATIAL_REGION, x_cut, scenario.direction
    )
    transmission = by_branch if scenario.transmission_method is TransmissionMethod.BRANCH_POPULATION else spatial
    history = [(f.t, f.pos, f.neg) for f in res.frames]
    return ScatteringResult(
        frames=res.frames,
        transmission=transmission,
        reflection=1.0 - transmission,
        branch_history=history,
        norm_drift=res.norm_drift,
        spatial_transmission=spatial,
        final=res.final,
    )


@dataclass
class SweepRow:
    value: float
    exponent: float
    transmission: float
    lz: float
    error: Optional[str] = None

    @property
    def delta(self) -> float:
        return abs(self.transmission - self.lz)


def default_sweep_masses(params: DiracParams = DiracParams(v_el=1.0), m_max: float = 1.5) -> list[float]:
    """16 masses on ``[0, m_max]``, refined geometrically around the ``P = 1/2`` crossover."""
    m_half = math.sqrt(math.log(2) / math.pi * params.hbar * abs(params.v_el) / params.c**3)
    coarse = list(np.linspace(0.0, m_max, 7))
    fine = [m_half] + [m_half * (1 + s * 0.04 * 2**k) for k in range(4) for s in (-1, 1)]
    return sorted(float(m) for m in coarse + fine)


def _sweep_job(args):
    scenario, name, value = args
    params = replace(scenario.params, **{name: value})
    try:
        scen = scenario.with_params(**{name: value})
        res = run_scattering(scen)
        return SweepRow(value, lz_exponent(params), res.transmission, lz_probability(params))
    except Exception as exc:  # a failed row is recorded, the sweep continues
        log.warning("sweep row %s=%g failed: %s", name, value, exc)
        exponent = lz_exponent(params) if params.v_el else math.inf
        lz = lz_probability(params) if params.v_el else math.nan
        return SweepRow(value, exponent, math.nan, lz, str(exc))


def transmission_sweep(
    values: Sequence[float],
    template: ScatteringScenario,
    parameter: str = "m",
    workers: int = 1,
) -> list[SweepRow]:
    """Run ``template`` once per value of ``parameter`` (``"m"`` or ``"v_el"``).

    Rows come back in input order whatever the worker count.
    """
    if parameter not in ("m", "v_el"):
        raise ValueError("sweep parameter must be 'm' or 'v_el'")
    jobs = [(template, parameter, float(v)) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_job, jobs))
    return [_sweep_job(j) for j in jobs]
