"""Bound-state spectra, the H^2 orbit invariant and the Jaynes-Cummings ladder.

Scalar potential
    ``H = c sx p + (m c^2 + v_sc x) sz``. Squaring gives an oscillator,
    ``H^2 = c^2 p^2 + (v_sc x + m c^2)^2 - hbar c v_sc sy``, so the squared
    levels are ``2 hbar c v_sc n`` (n = 0, 1, ...), independent of m. Orbits
    are centred at ``x = -m c^2 / v_sc``.

Pseudoscalar potential
    With ``hbar Omega = sqrt(hbar omega m c^2)`` the problem is the detuned
    Jaynes-Cummings model ``hbar Omega (i s- a^+ - i s+ a) + m c^2 sz`` whose
    levels are ``+-m c^2 sqrt(1 + n hbar omega / m c^2)``.

On a periodic grid the sawtooth ``v_sc x`` has a second (inverted) kink at the
wrap, and the momentum lattice wraps at Nyquist; both bind spurious states.
They are removed by their weight in an edge band of x and a high-|p| band.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .core import (
    DiracParams,
    Grid,
    SpinorField,
    expectation_p,
    expectation_x,
    inner,
    norm,
)
from .dynamics import NORM_DRIFT_LIMIT, NormDriftError, SplitStepPropagator
from .hamiltonian import HamiltonianSlices, apply_hamiltonian, build_dense, build_slices

EIGEN_MAX_DIM = 8192


class SpectrumMethod(enum.Enum):
    DENSE_GRID = "dense-grid"
    JC_LADDER = "jc-ladder"
    ANALYTIC = "analytic"


class InsufficientGridError(ValueError):
    """Bound states reach the edge of the grid (or the momentum window)."""


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    method: SpectrumMethod
    metadata: dict = field(default_factory=dict)
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        order = np.argsort(self.eigenvalues, kind="stable")
        self.eigenvalues = self.eigenvalues[order]
        if self.eigenvectors is not None:
            self.eigenvectors = self.eigenvectors[:, order]


def _check_hermitian(h: np.ndarray, tol: float = 1e-10):
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("expected a square matrix")
    if h.shape[0] > EIGEN_MAX_DIM:
        raise ValueError(f"dimension {h.shape[0]} exceeds {EIGEN_MAX_DIM}")
    scale = max(np.max(np.abs(h)), 1.0)
    err = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if err > tol * scale:
        raise ValueError(f"matrix is not Hermitian (max deviation {err:.3g})")


def eigen_spectrum(h: np.ndarray, residuals: bool = False) -> SpectrumResult:
    """Ascending eigenvalues of a Hermitian matrix.

    With ``residuals=True`` the eigenvectors are kept and
    ``metadata["residuals"]`` holds ``||H v - lambda v||`` per pair.
    """
    h = np.asarray(h)
    _check_hermitian(h)
    meta = {"dimension": h.shape[0]}
    if not residuals:
        return SpectrumResult(scipy.linalg.eigh(h, eigvals_only=True), SpectrumMethod.DENSE_GRID, meta)
    w, v = scipy.linalg.eigh(h)
    meta["residuals"] = np.linalg.norm(h @ v - v * w, axis=0)
    meta["matrix_norm"] = float(np.linalg.norm(h, 2))
    return SpectrumResult(w, SpectrumMethod.DENSE_GRID, meta, v)


# --- scalar potential -------------------------------------------------------


def _unphysical_weight_operator(grid: Grid, vecs: np.ndarray, edge_fraction: float, p_fraction: float):
    """``V^+ (Q_x + Q_p) V`` with ``Q_x``/``Q_p`` projectors on the edge and high-|p| bands."""
    n = grid.n_points
    x = grid.x
    band = edge_fraction * grid.length
    edge = (x < grid.x_min + band) | (x > grid.x_max - band)
    high_p = np.abs(grid.p) > p_fraction * grid.p_max
    comps = vecs.reshape(2, n, -1)
    xw = comps[:, edge, :]
    q = np.einsum("cia,cib->ab", xw.conj(), xw)
    mom = np.fft.fft(comps, axis=1, norm="ortho")[:, high_p, :]
    q += np.einsum("cia,cib->ab", mom.conj(), mom)
    return q


def _physical_states(grid, w, v, edge_fraction=0.1, p_fraction=0.5, spurious=1e-2, leak=1e-10):
    """Drop lattice-wrap states; degenerate clusters are rotated to separate them."""
    keep_w, keep_v = [], []
    scale = max(1.0, np.max(np.abs(w))) if len(w) else 1.0
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) < 1e-8 * scale:
            j += 1
        block = v[:, i:j]
        q = _unphysical_weight_operator(grid, block, edge_fraction, p_fraction)
        qw, qv = np.linalg.eigh(q)
        for k in range(j - i):
            if qw[k] >= spurious:
                continue
            if qw[k] > leak:
                raise InsufficientGridError(
                    f"state at E={w[i]:.6g} has weight {qw[k]:.2e} in the edge bands; enlarge the grid"
                )
            keep_w.append(w[i + k] if j - i == 1 else np.mean(w[i:j]))
            keep_v.append(block @ qv[:, k])
        i = j
    vecs = np.array(keep_v).T if keep_v else np.zeros((v.shape[0], 0), complex)
    return np.array(keep_w), vecs


def scalar_spectrum_numeric(params: DiracParams, grid: Grid, k: int) -> SpectrumResult:
    """The ``2k`` physical eigenvalues closest to zero for a pure scalar slope."""
    if not params.v_sc > 0:
        raise ValueError("scalar spectrum needs v_sc > 0")
    if params.v_el or params.v_mag or params.v_ps:
        raise ValueError("scalar spectrum needs the other slopes to be zero")
    h = build_dense(grid, params)
    level = 2 * params.hbar * params.c * params.v_sc
    e_max = math.sqrt(level * (k + 2))
    w, v = scipy.linalg.eigh(h, subset_by_value=(-e_max, e_max), driver="evr")
    w, v = _physical_states(grid, w, v)
    if len(w) < 2 * k:
        raise InsufficientGridError(f"only {len(w)} physical states below |E| = {e_max:.4g}")
    pick = np.sort(np.argsort(np.abs(w), kind="stable")[: 2 * k])
    meta = {"n_points": grid.n_points, "x_range": (grid.x_min, grid.x_max), "params": params}
    return SpectrumResult(w[pick], SpectrumMethod.DENSE_GRID, meta, v[:, pick])


def squared_levels(eigenvalues: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Distinct ``E^2`` values (``E`` and ``-E`` merged), ascending."""
    sq = np.sort(np.asarray(eigenvalues) ** 2)
    levels = []
    for s in sq:
        if levels and abs(s - levels[-1][-1]) < tol * max(1.0, s):
            levels[-1].append(s)
        else:
            levels.append([s])
    return np.array([np.mean(g) for g in levels])


def scalar_ladder_report(levels: np.ndarray, params: DiracParams) -> dict:
    """Fit ``E_n^2 = spacing n + offset`` and set it beside the published form.

    The published ``2 hbar c v (n + 1/2 +- 1)`` has offsets ``3 hbar c v`` and
    ``-hbar c v``; the measured ladder has a zero mode instead.
    """
    n = np.arange(len(levels))
    spacing, offset = np.polyfit(n, levels, 1)
    unit = params.hbar * params.c * params.v_sc
    return {
        "spacing": float(spacing),
        "offset": float(offset),
        "differences": np.diff(levels),
        "expected_spacing": 2 * unit,
        "published_formula": "E^2 = 2 hbar c v_sc (n + 1/2 +- 1)",
        "published_offsets": (3 * unit, -unit),
        "measured_offset_in_hbar_c_v": float(offset / unit),
    }


# --- H^2 and phase-space orbits ---------------------------------------------


def orbit_invariant(field: SpinorField, params: DiracParams, slices: Optional[HamiltonianSlices] = None) -> float:
    """``<psi|H H|psi> / <psi|psi>`` by two applications of H."""
    if slices is None:
        slices = build_slices(field.grid, params)
    h_psi = apply_hamiltonian(field, slices)
    hh_psi = apply_hamiltonian(h_psi, slices)
    return float(inner(field, hh_psi).real / norm(field) ** 2)


@dataclass
class OrbitTrace:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    h2: np.ndarray
    norm_drift: float

    @property
    def h2_drift(self) -> float:
        return float((self.h2.max() - self.h2.min()) / abs(self.h2[0]))

    def center(self) -> tuple[float, float]:
        """Centre of the bounding box of the (x, p) curve."""
        return (0.5 * (self.x.max() + self.x.min()), 0.5 * (self.p.max() + self.p.min()))

    def closure(self, after: float) -> tuple[float, float]:
        """First return ``(time, distance)`` after ``after``.

        The distance is measured per axis in units of the orbit diameter along
        that axis; the larger of the two is reported.
        """
        dx = self.x.max() - self.x.min()
        dp = self.p.max() - self.p.min()
        dist = np.maximum(np.abs(self.x - self.x[0]) / dx, np.abs(self.p - self.p[0]) / dp)
        later = np.nonzero(self.t > after)[0]
        if len(later) == 0:
            raise ValueError("trace ends before the requested return window")
        i = later[np.argmin(dist[later])]
        return float(self.t[i]), float(dist[i])


def track_orbit(
    field: SpinorField,
    params: DiracParams,
    t_final: float,
    dt: float,
    sample_every: int,
) -> OrbitTrace:
    """Split-operator evolution recording ``<x>``, ``<p>`` and ``<H^2>``."""
    slices = build_slices(field.grid, params)
    prop = SplitStepPropagator(slices, dt)
    n_steps = int(round(t_final / dt))
    n0 = norm(field)
    data = field.data.copy()
    ts, xs, ps, hs = [], [], [], []
    drift = 0.0
    step = 0
    while True:
        psi = SpinorField(field.grid, data)
        drift = max(drift, abs(norm(psi) - n0) / n0)
        if drift > NORM_DRIFT_LIMIT:
            raise NormDriftError(f"norm drift {drift:.2e} at t={step * dt:g}")
        ts.append(step * dt)
        xs.append(expectation_x(psi))
        ps.append(expectation_p(psi))
        hs.append(orbit_invariant(psi, params, slices))
        if step >= n_steps:
            break
        chunk = min(sample_every, n_steps - step)
        data = prop.run(data, chunk)
        step += chunk
    return OrbitTrace(np.array(ts), np.array(xs), np.array(ps), np.array(hs), drift)


# --- Dirac oscillator / Jaynes-Cummings -------------------------------------


def jc_rabi_frequency(params: DiracParams, omega: float) -> float:
    """``Omega`` with ``hbar Omega = sqrt(hbar |omega| m c^2)``."""
    return math.sqrt(params.hbar * abs(omega) * params.rest_energy) / params.hbar


def _spin_fock_ops(n_max: int):
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)
    s_plus = np.array([[0, 1], [0, 0]], dtype=complex)  # |up><down|
    return a, s_plus


def jc_hamiltonian(n_max: int, rabi: float, params: DiracParams, anti: bool = False) -> np.ndarray:
    """``hbar Omega (i s- a^+ - i s+ a) + m c^2 sz`` on spin (x) Fock(0..n_max).

    ``anti=True`` gives the ``omega -> -omega`` partner
    ``hbar Omega (i s+ a^+ - i s- a) + m c^2 sz``.
    """
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    a, s_plus = _spin_fock_ops(n_max)
    s_minus = s_plus.conj().T
    ad = a.conj().T
    hr = params.hbar * rabi
    if anti:
        coupling = 1j * np.kron(s_plus, ad) - 1j * np.kron(s_minus, a)
    else:
        coupling = 1j * np.kron(s_minus, ad) - 1j * np.kron(s_plus, a)
    sz = np.kron(np.diag([1.0, -1.0]), np.eye(n_max + 1))
    return hr * coupling + params.rest_energy * sz


def dirac_oscillator_spectrum_analytic(n: int, params: DiracParams, omega: float) -> tuple[float, float]:
    if n < 0:
        raise ValueError("n must be non-negative")
    if params.m == 0:
        raise ValueError("the oscillator formula is degenerate for m = 0")
    mc2 = params.rest_energy
    e = mc2 * math.sqrt(1 + n * params.hbar * omega / mc2)
    return e, -e


def jc_spectrum(n_max: int, params: DiracParams, omega: float, anti: bool = False) -> SpectrumResult:
    h = jc_hamiltonian(n_max, jc_rabi_frequency(params, omega), params, anti)
    res = eigen_spectrum(h)
    res.method = SpectrumMethod.JC_LADDER
    res.metadata.update(n_max=n_max, omega=omega, params=params, anti=anti)
    return res


def analytic_ladder(n_top: int, params: DiracParams, omega: float) -> np.ndarray:
    vals = []
    for n in range(n_top + 1):
        vals.extend(dirac_oscillator_spectrum_analytic(n, params, omega))
    return np.sort(vals)


def interior_eigenvalues(values: np.ndarray, n_max: int, params: DiracParams, omega: float) -> np.ndarray:
    """Eigenvalues belonging to blocks ``n <= n_max - 2`` (by magnitude)."""
    cutoff = dirac_oscillator_spectrum_analytic(n_max - 2, params, omega)[0]
    return np.sort(values[np.abs(values) <= cutoff * (1 + 1e-9)])


def antijc_spectrum_check(params: DiracParams, omega: float, n_max: int) -> dict:
    """Compare JC and anti-JC spectra, and the JC spectrum at doubled truncation."""
    jc = jc_spectrum(n_max, params, omega).eigenvalues
    anti = jc_spectrum(n_max, params, omega, anti=True).eigenvalues
    if omega == 0:
        # uncoupled: every level is +-mc^2 whatever the truncation
        doubled = np.unique(jc_spectrum(2 * n_max, params, omega).eigenvalues)
        return {
            "jc": jc,
            "anti_jc": anti,
            "max_mismatch": float(np.max(np.abs(jc - anti))),
            "truncation_shift": float(np.max(np.abs(np.unique(jc) - doubled))),
            "pairing": {"jc": "none (uncoupled)", "anti_jc": "none (uncoupled)"},
        }
    jc_int = interior_eigenvalues(jc, n_max, params, omega)
    anti_int = interior_eigenvalues(anti, n_max, params, omega)
    doubled = interior_eigenvalues(jc_spectrum(2 * n_max, params, omega).eigenvalues, n_max, params, omega)
    same_len = len(jc_int) == len(anti_int) == len(doubled)
    return {
        "jc": jc,
        "anti_jc": anti,
        "max_mismatch": float(np.max(np.abs(jc_int - anti_int))) if same_len else math.inf,
        "truncation_shift": float(np.max(np.abs(jc_int - doubled))) if same_len else math.inf,
        # JC pairs |up, n-1> with |down, n>; anti-JC pairs |up, n> with |down, n-1>
        "pairing": {"jc": "(up, n-1) <-> (down, n)", "anti_jc": "(up, n) <-> (down, n-1)"},
    }
