"""``diraclab <subcommand> [--preset NAME | --config FILE] [--out DIR] [--serial]``

Exit status: 0 success, 2 invalid configuration, 3 numerical abort
(norm drift, truncation leak, momentum window, insufficient grid).
Outputs are written only after the computation has finished.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import formats
from .config import KINDS, ConfigError, ScenarioConfig, load_preset, parse_config
from .core import DiracParams, Grid
from .dynamics import EvolutionSpec, MomentumWindowError, NormDriftError, evolve, evolve_comoving
from .ionsim import (
    AncillaMode,
    IonParams,
    IonScenario,
    TruncationLeakError,
    dirac_params_from_ion,
    ion_vs_dirac_fidelity,
    kilohertz,
)
from .klein import (
    ScatteringScenario,
    Solver,
    TransmissionMethod,
    default_sweep_masses,
    lz_probability,
    run_scattering,
    transmission_sweep,
)
from .spectra import (
    InsufficientGridError,
    analytic_ladder,
    interior_eigenvalues,
    jc_spectrum,
    scalar_ladder_report,
    scalar_spectrum_numeric,
    squared_levels,
    track_orbit,
)
from .states import Branch, PacketSpec, gaussian_packet

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
NUMERICAL_ABORTS = (NormDriftError, MomentumWindowError, TruncationLeakError, InsufficientGridError)

log = logging.getLogger("diraclab")


@dataclass
class Outcome:
    summary: str
    files: dict[str, bytes] = field(default_factory=dict)
    code: int = EXIT_OK


# --- config -> domain objects ---------------------------------------------------


def dirac_params(cfg: ScenarioConfig) -> DiracParams:
    keys = ("m", "c", "hbar", "q_sign", "v_sc", "v_el", "v_mag", "v_ps")
    return DiracParams(**{k: cfg[k] for k in keys})


def grid_from(cfg: ScenarioConfig, hbar: float = 1.0) -> Grid:
    return Grid(cfg["n_points"], cfg["x_min"], cfg["x_max"], hbar)


def packet_from(cfg: ScenarioConfig, params: DiracParams) -> PacketSpec:
    branch = Branch(cfg.get("branch", "positive"))
    return PacketSpec(cfg["x0"], cfg["p0"], cfg["width"], branch, params)


def scattering_from(cfg: ScenarioConfig) -> ScatteringScenario:
    params = dirac_params(cfg)
    return ScatteringScenario(
        grid=grid_from(cfg, params.hbar),
        params=params,
        packet=packet_from(cfg, params),
        evolution=EvolutionSpec(cfg["t_final"], cfg["dt"], cfg["frame_stride"]),
        solver=Solver(cfg["solver"]),
        transmission_method=TransmissionMethod(cfg["transmission_method"]),
        x_cut=cfg.get("x_cut"),
    )


def ion_from(cfg: ScenarioConfig) -> IonParams:
    mode = {"plus": AncillaMode.reduced(1), "minus": AncillaMode.reduced(-1), "full": AncillaMode.full_qubit(1)}
    return IonParams(
        eta=cfg["eta"],
        Omega_b=kilohertz(cfg["Omega_b"]),
        Omega_r=kilohertz(cfg["Omega_r"]),
        phi_b=cfg["phi_b"],
        phi_r=cfg["phi_r"],
        Omega_2=kilohertz(cfg["Omega_2"]),
        Omega_carrier=kilohertz(cfg["Omega_carrier"]),
        Omega_sc=kilohertz(cfg["Omega_sc"]),
        omega_trap=kilohertz(cfg["omega_trap"]),
        Delta=cfg["Delta"],
        n_max=cfg["n_max"],
        ancilla_mode=mode[cfg["ancilla"]],
    )


def _frame_files(frames, x) -> dict[str, bytes]:
    return {
        "frames.csv": formats.frames_csv_bytes(frames, x),
        "heatmap.ppm": formats.heatmap_ppm_bytes([f.density for f in frames]),
    }


# --- subcommands ------------------------------------------------------------------


def run_evolve(cfg: ScenarioConfig, serial: bool) -> Outcome:
    params = dirac_params(cfg)
    grid = grid_from(cfg, params.hbar)
    psi = gaussian_packet(grid, packet_from(cfg, params))
    spec = EvolutionSpec(cfg["t_final"], cfg["dt"], cfg["frame_stride"])
    res = (evolve_comoving if cfg["solver"] == "comoving" else evolve)(psi, params, spec)
    last = res.frames[-1]
    total = last.pos + last.neg
    summary = (
        f"evolve: t={last.t:.6g} positive={last.pos / total:.6f} negative={last.neg / total:.6f} "
        f"norm_drift={res.norm_drift:.2e}"
    )
    return Outcome(summary, _frame_files(res.frames, grid.x))


def run_klein(cfg: ScenarioConfig, serial: bool) -> Outcome:
    scen = scattering_from(cfg)
    res = run_scattering(scen)
    summary = (
        f"klein: transmission={res.transmission:.6f} ({scen.transmission_method.value}) "
        f"spatial={res.spatial_transmission:.6f} lz={lz_probability(scen.params):.6f} "
        f"norm_drift={res.norm_drift:.2e}"
    )
    return Outcome(summary, _frame_files(res.frames, scen.grid.x))


def run_sweep(cfg: ScenarioConfig, serial: bool) -> Outcome:
    name = cfg["sweep_parameter"]
    values = cfg["sweep_values"]
    if values == "default":
        if name != "m":
            raise ValueError("sweep_values = default is only defined for the mass")
        values = default_sweep_masses(dirac_params(cfg))
    template = scattering_from(cfg.__class__(cfg.kind, {**cfg.values, name: values[0]}, cfg.lines, cfg.name))
    workers = 1 if serial else cfg["workers"]
    rows = transmission_sweep(values, template, name, workers)
    table = formats.table_csv_bytes(
        ("value", "exponent", "transmission", "lz", "delta", "error"),
        [(r.value, r.exponent, r.transmission, r.lz, r.delta, r.error or "") for r in rows],
    )
    failed = [r for r in rows if r.error]
    worst = max((r.delta for r in rows if not r.error), default=math.nan)
    summary = f"sweep: {len(rows)} rows over {name}, max |T - LZ| = {worst:.4f}, failed rows = {len(failed)}"
    return Outcome(summary, {"sweep.csv": table}, EXIT_NUMERIC if failed else EXIT_OK)


def run_spectrum(cfg: ScenarioConfig, serial: bool) -> Outcome:
    params = dirac_params(cfg)
    kind = cfg["spectrum_kind"]
    if kind == "scalar":
        grid = grid_from(cfg, params.hbar)
        res = scalar_spectrum_numeric(params, grid, cfg["k"])
        rep = scalar_ladder_report(squared_levels(res.eigenvalues)[: cfg["k"]], params)
        summary = (
            f"spectrum: {len(res.eigenvalues)} eigenvalues, E^2 spacing={rep['spacing']:.6f} "
            f"(expected {rep['expected_spacing']:.6f}), measured offset={rep['offset']:.3e}; "
            f"published form {rep['published_formula']} has offsets "
            f"{rep['published_offsets'][0]:g} and {rep['published_offsets'][1]:g}"
        )
        values = res.eigenvalues
    else:
        res = jc_spectrum(cfg["n_max"], params, cfg["omega"], anti=kind == "anti_jc")
        values = res.eigenvalues
        interior = interior_eigenvalues(values, cfg["n_max"], params, cfg["omega"])
        expected = analytic_ladder(cfg["n_max"] - 2, params, cfg["omega"])
        dev = float(np.max(np.abs(interior - expected))) if len(interior) == len(expected) else math.inf
        summary = (
            f"spectrum: {len(values)} eigenvalues ({kind}, n_max={cfg['n_max']}), "
            f"max deviation from +-mc^2 sqrt(1 + n hbar omega / mc^2) over interior blocks = {dev:.2e}"
        )
    files = {"spectrum.csv": formats.table_csv_bytes(("index", "eigenvalue"), enumerate(np.sort(values).tolist()))}
    return Outcome(summary, files)


def run_orbits(cfg: ScenarioConfig, serial: bool) -> Outcome:
    params = dirac_params(cfg)
    grid = grid_from(cfg, params.hbar)
    psi = gaussian_packet(grid, packet_from(cfg, params))
    tr = track_orbit(psi, params, cfg["t_final"], cfg["dt"], cfg["sample_every"])
    t_ret, gap = tr.closure(after=0.5 * cfg["t_final"])
    cx, cp = tr.center()
    table = formats.table_csv_bytes(("t", "x", "p", "h2"), zip(tr.t, tr.x, tr.p, tr.h2))
    summary = (
        f"orbits: <H^2> relative drift={tr.h2_drift:.2e} return t={t_ret:.6g} "
        f"closure={gap:.2e} of diameter, center=({cx:.4g}, {cp:.4g}) norm_drift={tr.norm_drift:.2e}"
    )
    return Outcome(summary, {"orbit.csv": table})


def run_ion(cfg: ScenarioConfig, serial: bool) -> Outcome:
    ion = ion_from(cfg)
    params = dirac_params_from_ion(ion)
    grid = Grid(cfg["n_points"], cfg["x_min"], cfg["x_max"], ion.hbar)
    packet = PacketSpec(cfg["x0"], cfg["p0"], cfg["width"], Branch.POSITIVE, params)
    curve = ion_vs_dirac_fidelity(IonScenario(grid, params, packet, cfg["dt"]), ion, cfg["t_samples"])
    table = formats.table_csv_bytes(
        ("t", "fidelity", "ion_transmission", "dirac_transmission", "leak"),
        zip(curve.t, curve.fidelity, curve.ion_transmission, curve.dirac_transmission, curve.leak),
    )
    summary = (
        f"ion: transmission={curve.ion_transmission[-1]:.6f} at t={curve.t[-1]:g} ms "
        f"(grid reference {curve.dirac_transmission[-1]:.6f}, lz {lz_probability(params):.6f}) "
        f"min fidelity={curve.fidelity.min():.6f} max leak={curve.leak.max():.2e}"
    )
    return Outcome(summary, {"ion.csv": table})


RUNNERS: dict[str, Callable[[ScenarioConfig, bool], Outcome]] = {
    "evolve": run_evolve,
    "klein": run_klein,
    "sweep": run_sweep,
    "spectrum": run_spectrum,
    "orbits": run_orbits,
    "ion": run_ion,
}

# evolve also accepts scattering files, ignoring the transmission settings
_ACCEPTS = {"evolve": ("evolve", "klein")}


def run(cfg: ScenarioConfig, subcommand: Optional[str] = None, serial: bool = False) -> Outcome:
    sub = subcommand or cfg.kind
    if cfg.kind not in _ACCEPTS.get(sub, (sub,)):
        return Outcome(f"error: configuration kind '{cfg.kind}' cannot be run by '{sub}'", code=EXIT_INVALID)
    if sub == "evolve" and cfg.kind == "klein":
        cfg = ScenarioConfig("evolve", {**cfg.values, "branch": "positive"}, cfg.lines, cfg.name)
    try:
        return RUNNERS[sub](cfg, serial)
    except NUMERICAL_ABORTS as exc:
        return Outcome(f"numerical abort: {exc}", code=EXIT_NUMERIC)
    except ValueError as exc:
        return Outcome(f"error: {exc}", code=EXIT_INVALID)


def write_outputs(outcome: Outcome, out_dir: Path):
    for name, payload in outcome.files.items():
        formats._write_bytes(out_dir / name, payload)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diraclab", description="1+1 dimensional Dirac equation laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in KINDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", help="name of a bundled scenario")
        src.add_argument("--config", type=Path, help="scenario file")
        p.add_argument("--out", type=Path, help="output directory (default: ./diraclab-out/<name>)")
        p.add_argument("--serial", action="store_true", help="single process, fixed reduction order")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.preset:
            cfg = load_preset(args.preset)
        else:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
                return EXIT_INVALID
            cfg = parse_config(text, args.config.stem)
    except ConfigError as exc:
        for issue in exc.errors:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_INVALID

    outcome = run(cfg, args.command, args.serial)
    if outcome.code == EXIT_OK or outcome.files:
        out_dir = args.out or Path("diraclab-out") / cfg.name
        try:
            write_outputs(outcome, out_dir)
        except formats.OutputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        outcome.summary += f" -> {out_dir}"
    stream = sys.stdout if outcome.code == EXIT_OK else sys.stderr
    print(outcome.summary, file=stream)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
