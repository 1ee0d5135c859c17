"""Flat ``key = value`` scenario files.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
A ``[section]`` line is accepted as a visual divider and carries no meaning,
so every key is global and may appear only once. Lists are comma separated.
Every problem in a file is reported, each with its line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Optional

KINDS = ("evolve", "klein", "sweep", "spectrum", "ion", "orbits")


class ConfigError(ValueError):
    def __init__(self, errors: list["Issue"]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class Issue:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}" if self.line else self.message


# --- value types ---------------------------------------------------------------


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _int(text: str) -> int:
    return int(text)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    parse.options = options
    return parse


def _float_list(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",")]
    if not items or any(not t for t in items):
        raise ValueError("expected a comma-separated list of numbers")
    return [_float(t) for t in items]


def _values_or_default(text: str):
    return "default" if text == "default" else _float_list(text)


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _power_of_two(v):
    return None if v >= 8 and v & (v - 1) == 0 else "must be a power of two >= 8"


def _sign(v):
    return None if v in (-1, 1) else "must be +1 or -1"


def _ascending(v):
    ok = all(b > a for a, b in zip(v, v[1:])) and v[0] >= 0
    return None if ok else "must be non-negative and strictly ascending"


def _at_least(n):
    return lambda v: None if v >= n else f"must be at least {n}"


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    kinds: tuple[str, ...]
    default: Any = None
    required: bool = False
    check: Optional[Callable[[Any], Optional[str]]] = None
    fmt: Callable[[Any], str] = str


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_list(v) -> str:
    return v if isinstance(v, str) else ", ".join(repr(float(x)) for x in v)


_GRID_KINDS = ("evolve", "klein", "sweep", "orbits", "ion")
_PACKET_KINDS = ("evolve", "klein", "sweep", "orbits", "ion")
_DIRAC_KINDS = ("evolve", "klein", "sweep", "spectrum", "orbits")
_KLEIN_KINDS = ("klein", "sweep")


def _f(kinds, default=None, required=False, check=None) -> Key:
    return Key(_float, kinds, default, required, check, _fmt_float)


SCHEMA: dict[str, Key] = {
    "kind": Key(_choice(*KINDS), KINDS, required=True),
    # Dirac parameters
    "m": _f(_DIRAC_KINDS, 1.0, check=_non_negative),
    "c": _f(_DIRAC_KINDS, 1.0, check=_positive),
    "hbar": _f(_DIRAC_KINDS, 1.0, check=_positive),
    "q_sign": Key(_int, _DIRAC_KINDS, 1, check=_sign),
    "v_sc": _f(_DIRAC_KINDS, 0.0),
    "v_el": _f(_DIRAC_KINDS, 0.0),
    "v_mag": _f(_DIRAC_KINDS, 0.0),
    "v_ps": _f(_DIRAC_KINDS, 0.0),
    # grid
    "n_points": Key(_int, _GRID_KINDS + ("spectrum",), required=True, check=_power_of_two),
    "x_min": _f(_GRID_KINDS + ("spectrum",), required=True),
    "x_max": _f(_GRID_KINDS + ("spectrum",), required=True),
    # packet
    "x0": _f(_PACKET_KINDS, required=True),
    "p0": _f(_PACKET_KINDS, required=True),
    "width": _f(_PACKET_KINDS, required=True, check=_positive),
    "branch": Key(_choice("positive", "negative", "upper"), ("evolve", "orbits"), "positive"),
    # time stepping
    "t_final": _f(("evolve", "klein", "sweep", "orbits"), required=True, check=_positive),
    "dt": _f(("evolve", "klein", "sweep", "orbits", "ion"), required=True, check=_positive),
    "frame_stride": Key(_int, ("evolve", "klein", "sweep"), 1, check=_at_least(1)),
    "sample_every": Key(_int, ("orbits",), 100, check=_at_least(1)),
    "solver": Key(_choice("split", "comoving"), ("evolve",) + _KLEIN_KINDS, "split"),
    # scattering
    "transmission_method": Key(_choice("branch", "spatial"), _KLEIN_KINDS, "branch"),
    "x_cut": _f(_KLEIN_KINDS),
    "sweep_parameter": Key(_choice("m", "v_el"), ("sweep",), "m"),
    "sweep_values": Key(_values_or_default, ("sweep",), "default", fmt=_fmt_list),
    "workers": Key(_int, ("sweep",), 1, check=_at_least(1)),
    # spectra
    "spectrum_kind": Key(_choice("scalar", "jc", "anti_jc"), ("spectrum",), required=True),
    "k": Key(_int, ("spectrum",), 20, check=_at_least(1)),
    "omega": _f(("spectrum",), check=_positive),
    # ion emulator (frequencies in kHz, times in ms, lengths in Delta)
    "eta": _f(("ion",), required=True, check=_positive),
    "Omega_b": _f(("ion",), 0.0, check=_non_negative),
    "Omega_r": _f(("ion",), 0.0, check=_non_negative),
    "phi_b": _f(("ion",), math.pi / 2),
    "phi_r": _f(("ion",), -math.pi / 2),
    "Omega_2": _f(("ion",), 0.0, check=_non_negative),
    "Omega_carrier": _f(("ion",), 0.0, check=_non_negative),
    "Omega_sc": _f(("ion",), 0.0, check=_non_negative),
    "omega_trap": _f(("ion",), 1000.0, check=_positive),
    "Delta": _f(("ion",), 1.0, check=_positive),
    "n_max": Key(_int, ("ion", "spectrum"), 64, check=_at_least(4)),
    "ancilla": Key(_choice("plus", "minus", "full"), ("ion",), "plus"),
    "t_samples": Key(_float_list, ("ion",), required=True, check=_ascending, fmt=_fmt_list),
}

# keys whose presence depends on another key's value
_SPECTRUM_NEEDS = {
    "scalar": ("n_points", "x_min", "x_max", "v_sc"),
    "jc": ("omega",),
    "anti_jc": ("omega",),
}


@dataclass
class ScenarioConfig:
    kind: str
    values: dict[str, Any]
    lines: dict[str, int] = field(default_factory=dict, compare=False)
    name: str = field(default="config", compare=False)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)


def parse_config(text: str, name: str = "config") -> ScenarioConfig:
    """Parse and validate; raises :class:`ConfigError` holding every issue found."""
    issues: list[Issue] = []
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body or (body.startswith("[") and body.endswith("]")):
            continue
        if "=" not in body:
            issues.append(Issue(lineno, f"expected 'key = value', got {body!r}"))
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            issues.append(Issue(lineno, "missing key before '='"))
            continue
        if key in raw:
            issues.append(Issue(lineno, f"duplicate key '{key}' (lines {raw[key][1]} and {lineno})"))
            continue
        raw[key] = (value, lineno)

    kind = None
    if "kind" in raw:
        value, lineno = raw["kind"]
        try:
            kind = SCHEMA["kind"].parse(value)
        except ValueError as exc:
            issues.append(Issue(lineno, f"kind: {exc}"))

    values: dict[str, Any] = {}
    for key, (value, lineno) in raw.items():
        spec = SCHEMA.get(key)
        if spec is None:
            issues.append(Issue(lineno, f"unknown key '{key}'"))
            continue
        if kind is not None and kind not in spec.kinds:
            issues.append(Issue(lineno, f"key '{key}' does not apply to kind '{kind}'"))
            continue
        try:
            parsed = spec.parse(value)
        except ValueError as exc:
            expected = getattr(spec.parse, "__name__", "value").strip("_")
            issues.append(Issue(lineno, f"{key}: cannot read {value!r} ({expected}): {exc}"))
            continue
        if spec.check and (problem := spec.check(parsed)):
            issues.append(Issue(lineno, f"{key} = {value}: {problem}"))
            continue
        values[key] = parsed

    if kind is None:
        if "kind" not in raw:
            required = sorted(k for k, s in SCHEMA.items() if s.required and k != "kind")
            issues.append(Issue(0, "missing required key 'kind' (one of " + ", ".join(KINDS) + ")"))
            issues.append(Issue(0, "keys required by some kind: " + ", ".join(required)))
        raise ConfigError(issues)

    needed = [k for k, s in SCHEMA.items() if s.required and kind in s.kinds]
    if kind == "spectrum":
        needed = [k for k in needed if k not in ("n_points", "x_min", "x_max")]
        needed += list(_SPECTRUM_NEEDS.get(values.get("spectrum_kind"), ()))
    missing = [k for k in needed if k not in raw]
    if missing:
        issues.append(Issue(0, f"missing required keys for kind '{kind}': {', '.join(missing)}"))

    for key, spec in SCHEMA.items():
        if kind in spec.kinds and key not in values and key not in raw and spec.default is not None:
            values[key] = spec.default

    _cross_checks(kind, values, raw, issues)
    if issues:
        raise ConfigError(sorted(issues, key=lambda i: i.line))
    return ScenarioConfig(kind, values, {k: ln for k, (_, ln) in raw.items()}, name)


def _cross_checks(kind, values, raw, issues):
    def line(key):
        return raw.get(key, ("", 0))[1]

    if "x_min" in values and "x_max" in values and values["x_max"] <= values["x_min"]:
        issues.append(Issue(line("x_max"), "x_max must exceed x_min"))
    if kind in ("klein", "sweep") and values.get("v_el") == 0 and values.get("sweep_parameter") != "v_el":
        issues.append(Issue(line("v_el"), "klein scenarios need a nonzero v_el"))
    if kind == "ion" and values.get("t_samples") and "dt" in values and values["dt"] > values["t_samples"][-1]:
        issues.append(Issue(line("dt"), "dt exceeds the last sample time"))


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text: ``kind`` first, then keys in schema order."""
    out = [f"kind = {cfg.kind}"]
    for key, spec in SCHEMA.items():
        if key != "kind" and key in cfg.values:
            out.append(f"{key} = {spec.fmt(cfg.values[key])}")
    return "\n".join(out) + "\n"


def preset_names() -> list[str]:
    root = resources.files("diraclab") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    path = resources.files("diraclab") / "presets" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError([Issue(0, f"unknown preset '{name}' (available: {', '.join(preset_names())})")])
    return path.read_text(encoding="utf-8")


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_text(name), name)
