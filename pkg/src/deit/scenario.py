"""Scenario files: sectioned ``key = value unit`` text with unit checking.

Example::

    [medium]
    density = 1e12 cm^-3
    gamma_e = 3 MHz            # cyclic units are converted to rad/us
    gamma_r = 1e-4 * gamma_e   # relative to a key of the same section
    [coupling]
    detuning = 10 * rabi
    z_s = 0.5 * medium.length  # or to a key of another section

Physical quantities must carry a unit.  Cyclic frequencies (Hz, kHz, MHz,
GHz) are multiplied by 2 pi; ``rad/s`` and ``rad/us`` are taken as angular.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

from . import units
from .atomic import DEFAULT_DEFECTS, ExchangeStates, QuantumDefectTable
from .coupling import CouplingScene, ValidityReport, solve_spin_offset, validity_report
from .errors import ConfigurationError, ScenarioError
from .optics import MediumConfig
from .propagation import Wavepacket
from .spin import SpinSector

# dimension exponents: (length, angular frequency, time)
LENGTH = (1, 0, 0)
FREQ = (0, 1, 0)
TIME = (0, 0, 1)
DENSITY = (-3, 0, 0)
C3 = (3, 1, 0)
C6 = (6, 1, 0)

_BASE_UNITS = {
    "m": (1e6, LENGTH), "cm": (1e4, LENGTH), "mm": (1e3, LENGTH), "um": (1.0, LENGTH),
    "µm": (1.0, LENGTH), "nm": (1e-3, LENGTH),
    "s": (1e6, TIME), "ms": (1e3, TIME), "us": (1.0, TIME), "µs": (1.0, TIME), "ns": (1e-3, TIME),
    "Hz": (units.hz(1.0), FREQ), "kHz": (units.khz(1.0), FREQ), "MHz": (units.mhz(1.0), FREQ),
    "GHz": (units.ghz(1.0), FREQ), "rad/s": (1e-6, FREQ), "rad/us": (1.0, FREQ),
}

_CANONICAL = {LENGTH: "um", FREQ: "rad/us", TIME: "us", DENSITY: "um^-3",
              C3: "rad/us*um^3", C6: "rad/us*um^6"}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY_RE = re.compile(rf"^({_NUMBER})\s*(\S.*)?$")
_REF_RE = re.compile(rf"^(?:({_NUMBER})\s*\*\s*)?([A-Za-z_]\w*(?:\.[A-Za-z_]\w*)?)$")


def parse_unit(text: str) -> tuple[float, tuple[int, int, int]]:
    """Conversion factor to internal units and dimension of a unit expression like 'GHz*um^3'."""
    factor = 1.0
    dims = [0, 0, 0]
    for token in text.replace(" ", "").split("*"):
        name, _, power = token.partition("^")
        if name not in _BASE_UNITS:
            raise ValueError(f"unknown unit {name!r}")
        p = int(power) if power else 1
        f, d = _BASE_UNITS[name]
        factor *= f**p
        for i in range(3):
            dims[i] += d[i] * p
    return factor, tuple(dims)


@dataclass(frozen=True)
class Field:
    kind: str  # quantity, int, float, str, vector, list
    dim: tuple | None = None


Q = lambda dim: Field("quantity", dim)  # noqa: E731

SCHEMA: dict[str, dict[str, Field]] = {
    "structure": {"species": Field("str"), "n": Field("int"), "n_prime": Field("int"),
                  "defects_file": Field("str")},
    "medium": {"density": Q(DENSITY), "length": Q(LENGTH), "width": Q(LENGTH), "gamma_e": Q(FREQ),
               "gamma_r": Q(FREQ), "delta": Q(FREQ), "wavelength": Q(LENGTH)},
    "coupling": {"c3": Q(C3), "rabi": Q(FREQ), "detuning": Q(FREQ), "x_s": Q(LENGTH),
                 "peak_exchange": Q(FREQ), "z_s": Q(LENGTH), "cloud_size": Q(LENGTH),
                 "dipole_ri": Field("vector"), "dipole_du": Field("vector"), "dipole_ratio": Field("float")},
    "sector": {"n_s": Field("int"), "n_p": Field("int")},
    "grid": {"nz": Field("int"), "ndelta": Field("int"), "delta_span": Q(FREQ),
             "transport_cells": Field("int"), "oracle_cells": Field("int"), "oracle_freqs": Field("int"),
             "oracle_duration": Q(TIME), "inset_z": Q(LENGTH)},
    "filter": {"arrivals": Field("list", TIME), "duration": Q(TIME), "carrier": Q(FREQ), "c6": Q(C6)},
    "output": {"dir": Field("str")},
}

REQUIRED = {"medium": ("density", "length", "gamma_e"), "coupling": ("rabi", "detuning")}

DEFAULTS_TEXT = """\
[structure]
species = Rb
n = 82
n_prime = 86

[medium]
width = 2 um
gamma_r = 0 Hz
delta = 0 Hz
wavelength = 795 nm

[coupling]
z_s = 0.5 * medium.length
cloud_size = 0 um
dipole_ri = 0 1 0
dipole_du = 0 1 0

[sector]
n_s = 1
n_p = 0

[grid]
nz = 256
ndelta = 256
delta_span = 5 * medium.gamma_e
transport_cells = 1024
oracle_cells = 512
oracle_freqs = 256
oracle_duration = 20 us
inset_z = 12 um

[filter]
arrivals = 0 us
duration = 5 us
carrier = 0 Hz

[output]
dir = out
"""


@dataclass
class _Raw:
    text: str
    line: int | None


def _read_sections(text: str) -> dict[str, dict[str, _Raw]]:
    sections: dict[str, dict[str, _Raw]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"malformed section header {raw.strip()!r}", lineno)
            current = line[1:-1].strip()
            if current not in SCHEMA:
                raise ScenarioError(f"unknown section [{current}]", lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if current is None:
            raise ScenarioError("key outside of any section", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in SCHEMA[current]:
            raise ScenarioError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current] and sections[current][key].line is not None:
            raise ScenarioError(f"duplicate key {key!r} in [{current}]", lineno)
        if not value:
            raise ScenarioError(f"empty value for {key!r}", lineno)
        sections[current][key] = _Raw(value, lineno)
    return sections


class _Resolver:
    def __init__(self, raw: dict[str, dict[str, _Raw]]):
        self.raw = raw
        self.done: dict[tuple[str, str], object] = {}
        self.active: set[tuple[str, str]] = set()

    def value(self, section: str, key: str):
        ident = (section, key)
        if ident in self.done:
            return self.done[ident]
        item = self.raw[section][key]
        if ident in self.active:
            raise ScenarioError(f"circular reference through {section}.{key}", item.line)
        self.active.add(ident)
        try:
            val = self._convert(section, key, item)
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"{section}.{key}: {exc}", item.line) from None
        finally:
            self.active.discard(ident)
        self.done[ident] = val
        return val

    def _convert(self, section, key, item: _Raw):
        spec = SCHEMA[section][key]
        text = item.text
        if spec.kind == "str":
            return text
        if spec.kind == "int":
            if not re.fullmatch(r"[-+]?\d+", text):
                raise ValueError(f"expected an integer, got {text!r}")
            return int(text)
        if spec.kind == "float":
            return float(text)
        if spec.kind == "vector":
            parts = text.replace(",", " ").split()
            if len(parts) != 3:
                raise ValueError("expected three components")
            return tuple(float(p) for p in parts)
        if spec.kind == "list":
            return tuple(self._quantity(section, p.strip(), spec.dim, item.line) for p in text.split(","))
        return self._quantity(section, text, spec.dim, item.line)

    def _quantity(self, section, text, dim, line):
        m = _REF_RE.match(text)
        if m:
            scale = float(m.group(1)) if m.group(1) else 1.0
            ref = m.group(2)
            sec, _, key = ref.rpartition(".")
            sec = sec or section
            if sec not in self.raw or key not in self.raw[sec]:
                raise ScenarioError(f"reference to undefined key {ref!r}", line)
            target = SCHEMA[sec][key]
            if target.kind != "quantity" or target.dim != dim:
                raise ScenarioError(f"reference {ref!r} has incompatible dimension", line)
            return scale * self.value(sec, key)
        m = _QUANTITY_RE.match(text)
        if not m:
            raise ScenarioError(f"cannot parse quantity {text!r}", line)
        number, unit = m.groups()
        if not unit:
            raise ScenarioError(f"missing unit in {text!r}", line)
        factor, got = parse_unit(unit.strip())
        if got != dim:
            raise ScenarioError(f"unit {unit.strip()!r} has the wrong dimension", line)
        return float(number) * factor


def _format(spec: Field, value) -> str:
    if spec.kind == "str":
        return str(value)
    if spec.kind == "int":
        return str(int(value))
    if spec.kind == "float":
        return repr(float(value))
    if spec.kind == "vector":
        return " ".join(repr(float(v)) for v in value)
    if spec.kind == "list":
        return ", ".join(f"{float(v)!r} {_CANONICAL[spec.dim]}" for v in value)
    return f"{float(value)!r} {_CANONICAL[spec.dim]}"


class Scenario:
    """Fully resolved scenario in internal units, with builders for the model objects."""

    def __init__(self, values: dict[str, dict[str, object]], lines: dict | None = None,
                 source_text: str = ""):
        self.values = values
        self.lines = lines or {}
        self.source_text = source_text
        self._validate()

    def __eq__(self, other) -> bool:
        return isinstance(other, Scenario) and self.values == other.values

    def __repr__(self) -> str:
        return f"Scenario({self.values!r})"

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def _line(self, section, key=None):
        return self.lines.get((section, key)) or self.lines.get((section, None))

    def _validate(self):
        for section, keys in REQUIRED.items():
            for key in keys:
                if key not in self.values.get(section, {}):
                    raise ScenarioError(f"missing required key {section}.{key}", self._line(section))
        coupling = self.values["coupling"]
        given = [k for k in ("x_s", "peak_exchange") if k in coupling]
        if len(given) != 1:
            raise ScenarioError("exactly one of coupling.x_s or coupling.peak_exchange is required",
                                self._line("coupling"))
        for section, builder in (("medium", lambda: self.medium), ("sector", lambda: self.sector),
                                 ("coupling", lambda: self.scene), ("filter", lambda: self.photon_train)):
            try:
                builder()
            except (ValueError, ConfigurationError) as exc:
                raise ScenarioError(f"[{section}] {exc}", self._line(section)) from None

    @cached_property
    def medium(self) -> MediumConfig:
        m = self.values["medium"]
        return MediumConfig(rho_bar=m["density"], L=m["length"], w=m["width"], gamma_e=m["gamma_e"],
                            gamma_r=m["gamma_r"], delta=m["delta"], lambda_probe=m["wavelength"])

    @cached_property
    def defects(self) -> QuantumDefectTable:
        path = self.get("structure", "defects_file")
        return QuantumDefectTable.from_file(path) if path else DEFAULT_DEFECTS

    @cached_property
    def states(self) -> ExchangeStates:
        s = self.values["structure"]
        return ExchangeStates.build(s["species"], s["n"], s["n_prime"], self.defects)

    @cached_property
    def c3(self) -> float:
        given = self.get("coupling", "c3")
        return given if given is not None else abs(self.states.c3())

    @cached_property
    def scene(self) -> CouplingScene:
        c = self.values["coupling"]
        m = self.values["medium"]
        scene = CouplingScene(
            c3=self.c3, rabi=c["rabi"], detuning=c["detuning"], x_s=c.get("x_s", 1.0), z_s=c["z_s"],
            length=m["length"], width=m["width"], cloud_size=c["cloud_size"],
            dipole_ri=c["dipole_ri"], dipole_du=c["dipole_du"], dipole_ratio=c.get("dipole_ratio"),
        )
        if "peak_exchange" in c:
            scene = scene.replace(x_s=solve_spin_offset(scene, c["peak_exchange"]))
        return scene

    @cached_property
    def sector(self) -> SpinSector:
        s = self.values["sector"]
        return SpinSector(s["n_s"], s["n_p"])

    @cached_property
    def photon_train(self) -> list[Wavepacket]:
        f = self.values["filter"]
        return [Wavepacket(t, f["duration"], f["carrier"]) for t in sorted(f["arrivals"])]

    @property
    def c6(self) -> float | None:
        return self.get("filter", "c6")

    @cached_property
    def validity(self) -> ValidityReport:
        return validity_report(self.scene, self.medium, self.sector)

    def replace(self, section: str, key: str, value) -> "Scenario":
        values = {s: dict(kv) for s, kv in self.values.items()}
        values[section][key] = value
        return Scenario(values, self.lines, self.source_text)

    def serialize(self) -> str:
        out = []
        for section, fields in SCHEMA.items():
            present = self.values.get(section, {})
            if not present:
                continue
            out.append(f"[{section}]")
            for key, spec in fields.items():
                if key in present:
                    out.append(f"{key} = {_format(spec, present[key])}")
            out.append("")
        return "\n".join(out)

    def derived(self) -> dict:
        d = dict(self.medium.derived())
        d.update({"c3_rad_per_us_um3": self.c3, "x_s_um": self.scene.x_s,
                  "exchange_edge_over_gamma_e": abs(self.scene.exchange(0.0)) / self.medium.gamma_e,
                  "exchange_peak_over_gamma_e": abs(self.scene.exchange(self.scene.z_s)) / self.medium.gamma_e})
        return d


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; errors carry the offending line number."""
    raw = _read_sections(DEFAULTS_TEXT)
    for item in (i for s in raw.values() for i in s.values()):
        item.line = None
    user = _read_sections(text)
    lines = {}
    for section, keys in user.items():
        raw.setdefault(section, {}).update(keys)
        header = next((i.line for i in keys.values()), None)
        lines[(section, None)] = header
        for key, item in keys.items():
            lines[(section, key)] = item.line
    for section in SCHEMA:
        raw.setdefault(section, {})
    resolver = _Resolver(raw)
    values = {s: {k: resolver.value(s, k) for k in keys} for s, keys in raw.items()}
    return Scenario(values, lines, text)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def bundled_scenario(name: str = "paper_sec3.scenario") -> str:
    """Text of a scenario shipped with the package."""
    return resources.files("deit").joinpath(f"data/{name}").read_text("utf-8")
