"""Command-line entry point: ``deit <subcommand> SCENARIO [options]``.

Every subcommand writes its data files plus ``manifest.json`` into ``--out``.
Exit status is 0 on success, 1 on an error or a failed validity check and 2
when ``--strict`` is given and any warning was raised.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .atomic import structure_report
from .coupling import level_shifts
from .errors import DeitError
from .optics import (fig2_data, group_delay, optical_depth, residual_absorption, susceptibility_map,
                     transparency_window_width, tla_susceptibility, absorption)
from .oracle import compare_spectrum, convergence, group_delay_measurement, transmission_spectrum
from .propagation import propagate, run_filter, tla_transmission, transport_grid
from .scenario import Scenario, bundled_scenario, parse_scenario
from .spin import SpinSector

log = logging.getLogger("deit")

SUBCOMMANDS = ("structure", "coupling-map", "susceptibility", "fig2", "propagate", "filter",
               "oracle", "validate")


def _clean(obj):
    """Make a report JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _num(x) -> str:
    return repr(float(x))


class Run:
    """Collects output files and warnings for one subcommand invocation."""

    def __init__(self, out: Path, scenario: Scenario, scenario_text: str, args: argparse.Namespace):
        self.out = out
        self.scenario = scenario
        self.text = scenario_text
        self.args = args
        self.files: list[Path] = []
        self.warnings: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header: list[str], rows) -> None:
        path = self.out / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([c if isinstance(c, str) else _num(c) for c in row])
        self.files.append(path)

    def write_json(self, name: str, payload) -> None:
        path = self.out / name
        path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n",
                        encoding="utf-8")
        self.files.append(path)

    def warn(self, msg: str) -> None:
        log.warning(msg)
        self.warnings.append(msg)

    def manifest(self, command: str) -> None:
        flags = {k: v for k, v in sorted(vars(self.args).items())
                 if k not in ("scenario", "out", "func", "verbose")}
        payload = {
            "tool": "deit",
            "version": __version__,
            "subcommand": command,
            "inputs": {"scenario_sha256": hashlib.sha256(self.text.encode("utf-8")).hexdigest(),
                       "flags": flags},
            "derived": self.scenario.derived(),
            "validity": self.scenario.validity.status,
            "warnings": self.warnings,
            "outputs": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in self.files},
        }
        (self.out / "manifest.json").write_text(
            json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


# --- subcommands ------------------------------------------------------------------


def cmd_structure(run: Run) -> None:
    s = run.scenario
    report = structure_report(s.states, s.scene.detuning)
    cols = ["state_a", "state_b", "radial_me", "angular_factor", "dipole_ea0"]
    run.write_csv("structure.csv", cols, ([d[c] for c in cols] for d in report["dipoles"]))
    report["c3_scenario_rad_per_us_um3"] = s.c3
    report["c3_relative_to_scenario"] = report["c3_rad_per_us_um3"] / s.c3 if s.c3 else None
    mismatch = abs(report["delta_c_relative_mismatch"])
    if mismatch > 0.05:
        run.warn(f"exchange detuning from the defect table differs from the configured value by {mismatch:.1%}")
    run.write_json("structure.json", report)


def cmd_coupling_map(run: Run) -> None:
    s = run.scenario
    z = np.linspace(0.0, s.medium.L, s.get("grid", "nz"))
    d = np.asarray(s.scene.exchange(z)) / s.medium.gamma_e
    _, dprime = level_shifts(s.scene, z)
    run.write_csv("coupling_map.csv", ["z_um", "D_over_gamma_e", "delta_prime_over_gamma_e"],
                  zip(z, d, np.asarray(dprime) / s.medium.gamma_e))


def _delta_grid(s: Scenario) -> np.ndarray:
    span = s.get("grid", "delta_span")
    return np.linspace(-span, span, s.get("grid", "ndelta"))


def cmd_susceptibility(run: Run) -> None:
    s = run.scenario
    z = np.linspace(0.0, s.medium.L, s.get("grid", "nz"))
    smap = susceptibility_map(s.medium, s.scene, s.sector, z, _delta_grid(s))
    absn = smap.absorption
    ge = s.medium.gamma_e
    rows = ([zi, dj / ge, smap.chi[i, j].real, smap.chi[i, j].imag, absn[i, j]]
            for i, zi in enumerate(smap.z) for j, dj in enumerate(smap.delta))
    run.write_csv("susceptibility.csv",
                  ["z_um", "delta_over_gamma_e", "re_chi", "im_chi", "absorption_sigma0rho_units"], rows)


def cmd_fig2(run: Run) -> None:
    s = run.scenario
    m, sc = s.medium, s.scene
    ge = m.gamma_e
    f = fig2_data(m, sc, s.get("grid", "nz"), s.get("grid", "ndelta"),
                  s.get("grid", "delta_span") / ge, s.get("grid", "inset_z"))
    rows = ([zi, dj / ge, f.deit[i, j], f.tla[i, j]] for i, zi in enumerate(f.z) for j, dj in enumerate(f.delta))
    run.write_csv("fig2_map.csv", ["z_um", "delta_over_gamma_e", "absorption_deit", "absorption_tla"], rows)
    run.write_csv("fig2_inset.csv", ["delta_over_gamma_e", "absorption_deit", "absorption_tla"],
                  zip(f.delta / ge, f.inset_deit, f.inset_tla))
    widths = [transparency_window_width(m, sc, SpinSector(1), z) / ge for z in (0.0, m.L / 4, m.L / 2)]
    run.write_json("fig2.json", {
        "inset_z_um": f.inset_z,
        "tla_peak_sigma0rho_units": float(absorption(m, tla_susceptibility(m, 0.0))),
        "exchange_edge_over_gamma_e": abs(sc.exchange(0.0)) / ge,
        "exchange_centre_over_gamma_e": abs(sc.exchange(m.L / 2)) / ge,
        "window_width_over_gamma_e": {"z=0": widths[0], "z=L/4": widths[1], "z=L/2": widths[2]},
    })


def cmd_propagate(run: Run) -> None:
    s = run.scenario
    pulse = s.photon_train[0]
    snap = run.args.snapshots
    res = propagate(s.medium, s.scene, s.sector, pulse, n_cells=s.get("grid", "transport_cells"),
                    snapshot_every=snap)
    per = {"fate": "transmitted" if s.sector.is_open else "absorbed", "delay_us": res.delay,
           "transmission": res.transmission}
    report = {"per_photon": [per], "totals": res.as_dict(), "sector": [s.sector.n_s, s.sector.n_p]}
    if s.sector.is_open:
        report["quadrature"] = {"delay_us": group_delay(s.medium, s.scene, s.sector),
                                "residual_absorption": residual_absorption(s.medium, s.scene, s.sector)}
    run.write_json("propagate.json", report)
    if snap and res.snapshots:
        z = transport_grid(s.medium, s.scene, s.sector, pulse.detuning, s.get("grid", "transport_cells")).z
        rows = ([t, zi, abs(e[k]) ** 2] for t, e in res.snapshots for k, zi in enumerate(z))
        run.write_csv("envelope.csv", ["t_us", "z_um", "intensity"], rows)


def cmd_filter(run: Run) -> None:
    s = run.scenario
    report = run_filter(s.scene, s.medium, s.photon_train, s.sector.n_s, c6=s.c6,
                        n_cells=s.get("grid", "transport_cells"))
    for w in report.warnings:
        run.warn(w)
    payload = report.as_dict()
    payload["tla_transmission"] = tla_transmission(s.medium)
    run.write_json("filter.json", payload)


def cmd_oracle(run: Run) -> None:
    s = run.scenario
    m, sc = s.medium, s.scene
    nz = run.args.nz or s.get("grid", "oracle_cells")
    ge = m.gamma_e
    deltas = np.linspace(-3.0, 3.0, run.args.ndelta or 61) * ge
    sector = s.sector if s.sector.is_open else SpinSector(1, 0)
    cmp = compare_spectrum(m, sc, deltas, nz, sector)
    run.write_csv("oracle.csv", ["delta", "T_oracle", "T_analytic", "phase_oracle", "phase_analytic"],
                  ([d / ge, abs(o) ** 2, abs(a) ** 2, np.angle(o), np.angle(a)]
                   for d, o, a in zip(deltas, cmp.oracle, cmp.analytic)))
    bl = abs(transmission_spectrum(m, sc, [0.0], nz, SpinSector(0))[0]) ** 2
    conv = convergence(m, sc, deltas[::5], nz, sector)
    duration = run.args.duration or s.get("grid", "oracle_duration")
    meas = group_delay_measurement(m, sc, duration, nz, s.get("grid", "oracle_freqs"), sector)
    t0 = transmission_spectrum(m, sc, [-m.delta], nz, sector)[0]
    payload = {
        "n_z": nz,
        "rms_intensity_error": cmp.rms_intensity_error,
        "beer_lambert": {"oracle": bl, "closed_form": math.exp(-optical_depth(m).intensity)},
        "convergence_delta_T": conv,
        "delay": {"oracle_us": meas.delay, "quadrature_us": group_delay(m, sc, sector, excess=True),
                  "pulse_duration_us": duration},
        "residual_absorption": {"oracle": 1.0 - abs(t0) ** 2,
                                "quadrature": residual_absorption(m, sc, sector)},
    }
    if conv > 0.01:
        run.warn(f"oracle not converged: |t|^2 changes by {conv:.3g} when N_z doubles")
    run.write_json("oracle.json", payload)


def cmd_validate(run: Run) -> None:
    run.write_json("validity.json", run.scenario.validity.as_dict())


COMMANDS = {
    "structure": cmd_structure, "coupling-map": cmd_coupling_map, "susceptibility": cmd_susceptibility,
    "fig2": cmd_fig2, "propagate": cmd_propagate, "filter": cmd_filter, "oracle": cmd_oracle,
    "validate": cmd_validate,
}


def _read_scenario_text(name: str) -> str:
    path = Path(name)
    if path.exists():
        return path.read_text(encoding="utf-8")
    try:
        return bundled_scenario(path.name)
    except FileNotFoundError:
        raise DeitError(f"scenario file {name!r} not found") from None


def _sector_arg(text: str) -> tuple[int, int]:
    try:
        ns, np_ = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected NS,NP") from None
    return ns, np_


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"deit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("scenario", help="scenario file (or the name of a bundled one)")
        p.add_argument("--out", default=None, help="output directory (default: scenario [output] dir)")
        p.add_argument("--grid-nz", type=int, default=None)
        p.add_argument("--grid-ndelta", type=int, default=None)
        p.add_argument("--sector", type=_sector_arg, default=None, metavar="NS,NP")
        p.add_argument("--strict", action="store_true", help="treat warnings as errors (exit 2)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "oracle":
            p.add_argument("--nz", type=int, default=None, help="oracle cells over the medium")
            p.add_argument("--ndelta", type=int, default=None, help="detuning points in [-3, 3] gamma_e")
            p.add_argument("--duration", type=float, default=None, help="pulse rms duration in us")
        if name == "propagate":
            p.add_argument("--snapshots", type=int, default=0, help="write the envelope every N steps")
    return parser


def _execute(args: argparse.Namespace) -> tuple[int, list[Path]]:
    try:
        text = _read_scenario_text(args.scenario)
        scenario = parse_scenario(text)
        if args.grid_nz is not None:
            scenario = scenario.replace("grid", "nz", args.grid_nz)
        if args.grid_ndelta is not None:
            scenario = scenario.replace("grid", "ndelta", args.grid_ndelta)
        if args.sector is not None:
            scenario = scenario.replace("sector", "n_s", args.sector[0]).replace("sector", "n_p", args.sector[1])
        out = Path(args.out if args.out is not None else scenario.get("output", "dir"))
        run = Run(out, scenario, text, args)
        validity = scenario.validity
        for check in validity.checks:
            if check.status != "PASS":
                run.warn(f"validity {check.status}: {check.name} ({check.relation}), margin {check.margin:.3g}")
        COMMANDS[args.command](run)
        run.manifest(args.command)
    except DeitError as exc:
        print(f"deit: error: {exc}", file=sys.stderr)
        return 1, []
    files = run.files + [out / "manifest.json"]
    if validity.status == "FAIL":
        return 1, files
    if args.strict and run.warnings:
        return 2, files
    return 0, files


def run_subcommand(name: str, scenario: str | Path, flags: list[str] | tuple[str, ...] = ()) -> tuple[int, list[Path]]:
    """Run one subcommand in-process; returns the exit status and the files written."""
    args = build_parser().parse_args([name, str(scenario), *flags])
    return _execute(args)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return _execute(args)[0]


if __name__ == "__main__":
    sys.exit(main())
