"""Slow-light transport of probe envelopes and the photon-number filter.

The envelope obeys (d/dt + v_g d/dz) E = i (omega/2)(v_g/c) chi E, whose
characteristics are known exactly through the travel-time map
T(z) = int_0^z dz'/v_g.  The reduced field F = E exp(-K), with
K(z) = i (omega/2c) int_0^z chi dz', is constant along characteristics, so a
step is a pure semi-Lagrangian remap of F from exact departure points.

The field is normalised as a photon flux: |E(z, t)|^2 photons per us cross
z, so the photon count inside the medium is int |E|^2 / v_g dz.
"""

from __future__ import annotations

import dataclasses
import heapq
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.special import erfc

from . import units
from .errors import ClosedSectorError
from .optics import MediumConfig, blockade_distance, group_velocity, susceptibility
from .spin import SpinSector, jpjm_eigenvalue

log = logging.getLogger(__name__)

DEFAULT_CELLS = 1024
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_SUB_X, _SUB_W = np.polynomial.legendre.leggauss(4)
MAX_STORED_PHOTONS = 3


@dataclass(frozen=True)
class Wavepacket:
    """Gaussian single-photon (or weak coherent) input pulse at z = 0.

    ``duration`` is the rms width of the intensity |E|^2 in time; the
    spectral rms width of the intensity is then 1/(2 duration).
    """

    arrival: float
    duration: float
    detuning: float = 0.0
    photons: float = 1.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        if self.photons < 0:
            raise ValueError("photon number must be non-negative")

    @property
    def bandwidth(self) -> float:
        return 1.0 / (2.0 * self.duration)

    def amplitude(self, t):
        s = self.duration
        norm = math.sqrt(self.photons) / (2.0 * math.pi * s * s) ** 0.25
        return norm * np.exp(-((np.asarray(t) - self.arrival) ** 2) / (4.0 * s * s))

    def entered(self, t):
        """Photons that have crossed z = 0 by time t."""
        return 0.5 * self.photons * erfc(-(np.asarray(t) - self.arrival) / (math.sqrt(2.0) * self.duration))


def tla_transmission(medium: MediumConfig, detuning: float = 0.0, length: float | None = None) -> float:
    """Beer-Lambert intensity transmission exp(-kappa z) of the two-level medium."""
    length = medium.L if length is None else length
    lorentz = medium.gamma_e**2 / (medium.gamma_e**2 + detuning**2)
    return math.exp(-medium.kappa * lorentz * length)


class TransportGrid:
    """Precomputed response of one medium sector at one carrier detuning."""

    def __init__(self, medium: MediumConfig, scene, sector: SpinSector, detuning: float = 0.0,
                 n_cells: int = DEFAULT_CELLS):
        if n_cells < 4 or n_cells % 2:
            raise ValueError("the transport grid needs an even number of cells >= 4")
        if jpjm_eigenvalue(sector) == 0:
            raise ClosedSectorError(f"sector {sector.label} is closed; use tla_absorb")
        self.medium, self.scene, self.sector, self.detuning = medium, scene, sector, detuning
        self.n_cells = n_cells
        self.z = np.linspace(0.0, medium.L, n_cells + 1)
        self.dz = self.z[1] - self.z[0]
        self.v = np.asarray(group_velocity(medium, scene, sector, self.z))
        chi = np.asarray(susceptibility(medium, scene, sector, self.z, detuning))
        self.loss_rate = medium.omega / units.C_LIGHT * chi.imag

        # per-cell Gauss-Legendre integrals of 1/v and of the complex rate
        zq = 0.5 * (self.z[:-1, None] + self.z[1:, None]) + 0.5 * self.dz * _GL_X[None, :]
        wq = 0.5 * self.dz * _GL_W
        slow = (1.0 / np.asarray(group_velocity(medium, scene, sector, zq))) @ wq
        rate = (1j * medium.omega / (2.0 * units.C_LIGHT)
                * np.asarray(susceptibility(medium, scene, sector, zq, detuning))) @ wq
        self.T = np.concatenate([[0.0], np.cumsum(slow)])
        self.K = np.concatenate([[0.0], np.cumsum(rate)])
        self._maps: dict[float, tuple] = {}

    @property
    def transit_time(self) -> float:
        return float(self.T[-1])

    def _travel_time(self, z: np.ndarray, k: np.ndarray) -> np.ndarray:
        # T at points z inside cells k
        a = self.z[k]
        h = z - a
        zq = a[:, None] + 0.5 * h[:, None] * (1.0 + _GL_X[None, :])
        inv = 1.0 / np.asarray(group_velocity(self.medium, self.scene, self.sector, zq))
        return self.T[k] + 0.5 * h * (inv @ _GL_W)

    def position_at(self, elapsed) -> np.ndarray:
        """Invert the travel-time map: z reached after ``elapsed`` us from z = 0."""
        target = np.clip(np.atleast_1d(np.asarray(elapsed, dtype=float)), 0.0, self.T[-1])
        k = np.clip(np.searchsorted(self.T, target, side="right") - 1, 0, self.n_cells - 1)
        lo, hi = self.z[k], self.z[k + 1]
        tl, th = self.T[k], self.T[k + 1]
        z = lo + (hi - lo) * np.where(th > tl, (target - tl) / np.where(th > tl, th - tl, 1.0), 0.0)
        for _ in range(50):
            v = np.asarray(group_velocity(self.medium, self.scene, self.sector, z))
            step = (self._travel_time(z, k) - target) * v
            z_new = np.clip(z - step, lo, hi)
            if np.max(np.abs(z_new - z)) <= 1e-13 * self.medium.L:
                z = z_new
                break
            z = z_new
        return z

    def departure(self, dt: float):
        """Stencil weights for remapping F over a time step dt (cached)."""
        key = float(dt)
        if key not in self._maps:
            back = self.T - dt
            inflow = back < 0.0
            zd = self.position_at(np.where(inflow, 0.0, back))
            idx, w = _cubic_stencil(zd, self.dz, self.n_cells)
            self._maps[key] = (inflow, dt - self.T, idx, w)
        return self._maps[key]


def _cubic_stencil(x: np.ndarray, h: float, n_cells: int):
    """Four-point Lagrange stencil indices and weights on a uniform grid 0..n_cells."""
    s = x / h
    base = np.clip(np.floor(s).astype(int) - 1, 0, n_cells - 3)
    idx = base[:, None] + np.arange(4)[None, :]
    w = np.ones(idx.shape)
    for m in range(4):
        for q in range(4):
            if q != m:
                w[:, m] *= (s - (base + q)) / (m - q)
    return idx, w


@lru_cache(maxsize=64)
def transport_grid(medium: MediumConfig, scene, sector: SpinSector, detuning: float = 0.0,
                   n_cells: int = DEFAULT_CELLS) -> TransportGrid:
    return TransportGrid(medium, scene, sector, detuning, n_cells)


@dataclass(frozen=True)
class PulseState:
    """Probe envelope on the transport grid plus the photon ledger."""

    grid: TransportGrid = field(repr=False)
    source: Wavepacket
    envelope: np.ndarray = field(repr=False)
    t: float
    transmitted: float = 0.0
    absorbed: float = 0.0
    # int t |E(L,t)|^2 dt, for the output centroid
    transmitted_moment: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    @property
    def sector(self) -> SpinSector:
        return self.grid.sector

    @property
    def detuning(self) -> float:
        return self.grid.detuning

    @property
    def in_medium(self) -> float:
        return float(simpson(np.abs(self.envelope) ** 2 / self.grid.v, x=self.grid.z))

    @property
    def norm_defect(self) -> float:
        """Entered photons minus (in medium + transmitted + absorbed)."""
        return float(self.source.entered(self.t)) - (self.in_medium + self.transmitted + self.absorbed)


def initial_state(grid: TransportGrid, source: Wavepacket, t: float) -> PulseState:
    """Exact field at time t for an input pulse that started arriving long before."""
    env = source.amplitude(t - grid.T) * np.exp(grid.K)
    # flux that already left through z = L before t is not represented here
    left = float(source.entered(t - grid.T[-1]))
    out_before = left * math.exp(2.0 * grid.K[-1].real)
    return PulseState(grid, source, env, t, transmitted=out_before, absorbed=left - out_before,
                      transmitted_moment=0.0)


def _remap(state: PulseState, s: float) -> np.ndarray:
    g = state.grid
    inflow, lag, idx, w = g.departure(s)
    reduced = state.envelope * np.exp(-g.K)
    new = np.einsum("ij,ij->i", reduced[idx], w)
    new = np.where(inflow, state.source.amplitude(state.t + lag), new)
    return new * np.exp(g.K)


def step_transport(state: PulseState, dt: float, medium: MediumConfig | None = None,
                   scene=None) -> PulseState:
    """Advance the envelope by dt along exact characteristics.

    The remap is exact in time for any dt, so no stability bound applies;
    outflow and absorption are accumulated by Gauss-Legendre quadrature over
    the step.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    g = state.grid
    if medium is not None and medium != g.medium:
        raise ValueError("state was built for a different medium")
    flux_out = moment = lost = 0.0
    for x, wt in zip(_SUB_X, _SUB_W):
        s = 0.5 * dt * (1.0 + x)
        e = _remap(state, s)
        i_l = abs(e[-1]) ** 2
        flux_out += 0.5 * dt * wt * i_l
        moment += 0.5 * dt * wt * i_l * (state.t + s)
        lost += 0.5 * dt * wt * simpson(g.loss_rate * np.abs(e) ** 2, x=g.z)
    return dataclasses.replace(
        state, envelope=_remap(state, dt), t=state.t + dt,
        transmitted=state.transmitted + flux_out,
        absorbed=state.absorbed + lost,
        transmitted_moment=state.transmitted_moment + moment,
    )


def tla_absorb(state: PulseState | Wavepacket, medium: MediumConfig,
               length: float | None = None) -> dict:
    """Beer-Lambert passage of a pulse through a closed-sector (two-level) medium.

    Returns the photon ledger after the pulse has fully crossed ``length``.
    """
    source = state.source if isinstance(state, PulseState) else state
    trans = tla_transmission(medium, source.detuning, length)
    return {"transmission": trans, "transmitted": source.photons * trans,
            "absorbed": source.photons * (1.0 - trans)}


@dataclass(frozen=True)
class PropagationResult:
    sector: SpinSector
    photons_in: float
    transmitted: float
    absorbed: float
    in_medium: float
    delay: float
    transit_time: float
    max_norm_defect: float
    steps: int
    snapshots: tuple = ()

    @property
    def transmission(self) -> float:
        return self.transmitted / self.photons_in

    def as_dict(self) -> dict:
        d = {k: v for k, v in dataclasses.asdict(self).items() if k not in ("snapshots", "sector")}
        d["sector"] = [self.sector.n_s, self.sector.n_p]
        return d


def propagate(medium: MediumConfig, scene, sector: SpinSector, pulse: Wavepacket,
              n_cells: int = DEFAULT_CELLS, dt: float | None = None,
              snapshot_every: int = 0) -> PropagationResult:
    """Run a single pulse through the medium until it has left.

    The delay is the transmitted-flux centroid minus the input centroid.
    Closed sectors go through the two-level branch (delay reported as L/c).
    """
    if jpjm_eigenvalue(sector) == 0:
        out = tla_absorb(pulse, medium)
        return PropagationResult(sector, pulse.photons, out["transmitted"], out["absorbed"], 0.0,
                                 medium.L / units.C_LIGHT, medium.L / units.C_LIGHT, 0.0, 0)
    g = transport_grid(medium, scene, sector, pulse.detuning, n_cells)
    _guard_bandwidth(medium, scene, sector, pulse)
    t0 = pulse.arrival - 8.0 * pulse.duration
    t1 = pulse.arrival + g.transit_time + 8.0 * pulse.duration
    if dt is None:
        dt = pulse.duration / 40.0
    n_steps = int(math.ceil((t1 - t0) / dt))
    state = initial_state(g, pulse, t0)
    worst = abs(state.norm_defect)
    snaps = []
    for n in range(n_steps):
        state = step_transport(state, dt)
        worst = max(worst, abs(state.norm_defect))
        if snapshot_every and n % snapshot_every == 0:
            snaps.append((state.t, state.envelope.copy()))
    delay = (state.transmitted_moment / state.transmitted - pulse.arrival) if state.transmitted > 0 else math.nan
    return PropagationResult(sector, pulse.photons, state.transmitted, state.absorbed, state.in_medium,
                             delay, g.transit_time, worst / max(pulse.photons, 1e-300), n_steps,
                             tuple(snaps))


def min_deit_linewidth(medium: MediumConfig, scene, sector: SpinSector, n: int = 2001) -> float:
    z = np.linspace(0.0, medium.L, n)
    d2 = np.abs(np.asarray(scene.exchange(z))) ** 2
    return float(d2.min()) * jpjm_eigenvalue(sector) / abs(complex(medium.gamma_e, medium.delta))


def _guard_bandwidth(medium, scene, sector, pulse) -> str | None:
    limit = 0.5 * min_deit_linewidth(medium, scene, sector)
    if pulse.bandwidth >= limit:
        msg = (f"pulse bandwidth {pulse.bandwidth:.4g} rad/us exceeds half the narrowest "
               f"transparency window ({limit:.4g} rad/us)")
        log.warning(msg)
        return msg
    return None


# --- photon-number filter --------------------------------------------------------


@dataclass(frozen=True)
class PhotonOutcome:
    index: int
    arrival: float
    fate: str
    sector: tuple[int, int]
    jpjm: int
    transmission: float
    delay_us: float | None
    exit_time: float | None
    residual_loss: float
    group_velocity_centre: float | None


@dataclass
class FilterReport:
    n_s: int
    per_photon: list[PhotonOutcome]
    final_sector: SpinSector
    warnings: list[str]
    blockade: dict | None = None

    @property
    def totals(self) -> dict:
        fates = [p.fate for p in self.per_photon]
        return {
            "photons_in": len(fates),
            "transmitted": fates.count("transmitted"),
            "absorbed": fates.count("absorbed"),
            "stored": fates.count("stored"),
            "expected_residual_loss": sum(p.residual_loss for p in self.per_photon),
        }

    def as_dict(self) -> dict:
        return {
            "n_s": self.n_s,
            "per_photon": [dataclasses.asdict(p) for p in self.per_photon],
            "totals": self.totals,
            "final_sector": [self.final_sector.n_s, self.final_sector.n_p],
            "warnings": list(self.warnings),
            "blockade": self.blockade,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def run_filter(scene, medium: MediumConfig, photon_train: list[Wavepacket], n_s: int,
               c6: float | None = None, n_cells: int = DEFAULT_CELLS, until: float | None = None,
               simulate: bool = True) -> FilterReport:
    """Sequential photon-number filter with classical sector tracking.

    A photon whose centroid reaches z = 0 while fewer than n_s photons are
    stored is admitted and flips one spin; it propagates with the group
    velocity of the sector it entered and releases the spin when it exits.
    A photon arriving to a closed sector is absorbed by the two-level medium.
    A stored photon lost to Rydberg decay would leave its spin flipped; that
    probability is reported as ``residual_loss`` while the photon's fate is
    recorded as its dominant outcome.

    With ``simulate`` each admitted photon is run through the transport
    solver; otherwise transmission and delay come from quadrature.
    """
    arrivals = [p.arrival for p in photon_train]
    if arrivals != sorted(arrivals):
        raise ValueError("photon train must be time-ordered")
    sector = SpinSector(n_s, 0)
    exits: list[tuple[float, int]] = []
    outcomes: list[PhotonOutcome] = []
    warnings: list[str] = []
    admitted: list[tuple[float, float, TransportGrid]] = []
    cache: dict[tuple, PropagationResult] = {}

    for i, pulse in enumerate(photon_train):
        while exits and exits[0][0] <= pulse.arrival:
            heapq.heappop(exits)
            sector = sector.release()
        if sector.is_open:
            jpjm = sector.jpjm
            msg = _guard_bandwidth(medium, scene, sector, pulse)
            if msg and msg not in warnings:
                warnings.append(msg)
            key = (jpjm, pulse.duration, pulse.detuning)
            if key not in cache:
                if simulate:
                    cache[key] = propagate(medium, scene, sector, dataclasses.replace(pulse, arrival=0.0, photons=1.0),
                                           n_cells=n_cells)
                else:
                    cache[key] = _quadrature_result(medium, scene, sector, pulse)
            res = cache[key]
            exit_time = pulse.arrival + res.delay
            heapq.heappush(exits, (exit_time, i))
            admitted.append((pulse.arrival, exit_time,
                             transport_grid(medium, scene, sector, pulse.detuning, n_cells)))
            fate = "stored" if until is not None and exit_time > until else "transmitted"
            v_mid = float(group_velocity(medium, scene, sector, medium.L / 2.0))
            outcomes.append(PhotonOutcome(i, pulse.arrival, fate, (sector.n_s, sector.n_p), jpjm,
                                          res.transmission, res.delay, exit_time,
                                          1.0 - res.transmission, v_mid))
            sector = sector.admit()
        else:
            trans = tla_transmission(medium, pulse.detuning)
            outcomes.append(PhotonOutcome(i, pulse.arrival, "absorbed", (sector.n_s, sector.n_p), 0,
                                          trans, None, None, 0.0, None))
    while exits and (until is None or exits[0][0] <= until):
        heapq.heappop(exits)
        sector = sector.release()

    report = FilterReport(n_s, outcomes, sector, warnings)
    report.blockade = _train_blockade(scene, medium, c6, admitted)
    if report.blockade["status"] != "PASS":
        warnings.append(report.blockade["reason"])
    return report


def _quadrature_result(medium, scene, sector, pulse) -> PropagationResult:
    from .optics import group_delay, residual_absorption
    tau = group_delay(medium, scene, sector)
    p = residual_absorption(dataclasses.replace(medium, delta=-pulse.detuning), scene, sector)
    return PropagationResult(sector, 1.0, math.exp(-p), 1.0 - math.exp(-p), 0.0, tau, tau, 0.0, 0)


def _train_blockade(scene, medium, c6, spans) -> dict:
    """Worst-case blockade check over the times when photons are stored together."""
    times = sorted({t for a, e, _ in spans for t in (a, 0.5 * (a + e))})
    worst = {"status": "PASS", "reason": "", "max_simultaneous": 0, "min_separation_um": None}
    for t in times:
        pos = [float(g.position_at(t - a)[0]) for a, e, g in spans if a <= t < e]
        rep = blockade_check(scene, medium, c6, pos)
        if len(pos) > worst["max_simultaneous"]:
            worst["max_simultaneous"] = len(pos)
        if rep["min_separation_um"] is not None and (
                worst["min_separation_um"] is None or rep["min_separation_um"] < worst["min_separation_um"]):
            worst["min_separation_um"] = rep["min_separation_um"]
        if _rank(rep["status"]) > _rank(worst["status"]):
            worst.update(status=rep["status"], reason=rep["reason"], time_us=t)
    return worst


def _rank(status: str) -> int:
    return {"PASS": 0, "WARN": 1}.get(status, 2)


def blockade_check(scene, medium: MediumConfig, c6: float | None, photon_positions) -> dict:
    """Compare stored-photon separations with the local van der Waals blockade distance.

    Separations below d_b, or more than three photons in the medium, are
    flagged WARN.  A single photon always passes.
    """
    z = sorted(float(p) for p in photon_positions)
    report = {"status": "PASS", "reason": "", "n_photons": len(z), "min_separation_um": None,
              "pairs": []}
    if len(z) < 2:
        return report
    reasons = []
    if len(z) > MAX_STORED_PHOTONS:
        reasons.append(f"{len(z)} photons stored at once (more than {MAX_STORED_PHOTONS})")
    if c6 is None:
        reasons.append("C6 not supplied, blockade distance not evaluated")
    else:
        r = np.linalg.norm(scene.separation(np.array(z)), axis=-1)
        db = np.asarray(blockade_distance(scene, medium, c6, r))
        for a in range(len(z)):
            for b in range(a + 1, len(z)):
                sep = z[b] - z[a]
                limit = float(max(db[a], db[b]))
                report["pairs"].append({"z_a": z[a], "z_b": z[b], "separation_um": sep,
                                        "blockade_um": limit, "ok": sep >= limit})
                if sep < limit:
                    reasons.append(f"photons at z={z[a]:.3g} and {z[b]:.3g} um closer than d_b={limit:.3g} um")
    report["min_separation_um"] = min(b - a for a, b in zip(z, z[1:]))
    if reasons:
        report["status"] = "WARN"
        report["reason"] = "; ".join(reasons)
    return report
