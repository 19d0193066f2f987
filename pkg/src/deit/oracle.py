"""Brute-force single-excitation model used to check the analytic optics.

The probe field, the optical coherence and the spin-flipped Rydberg coherence
are discretised on a grid of cells along the medium.  Amplitudes are
normalised so that |amplitude|^2 / c integrated over z is a probability
(photon flux units for the field).  The per-cell collective coupling is
sqrt(eta^2 N), which makes the local absorption coefficient independent of
the cell size; the two-level Beer-Lambert limit calibrates that choice.

Two routes are provided.  ``build_hamiltonian`` assembles the full sparse
generator on a periodic box for structural checks and short-time evolution.
Spectra, delays and pulse bookkeeping use the stationary scattering
solution of the same cell equations, frequency by frequency, and build
pulses by superposition; the cell equations are solved as a coupled sparse
system without eliminating any amplitude.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_simpson, simpson
from scipy.sparse.linalg import splu

from . import units
from .errors import MeasurementError, ResolutionError
from .optics import MediumConfig, group_delay, transmission_amplitude
from .spin import SpinSector, jpjm_eigenvalue

log = logging.getLogger(__name__)

MIN_CELLS = 64
# largest resonant field absorption allowed across one cell
MAX_CELL_ABSORPTION = 0.25


@dataclass(frozen=True)
class ExcitationBasis:
    """Index layout: photon cells over the whole box, then e- and r-coherences in the medium."""

    n_z: int
    n_box: int
    first_medium_cell: int

    @property
    def dim(self) -> int:
        return self.n_box + 2 * self.n_z

    @property
    def photon(self) -> slice:
        return slice(0, self.n_box)

    @property
    def excited(self) -> slice:
        return slice(self.n_box, self.n_box + self.n_z)

    @property
    def rydberg(self) -> slice:
        return slice(self.n_box + self.n_z, self.dim)

    @property
    def photon_in_medium(self) -> slice:
        return slice(self.first_medium_cell, self.first_medium_cell + self.n_z)


def _check_cells(medium: MediumConfig, n_z: int) -> float:
    if n_z < MIN_CELLS:
        raise ResolutionError(f"oracle needs at least {MIN_CELLS} cells, got {n_z}")
    dz = medium.L / n_z
    if medium.sigma0 * medium.rho_bar * dz > MAX_CELL_ABSORPTION:
        raise ResolutionError(
            f"cell size {dz:.3g} um too coarse for absorption length {1 / (medium.sigma0 * medium.rho_bar):.3g} um"
        )
    return dz


def build_hamiltonian(medium: MediumConfig, scene, n_z: int, sector: SpinSector = SpinSector(1),
                      detuning: float = 0.0, buffer: float = 2.0, c: float | None = None):
    """Sparse single-excitation generator H with i d(psi)/dt = H psi.

    Parameters
    ----------
    buffer : float
        Vacuum added on each side of the medium, in units of L.  Zero gives a
        ring made of the medium alone.
    c : float, optional
        Light speed override (um/us).  Only useful for structural checks on
        short time scales; physics results use the true value.

    Returns
    -------
    (scipy.sparse.csr_matrix, ExcitationBasis)
    """
    dz = _check_cells(medium, n_z)
    c = units.C_LIGHT if c is None else c
    n_buf = int(round(buffer * n_z))
    basis = ExcitationBasis(n_z, n_z + 2 * n_buf, n_buf)
    nb = basis.n_box

    # periodic fourth-order central difference; -i c D is Hermitian
    offsets = {1: 8.0, -1: -8.0, 2: -1.0, -2: 1.0}
    rows, cols, vals = [], [], []
    m = np.arange(nb)
    for off, coef in offsets.items():
        rows.append(m)
        cols.append((m + off) % nb)
        vals.append(np.full(nb, -1j * c * coef / (12.0 * dz)))

    zc = (np.arange(n_z) + 0.5) * dz
    g = math.sqrt(medium.eta2N)
    G = np.abs(np.asarray(scene.exchange(zc), dtype=float)) * math.sqrt(jpjm_eigenvalue(sector))
    ph = basis.first_medium_cell + np.arange(n_z)
    ex = basis.excited.start + np.arange(n_z)
    ry = basis.rydberg.start + np.arange(n_z)
    rows += [ex, ry, ph, ex, ex, ry]
    cols += [ex, ry, ex, ph, ry, ex]
    vals += [
        np.full(n_z, -detuning - 1j * medium.gamma_e),
        np.full(n_z, -(detuning + medium.delta) - 1j * medium.gamma_r),
        np.full(n_z, -g, dtype=complex),
        np.full(n_z, -g, dtype=complex),
        -G.astype(complex),
        -G.astype(complex),
    ]
    H = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(basis.dim, basis.dim))
    H.sum_duplicates()
    return H, basis


# --- stationary scattering solution ----------------------------------------------


class StationarySolver:
    """Cell-equation scattering solution for unit flux amplitude entering at z = 0.

    Unknowns are the field at the N_z + 1 cell edges and the two coherences
    at the N_z cell centres.  The field equation uses the cell-averaged field
    (a box scheme), for which the discrete flux balance is exact.
    """

    def __init__(self, medium: MediumConfig, scene, n_z: int = 512, sector: SpinSector = SpinSector(1)):
        self.dz = _check_cells(medium, n_z)
        self.medium, self.scene, self.sector, self.n_z = medium, scene, sector, n_z
        self.z_edges = np.linspace(0.0, medium.L, n_z + 1)
        zc = 0.5 * (self.z_edges[:-1] + self.z_edges[1:])
        self.g = math.sqrt(medium.eta2N)
        self.G = np.abs(np.asarray(scene.exchange(zc), dtype=float)) * math.sqrt(jpjm_eigenvalue(sector))

    @property
    def dim(self) -> int:
        return 3 * self.n_z + 1

    def _index(self):
        k = np.arange(self.n_z)
        return 3 * k, 3 * k + 1, 3 * k + 2, 3 * k + 3  # E_k, P_k, S_k, E_{k+1}

    def matrix(self, delta: float) -> sp.csc_matrix:
        m, n, c, dz = self.medium, self.n_z, units.C_LIGHT, self.dz
        e0, p, s, e1 = self._index()
        one = np.ones(n)
        rows, cols, vals = [np.array([0])], [np.array([0])], [np.array([1.0 + 0j])]
        # field rows (one per cell, stored at index of E_{k+1})
        r = e1
        rows += [r, r, r]
        cols += [e1, e0, p]
        vals += [(c / dz - 0.5j * delta) * one, (-c / dz - 0.5j * delta) * one, -1j * self.g * one]
        # optical coherence
        rows += [p, p, p, p]
        cols += [p, e0, e1, s]
        vals += [(1j * delta - m.gamma_e) * one, 0.5j * self.g * one, 0.5j * self.g * one, 1j * self.G]
        # Rydberg coherence; decoupled cells are pinned to zero
        diag = np.where(self.G == 0.0, 1.0, 1j * (delta + m.delta) - m.gamma_r)
        rows += [s, s]
        cols += [s, p]
        vals += [diag * one, 1j * self.G]
        return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.dim, self.dim))

    def solve(self, delta: float) -> np.ndarray:
        b = np.zeros(self.dim, dtype=complex)
        b[0] = 1.0
        return splu(self.matrix(delta)).solve(b)

    def split(self, x: np.ndarray):
        """(field at edges, optical coherence, Rydberg coherence) views of a solution."""
        e0, p, s, _ = self._index()
        return x[np.append(e0, 3 * self.n_z)], x[p], x[s]

    def transmission(self, delta: float, vacuum_phase: bool = False) -> complex:
        t = complex(self.solve(delta)[-1])
        return t if vacuum_phase else t * np.exp(-1j * delta * self.medium.L / units.C_LIGHT)


def transmission_spectrum(medium: MediumConfig, scene, deltas, n_z: int = 512,
                          sector: SpinSector = SpinSector(1)) -> np.ndarray:
    """Oracle field transmission t(Delta) with the vacuum propagation phase removed."""
    solver = StationarySolver(medium, scene, n_z, sector)
    return np.array([solver.transmission(float(d)) for d in np.atleast_1d(deltas)])


@dataclass(frozen=True)
class SpectrumComparison:
    delta: np.ndarray
    oracle: np.ndarray
    analytic: np.ndarray

    @property
    def rms_intensity_error(self) -> float:
        return float(np.sqrt(np.mean((np.abs(self.oracle) ** 2 - np.abs(self.analytic) ** 2) ** 2)))


def compare_spectrum(medium: MediumConfig, scene, deltas, n_z: int = 512,
                     sector: SpinSector = SpinSector(1)) -> SpectrumComparison:
    deltas = np.asarray(deltas, dtype=float)
    ora = transmission_spectrum(medium, scene, deltas, n_z, sector)
    ana = np.asarray(transmission_amplitude(medium, scene, sector, deltas))
    return SpectrumComparison(deltas, ora, ana)


# --- pulses by frequency superposition ---------------------------------------------


@dataclass(frozen=True)
class PulseRun:
    """Time series of a Gaussian pulse through the discretised medium.

    All populations are probabilities for a single input photon.
    """

    t: np.ndarray
    flux_in: np.ndarray
    flux_out: np.ndarray
    photons: np.ndarray   # field inside the medium
    excited: np.ndarray   # optical coherence
    stored: np.ndarray    # Rydberg coherence, i.e. J - J_z
    loss_rate: np.ndarray
    arrival: float
    vacuum_transit: float

    @property
    def entered(self) -> np.ndarray:
        return cumulative_simpson(self.flux_in, x=self.t, initial=0.0)

    @property
    def transmitted(self) -> np.ndarray:
        return cumulative_simpson(self.flux_out, x=self.t, initial=0.0)

    @property
    def absorbed(self) -> np.ndarray:
        return cumulative_simpson(self.loss_rate, x=self.t, initial=0.0)

    @property
    def bookkeeping_residual(self) -> np.ndarray:
        """Net boundary flux minus (in-medium excitations + absorbed), relative to t[0]."""
        inside = self.photons + self.excited + self.stored
        return (self.entered - self.transmitted) - (inside - inside[0]) - self.absorbed

    @property
    def total_norm(self) -> np.ndarray:
        """Input still to come + inside + transmitted + absorbed (should stay at 1)."""
        to_come = self.entered[-1] - self.entered
        return to_come + self.photons + self.excited + self.stored + self.transmitted + self.absorbed

    @property
    def output_centroid(self) -> float:
        total = simpson(self.flux_out, x=self.t)
        if not total > 1e-9:
            raise MeasurementError(f"transmitted fraction {total:.3g} too small for a centroid")
        return float(simpson(self.t * self.flux_out, x=self.t) / total)

    @property
    def delay(self) -> float:
        """Output centroid minus the free-propagation centroid."""
        return self.output_centroid - self.arrival - self.vacuum_transit


def pulse_run(medium: MediumConfig, scene, duration: float = 20.0, n_z: int = 512,
              n_freq: int = 256, carrier: float = 0.0, sector: SpinSector = SpinSector(1),
              n_times: int = 4001, spectral_extent: float = 6.0) -> PulseRun:
    """Propagate a Gaussian pulse (intensity rms ``duration``) by frequency superposition.

    The pulse is synthesised from ``n_freq`` stationary solutions on a
    uniform grid covering +-``spectral_extent`` e-folds of the amplitude
    spectrum.  The superposition is periodic in time, so the grid spacing
    is checked against the simulated window.
    """
    solver = StationarySolver(medium, scene, n_z, sector)
    sigma = duration
    half = spectral_extent / sigma
    eps = np.linspace(-half, half, n_freq)
    de = eps[1] - eps[0]
    t0 = 8.0 * sigma
    tau = group_delay(medium, scene, sector, excess=True) if jpjm_eigenvalue(sector) else 0.0
    t_end = t0 + tau + medium.L / units.C_LIGHT + 8.0 * sigma
    if 2.0 * math.pi / de < 2.0 * t_end:
        raise ResolutionError("frequency grid too coarse: superposition would wrap in time")

    norm = 1.0 / (2.0 * math.pi * sigma**2) ** 0.25
    weights = de / (2.0 * math.pi) * norm * 2.0 * sigma * math.sqrt(math.pi) \
        * np.exp(-(sigma * eps) ** 2) * np.exp(1j * eps * t0)

    sols = np.array([solver.solve(carrier + e) for e in eps]).T  # (dim, n_freq)
    e_idx = np.append(np.arange(0, 3 * n_z, 3), 3 * n_z)
    p_idx = np.arange(1, 3 * n_z, 3)
    s_idx = np.arange(2, 3 * n_z, 3)

    t = np.linspace(0.0, t_end, n_times)
    phase = weights[:, None] * np.exp(-1j * np.outer(eps, t))  # (n_freq, n_times)
    E = sols[e_idx] @ phase
    P = sols[p_idx] @ phase
    S = sols[s_idx] @ phase
    c, dz = units.C_LIGHT, solver.dz
    ebar = 0.5 * (E[:-1] + E[1:])
    photons = dz / c * np.sum(np.abs(ebar) ** 2, axis=0)
    excited = dz / c * np.sum(np.abs(P) ** 2, axis=0)
    stored = dz / c * np.sum(np.abs(S) ** 2, axis=0)
    loss = 2.0 * dz / c * (medium.gamma_e * np.sum(np.abs(P) ** 2, axis=0)
                           + medium.gamma_r * np.sum(np.abs(S) ** 2, axis=0))
    return PulseRun(t, np.abs(E[0]) ** 2, np.abs(E[-1]) ** 2, photons, excited, stored, loss,
                    t0, medium.L / c)


@dataclass(frozen=True)
class DelayMeasurement:
    delay: float
    transmitted: float
    run: PulseRun


def group_delay_measurement(medium: MediumConfig, scene, duration: float = 20.0, n_z: int = 512,
                            n_freq: int = 256, sector: SpinSector = SpinSector(1)) -> DelayMeasurement:
    """Centroid delay of a narrowband Gaussian pulse relative to free propagation."""
    run = pulse_run(medium, scene, duration, n_z, n_freq, sector=sector)
    return DelayMeasurement(run.delay, float(run.transmitted[-1]), run)


def convergence(medium: MediumConfig, scene, deltas, n_z: int = 512,
                sector: SpinSector = SpinSector(1)) -> float:
    """Largest change of |t|^2 on ``deltas`` when N_z is doubled."""
    a = np.abs(transmission_spectrum(medium, scene, deltas, n_z, sector)) ** 2
    b = np.abs(transmission_spectrum(medium, scene, deltas, 2 * n_z, sector)) ** 2
    return float(np.max(np.abs(a - b)))
