"""Sector-resolved probe susceptibility and the observables derived from it.

The medium is a line of two-level-plus-Rydberg atoms whose Rydberg coherence
is coupled to the collective spin by the exchange rate D(z).  In sector
(n_s, n_p) the coupling strength squared is |D(z)|^2 times the J+J-
eigenvalue; a vanishing eigenvalue leaves a plain two-level absorber.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import units
from .coupling import level_shifts
from .errors import ClosedSectorError, ConfigurationError
from .spin import SpinSector, jpjm_eigenvalue

log = logging.getLogger(__name__)

QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class MediumConfig:
    """Probe medium parameters.

    Attributes
    ----------
    rho_bar : float
        Atomic density in um^-3.
    L, w : float
        Medium length and transverse width (probe waist) in um.
    gamma_e : float
        Optical coherence decay, half the excited-state decay rate (rad/us).
    gamma_r : float
        Rydberg coherence decay (rad/us).
    delta : float
        Two-photon offset of the exchange resonance (rad/us).
    lambda_probe : float
        Probe wavelength in um.
    """

    rho_bar: float
    L: float
    w: float
    gamma_e: float
    gamma_r: float = 0.0
    delta: float = 0.0
    lambda_probe: float = 0.795

    def __post_init__(self):
        if self.rho_bar < 0 or self.L <= 0 or self.w < 0:
            raise ValueError("density must be non-negative and the length positive")
        if self.gamma_e <= 0 or self.gamma_r < 0:
            raise ValueError("decay rates must be positive (gamma_e) and non-negative (gamma_r)")
        if self.lambda_probe <= 0:
            raise ValueError("probe wavelength must be positive")
        if self.gamma_r > 0.1 * self.gamma_e:
            log.warning("gamma_r/gamma_e = %.3g exceeds 0.1", self.gamma_r / self.gamma_e)

    @property
    def omega(self) -> float:
        """Probe carrier angular frequency (rad/us)."""
        return units.TWO_PI * units.C_LIGHT / self.lambda_probe

    @property
    def sigma0(self) -> float:
        """Resonant absorption cross-section 3 lambda^2 / 2pi (um^2)."""
        return 3.0 * self.lambda_probe**2 / units.TWO_PI

    @property
    def eta2N(self) -> float:
        """Collective probe coupling squared, c sigma0 rho gamma_e (rad^2/us^2)."""
        return units.C_LIGHT * self.sigma0 * self.rho_bar * self.gamma_e

    @property
    def kappa(self) -> float:
        """Intensity absorption coefficient of the two-level medium (1/um)."""
        return 2.0 * self.sigma0 * self.rho_bar

    @property
    def atom_number(self) -> float:
        return self.rho_bar * self.L * math.pi * self.w**2

    def derived(self) -> dict:
        amp, inten = optical_depth(self)
        return {"omega_rad_per_us": self.omega, "sigma0_um2": self.sigma0,
                "eta2N_rad2_per_us2": self.eta2N, "kappa_per_um": self.kappa,
                "od_amplitude": amp, "od_intensity": inten, "atom_number": self.atom_number}


def _coupling_sq(scene, sector: SpinSector, z) -> np.ndarray:
    return np.abs(np.asarray(scene.exchange(z), dtype=float)) ** 2 * jpjm_eigenvalue(sector)


def tla_susceptibility(medium: MediumConfig, delta_probe):
    """Two-level Lorentzian (2/omega) i eta^2 N / (gamma_e - i Delta)."""
    d = np.asarray(delta_probe, dtype=float)
    return 2.0 / medium.omega * 1j * medium.eta2N / (medium.gamma_e - 1j * d)


def susceptibility(medium: MediumConfig, scene, sector: SpinSector, z, delta_probe,
                   include_dipolar_shift: bool = False):
    """Probe susceptibility chi(z, Delta); z and Delta broadcast against each other.

    With ``include_dipolar_shift`` the two-photon offset picks up the local
    dipolar level shift delta'(z).
    """
    z = np.asarray(z, dtype=float)
    dp = np.asarray(delta_probe, dtype=float)
    g2 = _coupling_sq(scene, sector, z)
    two_photon = medium.delta
    if include_dipolar_shift:
        two_photon = medium.delta + np.asarray(level_shifts(scene, z)[1])
    optical = medium.gamma_e - 1j * dp
    rydberg = medium.gamma_r - 1j * (dp + two_photon)
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = 2.0 / medium.omega * 1j * medium.eta2N * rydberg / (optical * rydberg + g2)
    tla = tla_susceptibility(medium, dp)
    chi = np.where(g2 == 0.0, tla, chi)
    return chi if np.ndim(chi) else complex(chi)


def absorption(medium: MediumConfig, chi):
    """Absorption (omega/2c) Im chi in units of sigma0 * rho_bar."""
    return medium.omega / (2.0 * units.C_LIGHT) * np.imag(chi) / (medium.sigma0 * medium.rho_bar)


@dataclass(frozen=True)
class SusceptibilityMap:
    z: np.ndarray
    delta: np.ndarray
    chi: np.ndarray  # shape (len(z), len(delta))
    sector: SpinSector
    medium: MediumConfig

    @property
    def absorption(self) -> np.ndarray:
        return absorption(self.medium, self.chi)


def susceptibility_map(medium: MediumConfig, scene, sector: SpinSector, z, delta,
                       include_dipolar_shift: bool = False) -> SusceptibilityMap:
    z = np.asarray(z, dtype=float)
    delta = np.asarray(delta, dtype=float)
    chi = susceptibility(medium, scene, sector, z[:, None], delta[None, :], include_dipolar_shift)
    return SusceptibilityMap(z, delta, np.asarray(chi), sector, medium)


def _require_open(sector: SpinSector) -> int:
    jpjm = jpjm_eigenvalue(sector)
    if jpjm == 0:
        raise ClosedSectorError(
            f"sector {sector.label} is closed; the probe sees a two-level absorber (use tla_absorb)"
        )
    return jpjm


def group_velocity(medium: MediumConfig, scene, sector: SpinSector, z, approximate: bool = False):
    """Dark-state group velocity in um/us.

    The exact form c / (1 + eta^2 N / (|D|^2 jpjm)) is used unless
    ``approximate`` asks for the slow-light limit c |D|^2 jpjm / eta^2 N.
    """
    _require_open(sector)
    g2 = _coupling_sq(scene, sector, z)
    if approximate:
        v = units.C_LIGHT * g2 / medium.eta2N
    else:
        v = units.C_LIGHT * g2 / (g2 + medium.eta2N)
    return v if np.ndim(v) else float(v)


def _z_points(scene, L):
    z_s = getattr(scene, "z_s", None)
    return [z_s] if z_s is not None and 0.0 < z_s < L else None


def group_delay(medium: MediumConfig, scene, sector: SpinSector, z0: float = 0.0,
                z1: float | None = None, excess: bool = False) -> float:
    """Transit time int dz / v_g in us; ``excess`` subtracts the vacuum transit."""
    _require_open(sector)
    z1 = medium.L if z1 is None else z1
    jpjm = jpjm_eigenvalue(sector)

    def slowness(z):
        g2 = abs(scene.exchange(z)) ** 2 * jpjm
        extra = medium.eta2N / g2
        return (extra if excess else 1.0 + extra) / units.C_LIGHT

    pts = [p for p in (_z_points(scene, medium.L) or []) if z0 < p < z1] or None
    val, _ = quad(slowness, z0, z1, points=pts, epsrel=QUAD_RTOL, epsabs=0.0, limit=400)
    return val


def path_integral_chi(medium: MediumConfig, scene, sector: SpinSector, delta_probe: float,
                      z0: float = 0.0, z1: float | None = None,
                      include_dipolar_shift: bool = False) -> complex:
    """int chi(z, Delta) dz over [z0, z1] by adaptive quadrature."""
    z1 = medium.L if z1 is None else z1
    pts = [p for p in (_z_points(scene, medium.L) or []) if z0 < p < z1] or None

    def part(f):
        val, _ = quad(
            lambda z: f(susceptibility(medium, scene, sector, z, delta_probe, include_dipolar_shift)),
            z0, z1, points=pts, epsrel=QUAD_RTOL, epsabs=0.0, limit=400,
        )
        return val

    return complex(part(np.real), part(np.imag))


def transmission_amplitude(medium: MediumConfig, scene, sector: SpinSector, delta_probe,
                           include_dipolar_shift: bool = False):
    """Stationary field transmission t(Delta) = exp(i (omega/2c) int chi dz).

    The vacuum propagation phase is not included.
    """
    k = medium.omega / (2.0 * units.C_LIGHT)
    d = np.atleast_1d(np.asarray(delta_probe, dtype=float))
    out = np.array([
        np.exp(1j * k * path_integral_chi(medium, scene, sector, x, include_dipolar_shift=include_dipolar_shift))
        for x in d
    ])
    return out if np.ndim(delta_probe) else complex(out[0])


def residual_absorption(medium: MediumConfig, scene, sector: SpinSector) -> float:
    """Absorption probability int (omega/c) Im chi(z, -delta) dz of a resonant photon."""
    _require_open(sector)
    chi_int = path_integral_chi(medium, scene, sector, -medium.delta)
    return medium.omega / units.C_LIGHT * chi_int.imag


def deit_linewidth(scene, medium: MediumConfig, R):
    """|D(R)|^2 / |gamma_e + i delta| at distance R (um) from the spin, dipoles normal to R."""
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise ValueError("distance must be positive")
    d = scene.c3 * scene.rabi / scene.detuning / R**3
    out = d**2 / abs(complex(medium.gamma_e, medium.delta))
    return out if np.ndim(out) else float(out)


class OpticalDepth(NamedTuple):
    amplitude: float
    intensity: float


def optical_depth(medium: MediumConfig) -> OpticalDepth:
    """(sigma0 rho L, 2 sigma0 rho L): the field and intensity attenuation exponents."""
    amp = medium.sigma0 * medium.rho_bar * medium.L
    return OpticalDepth(amp, 2.0 * amp)


def transparency_window_width(medium: MediumConfig, scene, sector: SpinSector, z: float,
                              eps: float = 0.1) -> float:
    """Width of the detuning interval around -delta where Im chi < eps * Im chi_TLA(0)."""
    threshold = eps * tla_susceptibility(medium, 0.0).imag
    centre = -medium.delta

    def excess(d):
        return complex(susceptibility(medium, scene, sector, z, d)).imag - threshold

    if excess(centre) >= 0.0:
        return 0.0
    scale = medium.gamma_e + abs(complex(scene.exchange(z))) * math.sqrt(jpjm_eigenvalue(sector))
    offsets = np.geomspace(1e-9 * scale, 1e3 * scale, 2000)
    edges = []
    for sign in (1.0, -1.0):
        vals = np.array([excess(centre + sign * o) for o in offsets])
        hit = np.flatnonzero(vals >= 0.0)
        if hit.size == 0:
            return math.inf
        k = hit[0]
        lo = 0.0 if k == 0 else offsets[k - 1]
        edges.append(brentq(lambda o: excess(centre + sign * o), lo, offsets[k], xtol=1e-14 * scale))
    return edges[0] + edges[1]


def blockade_prefactor(scene, medium: MediumConfig, c6: float) -> float:
    """R-independent factor in d_b = factor * |R|."""
    broad = abs(complex(medium.gamma_e, medium.delta))
    return (c6 * broad * scene.detuning**2 / (scene.c3**2 * scene.rabi**2)) ** (1.0 / 6.0)


def blockade_distance(scene, medium: MediumConfig, c6: float | None, R):
    """Van der Waals blockade distance (C6 / dw_DEIT(R))^(1/6) in um."""
    if c6 is None:
        raise ConfigurationError(
            "blockade distance needs the van der Waals coefficient C6 of the |r> pair state; "
            "supply it in the scenario ([filter] c6 = ... GHz*um^6)"
        )
    if c6 <= 0:
        raise ConfigurationError("C6 must be positive")
    R = np.asarray(R, dtype=float)
    direct = (c6 / deit_linewidth(scene, medium, R)) ** (1.0 / 6.0)
    scaled = blockade_prefactor(scene, medium, c6) * np.abs(R)
    if not np.allclose(direct, scaled, rtol=1e-9, atol=0.0):
        raise ArithmeticError("blockade distance forms disagree")
    return direct if np.ndim(direct) else float(direct)


def implied_c6(scene, medium: MediumConfig, prefactor: float) -> float:
    """C6 that makes the blockade prefactor equal ``prefactor``."""
    broad = abs(complex(medium.gamma_e, medium.delta))
    return prefactor**6 * scene.c3**2 * scene.rabi**2 / (broad * scene.detuning**2)


@dataclass(frozen=True)
class Fig2Data:
    z: np.ndarray
    delta: np.ndarray
    deit: np.ndarray  # absorption, jpjm = 1, shape (nz, ndelta)
    tla: np.ndarray   # absorption, jpjm = 0
    inset_z: float
    inset_deit: np.ndarray
    inset_tla: np.ndarray


def fig2_data(medium: MediumConfig, scene, nz: int = 256, ndelta: int = 256,
              span: float = 5.0, inset_z: float = 12.0) -> Fig2Data:
    """Absorption map over (z, Delta) for an open single-spin sector and the closed sector.

    ``span`` is the half-range of Delta in units of gamma_e.
    """
    z = np.linspace(0.0, medium.L, nz)
    d = np.linspace(-span, span, ndelta) * medium.gamma_e
    open_ = susceptibility_map(medium, scene, SpinSector(1, 0), z, d)
    closed = susceptibility_map(medium, scene, SpinSector(0, 0), z, d)
    ins_o = absorption(medium, susceptibility(medium, scene, SpinSector(1, 0), inset_z, d))
    ins_c = absorption(medium, susceptibility(medium, scene, SpinSector(0, 0), inset_z, d))
    return Fig2Data(z, d, open_.absorption, closed.absorption, inset_z, ins_o, ins_c)
