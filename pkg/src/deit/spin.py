"""Collective spin algebra and stored-photon bookkeeping.

n_s spin atoms prepared in |u> form a symmetric Dicke state with J = n_s/2.
Every admitted probe photon lowers M_J by one, so the sector (n_s, n_p) fixes
the eigenvalue of J+J- that sets the exchange strength seen by the next
photon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import quad

if TYPE_CHECKING:
    from .optics import MediumConfig


@dataclass(frozen=True)
class SpinSector:
    n_s: int
    n_p: int = 0

    def __post_init__(self):
        if self.n_s < 0 or self.n_p < 0:
            raise ValueError("spin and photon counts must be non-negative")

    @property
    def J(self) -> float:
        return self.n_s / 2.0

    @property
    def M(self) -> float:
        return self.J - self.n_p

    @property
    def is_open(self) -> bool:
        return self.n_p < self.n_s

    @property
    def jpjm(self) -> int:
        return jpjm_eigenvalue(self)

    def admit(self) -> "SpinSector":
        return SpinSector(self.n_s, self.n_p + 1)

    def release(self) -> "SpinSector":
        if self.n_p == 0:
            raise ValueError("no stored photon to release")
        return SpinSector(self.n_s, self.n_p - 1)

    @property
    def label(self) -> str:
        return f"({self.n_s},{self.n_p})"


def ladder_elements(J: float, M: float) -> tuple[float, float]:
    """Amplitudes of J-|J,M> and J+|J,M>: sqrt((J+M)(J-M+1)), sqrt((J-M)(J+M+1))."""
    j, m = Fraction(J).limit_denominator(2), Fraction(M).limit_denominator(2)
    if j < 0 or (2 * j).denominator != 1 or abs(m) > j or (j - m).denominator != 1:
        raise ValueError(f"invalid spin state |J={J}, M={M}>")
    lower = math.sqrt((j + m) * (j - m + 1))
    raise_ = math.sqrt((j - m) * (j + m + 1))
    return lower, raise_


def spin_matrices(J: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense (J+, J-, Jz) in the basis M = J, J-1, ..., -J."""
    dim = int(round(2 * J)) + 1
    m = J - np.arange(dim)
    jp = np.zeros((dim, dim))
    for k in range(1, dim):
        jp[k - 1, k] = math.sqrt((J - m[k]) * (J + m[k] + 1))
    return jp, jp.T.copy(), np.diag(m)


def jpjm_eigenvalue(sector: SpinSector) -> int:
    """(n_s - n_p)(n_p + 1), zero once the sector is closed."""
    if sector.n_p >= sector.n_s:
        return 0
    return (sector.n_s - sector.n_p) * (sector.n_p + 1)


@dataclass(frozen=True)
class SpinBalance:
    stored: int
    overflow: int
    J: float

    @property
    def J_z(self) -> float:
        return self.J - self.stored


def photon_spin_balance(flux_in: int, flux_out: int, J: float) -> SpinBalance:
    """Stored excitations J - J_z from the photon flux through the medium.

    Photons beyond the 2J spin flips available cannot be stored and are
    reported as overflow, to be absorbed by the two-level medium.
    """
    if flux_in < 0 or flux_out < 0:
        raise ValueError("photon fluxes must be non-negative")
    if flux_out > flux_in:
        raise ValueError("more photons left the medium than entered it")
    capacity = int(round(2 * J))
    net = flux_in - flux_out
    stored = min(net, capacity)
    return SpinBalance(stored=stored, overflow=net - stored, J=J)


def mean_square_exchange(scene, length: float, weighting: str = "uniform") -> float:
    """Average of |D(z)|^2 over [0, length].

    ``uniform`` is the plain spatial mean; ``transit`` weights each point by
    the time a slow pulse spends there (proportional to 1/|D|^2), which
    yields the harmonic mean.
    """
    def d2(z):
        return float(np.abs(scene.exchange(z)) ** 2)

    pts = _breakpoints(scene, length)
    if weighting == "uniform":
        val, _ = quad(d2, 0.0, length, points=pts, epsrel=1e-10, limit=200)
        return val / length
    if weighting == "transit":
        inv, _ = quad(lambda z: 1.0 / d2(z), 0.0, length, points=pts, epsrel=1e-10, limit=200)
        return length / inv
    raise ValueError(f"unknown weighting {weighting!r}")


def _breakpoints(scene, length):
    z_s = getattr(scene, "z_s", None)
    return [z_s] if z_s is not None and 0.0 < z_s < length else None


def stored_photon_fraction(medium: "MediumConfig", scene, sector: SpinSector,
                           weighting: str = "uniform") -> float:
    """Ratio of photons in the field to stored spin excitations, 2J <D^2>/eta^2 N."""
    if medium.eta2N <= 0.0:
        raise ValueError("the medium has no collective coupling")
    return 2.0 * sector.J * mean_square_exchange(scene, medium.L, weighting) / medium.eta2N
