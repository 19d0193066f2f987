"""Physical constants and the internal unit system.

Lengths are in micrometres, times in microseconds and every frequency or
rate is an angular quantity in rad/us.  Conversions happen once, at the
edges (config parsing, CSV output), so no 2*pi ever leaks into the physics.
"""

from __future__ import annotations

import math

from scipy import constants as _sc

TWO_PI = 2.0 * math.pi

# speed of light: 1 m/s == 1 um/us
C_LIGHT = _sc.c

HBAR = _sc.hbar
EPS0 = _sc.epsilon_0
E_CHARGE = _sc.e
BOHR_RADIUS = _sc.physical_constants["Bohr radius"][0]
ELECTRON_MASS = _sc.m_e
ATOMIC_MASS = _sc.atomic_mass
RYDBERG_HZ = _sc.physical_constants["Rydberg constant times c in Hz"][0]

# e*a0 in C*m
EA0 = E_CHARGE * BOHR_RADIUS


def hz(f: float) -> float:
    """Cyclic frequency in Hz -> angular frequency in rad/us."""
    return TWO_PI * f * 1e-6


def khz(f: float) -> float:
    return hz(f * 1e3)


def mhz(f: float) -> float:
    return hz(f * 1e6)


def ghz(f: float) -> float:
    return hz(f * 1e9)


def to_hz(w: float) -> float:
    """Angular frequency in rad/us -> cyclic frequency in Hz."""
    return w / TWO_PI * 1e6


def to_mhz(w: float) -> float:
    return to_hz(w) * 1e-6


def dipole_product_to_c3(p1_ea0: float, p2_ea0: float) -> float:
    """p1*p2/(4 pi eps0 hbar) for dipoles in e*a0, returned in rad/us*um^3."""
    si = p1_ea0 * p2_ea0 * EA0**2 / (4.0 * math.pi * EPS0 * HBAR)  # rad/s * m^3
    return si * 1e18 * 1e-6
