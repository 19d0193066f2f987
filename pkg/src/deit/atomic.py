"""Quantum-defect Rydberg structure and dipole matrix elements.

Energies follow the Rydberg formula with the species' reduced-mass Rydberg
constant.  Radial integrals use the Kaulakys quasiclassical expression by
default; a Numerov integration of the Coulomb radial equation at the
quantum-defect energy (Coulomb approximation) is available as an independent
route.  Angular factors come from the Wigner-Eckart reduction for an
(l, s=1/2) j-coupled electron.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.integrate import quad

from . import units
from .errors import ConfigurationError, SelectionRuleError

log = logging.getLogger(__name__)

SPECIES_MASS_AMU = {
    "H": 1.00782503207,
    "Li": 7.0160034366,
    "Na": 22.9897692820,
    "K": 38.9637064864,
    "Rb": 86.909180527,
    "Cs": 132.905451961,
}

_L_LETTERS = "SPDFGHIK"


def _half(x) -> Fraction:
    f = Fraction(x).limit_denominator(2)
    if f.denominator not in (1, 2):
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return f


class QuantumDefectTable:
    """Quantum defects keyed by (species, l, j).

    Rows with ``j=None`` hold the l-level value, used whenever no
    j-resolved entry exists.
    """

    def __init__(self, rows: Iterable[tuple[str, int, float | None, float]] = ()):
        self._rows: dict[tuple[str, int, Fraction | None], float] = {}
        for species, l, j, delta in rows:
            self.add(species, l, j, delta)

    def add(self, species: str, l: int, j: float | None, delta: float) -> None:
        key = (species, int(l), None if j is None else _half(j))
        self._rows[key] = float(delta)

    def lookup(self, species: str, l: int, j: float) -> float:
        jf = _half(j)
        for key in ((species, l, jf), (species, l, None)):
            if key in self._rows:
                return self._rows[key]
        # high-l states are hydrogenic to good approximation
        if any(k[0] == species for k in self._rows) and l >= 4:
            return 0.0
        raise ConfigurationError(f"no quantum defect for {species} l={l} j={j}")

    def species(self) -> set[str]:
        return {k[0] for k in self._rows}

    @classmethod
    def from_text(cls, text: str) -> "QuantumDefectTable":
        table = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ConfigurationError(
                    f"defect table line {lineno}: expected 'species l j delta', got {raw!r}"
                )
            species, l, j, delta = parts
            table.add(species, int(l), None if j == "*" else float(Fraction(j)), float(delta))
        return table

    @classmethod
    def from_file(cls, path: str | Path) -> "QuantumDefectTable":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "QuantumDefectTable":
        text = resources.files("deit").joinpath("data/quantum_defects.txt").read_text("utf-8")
        return cls.from_text(text)


DEFAULT_DEFECTS = QuantumDefectTable.default()


@dataclass(frozen=True)
class RydbergState:
    species: str
    n: int
    l: int
    j: float
    m_j: float
    defects: QuantumDefectTable = field(default=DEFAULT_DEFECTS, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.l < self.n:
            raise ValueError(f"need 0 <= l < n, got l={self.l}, n={self.n}")
        j, m = _half(self.j), _half(self.m_j)
        if abs(j - self.l) != Fraction(1, 2):
            raise ValueError(f"|j - l| must be 1/2, got j={self.j}, l={self.l}")
        if abs(m) > j or (j - m).denominator != 1:
            raise ValueError(f"invalid m_j={self.m_j} for j={self.j}")
        if self.n_star <= 0:
            raise ValueError(f"effective quantum number {self.n_star} is not positive")

    @property
    def quantum_defect(self) -> float:
        return self.defects.lookup(self.species, self.l, self.j)

    @property
    def n_star(self) -> float:
        return self.n - self.quantum_defect

    @property
    def label(self) -> str:
        j = Fraction(self.j)
        return f"{self.n}{_L_LETTERS[self.l]}{j.numerator}/{j.denominator}(m={Fraction(self.m_j)})"


def rydberg_constant(species: str) -> float:
    """Reduced-mass Rydberg constant of ``species`` in rad/us."""
    try:
        mass = SPECIES_MASS_AMU[species] * units.ATOMIC_MASS
    except KeyError:
        raise ConfigurationError(f"unknown species {species!r}") from None
    return units.hz(units.RYDBERG_HZ) / (1.0 + units.ELECTRON_MASS / mass)


def state_energy(s: RydbergState) -> float:
    """Binding energy -Ry/(n*)^2 in rad/us."""
    return -rydberg_constant(s.species) / s.n_star**2


def transition_frequency(a: RydbergState, b: RydbergState) -> float:
    """E(b) - E(a) in rad/us."""
    return state_energy(b) - state_energy(a)


# --- angular momentum algebra ---------------------------------------------------


def _fact(x: Fraction) -> int:
    if x.denominator != 1 or x < 0:
        raise ValueError
    return math.factorial(int(x))


def _triangle(a: Fraction, b: Fraction, c: Fraction) -> bool:
    return abs(a - b) <= c <= a + b and (a + b + c).denominator == 1


@lru_cache(maxsize=4096)
def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol from the Racah formula; zero when not allowed."""
    j1, j2, j3, m1, m2, m3 = map(_half, (j1, j2, j3, m1, m2, m3))
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if any((j - m).denominator != 1 for j, m in ((j1, m1), (j2, m2), (j3, m3))):
        return 0.0
    delta = Fraction(
        _fact(j1 + j2 - j3) * _fact(j1 - j2 + j3) * _fact(-j1 + j2 + j3),
        _fact(j1 + j2 + j3 + 1),
    )
    pref = delta * (
        _fact(j1 + m1) * _fact(j1 - m1) * _fact(j2 + m2) * _fact(j2 - m2) * _fact(j3 + m3) * _fact(j3 - m3)
    )
    tmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    tmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    total = Fraction(0)
    t = Fraction(tmin)
    while t <= tmax:
        den = (
            _fact(t)
            * _fact(j3 - j2 + t + m1)
            * _fact(j3 - j1 + t - m2)
            * _fact(j1 + j2 - j3 - t)
            * _fact(j1 - t - m1)
            * _fact(j2 - t + m2)
        )
        total += Fraction((-1) ** int(t), den)
        t += 1
    sign = -1 if int(j1 - j2 - m3) % 2 else 1
    return sign * math.sqrt(pref) * float(total)


def _delta_coef(a: Fraction, b: Fraction, c: Fraction) -> Fraction:
    return Fraction(_fact(a + b - c) * _fact(a - b + c) * _fact(-a + b + c), _fact(a + b + c + 1))


@lru_cache(maxsize=4096)
def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6} (Racah formula)."""
    j1, j2, j3, j4, j5, j6 = map(_half, (j1, j2, j3, j4, j5, j6))
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle(*t) for t in triads):
        return 0.0
    pref = 1
    for t in triads:
        pref *= _delta_coef(*t)
    sums = [sum(t) for t in triads]
    tmin = max(sums)
    tmax = min(j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4)
    total = Fraction(0)
    t = tmin
    while t <= tmax:
        den = 1
        for s in sums:
            den *= _fact(t - s)
        den *= _fact(j1 + j2 + j4 + j5 - t) * _fact(j2 + j3 + j5 + j6 - t) * _fact(j3 + j1 + j6 + j4 - t)
        total += Fraction((-1) ** int(t) * _fact(t + 1), den)
        t += 1
    return math.sqrt(pref) * float(total)


def angular_factor(a: RydbergState, b: RydbergState, q: int = 0) -> float:
    """<b| C^1_q |a> for j-coupled single-electron states (s = 1/2).

    With q = 0 this is the pi-transition factor multiplying the radial
    integral, e.g. sqrt(2)/3 for s1/2 -> p3/2 at m_j = 1/2.  Summed over all
    final j, m_j and q the squares add to one.  Forbidden combinations give 0.
    """
    if abs(a.l - b.l) != 1:
        return 0.0
    if b.m_j - a.m_j != q:
        if q == 0:
            log.debug("pi coupling %s -> %s suppressed: delta m_j != 0", a.label, b.label)
        return 0.0
    s = Fraction(1, 2)
    la, lb = a.l, b.l
    ja, jb = _half(a.j), _half(b.j)
    ma, mb = _half(a.m_j), _half(b.m_j)
    if not _triangle(ja, Fraction(1), jb):
        return 0.0
    red_l = (-1) ** lb * math.sqrt((2 * la + 1) * (2 * lb + 1)) * wigner_3j(lb, 1, la, 0, 0, 0)
    red_j = (
        (-1) ** int(lb + s + ja + 1)
        * math.sqrt((2 * ja + 1) * (2 * jb + 1))
        * wigner_6j(lb, jb, s, ja, la, 1)
        * red_l
    )
    return (-1) ** int(jb - mb) * wigner_3j(jb, 1, ja, -mb, q, ma) * red_j


# --- radial integrals -------------------------------------------------------------


def anger_j(nu: float, x: float) -> float:
    """Anger function J_nu(x) = (1/pi) int_0^pi cos(nu t - x sin t) dt."""
    val, _ = quad(lambda t: math.cos(nu * t - x * math.sin(t)), 0.0, math.pi, limit=200, epsabs=1e-13)
    return val / math.pi


def kaulakys_radial(nu1: float, l1: int, nu2: float, l2: int) -> float:
    """Quasiclassical radial integral <nu1 l1| r |nu2 l2> in Bohr radii."""
    lc = (l1 + l2 + 1) / 2.0
    nuc = math.sqrt(nu1 * nu2)
    dnu = nu1 - nu2
    gamma = (l2 - l1) * lc / nuc
    if dnu == 0.0:
        g0, g1, g2, g3 = 1.0, 0.0, 0.0, 0.0
    else:
        jm = anger_j(dnu - 1.0, -dnu)
        jp = anger_j(dnu + 1.0, -dnu)
        g0 = (jm - jp) / (3.0 * dnu)
        g1 = -(jm + jp) / (3.0 * dnu)
        g2 = g0 - math.sin(math.pi * dnu) / (math.pi * dnu)
        g3 = dnu / 2.0 * g0 + g1
    series = g0 + gamma * g1 + gamma**2 * g2 + gamma**3 * g3
    return 1.5 * nuc**2 * math.sqrt(1.0 - (lc / nuc) ** 2) * series


def _coulomb_numerov(nstar: float, l: int, x: np.ndarray) -> np.ndarray:
    # X(x) = r^(3/4) R(r) with r = x^2 obeys X'' = k(x) X; x runs inward.
    energy = -0.5 / nstar**2
    h = x[0] - x[1]
    k = (2 * l + 0.5) * (2 * l + 1.5) / x**2 + 8.0 * x**2 * (-1.0 / x**2 - energy)
    c = h * h / 12.0
    a = 1.0 - c * k
    y = np.zeros_like(x)
    y[0] = 1e-12
    y[1] = 1e-12 * (1.0 + 1e-3 * h)
    for i in range(1, len(x) - 1):
        y[i + 1] = (2.0 * y[i] * (1.0 + 5.0 * c * k[i]) - y[i - 1] * a[i - 1]) / a[i + 1]
    return y


def numerov_radial(nu1: float, l1: int, nu2: float, l2: int, step: float = 0.01, r_inner: float = 1.0) -> float:
    """Radial integral from inward Numerov integration of the pure Coulomb problem.

    Each state is integrated at its quantum-defect energy from r = 2 n*(n*+15)
    down to ``r_inner`` (a0); the non-physical growth inside that radius is
    discarded, which costs nothing for Rydberg dipoles where r^3 weights the
    outer lobe.
    """
    nmax = max(nu1, nu2)
    x = np.arange(math.sqrt(2.0 * nmax * (nmax + 15.0)), math.sqrt(r_inner), -step)
    ys = []
    for nu, l in ((nu1, l1), (nu2, l2)):
        y = _coulomb_numerov(nu, l, x)
        norm = 2.0 * abs(np.trapezoid(y * y * x * x, x))
        ys.append(y / math.sqrt(norm))
    return 2.0 * abs(np.trapezoid(ys[0] * ys[1] * x**4, x))


def radial_matrix_element(a: RydbergState, b: RydbergState, method: str = "kaulakys") -> float:
    """Radial dipole integral between two Rydberg states, in e*a0."""
    if abs(a.l - b.l) != 1:
        raise SelectionRuleError(f"radial dipole needs |delta l| = 1: {a.label} -> {b.label}")
    if method == "kaulakys":
        return kaulakys_radial(a.n_star, a.l, b.n_star, b.l)
    if method == "numerov":
        return numerov_radial(a.n_star, a.l, b.n_star, b.l)
    raise ValueError(f"unknown radial method {method!r}")


@dataclass(frozen=True)
class TransitionDipole:
    lower: RydbergState
    upper: RydbergState
    radial_me: float
    angular_factor: float

    @property
    def total(self) -> float:
        """Dipole moment in e*a0."""
        return self.radial_me * self.angular_factor


def transition_dipole(a: RydbergState, b: RydbergState, method: str = "kaulakys") -> TransitionDipole:
    lower, upper = sorted((a, b), key=state_energy)
    ang = angular_factor(lower, upper)
    radial = radial_matrix_element(lower, upper, method) if abs(a.l - b.l) == 1 else 0.0
    return TransitionDipole(lower, upper, radial, ang)


def c3_coefficient(ri: TransitionDipole | float, du: TransitionDipole | float) -> float:
    """p_ri * p_du / (4 pi eps0 hbar) in rad/us * um^3 (dipoles in e*a0)."""
    p1 = ri.total if isinstance(ri, TransitionDipole) else float(ri)
    p2 = du.total if isinstance(du, TransitionDipole) else float(du)
    return units.dipole_product_to_c3(p1, p2)


@dataclass(frozen=True)
class ExchangeStates:
    """The four Rydberg levels of the exchange scheme.

    Medium atoms: i = nS1/2, r = nP3/2.  Spin atoms: u = (n'+1)S1/2, d = n'P1/2.
    All at m_j = 1/2, pi transitions along the quantization axis.
    """

    i: RydbergState
    r: RydbergState
    u: RydbergState
    d: RydbergState

    @classmethod
    def build(cls, species: str = "Rb", n: int = 82, n_prime: int = 86,
              defects: QuantumDefectTable = DEFAULT_DEFECTS) -> "ExchangeStates":
        return cls(
            i=RydbergState(species, n, 0, 0.5, 0.5, defects),
            r=RydbergState(species, n, 1, 1.5, 0.5, defects),
            u=RydbergState(species, n_prime + 1, 0, 0.5, 0.5, defects),
            d=RydbergState(species, n_prime, 1, 0.5, 0.5, defects),
        )

    def dipoles(self, method: str = "kaulakys") -> tuple[TransitionDipole, TransitionDipole]:
        return transition_dipole(self.i, self.r, method), transition_dipole(self.d, self.u, method)

    def c3(self, method: str = "kaulakys") -> float:
        return c3_coefficient(*self.dipoles(method))

    def exchange_detuning(self) -> float:
        """omega_ri - omega_ud (rad/us), the detuning of the exchange resonance."""
        w_ri = abs(transition_frequency(self.i, self.r))
        w_ud = abs(transition_frequency(self.d, self.u))
        return w_ri - w_ud


def structure_report(states: ExchangeStates, delta_c_config: float | None = None,
                     method: str = "kaulakys") -> dict:
    """Energies, dipoles, C3 and a consistency check of the configured detuning."""
    ri, du = states.dipoles(method)
    dc = states.exchange_detuning()
    report = {
        "states": {
            name: {"label": s.label, "n_star": s.n_star, "energy_rad_per_us": state_energy(s)}
            for name, s in (("i", states.i), ("r", states.r), ("u", states.u), ("d", states.d))
        },
        "dipoles": [
            {"state_a": t.lower.label, "state_b": t.upper.label, "radial_me": t.radial_me,
             "angular_factor": t.angular_factor, "dipole_ea0": t.total}
            for t in (ri, du)
        ],
        "c3_rad_per_us_um3": c3_coefficient(ri, du),
        "c3_GHz_um3": units.to_hz(c3_coefficient(ri, du)) * 1e-9,
        "delta_c_from_defects_rad_per_us": dc,
    }
    if delta_c_config is not None:
        report["delta_c_config_rad_per_us"] = delta_c_config
        report["delta_c_relative_mismatch"] = (dc - delta_c_config) / delta_c_config
    return report
