"""Medium/spin geometry, dipole-dipole exchange and the validity inequalities."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import brentq

from . import units

if TYPE_CHECKING:
    from .optics import MediumConfig
    from .spin import SpinSector

MAGIC_ANGLE = math.acos(1.0 / math.sqrt(3.0))

# thresholds for a "much greater than" inequality, applied to the ratio of sides
STRONG_MARGIN = 10.0
WEAK_MARGIN = 3.0


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("dipole orientation must be a nonzero vector")
    return v / n


def _anisotropy(R: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (a.b - 3 (a.R^)(b.R^), |R|) for R of shape (..., 3)."""
    R = np.asarray(R, dtype=float)
    r = np.linalg.norm(R, axis=-1)
    if np.any(r == 0.0):
        raise ZeroDivisionError("dipole-dipole interaction is singular at R = 0")
    rhat = R / r[..., None]
    return np.dot(a, b) - 3.0 * (rhat @ a) * (rhat @ b), r


def dipole_dipole(R, p_a, p_b):
    """Resonant dipole-dipole coupling in rad/us.

    Parameters
    ----------
    R : array_like, shape (..., 3)
        Separation vector(s) in um.
    p_a, p_b : array_like, shape (3,)
        Dipole vectors in e*a0.
    """
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    na, nb = np.linalg.norm(p_a), np.linalg.norm(p_b)
    if na == 0.0 or nb == 0.0:
        return np.zeros(np.shape(R)[:-1]) if np.ndim(R) > 1 else 0.0
    ang, r = _anisotropy(R, p_a / na, p_b / nb)
    out = units.dipole_product_to_c3(na, nb) * ang / r**3
    return out if np.ndim(out) else float(out)


def spin_spin_angular_factor(theta: float) -> float:
    """Angular part 1 - 3cos^2(theta) of the coupling between parallel dipoles."""
    return 1.0 - 3.0 * math.cos(theta) ** 2


@dataclass(frozen=True)
class CouplingScene:
    """Spin-cloud placement relative to the medium axis plus the auxiliary drive.

    The medium lies along z in [0, length]; the spin cloud centroid sits at
    (x_s, y_s, z_s).  ``c3`` is in rad/us*um^3, ``rabi`` and ``detuning`` of
    the auxiliary field in rad/us.
    """

    c3: float
    rabi: float
    detuning: float
    x_s: float
    z_s: float
    length: float
    width: float
    cloud_size: float = 0.0
    y_s: float = 0.0
    dipole_ri: tuple[float, float, float] = (0.0, 1.0, 0.0)
    dipole_du: tuple[float, float, float] = (0.0, 1.0, 0.0)
    # |p_ri / p_du|; only used by the validity report
    dipole_ratio: float | None = None

    def __post_init__(self):
        if self.detuning == 0.0:
            raise ValueError("auxiliary detuning must be nonzero")
        if self.length <= 0.0 or self.width < 0.0 or self.cloud_size < 0.0:
            raise ValueError("lengths must be non-negative and the medium length positive")
        _unit(self.dipole_ri)
        _unit(self.dipole_du)

    def replace(self, **changes) -> "CouplingScene":
        return dataclasses.replace(self, **changes)

    @property
    def spin_position(self) -> np.ndarray:
        return np.array([self.x_s, self.y_s, self.z_s])

    def separation(self, z) -> np.ndarray:
        """Vector from the spin centroid to the medium point (0, 0, z)."""
        z = np.asarray(z, dtype=float)
        R = np.zeros(z.shape + (3,))
        R[..., 2] = z
        return R - self.spin_position

    def interaction(self, z):
        """Bare dipole-dipole coupling D_as(z) in rad/us."""
        ang, r = _anisotropy(self.separation(z), _unit(self.dipole_ri), _unit(self.dipole_du))
        out = self.c3 * ang / r**3
        return out if np.ndim(out) else float(out)

    def exchange(self, z):
        """Effective exchange rate D(z) after eliminating the auxiliary drive."""
        return self.interaction(z) * (self.rabi / self.detuning)

    def z_grid(self, n: int = 2001) -> np.ndarray:
        z = np.linspace(0.0, self.length, n)
        if 0.0 < self.z_s < self.length:
            z = np.union1d(z, [self.z_s])
        return z


@dataclass(frozen=True)
class UniformExchange:
    """Position-independent exchange rate, for closed-form comparisons."""

    value: float
    length: float

    def exchange(self, z):
        out = np.full(np.shape(z), float(self.value))
        return out if np.ndim(out) else float(out)

    def z_grid(self, n: int = 2001) -> np.ndarray:
        return np.linspace(0.0, self.length, n)


def exchange_field(scene, z):
    """D(z) in rad/us for any scene exposing ``exchange``."""
    return scene.exchange(z)


def level_shifts(scene: CouplingScene, z):
    """(ac Stark shift of the auxiliary drive, dipolar shift delta'(z)) in rad/us."""
    stark = scene.rabi**2 / scene.detuning
    d_as = np.asarray(scene.interaction(z))
    dipolar = -np.abs(d_as) ** 2 / scene.detuning
    return stark, (dipolar if dipolar.ndim else float(dipolar))


def solve_spin_offset(scene: CouplingScene, target: float, z: float | None = None) -> float:
    """Return x_s such that |D(z)| = target (default z = z_s)."""
    z = scene.z_s if z is None else z

    def f(x):
        return abs(scene.replace(x_s=x).exchange(z)) - target

    lo, hi = 1e-3, 1e5
    if f(lo) < 0 or f(hi) > 0:
        raise ValueError("target exchange rate not reachable by moving the spin off axis")
    return brentq(f, lo, hi, xtol=1e-12, rtol=1e-13)


@dataclass(frozen=True)
class Check:
    name: str
    relation: str
    lhs: float
    rhs: float
    margin: float
    status: str

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _grade(margin: float, kind: str) -> str:
    if not math.isfinite(margin):
        return "PASS" if margin > 0 else "FAIL"
    if kind == "strict":
        return "PASS" if margin > 1.0 else "FAIL"
    if margin >= STRONG_MARGIN:
        return "PASS"
    if margin >= WEAK_MARGIN:
        return "WARN"
    return "WARN" if kind == "advisory" else "FAIL"


def _check(name, relation, small, large, kind) -> Check:
    margin = large / small if small != 0 else math.inf
    return Check(name, relation, float(small), float(large), float(margin), _grade(margin, kind))


def _match(name, relation, a, b) -> Check:
    ok = math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)
    return Check(name, relation, float(a), float(b), 1.0 if ok else 0.0, "PASS" if ok else "FAIL")


@dataclass(frozen=True)
class ValidityReport:
    checks: tuple[Check, ...]

    @property
    def status(self) -> str:
        states = {c.status for c in self.checks}
        for s in ("FAIL", "WARN"):
            if s in states:
                return s
        return "PASS"

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"status": self.status, "checks": [c.as_dict() for c in self.checks]}


def validity_report(scene: CouplingScene, medium: "MediumConfig",
                    sector: "SpinSector | None" = None, n_grid: int = 2001) -> ValidityReport:
    """Evaluate the approximations behind the exchange model.

    Each check reports lhs (the side that must be small), rhs and their
    ratio.  Strict inequalities pass when the ratio exceeds one.  Much-greater
    relations pass at ratio >= 10, warn at >= 3 and fail below; advisory
    checks never fail.
    """
    jpjm = 1.0 if sector is None else float(sector.jpjm)
    z = scene.z_grid(n_grid)
    d = np.abs(np.asarray(scene.exchange(z)))
    d_as = np.abs(np.asarray(scene.interaction(z)))
    _, dprime = level_shifts(scene, z)
    broad = abs(complex(medium.gamma_e, medium.delta))
    rabi, det = abs(scene.rabi), abs(scene.detuning)

    checks = [
        _check("spin_off_axis", "w < x_s", scene.width, abs(scene.x_s), "strict"),
        _check("spin_cloud_compact", "cloud_size << x_s/3", scene.cloud_size, abs(scene.x_s), "much"),
        _match("geometry_length", "scene length == medium length", scene.length, medium.L),
        _match("geometry_width", "scene width == medium width", scene.width, medium.w),
        _check("control_far_detuned", "Omega_c << |Delta_c|", rabi, det, "advisory"),
        _check("linewidth_ordering", "|gamma_e + i delta|/Omega_c < Omega_c/|Delta_c|",
               broad / rabi if rabi else math.inf, rabi / det, "strict"),
        _check("exchange_vs_detuning", "max|D_as| << |Delta_c|", d_as.max(), det, "advisory"),
        _check("dipolar_shift_within_linewidth", "|delta'| < |D|^2 jpjm/|gamma_e + i delta|",
               1.0, float(np.min((d**2 * jpjm / broad) / np.maximum(np.abs(dprime), 1e-300))),
               "strict"),
        _check("eit_condition", "|gamma_e + i delta| gamma_r << min |D|^2 jpjm",
               broad * medium.gamma_r, float(d.min() ** 2 * jpjm), "much"),
        _check("collective_coupling", "max |D|^2 << eta^2 N", float(d.max() ** 2), medium.eta2N, "much"),
        _check("rydberg_decay_small", "gamma_r << gamma_e", medium.gamma_r, medium.gamma_e, "advisory"),
    ]
    if scene.dipole_ratio is not None:
        checks.append(_check("dipole_ratio", "|p_ri/p_du| << |Delta_c/Omega_c|",
                             scene.dipole_ratio, det / rabi if rabi else math.inf, "much"))
    return ValidityReport(tuple(checks))
