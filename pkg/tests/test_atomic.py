import math

import pytest
from hypothesis import given, settings, strategies as st
from sympy import Rational
from sympy.physics.wigner import wigner_3j as sym_3j, wigner_6j as sym_6j

from deit import units
from deit.atomic import (ExchangeStates, QuantumDefectTable, RydbergState, angular_factor, c3_coefficient,
                         kaulakys_radial, radial_matrix_element, rydberg_constant, state_energy,
                         structure_report, transition_dipole, wigner_3j, wigner_6j)
from deit.errors import ConfigurationError, SelectionRuleError

# Frozen from the quasiclassical integral; cross-checked below against Numerov.
RADIAL_82S_82P = 5304.720262387517
RADIAL_86P_87S = 9240.847996342343


WITH_D = QuantumDefectTable.from_text("Rb 0 * 3.131\nRb 1 * 2.65\nRb 2 * 1.35\n")


def rb(n, l, j, m=0.5):
    return RydbergState("Rb", n, l, j, m)


def rbd(n, l, j, m=0.5):
    return RydbergState("Rb", n, l, j, m, WITH_D)


def test_n_star_from_defect():
    s = rb(82, 0, 0.5)
    assert s.quantum_defect == pytest.approx(3.131)
    assert s.n_star == pytest.approx(78.869)


def test_hydrogenic_limit():
    table = QuantumDefectTable.from_text("Rb 2 * 0\n")
    s = RydbergState("Rb", 40, 2, 2.5, 0.5, table)
    assert state_energy(s) == pytest.approx(-rydberg_constant("Rb") / 40**2, rel=1e-14)


def test_unknown_species():
    table = QuantumDefectTable()
    with pytest.raises(ConfigurationError):
        state_energy(RydbergState("Xx", 40, 0, 0.5, 0.5, table))


def test_defect_lookup_falls_back_to_l_level():
    table = QuantumDefectTable.from_text("Rb 1 * 2.5\nRb 1 1.5 2.6\n")
    assert table.lookup("Rb", 1, 1.5) == 2.6
    assert table.lookup("Rb", 1, 0.5) == 2.5
    assert table.lookup("Rb", 5, 4.5) == 0.0


@pytest.mark.parametrize("args", [(82, 0, 1.5), (3, 3, 3.5), (82, 1, 0.5, 1.5)])
def test_invalid_states(args):
    with pytest.raises(ValueError):
        rb(*args)


def test_transition_frequencies_use_defects():
    st_ = ExchangeStates.build()
    ry = rydberg_constant("Rb")
    w_ri = ry * (1 / st_.i.n_star**2 - 1 / st_.r.n_star**2)
    assert w_ri == pytest.approx(state_energy(st_.r) - state_energy(st_.i), rel=1e-12)
    w_ud = ry * (1 / st_.d.n_star**2 - 1 / st_.u.n_star**2)
    assert st_.exchange_detuning() == pytest.approx(w_ri - w_ud, rel=1e-9)


def test_radial_selection_rule():
    with pytest.raises(SelectionRuleError):
        radial_matrix_element(rb(82, 0, 0.5), rb(83, 0, 0.5))
    with pytest.raises(ValueError):
        radial_matrix_element(rbd(82, 0, 0.5), rbd(82, 2, 1.5))


def test_missing_defect_is_configuration_error():
    with pytest.raises(ConfigurationError):
        rb(82, 2, 2.5).n_star


def test_radial_frozen_values():
    s = ExchangeStates.build()
    assert radial_matrix_element(s.i, s.r) == pytest.approx(RADIAL_82S_82P, rel=1e-10)
    assert radial_matrix_element(s.d, s.u) == pytest.approx(RADIAL_86P_87S, rel=1e-10)


def test_radial_agrees_with_numerov():
    s = ExchangeStates.build()
    for a, b in ((s.i, s.r), (s.d, s.u)):
        k = radial_matrix_element(a, b)
        n = radial_matrix_element(a, b, method="numerov")
        assert n == pytest.approx(k, rel=1e-3)


def test_radial_diagonal_scaling():
    nu = 60.0
    assert kaulakys_radial(nu, 0, nu, 1) == pytest.approx(1.5 * nu**2, rel=0.02)


def test_radial_decays_with_dn():
    near = abs(kaulakys_radial(60.0, 0, 60.3, 1))
    far = [abs(kaulakys_radial(60.0, 0, 60.3 + k, 1)) for k in (5, 10, 20)]
    assert near > far[0] > far[1] > far[2]
    assert far[-1] < 0.01 * near


def test_angular_known_values():
    assert angular_factor(rb(82, 0, 0.5), rb(82, 1, 1.5)) == pytest.approx(math.sqrt(2) / 3, rel=1e-14)
    assert angular_factor(rb(87, 0, 0.5), rb(86, 1, 0.5)) == pytest.approx(-1 / 3, rel=1e-14)


def test_angular_selection_rules():
    s = rb(82, 0, 0.5, 0.5)
    assert angular_factor(s, rb(82, 1, 1.5, 1.5)) == 0.0
    assert angular_factor(rbd(82, 1, 0.5), rbd(82, 2, 2.5)) == 0.0
    assert angular_factor(s, rb(83, 0, 0.5)) == 0.0


@pytest.mark.parametrize("m", [-0.5, 0.5])
def test_angular_sum_rule(m):
    s = rb(82, 0, 0.5, m)
    total = 0.0
    for j in (0.5, 1.5):
        for mp in [x - j for x in range(int(2 * j) + 1)]:
            for q in (-1, 0, 1):
                total += angular_factor(s, rb(82, 1, j, mp), q) ** 2
    assert total == pytest.approx(1.0, rel=1e-14)


half = st.integers(0, 8).map(lambda k: k / 2)


@settings(max_examples=150, deadline=None)
@given(half, half, half, st.integers(-8, 8), st.integers(-8, 8))
def test_wigner_3j_matches_sympy(j1, j2, j3, a, b):
    m1 = a / 2 if (a / 2 - j1) % 1 == 0 else (a + 1) / 2
    m2 = b / 2 if (b / 2 - j2) % 1 == 0 else (b + 1) / 2
    m3 = -m1 - m2
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3 or (j3 - m3) % 1:
        return
    ref = sym_3j(*(Rational(int(2 * x), 2) for x in (j1, j2, j3, m1, m2, m3)))
    assert wigner_3j(j1, j2, j3, m1, m2, m3) == pytest.approx(float(ref), abs=1e-13)


@settings(max_examples=150, deadline=None)
@given(half, half, half, half, half, half)
def test_wigner_6j_matches_sympy(j1, j2, j3, j4, j5, j6):
    js = (j1, j2, j3, j4, j5, j6)
    try:
        ref = float(sym_6j(*(Rational(int(2 * x), 2) for x in js)))
    except ValueError:
        ref = 0.0
    assert wigner_6j(*js) == pytest.approx(ref, abs=1e-13)


def test_c3_frozen_and_sign():
    c3 = ExchangeStates.build().c3()
    assert units.to_hz(abs(c3)) * 1e-9 == pytest.approx(7.510264, rel=1e-6)
    assert c3 < 0


def test_c3_zero_and_bilinear():
    s = ExchangeStates.build()
    ri, du = s.dipoles()
    assert c3_coefficient(0.0, du) == 0.0
    assert c3_coefficient(ri.total, 2 * du.total) == pytest.approx(2 * c3_coefficient(ri, du), rel=1e-14)


def test_transition_dipole_orders_by_energy():
    d = transition_dipole(rb(82, 1, 1.5), rb(82, 0, 0.5))
    assert d.lower.l == 0 and d.upper.l == 1
    assert d.total == pytest.approx(d.radial_me * d.angular_factor)


def test_structure_report_flags_detuning_mismatch():
    rep = structure_report(ExchangeStates.build(), delta_c_config=units.mhz(440.0))
    assert rep["c3_GHz_um3"] == pytest.approx(-7.510264, rel=1e-6)
    assert units.to_hz(rep["delta_c_from_defects_rad_per_us"]) * 1e-9 == pytest.approx(5.28, rel=0.01)
    assert rep["delta_c_relative_mismatch"] > 10
