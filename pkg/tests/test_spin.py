import numpy as np
import pytest
from hypothesis import given, strategies as st

from deit.coupling import UniformExchange
from deit.spin import (SpinSector, jpjm_eigenvalue, ladder_elements, mean_square_exchange, photon_spin_balance,
                       spin_matrices, stored_photon_fraction)

J_VALUES = [k / 2 for k in range(0, 9)]


def test_ladder_textbook_values():
    assert ladder_elements(0.5, 0.5) == (1.0, 0.0)
    lo, up = ladder_elements(1, 0)
    assert lo == pytest.approx(np.sqrt(2)) and up == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("J,M", [(1, 2), (0.5, 0), (1.5, 0.5 + 2), (-1, 0)])
def test_ladder_domain(J, M):
    with pytest.raises(ValueError):
        ladder_elements(J, M)


@pytest.mark.parametrize("J", J_VALUES)
def test_dense_matrix_equivalence(J):
    jp, jm, jz = spin_matrices(J)
    dim = jp.shape[0]
    np.testing.assert_allclose(jp @ jm - jm @ jp, 2 * jz, atol=1e-12)
    casimir = jz @ jz + 0.5 * (jp @ jm + jm @ jp)
    np.testing.assert_allclose(casimir, J * (J + 1) * np.eye(dim), atol=1e-12)
    for k, M in enumerate(J - np.arange(dim)):
        lo, up = ladder_elements(J, M)
        assert np.linalg.norm(jm[:, k]) == pytest.approx(lo, abs=1e-12)
        assert np.linalg.norm(jp[:, k]) == pytest.approx(up, abs=1e-12)
        assert (jp @ jm)[k, k] == pytest.approx(lo**2, abs=1e-12)
    # trace identity: sum of lower^2 + raise^2 over the multiplet
    total = sum(sum(x**2 for x in ladder_elements(J, M)) for M in J - np.arange(dim))
    assert total == pytest.approx(np.trace(jp @ jm + jm @ jp), abs=1e-10)


@given(st.integers(0, 8), st.integers(0, 10))
def test_jpjm_matches_matrix(n_s, n_p):
    sector = SpinSector(n_s, n_p)
    val = jpjm_eigenvalue(sector)
    if n_p >= n_s:
        assert val == 0
        return
    jp, jm, _ = spin_matrices(sector.J)
    assert val == pytest.approx((jp @ jm)[n_p, n_p], abs=1e-10)
    assert val == (n_s - n_p) * (n_p + 1)


def test_jpjm_examples():
    assert jpjm_eigenvalue(SpinSector(1, 0)) == 1
    assert jpjm_eigenvalue(SpinSector(3, 1)) == 4
    assert all(jpjm_eigenvalue(SpinSector(0, k)) == 0 for k in range(4))


def test_sector_transitions():
    s = SpinSector(1)
    assert s.is_open and not s.admit().is_open
    assert s.admit().release() == s
    with pytest.raises(ValueError):
        s.release()
    with pytest.raises(ValueError):
        SpinSector(-1)


def test_photon_spin_balance():
    b = photon_spin_balance(0, 0, 0.5)
    assert (b.stored, b.overflow) == (0, 0)
    b = photon_spin_balance(1, 0, 0.5)
    assert b.stored == 1 and b.J_z == -0.5
    b = photon_spin_balance(3, 0, 0.5)
    assert (b.stored, b.overflow) == (1, 2)
    with pytest.raises(ValueError):
        photon_spin_balance(-1, 0, 0.5)
    with pytest.raises(ValueError):
        photon_spin_balance(0, 1, 0.5)


def test_stored_fraction_zero_without_exchange(medium):
    assert stored_photon_fraction(medium, UniformExchange(0.0, medium.L), SpinSector(1)) == 0.0


def test_uniform_exchange_weightings_agree(medium):
    u = UniformExchange(7.0, medium.L)
    assert mean_square_exchange(u, medium.L, "uniform") == pytest.approx(49.0, rel=1e-10)
    assert mean_square_exchange(u, medium.L, "transit") == pytest.approx(49.0, rel=1e-10)
    with pytest.raises(ValueError):
        mean_square_exchange(u, medium.L, "other")


def test_reference_stored_fraction(medium, scene):
    # frozen from quadrature of D(z)^2; the transit weighting is the harmonic mean
    uni = stored_photon_fraction(medium, scene, SpinSector(1))
    tra = stored_photon_fraction(medium, scene, SpinSector(1), weighting="transit")
    assert uni == pytest.approx(1.2323171e-6, rel=1e-6)
    assert tra == pytest.approx(3.2754574e-8, rel=1e-6)
    assert tra < uni < 1e-5
