import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from deit import units
from deit.coupling import UniformExchange
from deit.optics import MediumConfig, blockade_distance, group_delay, group_velocity, optical_depth, residual_absorption
from deit.propagation import (Wavepacket, blockade_check, initial_state, propagate, run_filter, step_transport,
                              tla_absorb, tla_transmission, transport_grid)
from deit.spin import SpinSector

C6 = units.ghz(75.0)


@pytest.fixture(scope="module")
def ref_run(medium, scene, open1):
    return propagate(medium, scene, open1, Wavepacket(0.0, 5.0))


def test_lossless_uniform_slow_light(medium, open1):
    clean = MediumConfig(medium.rho_bar, medium.L, medium.w, medium.gamma_e)
    u = UniformExchange(20.0 * medium.gamma_e, medium.L)
    res = propagate(clean, u, open1, Wavepacket(0.0, 5.0))
    assert res.transmission == pytest.approx(1.0, abs=1e-6)
    assert res.delay == pytest.approx(medium.L / group_velocity(clean, u, open1, 0.0), rel=1e-4)


def test_reference_scene_matches_quadrature(ref_run, medium, scene, open1):
    p = residual_absorption(medium, scene, open1)
    assert 1.0 - ref_run.transmission == pytest.approx(1.0 - math.exp(-p), rel=0.05)
    assert ref_run.delay == pytest.approx(group_delay(medium, scene, open1), rel=0.05)


def test_norm_conservation(ref_run):
    assert ref_run.max_norm_defect < 1e-6
    total = ref_run.transmitted + ref_run.absorbed + ref_run.in_medium
    assert total == pytest.approx(ref_run.photons_in, abs=1e-6)


def test_grid_convergence(ref_run, medium, scene, open1):
    coarse = propagate(medium, scene, open1, Wavepacket(0.0, 5.0), n_cells=512)
    assert coarse.transmission == pytest.approx(ref_run.transmission, rel=0.01)
    assert coarse.delay == pytest.approx(ref_run.delay, rel=0.01)


def test_closed_sector_beer_lambert(medium, scene, closed):
    res = propagate(medium, scene, closed, Wavepacket(0.0, 5.0))
    assert res.transmission == pytest.approx(math.exp(-optical_depth(medium).intensity), rel=1e-12)


def test_tla_absorb():
    m = MediumConfig(1.0, 25.0, 2.0, 10.0)
    m146 = MediumConfig(14.6 / (m.kappa / m.rho_bar) / 25.0, 25.0, 2.0, 10.0)
    assert m146.kappa * m146.L == pytest.approx(14.6)
    assert tla_absorb(Wavepacket(0.0, 1.0), m146)["transmission"] == pytest.approx(4.5e-7, rel=0.02)
    empty = MediumConfig(0.0, 25.0, 2.0, 10.0)
    assert tla_absorb(Wavepacket(0.0, 1.0, photons=2.0), empty) == {
        "transmission": 1.0, "transmitted": 2.0, "absorbed": 0.0}
    assert tla_transmission(m, length=12.5) == pytest.approx(math.sqrt(tla_transmission(m)), rel=1e-12)


def test_step_transport_arbitrary_steps(medium, scene, open1):
    g = transport_grid(medium, scene, open1, 0.0, 256)
    s0 = initial_state(g, Wavepacket(0.0, 5.0), -20.0)
    one = step_transport(s0, 8.0)
    many = s0
    for _ in range(8):
        many = step_transport(many, 1.0)
    np.testing.assert_allclose(one.envelope, many.envelope, atol=1e-9)
    assert abs(one.norm_defect) < 1e-6
    with pytest.raises(ValueError):
        step_transport(s0, 0.0)


def test_wavepacket_validation():
    with pytest.raises(ValueError):
        Wavepacket(0.0, 0.0)
    p = Wavepacket(1.0, 2.0)
    assert p.entered(1.0) == pytest.approx(0.5)
    t = np.linspace(-30, 30, 20001)
    assert np.trapezoid(np.abs(p.amplitude(t)) ** 2, t) == pytest.approx(1.0, rel=1e-9)


def test_bandwidth_guard_warns(medium, scene):
    rep = run_filter(scene, medium, [Wavepacket(0.0, 0.05)], 1, simulate=False)
    assert any("bandwidth" in w for w in rep.warnings)


def fates(rep):
    return [p.fate for p in rep.per_photon]


def test_filter_simultaneous_single_spin(medium, scene):
    rep = run_filter(scene, medium, [Wavepacket(0.0, 5.0)] * 3, 1, c6=C6)
    assert fates(rep) == ["transmitted", "absorbed", "absorbed"]
    tla = math.exp(-optical_depth(medium).intensity)
    assert [p.transmission for p in rep.per_photon[1:]] == pytest.approx([tla, tla], rel=1e-12)
    assert rep.final_sector == SpinSector(1, 0)


def test_filter_sequential_transparency(medium, scene):
    train = [Wavepacket(t, 5.0) for t in (0.0, 40.0, 80.0)]
    rep = run_filter(scene, medium, train, 1, c6=C6)
    assert fates(rep) == ["transmitted"] * 3
    assert all(p.sector == (1, 0) for p in rep.per_photon)


def test_filter_without_spins(medium, scene):
    rep = run_filter(scene, medium, [Wavepacket(t, 5.0) for t in (0.0, 10.0)], 0)
    assert fates(rep) == ["absorbed", "absorbed"]


def test_filter_two_spins(medium, scene):
    rep = run_filter(scene, medium, [Wavepacket(0.0, 5.0)] * 2, 2, c6=C6)
    assert fates(rep) == ["transmitted", "transmitted"]
    assert [p.jpjm for p in rep.per_photon] == [2, 2]
    assert rep.per_photon[0].delay_us == pytest.approx(group_delay(medium, scene, SpinSector(2, 0)), rel=0.01)


def test_filter_three_spins_velocity_ratio(medium, scene):
    rep = run_filter(scene, medium, [Wavepacket(0.0, 5.0)] * 3, 3, c6=C6, simulate=False)
    assert [p.jpjm for p in rep.per_photon] == [3, 4, 3]
    v = [p.group_velocity_centre for p in rep.per_photon]
    assert v[1] / v[0] == pytest.approx(4 / 3, rel=1e-4)


def test_filter_rejects_unordered_train(medium, scene):
    with pytest.raises(ValueError):
        run_filter(scene, medium, [Wavepacket(5.0, 1.0), Wavepacket(0.0, 1.0)], 1)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.floats(0.0, 20.0), min_size=1, max_size=5))
def test_filter_monotone_in_spins(medium, scene, arrivals):
    train = [Wavepacket(t, 5.0) for t in sorted(arrivals)]
    counts = [run_filter(scene, medium, train, n, simulate=False).totals["transmitted"] for n in range(5)]
    assert counts == sorted(counts)


def test_blockade_single_photon_passes(medium, scene):
    assert blockade_check(scene, medium, C6, [12.0])["status"] == "PASS"


def test_blockade_well_separated_pair_passes(medium, scene):
    z = np.linspace(0, 25, 501)
    r = np.linalg.norm(scene.separation(z), axis=-1)
    dmax = float(np.max(blockade_distance(scene, medium, C6, r)))
    assert blockade_check(scene, medium, C6, [0.0, dmax * 1.01])["status"] == "PASS"


def test_blockade_four_photons_warns(medium, scene):
    rep = blockade_check(scene, medium, C6, np.linspace(0.0, 25.0, 4))
    assert rep["status"] == "WARN"
    assert "more than 3" in rep["reason"]


def test_blockade_requires_c6_to_pass(medium, scene):
    assert blockade_check(scene, medium, None, [1.0, 20.0])["status"] == "WARN"
