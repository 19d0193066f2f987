import math

import numpy as np
import pytest
from scipy.sparse.linalg import expm_multiply

from deit import units
from deit.coupling import UniformExchange
from deit.errors import MeasurementError, ResolutionError
from deit.optics import (MediumConfig, group_delay, group_velocity, optical_depth, residual_absorption,
                         transmission_amplitude)
from deit.oracle import (build_hamiltonian, compare_spectrum, convergence, group_delay_measurement, pulse_run,
                         transmission_spectrum)
from deit.spin import stored_photon_fraction

NZ = 256


def lossless(medium):
    return MediumConfig(medium.rho_bar, medium.L, medium.w, medium.gamma_e)


@pytest.fixture(scope="module")
def run(medium, scene):
    return pulse_run(medium, scene, duration=20.0, n_z=NZ, n_freq=256)


def test_no_exchange_decouples_rydberg_block(medium, scene):
    H, b = build_hamiltonian(medium, scene.replace(c3=0.0), 128)
    block = H.tocsr()[b.rydberg, :].toarray()
    off = block.copy()
    off[:, b.rydberg] -= np.diag(np.diag(block[:, b.rydberg]))
    assert np.all(off == 0.0)


def test_only_decay_is_non_hermitian(medium, scene):
    H, b = build_hamiltonian(medium, scene, 128, buffer=0.5)
    A = (H - H.conj().T).toarray()
    expected = np.zeros(b.dim, dtype=complex)
    expected[b.excited] = -2j * medium.gamma_e
    expected[b.rydberg] = -2j * medium.gamma_r
    np.testing.assert_allclose(A, np.diag(expected), atol=1e-6)


def test_free_advection_without_atoms(medium, scene):
    empty = MediumConfig(0.0, medium.L, medium.w, medium.gamma_e)
    c = 10.0
    H, b = build_hamiltonian(empty, scene, 128, buffer=2.0, c=c)
    z = (np.arange(b.n_box) + 0.5) * medium.L / 128
    psi = np.zeros(b.dim, dtype=complex)
    psi[b.photon] = np.exp(-((z - 30.0) ** 2) / 18.0)
    out = expm_multiply(-1j * H * 2.0, psi)

    def centroid(v):
        w = np.abs(v[b.photon]) ** 2
        return np.sum(z * w) / np.sum(w)

    assert centroid(out) - centroid(psi) == pytest.approx(2.0 * c, rel=1e-4)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(psi), rel=1e-12)


def test_dark_state_is_null_vector(medium):
    clean = lossless(medium)
    u = UniformExchange(2.0 * medium.gamma_e, medium.L)
    H, b = build_hamiltonian(clean, u, 128, buffer=0.0)
    psi = np.zeros(b.dim, dtype=complex)
    psi[b.photon] = 1.0
    psi[b.rydberg] = -math.sqrt(clean.eta2N) / u.value
    assert np.max(np.abs(H @ psi)) < 1e-6 * np.max(np.abs(psi))


def test_resolution_errors(medium, scene):
    with pytest.raises(ResolutionError):
        build_hamiltonian(medium, scene, 16)
    dense = MediumConfig(200.0, medium.L, medium.w, medium.gamma_e)
    with pytest.raises(ResolutionError):
        transmission_spectrum(dense, scene, [0.0], 128)
    with pytest.raises(ResolutionError):
        pulse_run(medium, scene, duration=20.0, n_z=128, n_freq=8)


def test_beer_lambert_calibration(medium, scene, closed):
    t = transmission_spectrum(medium, scene, [0.0], NZ, closed)[0]
    assert abs(t) ** 2 == pytest.approx(math.exp(-optical_depth(medium).intensity), rel=0.02)


def test_dark_state_transparency(medium, scene, open1):
    t = transmission_spectrum(lossless(medium), scene, [0.0], NZ, open1)[0]
    assert abs(t) ** 2 >= 0.99


def test_spectrum_matches_analytic(medium, scene, open1):
    deltas = np.linspace(-3, 3, 25) * medium.gamma_e
    cmp = compare_spectrum(medium, scene, deltas, NZ, open1)
    assert cmp.rms_intensity_error < 1e-4
    np.testing.assert_allclose(np.angle(cmp.oracle), np.angle(cmp.analytic), atol=1e-3)


def test_residual_absorption_matches_quadrature(medium, scene, open1):
    t = transmission_spectrum(medium, scene, [-medium.delta], NZ, open1)[0]
    p = residual_absorption(medium, scene, open1)
    assert 1.0 - abs(t) ** 2 == pytest.approx(1.0 - math.exp(-p), rel=1e-3)


def test_convergence_in_cells(medium, scene, open1):
    assert convergence(medium, scene, np.linspace(-3, 3, 7) * medium.gamma_e, 128, open1) < 1e-3


def test_uniform_delay(medium, open1):
    clean = lossless(medium)
    u = UniformExchange(20.0 * medium.gamma_e, medium.L)
    v = group_velocity(clean, u, open1, 0.0)
    meas = group_delay_measurement(clean, u, duration=20.0, n_z=128, n_freq=256)
    assert meas.delay == pytest.approx(medium.L * (1 / v - 1 / units.C_LIGHT), rel=0.01)
    assert meas.transmitted == pytest.approx(1.0, abs=1e-3)


def test_pulse_bookkeeping(run):
    assert np.max(np.abs(run.bookkeeping_residual)) < 1e-8
    np.testing.assert_allclose(run.total_norm, 1.0, atol=1e-8)


def test_pulse_delay_and_transmission(run, medium, scene, open1):
    assert run.delay == pytest.approx(group_delay(medium, scene, open1, excess=True), rel=0.05)
    # finite bandwidth: average the analytic |t|^2 over the pulse's intensity spectrum
    eps = np.linspace(-4.0, 4.0, 161) / 20.0
    weight = np.exp(-2.0 * (20.0 * eps) ** 2)
    t2 = np.abs(transmission_amplitude(medium, scene, open1, eps)) ** 2
    expected = np.trapezoid(weight * t2, eps) / np.trapezoid(weight, eps)
    assert run.transmitted[-1] == pytest.approx(expected, rel=1e-4)
    assert run.transmitted[-1] < math.exp(-residual_absorption(medium, scene, open1))


def test_stored_excitation_dominates(run, medium, scene, open1):
    k = int(np.argmax(run.stored))
    ratio = run.photons[k] / run.stored[k]
    transit = stored_photon_fraction(medium, scene, open1, weighting="transit")
    uniform = stored_photon_fraction(medium, scene, open1)
    assert ratio < 1e-6
    assert ratio == pytest.approx(transit, rel=0.02)
    # the spatial average overestimates the field share by more than an order of magnitude
    assert uniform / ratio > 30


def test_centroid_needs_signal(medium, scene, closed):
    opaque = MediumConfig(3.0, medium.L, medium.w, medium.gamma_e)
    r = pulse_run(opaque, scene, duration=20.0, n_z=NZ, n_freq=128, sector=closed)
    with pytest.raises(MeasurementError):
        r.output_centroid
