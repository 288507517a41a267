import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.core.errors import AliasingError, InsufficientDataError, StepTooCoarseError
from app.models.system import BlochVector, DriveConfig, PulseShape
from app.services.dynamics_service import CZ, DynamicsService
from app.services.spectrum_service import SpectrumService


def test_envelope_shape(cz_pulse):
    svc = DynamicsService()
    assert svc.envelope(cz_pulse, 0.0) == pytest.approx(0.0)
    assert svc.envelope(cz_pulse, cz_pulse.total_duration) == pytest.approx(0.0)
    assert svc.envelope(cz_pulse, cz_pulse.total_duration / 2) == pytest.approx(1.0)
    assert svc.envelope(cz_pulse, cz_pulse.ramp_duration / 2) == pytest.approx(0.5)
    assert svc.envelope(cz_pulse, -1.0) == 0.0
    t = np.linspace(0.0, cz_pulse.total_duration, 101)
    values = svc.envelope(cz_pulse, t)
    assert np.allclose(values, values[::-1])


def test_flat_region_of_cz_pulse(cz_pulse):
    svc = DynamicsService()
    assert cz_pulse.flat_start == pytest.approx(60.3, abs=1e-9)
    assert cz_pulse.flat_end == pytest.approx(140.7, abs=1e-9)
    assert np.allclose(svc.envelope(cz_pulse, np.linspace(60.3, 140.7, 9)), 1.0)
    assert svc.envelope(cz_pulse, 60.0) < 1.0
    assert svc.envelope(cz_pulse, 141.0) < 1.0


@pytest.mark.parametrize("total, flat", [(201.0, 0.4), (100.0, 0.0), (50.0, 0.8), (30.0, 1.0)])
def test_envelope_area(total, flat):
    pulse = PulseShape(total_duration=total, flat_fraction=flat)
    svc = DynamicsService()
    corners = sorted(t for t in {pulse.flat_start, pulse.flat_end} if 0.0 < t < total)
    area, _ = quad(
        lambda t: svc.envelope(pulse, t), 0.0, total,
        points=corners or None, epsabs=1e-12, epsrel=1e-11, limit=200,
    )
    assert area == pytest.approx(total * (flat + (1 - flat) / 2), rel=1e-9)


def test_square_pulse_envelope_is_flat():
    svc = DynamicsService()
    pulse = PulseShape(total_duration=50.0, flat_fraction=1.0)
    assert np.allclose(svc.envelope(pulse, np.array([0.0, 10.0, 50.0])), 1.0)


def test_step_larger_than_tenth_of_pulse_rejected(small_pair_1, weak_drive):
    pulse = PulseShape(total_duration=20.0)
    with pytest.raises(StepTooCoarseError):
        DynamicsService().propagator(small_pair_1, weak_drive, pulse, step=2.5)


def test_propagator_unitary(pair_2, cz_pulse):
    drive = DriveConfig.off_target(pair_2, 40.0, amp_c=10.0, amp_t=10.0)
    u = DynamicsService().propagator(pair_2, drive, cz_pulse, step=0.05)
    assert np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < 1e-9


def test_windows_compose(small_pair_1, weak_drive, cz_pulse):
    svc = DynamicsService()
    full = svc.propagator(small_pair_1, weak_drive, cz_pulse, step=0.05)
    first = svc.propagator(small_pair_1, weak_drive, cz_pulse, step=0.05, window=(0.0, 100.5))
    second = svc.propagator(small_pair_1, weak_drive, cz_pulse, step=0.05, window=(100.5, 201.0))
    assert np.allclose(second @ first, full, atol=1e-10)


def test_halving_step_changes_little(small_pair_1, weak_drive, cz_pulse):
    svc = DynamicsService()
    initial = svc.product_state(small_pair_1, np.array([1.0, 1.0]) / math.sqrt(2), np.array([1.0, 1.0]) / math.sqrt(2))
    coarse = svc.propagate(small_pair_1, weak_drive, cz_pulse, initial, step=0.05).state
    fine = svc.propagate(small_pair_1, weak_drive, cz_pulse, initial, step=0.025).state
    assert abs(np.vdot(coarse, fine)) ** 2 > 1 - 1e-6


def test_trajectory_records_every_step(small_pair_1, weak_drive):
    svc = DynamicsService()
    pulse = PulseShape(total_duration=10.0)
    initial = svc.product_state(small_pair_1, np.array([1.0]), np.array([1.0]))
    result = svc.propagate(small_pair_1, weak_drive, pulse, initial, step=0.5, trajectory=True)
    assert result.trajectory.shape == (21, 16)
    assert result.times[0] == 0.0 and result.times[-1] == pytest.approx(10.0)
    assert np.allclose(result.trajectory[-1], result.state)
    assert np.allclose(np.linalg.norm(result.trajectory, axis=1), 1.0)


def test_static_pair_2_barely_entangles(pair_2, cz_pulse):
    svc = DynamicsService()
    r0, r1 = svc.conditional_bloch_pair(pair_2, DriveConfig(drive_freq=5275.0), cz_pulse)
    assert svc.r_metric(r0, r1) < 0.05
    assert r0.norm > 0.99 and r1.norm > 0.99


def test_conditional_bloch_matches_pair(small_pair_1, weak_drive, cz_pulse):
    svc = DynamicsService()
    r0, r1 = svc.conditional_bloch_pair(small_pair_1, weak_drive, cz_pulse)
    single = svc.conditional_bloch(small_pair_1, weak_drive, cz_pulse, 1)
    assert np.allclose(single.as_array(), r1.as_array(), atol=1e-10)


def test_r_metric_and_conditional_phase():
    svc = DynamicsService()
    r0 = BlochVector(x=1.0, y=0.0, z=0.0)
    r1 = BlochVector(x=-1.0, y=0.0, z=0.0)
    assert svc.r_metric(r0, r1) == pytest.approx(2.0)
    assert abs(svc.conditional_phase(r0, r1)) == pytest.approx(math.pi)
    quarter = BlochVector(x=0.0, y=1.0, z=0.0)
    assert svc.conditional_phase(r0, quarter) == pytest.approx(math.pi / 2)


def test_ramsey_needs_enough_points(pair_1, weak_drive):
    with pytest.raises(InsufficientDataError):
        DynamicsService().ramsey_zz(pair_1, weak_drive, np.linspace(0.0, 1000.0, 10))


def test_ramsey_detects_aliasing(pair_1, weak_drive):
    # the ~6 MHz Stark-shifted target advances about half a turn per 80 ns sample
    times = np.linspace(0.0, 80.0 * 63, 64)
    with pytest.raises(AliasingError):
        DynamicsService().ramsey_zz(pair_1, weak_drive, times)


def test_ramsey_rejects_unknown_preparation(pair_1, weak_drive):
    with pytest.raises(ValueError):
        DynamicsService().ramsey_zz(pair_1, weak_drive, np.linspace(0.0, 1000.0, 64), preparation="slow")


def test_ramsey_rejects_non_positive_ramp(small_pair_1, weak_drive):
    with pytest.raises(ValueError):
        DynamicsService().ramsey_zz(small_pair_1, weak_drive, np.linspace(0.0, 1000.0, 64), ramp_ns=0.0)


def test_ramsey_without_coupling_sees_no_zz(small_pair_1, weak_drive):
    uncoupled = small_pair_1.with_coupling(0.0)
    trace = DynamicsService().ramsey_zz(uncoupled, weak_drive, np.linspace(0.0, 1000.0, 128), ramp_ns=40.0)
    assert trace.zeta_mhz == pytest.approx(0.0, abs=1e-6)


def test_sudden_ramsey_static_zz(pair_1):
    drive = DriveConfig(drive_freq=5650.0)
    expected = SpectrumService().zz_rate(pair_1, drive)
    times = np.linspace(0.0, 2.5e3 / expected, 256)
    trace = DynamicsService().ramsey_zz(pair_1, drive, times, preparation="sudden")
    assert trace.zeta_mhz == pytest.approx(expected, rel=0.02)


@pytest.mark.slow
@pytest.mark.parametrize("amp", [5.0, 10.0, 20.0])
def test_ramsey_matches_eigenvalues(pair_1, amp):
    drive = DriveConfig.off_target(pair_1, 40.0, amp_c=amp, amp_t=amp)
    expected = SpectrumService().zz_rate(pair_1, drive)
    t_max = 2.5e3 / abs(expected)
    trace = DynamicsService().ramsey_zz(pair_1, drive, np.linspace(0.0, t_max, 512))
    assert trace.zeta_mhz == pytest.approx(expected, rel=0.02)
    assert len(trace.rows()) == 512


def test_zz_angles_of_cz():
    alpha, beta, theta = DynamicsService().zz_angles(CZ)
    assert theta == pytest.approx(math.pi / 2)
    assert alpha == pytest.approx(-math.pi / 2) or alpha == pytest.approx(math.pi / 2)
    assert beta == pytest.approx(-math.pi / 2) or beta == pytest.approx(math.pi / 2)


def test_average_gate_fidelity_ignores_global_phase():
    svc = DynamicsService()
    assert svc.average_gate_fidelity(CZ, CZ) == pytest.approx(1.0)
    assert svc.average_gate_fidelity(np.exp(0.7j) * CZ, CZ) == pytest.approx(1.0)
    assert svc.average_gate_fidelity(np.eye(4, dtype=complex), CZ) == pytest.approx(0.4)


def test_computational_unitary_of_idle_pair_is_near_identity(small_pair_1):
    pulse = PulseShape(total_duration=20.0)
    u4 = DynamicsService().computational_unitary(small_pair_1, DriveConfig(drive_freq=5650.0), pulse, step=0.5)
    assert u4.shape == (4, 4)
    assert np.allclose(np.abs(np.diag(u4)), 1.0, atol=1e-2)
