import math

import pytest

from app.core.errors import CalibrationError, ContractViolationError, ResonanceError
from app.models.system import ConditionalAmplitudes, DriveConfig, SystemParams, TransmonParams
from app.services.perturbation_service import PerturbationService


def test_zeta2_pair_1(pair_1):
    assert PerturbationService().zeta2(pair_1) == pytest.approx(0.326, abs=1e-3)


def test_zeta2_pair_2(pair_2):
    assert PerturbationService().zeta2(pair_2) == pytest.approx(0.1707, rel=0.02)


def test_zeta2_resonance_raises():
    # Delta + eta_c = 0
    sys = SystemParams(
        control=TransmonParams(freq_01=5250.0, anharm=-250.0),
        target=TransmonParams(freq_01=5000.0, anharm=-240.0),
        coupling_J=3.0,
    )
    with pytest.raises(ResonanceError) as exc:
        PerturbationService().zeta2(sys)
    assert exc.value.factor == 'Delta + eta_c'


def test_zeta3_pair_1_weak_drive(pair_1, weak_drive):
    assert PerturbationService().zeta3(pair_1, weak_drive) == pytest.approx(2.099, rel=2e-3)


def test_zeta3_vanishes_without_control_drive(pair_1):
    drive = DriveConfig.off_target(pair_1, 40.0, amp_c=0.0, amp_t=10.0)
    assert PerturbationService().zeta3(pair_1, drive) == 0.0


def test_zeta3_sign_follows_phase(pair_1):
    svc = PerturbationService()
    in_phase = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 10.0, 10.0, 0.0))
    out_of_phase = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 10.0, 10.0, math.pi))
    quadrature = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 10.0, 10.0, math.pi / 2))
    assert out_of_phase == pytest.approx(-in_phase)
    assert quadrature == pytest.approx(0.0, abs=1e-12)


def test_zeta3_is_bilinear_in_amplitudes(pair_1):
    svc = PerturbationService()
    base = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 6.0, 9.0, 0.4))
    doubled_c = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 12.0, 9.0, 0.4))
    doubled_t = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 6.0, 18.0, 0.4))
    assert doubled_c == pytest.approx(2 * base, rel=1e-12)
    assert doubled_t == pytest.approx(2 * base, rel=1e-12)


@pytest.mark.parametrize("phi_d", [0.3, 1.2, 2.5, -2.0])
def test_zeta3_follows_cosine_of_relative_phase(pair_1, phi_d):
    svc = PerturbationService()
    in_phase = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 10.0, 10.0, 0.0))
    shifted = svc.zeta3(pair_1, DriveConfig.off_target(pair_1, 40.0, 10.0, 10.0, phi_d))
    assert shifted == pytest.approx(in_phase * math.cos(phi_d), rel=1e-9)


def test_zeta3_drive_on_target_is_resonant(pair_1):
    with pytest.raises(ResonanceError):
        PerturbationService().zeta3_coefficient(pair_1, pair_1.target.freq_01)


def test_pair_2_coefficient(pair_2):
    coefficient = PerturbationService().zeta3_coefficient(pair_2, pair_2.target.freq_01 - 40.0)
    assert coefficient == pytest.approx(0.01197, rel=5e-3)


def test_cr_conditional_zz():
    amps = ConditionalAmplitudes(eps_tilde_0=1.0, eps_tilde_1=-1.0)
    assert amps.mu == pytest.approx(1.0)
    assert PerturbationService().cr_conditional_zz(amps, 5.0, 40.0) == pytest.approx(0.5)


@pytest.mark.parametrize("e0, e1", [(1.0, -1.0), (2.5, 0.5), (-0.3, 1.7)])
def test_cr_conditional_zz_slope_in_target_amplitude(e0, e1):
    svc = PerturbationService()
    amps = ConditionalAmplitudes(eps_tilde_0=e0, eps_tilde_1=e1)
    delta_t = 40.0
    zeta = [svc.cr_conditional_zz(amps, eps_t, delta_t) for eps_t in (0.0, 3.0, 7.0)]
    slope = 4 * amps.mu.real / delta_t
    assert zeta[1] - zeta[0] == pytest.approx(3.0 * slope, rel=1e-9)
    assert zeta[2] - zeta[0] == pytest.approx(7.0 * slope, rel=1e-9)


def test_cr_conditional_zz_rejects_complex_amplitudes():
    amps = ConditionalAmplitudes(eps_tilde_0=[1.0, 0.5], eps_tilde_1=-1.0)
    with pytest.raises(ContractViolationError):
        PerturbationService().cr_conditional_zz(amps, 5.0, 40.0)


def test_cr_conditional_zz_resonant():
    amps = ConditionalAmplitudes(eps_tilde_0=1.0, eps_tilde_1=-1.0)
    with pytest.raises(ResonanceError):
        PerturbationService().cr_conditional_zz(amps, 5.0, 0.0)


def test_cancellation_amplitude_zeroes_total(pair_1):
    svc = PerturbationService()
    drive_freq = pair_1.target.freq_01 - 40.0
    amplitude = svc.cancellation_amplitude(pair_1, drive_freq, math.pi)
    assert amplitude == pytest.approx(3.94, abs=0.01)
    drive = DriveConfig.from_polar(drive_freq, amplitude, amplitude, math.pi)
    assert svc.zeta_pt_total(pair_1, drive) == pytest.approx(0.0, abs=1e-12)


def test_cancellation_impossible_in_phase(pair_1):
    with pytest.raises(CalibrationError):
        PerturbationService().cancellation_amplitude(pair_1, pair_1.target.freq_01 - 40.0, 0.0)


def test_optimal_drive_phase(pair_1, weak_drive):
    assert PerturbationService().optimal_drive_phase(pair_1, weak_drive) == 0.0
