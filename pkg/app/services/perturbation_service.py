from typing import Dict
import logging
import math

from app.core.errors import CalibrationError, ContractViolationError, ResonanceError
from app.models.system import ConditionalAmplitudes, DriveConfig, SystemParams

logger = logging.getLogger(__name__)

RESONANCE_TOLERANCE_MHZ = 1e-6


def _check_denominators(factors: Dict[str, float]) -> None:
    for name, value in factors.items():
        if abs(value) < RESONANCE_TOLERANCE_MHZ:
            logger.error(f"Resonant denominator {name} = {value:.3g} MHz")
            raise ResonanceError(name, value)


class PerturbationService:
    """Closed-form ZZ estimates from second/third-order perturbation theory and the CR heuristic"""

    def zeta2(self, sys: SystemParams) -> float:
        """Static ZZ: 2 J^2 (1/(Delta - eta_t) - 1/(Delta + eta_c))"""
        delta = sys.detuning
        _check_denominators({
            'Delta - eta_t': delta - sys.target.anharm,
            'Delta + eta_c': delta + sys.control.anharm,
        })
        j = sys.coupling_J
        return 2.0 * j * j * (1.0 / (delta - sys.target.anharm) - 1.0 / (delta + sys.control.anharm))

    def zeta3_coefficient(self, sys: SystemParams, drive_freq: float) -> float:
        """zeta3 per unit |eps_c| |eps_t| cos(phi), MHz^-1"""
        eta_c, eta_t = sys.control.anharm, sys.target.anharm
        delta_c = sys.control.freq_01 - drive_freq
        delta_t = sys.target.freq_01 - drive_freq
        _check_denominators({
            'Delta_c': delta_c,
            'Delta_t': delta_t,
            'Delta_c + eta_c': delta_c + eta_c,
            'Delta_t + eta_t': delta_t + eta_t,
        })
        return 8.0 * eta_t * eta_c * sys.coupling_J / (delta_c * delta_t * (delta_c + eta_c) * (delta_t + eta_t))

    def zeta3(self, sys: SystemParams, drive: DriveConfig) -> float:
        """Drive-induced ZZ to third order; zero whenever either amplitude vanishes"""
        coefficient = self.zeta3_coefficient(sys, drive.drive_freq)
        return coefficient * abs(drive.eps_c) * abs(drive.eps_t) * math.cos(drive.phi_d)

    def zeta_pt_total(self, sys: SystemParams, drive: DriveConfig) -> float:
        return self.zeta2(sys) + self.zeta3(sys, drive)

    def cr_conditional_zz(self, amps: ConditionalAmplitudes, eps_t: float, delta_t: float) -> float:
        """ZZ from a control-conditional drive on the target:
        ((e0 + eps_t)^2 - (e1 + eps_t)^2) / Delta_t, real amplitudes.
        """
        if amps.eps_tilde_0.imag != 0 or amps.eps_tilde_1.imag != 0 or complex(eps_t).imag != 0:
            raise ContractViolationError("cr_conditional_zz takes real amplitudes (phases absorbed)")
        _check_denominators({'Delta_t': delta_t})
        e0, e1, et = amps.eps_tilde_0.real, amps.eps_tilde_1.real, complex(eps_t).real
        return ((e0 + et) ** 2 - (e1 + et) ** 2) / delta_t

    def cancellation_amplitude(self, sys: SystemParams, drive_freq: float, phi_d: float) -> float:
        """Equal drive amplitude |eps| on both transmons where zeta2 + zeta3 = 0"""
        static = self.zeta2(sys)
        per_unit = self.zeta3_coefficient(sys, drive_freq) * math.cos(phi_d)
        if per_unit == 0 or -static / per_unit <= 0:
            raise CalibrationError(
                f"No ZZ cancellation at phi_d={phi_d:.4g} rad, omega_d={drive_freq} MHz "
                f"(zeta2={static:.4g}, zeta3/eps^2={per_unit:.4g})"
            )
        amplitude = math.sqrt(-static / per_unit)
        logger.info(f"Cancellation amplitude {amplitude:.6g} MHz at phi_d={phi_d:.4g}, omega_d={drive_freq}")
        return amplitude

    def optimal_drive_phase(self, sys: SystemParams, drive: DriveConfig) -> float:
        """Relative drive phase (0 or pi) that maximizes |zeta2 + zeta3| at the drive's amplitudes"""
        static = self.zeta2(sys)
        driven = self.zeta3_coefficient(sys, drive.drive_freq) * abs(drive.eps_c) * abs(drive.eps_t)
        return 0.0 if abs(static + driven) >= abs(static - driven) else math.pi


perturbation_service = PerturbationService()
