import cmath
import math
from typing import Annotated, Any, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_core import core_schema

from app.utils.helpers import to_complex, wrap_phase


class _ComplexAmplitude:
    """Pydantic hook: complex values accepted in any ``to_complex`` format, dumped as [re, im] in JSON"""

    @classmethod
    def __get_pydantic_core_schema__(cls, source_type: Any, handler: Any) -> core_schema.CoreSchema:
        return core_schema.no_info_plain_validator_function(
            cls._validate,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda z: [z.real, z.imag], when_used='json'
            ),
        )

    @classmethod
    def __get_pydantic_json_schema__(cls, _schema: Any, _handler: Any) -> dict:
        return {'type': 'array', 'items': {'type': 'number'}, 'minItems': 2, 'maxItems': 2}

    @staticmethod
    def _validate(value: Any) -> complex:
        z = to_complex(value)
        if not cmath.isfinite(z):
            raise ValueError('amplitude must be finite')
        return z


ComplexMHz = Annotated[complex, _ComplexAmplitude]


class TransmonParams(BaseModel):
    """Duffing-oscillator transmon. Frequencies are ordinary frequencies in MHz."""

    model_config = ConfigDict(frozen=True)

    freq_01: float = Field(..., gt=0, description="0-1 transition frequency, MHz")
    anharm: float = Field(..., lt=0, description="Anharmonicity, MHz")
    levels: int = Field(7, ge=3, description="Truncation")


class SystemParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    control: TransmonParams
    target: TransmonParams
    coupling_J: float = Field(..., ge=0, description="Exchange coupling, MHz")

    @model_validator(mode='after')
    def _control_is_higher(self) -> 'SystemParams':
        if self.control.freq_01 <= self.target.freq_01:
            raise ValueError('control transmon must have the higher frequency')
        return self

    @property
    def detuning(self) -> float:
        return self.control.freq_01 - self.target.freq_01

    @property
    def dims(self) -> Tuple[int, int]:
        return self.control.levels, self.target.levels

    def with_levels(self, levels: int) -> 'SystemParams':
        return SystemParams(
            control=self.control.model_copy(update={'levels': levels}),
            target=self.target.model_copy(update={'levels': levels}),
            coupling_J=self.coupling_J,
        )

    def with_coupling(self, coupling_J: float) -> 'SystemParams':
        return SystemParams(control=self.control, target=self.target, coupling_J=coupling_J)


class DriveConfig(BaseModel):
    """Constant drive in the frame of drive_freq; phi_d = arg(eps_t) - arg(eps_c)"""

    model_config = ConfigDict(frozen=True)

    drive_freq: float = Field(..., gt=0, description="MHz")
    eps_c: ComplexMHz = 0j
    eps_t: ComplexMHz = 0j

    @classmethod
    def from_polar(cls, drive_freq: float, amp_c: float, amp_t: float, phi_d: float = 0.0) -> 'DriveConfig':
        return cls(drive_freq=drive_freq, eps_c=complex(amp_c), eps_t=cmath.rect(amp_t, phi_d))

    @classmethod
    def off_target(cls, sys: SystemParams, delta_t: float, amp_c: float = 0.0,
                   amp_t: float = 0.0, phi_d: float = 0.0) -> 'DriveConfig':
        """Drive detuned by delta_t below the target, i.e. omega_d = omega_t - delta_t"""
        return cls.from_polar(sys.target.freq_01 - delta_t, amp_c, amp_t, phi_d)

    @property
    def phi_d(self) -> float:
        if self.eps_c == 0 or self.eps_t == 0:
            return 0.0
        return wrap_phase(cmath.phase(self.eps_t) - cmath.phase(self.eps_c))

    def delta_c(self, sys: SystemParams) -> float:
        return sys.control.freq_01 - self.drive_freq

    def delta_t(self, sys: SystemParams) -> float:
        return sys.target.freq_01 - self.drive_freq

    def scaled(self, factor: float) -> 'DriveConfig':
        return DriveConfig(drive_freq=self.drive_freq, eps_c=self.eps_c * factor, eps_t=self.eps_t * factor)


class PulseShape(BaseModel):
    """Raised-cosine ramps around a flat top"""

    model_config = ConfigDict(frozen=True)

    total_duration: float = Field(..., gt=0, description="ns")
    flat_fraction: float = Field(0.4, ge=0, le=1)

    @property
    def ramp_duration(self) -> float:
        return 0.5 * (1.0 - self.flat_fraction) * self.total_duration

    @property
    def flat_start(self) -> float:
        return self.ramp_duration

    @property
    def flat_end(self) -> float:
        return self.total_duration - self.ramp_duration


class BlochVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float

    @model_validator(mode='after')
    def _inside_ball(self) -> 'BlochVector':
        if self.norm > 1 + 1e-9:
            raise ValueError(f'Bloch vector norm {self.norm} exceeds 1')
        return self

    @property
    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


class CrosstalkMatrix(BaseModel):
    """Line-to-chip mixing; phases are canonicalized into (-pi, pi]"""

    model_config = ConfigDict(frozen=True)

    c_ct: float = Field(0.0, ge=0)
    phi_ct: float = 0.0
    c_tc: float = Field(0.0, ge=0)
    phi_tc: float = 0.0
    theta_c: float = 0.0

    @field_validator('phi_ct', 'phi_tc', 'theta_c')
    @classmethod
    def _canonical_phase(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError('phase must be finite')
        return wrap_phase(value)

    @classmethod
    def identity(cls) -> 'CrosstalkMatrix':
        return cls()

    def matrix(self) -> np.ndarray:
        return np.array([
            [cmath.exp(1j * self.theta_c), self.c_ct * cmath.exp(1j * self.phi_ct)],
            [self.c_tc * cmath.exp(1j * self.phi_tc), 1.0],
        ], dtype=complex)


class CrosstalkCalibration(BaseModel):
    """Crosstalk matrix plus the device-unit to MHz scale"""

    model_config = ConfigDict(frozen=True)

    matrix: CrosstalkMatrix = Field(default_factory=CrosstalkMatrix)
    scale: float = Field(1.0, gt=0, description="MHz per device unit")


class ZZSweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    a_c: float
    a_t: float
    phi_d: float
    zeta_measured: float = Field(..., alias='zeta_mhz')
    zeta_uncertainty: float = Field(..., gt=0, alias='sigma_mhz')


class ConditionalAmplitudes(BaseModel):
    """Control-state-conditional drive on the target (eps_tilde_n for control in |n>)"""

    model_config = ConfigDict(frozen=True)

    eps_tilde_0: ComplexMHz
    eps_tilde_1: ComplexMHz

    @property
    def mu(self) -> complex:
        return (self.eps_tilde_0 - self.eps_tilde_1) / 2
