from typing import Any, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.presets import preset
from app.models.system import CrosstalkCalibration, PulseShape, SystemParams

SWEEP_AXES = ('phi_d', 'amp_c', 'amp_t', 'amp_global', 'drive_freq')


class GridRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float
    stop: float
    count: int = Field(..., ge=1)
    endpoint: bool = True

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count, endpoint=self.endpoint)


class SweepAxis(GridRange):
    """One sweep dimension; the name is checked against SWEEP_AXES when the sweep runs"""

    name: str


class BaseDrive(BaseModel):
    """Drive settings that sweep axes override.

    Amplitudes are line amplitudes: device units when a crosstalk calibration is
    configured, MHz otherwise. Give either drive_freq or delta_t (omega_t - omega_d).
    """

    model_config = ConfigDict(frozen=True)

    drive_freq: Optional[float] = Field(None, gt=0)
    delta_t: Optional[float] = None
    amp_c: float = 0.0
    amp_t: float = 0.0
    phi_d: float = 0.0

    def resolve_freq(self, sys: SystemParams) -> float:
        if self.drive_freq is not None:
            return self.drive_freq
        if self.delta_t is not None:
            return sys.target.freq_01 - self.delta_t
        return sys.target.freq_01 - 40.0


class CalibrationSpec(BaseModel):
    amplitudes: GridRange
    drive_freqs: GridRange
    phi_d: float = 0.0
    amp_ratio: float = Field(1.0, ge=0, description="a_t / a_c along the amplitude axis")
    min_r: float = 1.5
    band_level: float = 1.9
    refine: bool = True
    local_z_points: int = Field(32, ge=16)


class OutputSpec(BaseModel):
    path: Optional[str] = None
    format: Literal['csv', 'json'] = 'csv'


class RunConfig(BaseModel):
    """Run description read from a JSON file; CLI flags override the scalar fields"""

    system: SystemParams
    crosstalk: Optional[CrosstalkCalibration] = None
    pulse: Optional[PulseShape] = None
    drive: BaseDrive = Field(default_factory=BaseDrive)
    sweep: List[SweepAxis] = Field(default_factory=list)
    calibration: Optional[CalibrationSpec] = None
    output: OutputSpec = Field(default_factory=OutputSpec)
    seed: Optional[int] = None
    levels: Optional[int] = Field(None, ge=3)
    step_ns: Optional[float] = Field(None, gt=0)
    jobs: Optional[int] = Field(None, ge=0)

    @field_validator('system', mode='before')
    @classmethod
    def _named_system(cls, value: Any) -> Any:
        if isinstance(value, str):
            return preset(value)
        if isinstance(value, dict) and set(value) <= {'preset', 'levels'} and 'preset' in value:
            return preset(value['preset'], value.get('levels'))
        return value

    def resolved_system(self) -> SystemParams:
        return self.system.with_levels(self.levels) if self.levels else self.system

    def with_overrides(self, **overrides: Any) -> 'RunConfig':
        """Copy with the non-None overrides applied (CLI flags win over the file)"""
        update = {k: v for k, v in overrides.items() if v is not None}
        return self.model_validate({**self.model_dump(), **update}) if update else self
