from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class RMapCell(BaseModel):
    a: float
    freq_mhz: float
    r_value: Optional[float] = None
    flag: str = 'ok'


class RMap(BaseModel):
    """R over the (amplitude, drive frequency) grid, amplitude-major order"""

    amplitudes: List[float]
    drive_freqs: List[float]
    cells: List[RMapCell]

    @property
    def flagged(self) -> int:
        return sum(1 for c in self.cells if c.flag != 'ok')

    def value(self, i: int, j: int) -> Optional[float]:
        return self.cells[i * len(self.drive_freqs) + j].r_value

    def rows(self) -> List[Dict[str, Optional[float]]]:
        return [{'a': c.a, 'freq_mhz': c.freq_mhz, 'r_value': c.r_value} for c in self.cells]


class CZPoint(BaseModel):
    amplitude: float
    drive_freq: float
    r_value: float
    conditional_phase: Optional[float] = None


class LocalZCorrection(BaseModel):
    phi_zi: float
    phi_iz: float
    contrast_zi: float
    contrast_iz: float


class CalibrationReport(BaseModel):
    selected: CZPoint
    refined: CZPoint
    band_width_mhz: float
    band_level: float
    local_z: LocalZCorrection
    zz_angles: Dict[str, float]
    fidelity_raw: float
    fidelity_compiled: float
    leakage: float = Field(..., description="1 - Tr(U4^dag U4)/4 of the computational block")
    flagged_cells: int
