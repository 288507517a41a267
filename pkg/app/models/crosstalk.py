from typing import Dict, List

from pydantic import BaseModel, Field

from app.models.system import CrosstalkCalibration


class CrosstalkFit(BaseModel):
    """Result of fitting the crosstalk model to a ZZ sweep"""

    calibration: CrosstalkCalibration
    uncertainties: Dict[str, float] = Field(default_factory=dict)
    chi2: float
    ssr_mhz2: float = Field(..., description="Unweighted sum of squared residuals, MHz^2")
    n_points: int
    nfev: int
    restarts: int
    message: str = ""
    poorly_constrained: List[str] = Field(default_factory=list)
