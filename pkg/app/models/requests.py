from typing import Dict, Optional

from pydantic import BaseModel, Field

from app.models.system import ComplexMHz, ConditionalAmplitudes, CrosstalkMatrix, DriveConfig, SystemParams


class ZZRateRequest(BaseModel):
    system: SystemParams
    drive: DriveConfig
    levels: Optional[int] = Field(None, ge=3)


class ZZRateResponse(BaseModel):
    zeta_mhz: float
    zeta2_mhz: Optional[float] = None
    zeta_pt_mhz: Optional[float] = None
    flagged: bool
    flag: str


class PerturbativeRequest(BaseModel):
    system: SystemParams
    drive: DriveConfig


class PerturbativeResponse(BaseModel):
    zeta2: float
    zeta3: float
    total: float


class CRConditionalRequest(ConditionalAmplitudes):
    eps_t: float
    delta_t: float


class CrosstalkApplyRequest(BaseModel):
    crosstalk: CrosstalkMatrix = Field(default_factory=CrosstalkMatrix)
    a_c: float
    a_t: float
    phi_d: float = 0.0
    scale: float = Field(1.0, gt=0)


class CrosstalkApplyResponse(BaseModel):
    eps_c: ComplexMHz
    eps_t: ComplexMHz


class IRBRequest(BaseModel):
    p_ref: float
    p_int: float
    d: int = Field(4, ge=2)


class CBRequest(BaseModel):
    decays: Dict[str, float]
    d: int = Field(4, ge=2)


class XRBRequest(BaseModel):
    p_rb: float
    unitarity: float
    d: int = Field(4, ge=2)


class CoherenceLimitRequest(BaseModel):
    t1_c: float = Field(..., gt=0, description="us")
    t2_c: float = Field(..., gt=0)
    t1_t: float = Field(..., gt=0)
    t2_t: float = Field(..., gt=0)
    gate_len: float = Field(..., ge=0, description="us")
    d: int = Field(4, ge=2)


class LeakagePerGateRequest(BaseModel):
    gamma_up_interleaved: float = Field(..., ge=0)
    gamma_up_reference: float = Field(..., ge=0)
