from fastapi import APIRouter, Depends
import logging

from app.api.deps import get_perturbation_service, get_spectrum_service
from app.core.errors import ResonanceError
from app.models.requests import (
    CRConditionalRequest,
    PerturbativeRequest,
    PerturbativeResponse,
    ZZRateRequest,
    ZZRateResponse,
)
from app.services.perturbation_service import PerturbationService
from app.services.spectrum_service import SpectrumService

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/rate", response_model=ZZRateResponse)
def zz_rate(
    request: ZZRateRequest,
    spectra: SpectrumService = Depends(get_spectrum_service),
    perturbation: PerturbationService = Depends(get_perturbation_service)
):
    """ZZ rate from exact diagonalization, with perturbative values alongside"""
    sys = request.system.with_levels(request.levels) if request.levels else request.system
    spectrum = spectra.labeled_spectrum(sys, request.drive)
    try:
        zeta2 = perturbation.zeta2(sys)
        zeta_pt = zeta2 + perturbation.zeta3(sys, request.drive)
    except ResonanceError as e:
        logger.info(f"Perturbative value skipped: {e}")
        zeta2 = zeta_pt = None
    return ZZRateResponse(
        zeta_mhz=spectrum.zeta(),
        zeta2_mhz=zeta2,
        zeta_pt_mhz=zeta_pt,
        flagged=spectrum.flagged,
        flag=spectrum.flag,
    )


@router.post("/perturbative", response_model=PerturbativeResponse)
def zz_perturbative(
    request: PerturbativeRequest,
    perturbation: PerturbationService = Depends(get_perturbation_service)
):
    zeta2 = perturbation.zeta2(request.system)
    zeta3 = perturbation.zeta3(request.system, request.drive)
    return PerturbativeResponse(zeta2=zeta2, zeta3=zeta3, total=zeta2 + zeta3)


@router.post("/cr-conditional")
def zz_cr_conditional(
    request: CRConditionalRequest,
    perturbation: PerturbationService = Depends(get_perturbation_service)
):
    """Conditional-Stark ZZ from explicit conditional amplitudes"""
    zeta = perturbation.cr_conditional_zz(request, request.eps_t, request.delta_t)
    return {"zeta_mhz": zeta, "mu": [request.mu.real, request.mu.imag]}
