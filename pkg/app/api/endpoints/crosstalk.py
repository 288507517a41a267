from fastapi import APIRouter, Depends

from app.api.deps import get_crosstalk_service
from app.models.requests import CrosstalkApplyRequest, CrosstalkApplyResponse
from app.services.crosstalk_service import CrosstalkService

router = APIRouter()


@router.post("/apply", response_model=CrosstalkApplyResponse)
def apply_crosstalk(
    request: CrosstalkApplyRequest,
    crosstalk: CrosstalkService = Depends(get_crosstalk_service)
):
    """On-chip field amplitudes for the given line amplitudes"""
    eps_c, eps_t = crosstalk.apply_crosstalk(
        request.crosstalk, request.a_c, request.a_t, request.phi_d, request.scale
    )
    return CrosstalkApplyResponse(eps_c=eps_c, eps_t=eps_t)
