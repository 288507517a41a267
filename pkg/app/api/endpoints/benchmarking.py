from fastapi import APIRouter, Depends

from app.api.deps import get_benchmarking_service
from app.models.benchmarking import CycleBenchmarkReport, ErrorBudget, InterleavedResult, LeakagePerGate
from app.models.requests import CBRequest, CoherenceLimitRequest, IRBRequest, LeakagePerGateRequest, XRBRequest
from app.services.benchmarking_service import BenchmarkingService

router = APIRouter()


@router.post("/irb", response_model=InterleavedResult)
def interleaved_fidelity(
    request: IRBRequest,
    benchmarking: BenchmarkingService = Depends(get_benchmarking_service)
):
    return benchmarking.interleaved_fidelity(request.p_ref, request.p_int, request.d)


@router.post("/cb", response_model=CycleBenchmarkReport)
def cycle_benchmark(
    request: CBRequest,
    benchmarking: BenchmarkingService = Depends(get_benchmarking_service)
):
    return benchmarking.cb_analyze(request.decays, request.d)


@router.post("/xrb", response_model=ErrorBudget)
def xrb_budget(
    request: XRBRequest,
    benchmarking: BenchmarkingService = Depends(get_benchmarking_service)
):
    """Coherent/stochastic split of the process infidelity"""
    return benchmarking.xrb_decompose(request.p_rb, request.unitarity, request.d)


@router.post("/coherence-limit")
def coherence_limit(
    request: CoherenceLimitRequest,
    benchmarking: BenchmarkingService = Depends(get_benchmarking_service)
):
    e_decoh = benchmarking.coherence_limit(
        request.t1_c, request.t2_c, request.t1_t, request.t2_t, request.gate_len, request.d
    )
    return {"e_decoh": e_decoh}


@router.post("/leakage-per-gate", response_model=LeakagePerGate)
def leakage_per_gate(
    request: LeakagePerGateRequest,
    benchmarking: BenchmarkingService = Depends(get_benchmarking_service)
):
    return benchmarking.leakage_per_gate(request.gamma_up_interleaved, request.gamma_up_reference)
