from app.services.benchmarking_service import benchmarking_service
from app.services.crosstalk_service import crosstalk_service
from app.services.perturbation_service import perturbation_service
from app.services.spectrum_service import spectrum_service


def get_spectrum_service():
    """Dependency for the exact-diagonalization service"""
    return spectrum_service


def get_perturbation_service():
    return perturbation_service


def get_crosstalk_service():
    return crosstalk_service


def get_benchmarking_service():
    """Dependency for benchmarking fits and fidelity arithmetic"""
    return benchmarking_service
