from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple
import logging

import numpy as np

from app.core.errors import ContractViolationError, InvalidTruncationError
from app.models.system import DriveConfig, SystemParams

logger = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix on the control (x) target product space, MHz"""

    entries: np.ndarray
    dims: Tuple[int, int]

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.dim, self.dim):
            raise ContractViolationError(f"Operator shape {entries.shape} does not match dims {self.dims}")
        scale = np.max(np.abs(entries)) if entries.size else 0.0
        if np.max(np.abs(entries - entries.conj().T), initial=0.0) > HERMITIAN_RTOL * max(scale, 1e-300):
            raise ContractViolationError("Operator is not Hermitian")
        object.__setattr__(self, 'entries', entries)

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]


@lru_cache(maxsize=32)
def _ladder(levels: int) -> Tuple[np.ndarray, np.ndarray]:
    a = np.diag(np.sqrt(np.arange(1, levels, dtype=float)), k=1).astype(complex)
    a_dagger = a.conj().T.copy()
    a.setflags(write=False)
    a_dagger.setflags(write=False)
    return a, a_dagger


class HamiltonianService:
    def ladder_operator(self, levels: int) -> Tuple[np.ndarray, np.ndarray]:
        """Truncated annihilation/creation pair, a[n-1, n] = sqrt(n)"""
        if levels < 2:
            raise InvalidTruncationError(f"Need at least 2 levels, got {levels}")
        return _ladder(levels)

    def mode_operators(self, sys: SystemParams) -> Tuple[np.ndarray, np.ndarray]:
        """Annihilation operators of control and target embedded in the product space"""
        n_c, n_t = sys.dims
        a, _ = self.ladder_operator(n_c)
        b, _ = self.ladder_operator(n_t)
        return np.kron(a, np.eye(n_t)), np.kron(np.eye(n_c), b)

    def bare_diagonal(self, sys: SystemParams, drive_freq: float) -> np.ndarray:
        """Uncoupled Duffing energies in the drive frame, ordered as index n_c * levels_t + n_t"""
        n_c, n_t = sys.dims
        levels_c = np.arange(n_c, dtype=float)
        levels_t = np.arange(n_t, dtype=float)
        e_c = (sys.control.freq_01 - drive_freq) * levels_c + 0.5 * sys.control.anharm * levels_c * (levels_c - 1)
        e_t = (sys.target.freq_01 - drive_freq) * levels_t + 0.5 * sys.target.anharm * levels_t * (levels_t - 1)
        return (e_c[:, None] + e_t[None, :]).ravel()

    def frame_diagonal(self, sys: SystemParams, drive_freq: float) -> np.ndarray:
        """Linear part only: sum_i (omega_i - omega_d) n_i, used to move into the qubits' own frames"""
        n_c, n_t = sys.dims
        e_c = (sys.control.freq_01 - drive_freq) * np.arange(n_c, dtype=float)
        e_t = (sys.target.freq_01 - drive_freq) * np.arange(n_t, dtype=float)
        return (e_c[:, None] + e_t[None, :]).ravel()

    def static_part(self, sys: SystemParams, drive_freq: float) -> np.ndarray:
        """Duffing terms plus exchange coupling, no drive"""
        a_c, a_t = self.mode_operators(sys)
        h = np.diag(self.bare_diagonal(sys, drive_freq)).astype(complex)
        h += sys.coupling_J * (a_c.conj().T @ a_t + a_c @ a_t.conj().T)
        return h

    def drive_part(self, sys: SystemParams, eps_c: complex, eps_t: complex) -> np.ndarray:
        a_c, a_t = self.mode_operators(sys)
        h = eps_c * a_c + np.conj(eps_c) * a_c.conj().T
        h = h + eps_t * a_t + np.conj(eps_t) * a_t.conj().T
        return h

    def build_hamiltonian(self, sys: SystemParams, drive: DriveConfig) -> HermitianOperator:
        """Driven two-transmon Hamiltonian H/2pi in the frame of the drive, MHz"""
        h = self.static_part(sys, drive.drive_freq) + self.drive_part(sys, drive.eps_c, drive.eps_t)
        h = 0.5 * (h + h.conj().T)
        logger.debug(
            f"Built Hamiltonian dim={h.shape[0]} omega_d={drive.drive_freq} "
            f"eps_c={drive.eps_c:.4g} eps_t={drive.eps_t:.4g}"
        )
        return HermitianOperator(entries=h, dims=sys.dims)

    def bare_index(self, sys: SystemParams, n_c: int, n_t: int) -> int:
        return n_c * sys.target.levels + n_t


hamiltonian_service = HamiltonianService()
