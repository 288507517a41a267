from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union
import logging

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from app.core.errors import ContractViolationError, LabelingError
from app.models.system import DriveConfig, SystemParams
from app.services.hamiltonian_service import HERMITIAN_RTOL, HamiltonianService, HermitianOperator, hamiltonian_service

logger = logging.getLogger(__name__)

Label = Tuple[int, int]
COMPUTATIONAL_LABELS: Tuple[Label, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))

# Below this bare-state overlap a label counts as lost to hybridization
OVERLAP_THRESHOLD = 0.5
# A colliding label left with less than this after re-assignment has no eigenvector of its own
RESOLUTION_FLOOR = 0.05
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class LabeledSpectrum:
    """Dressed energies of the computational states, keyed by bare label (n_c, n_t)"""

    energies: Dict[Label, float]
    overlaps: Dict[Label, float]
    vectors: Dict[Label, np.ndarray] = field(repr=False)
    continued: bool = False
    low_overlap: bool = False

    @property
    def flagged(self) -> bool:
        return self.continued or self.low_overlap

    @property
    def flag(self) -> str:
        if self.continued:
            return 'continued'
        if self.low_overlap:
            return 'low_overlap'
        return 'ok'

    def zeta(self) -> float:
        e = self.energies
        return e[(1, 1)] + e[(0, 0)] - e[(0, 1)] - e[(1, 0)]


class SpectrumService:
    def __init__(self, hamiltonians: HamiltonianService | None = None):
        self.hamiltonians = hamiltonians or hamiltonian_service

    def eigendecompose(self, h: Union[HermitianOperator, np.ndarray]) -> Eigensystem:
        """Dense Hermitian eigensolve, eigenvalues ascending"""
        entries = h.entries if isinstance(h, HermitianOperator) else np.asarray(h, dtype=complex)
        scale = np.max(np.abs(entries)) if entries.size else 0.0
        if not isinstance(h, HermitianOperator):
            if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
                raise ContractViolationError(f"Expected a square matrix, got shape {entries.shape}")
            if np.max(np.abs(entries - entries.conj().T), initial=0.0) > HERMITIAN_RTOL * max(scale, 1e-300):
                raise ContractViolationError("eigendecompose requires a Hermitian matrix")

        values, vectors = eigh(entries)
        residual = np.max(np.abs(entries @ vectors - vectors * values), initial=0.0)
        if residual > RESIDUAL_RTOL * max(scale, 1e-300):
            raise ContractViolationError(f"Eigen-decomposition residual {residual:.3g} too large")
        return Eigensystem(values=values, vectors=vectors)

    def label_states(
        self,
        eig: Eigensystem,
        sys: SystemParams,
        reference: Optional[LabeledSpectrum] = None,
    ) -> LabeledSpectrum:
        """Assign dressed eigenvectors to the computational bare labels.

        Max-overlap with bare product states; when any best overlap drops
        below 0.5 and a reference is given, labels follow the reference
        eigenvectors instead (continuation) and the result is flagged.
        """
        rows = [self.hamiltonians.bare_index(sys, *label) for label in COMPUTATIONAL_LABELS]
        bare_weights = np.abs(eig.vectors[rows, :]) ** 2
        best = bare_weights.max(axis=1)

        continued = False
        weights = bare_weights
        if best.min() < OVERLAP_THRESHOLD and reference is not None:
            refs = np.array([reference.vectors[label] for label in COMPUTATIONAL_LABELS])
            weights = np.abs(refs.conj() @ eig.vectors) ** 2
            continued = True
            logger.debug(f"Continuation labeling used (min bare overlap {best.min():.3f})")

        choice = weights.argmax(axis=1)
        if len(set(choice.tolist())) < len(choice):
            choice = self._resolve_collisions(weights, choice)

        overlaps = {label: float(bare_weights[i, choice[i]]) for i, label in enumerate(COMPUTATIONAL_LABELS)}
        low_overlap = min(overlaps.values()) < OVERLAP_THRESHOLD
        return LabeledSpectrum(
            energies={label: float(eig.values[choice[i]]) for i, label in enumerate(COMPUTATIONAL_LABELS)},
            overlaps=overlaps,
            vectors={label: eig.vectors[:, choice[i]].copy() for i, label in enumerate(COMPUTATIONAL_LABELS)},
            continued=continued,
            low_overlap=low_overlap,
        )

    def _resolve_collisions(self, weights: np.ndarray, choice: np.ndarray) -> np.ndarray:
        values, counts = np.unique(choice, return_counts=True)
        colliding = [i for i, c in enumerate(choice) if c in set(values[counts > 1].tolist())]
        _, columns = linear_sum_assignment(-weights)
        stranded = [i for i in colliding if weights[i, columns[i]] < RESOLUTION_FLOOR]
        if stranded:
            labels = [COMPUTATIONAL_LABELS[i] for i in colliding]
            logger.error(f"Labeling failed for {labels}")
            raise LabelingError(labels)
        logger.debug(f"Resolved labeling collision for {[COMPUTATIONAL_LABELS[i] for i in colliding]}")
        return columns

    def labeled_spectrum(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        reference: Optional[LabeledSpectrum] = None,
    ) -> LabeledSpectrum:
        h = self.hamiltonians.build_hamiltonian(sys, drive)
        return self.label_states(self.eigendecompose(h), sys, reference)

    def zz_rate(self, sys: SystemParams, drive: DriveConfig, reference: Optional[LabeledSpectrum] = None) -> float:
        """zeta = E11 + E00 - E01 - E10 in MHz, sign kept"""
        return self.labeled_spectrum(sys, drive, reference).zeta()

    def zz_rate_continued(self, sys: SystemParams, drive: DriveConfig, steps: int = 20) -> LabeledSpectrum:
        """Label a strong-drive point by ramping both amplitudes up from zero"""
        spectrum = None
        for k in range(steps + 1):
            spectrum = self.labeled_spectrum(sys, drive.scaled(k / steps), spectrum)
        return spectrum

    def truncation_convergence(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        levels_pair: Tuple[int, int] = (7, 9),
    ) -> Tuple[float, float, float]:
        low = self.zz_rate(sys.with_levels(levels_pair[0]), drive)
        high = self.zz_rate(sys.with_levels(levels_pair[1]), drive)
        relative = abs(low - high) / abs(high) if high != 0 else abs(low - high)
        logger.info(f"Truncation check {levels_pair}: zeta {low:.6g} vs {high:.6g} MHz (rel {relative:.2e})")
        return low, high, relative


spectrum_service = SpectrumService()
