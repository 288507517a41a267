from concurrent.futures import ProcessPoolExecutor
from typing import Literal, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar

from app.core.config import settings
from app.core.errors import CalibrationError, InsufficientDataError, LowContrastError, ZZLabError
from app.models.calibration import CalibrationReport, CZPoint, LocalZCorrection, RMap, RMapCell
from app.models.run import CalibrationSpec
from app.models.system import CrosstalkCalibration, PulseShape, SystemParams
from app.services.crosstalk_service import CrosstalkService, crosstalk_service
from app.services.dynamics_service import CZ, DynamicsService, dynamics_service
from app.utils.helpers import circular_mean

logger = logging.getLogger(__name__)

MIN_CURVE_POINTS = 16
MIN_CONTRAST = 0.1


def _r_cell(task: Tuple) -> Tuple[Optional[float], str]:
    """Worker: R at one (amplitude, frequency) grid point; errors become flagged cells"""
    sys, calibration, pulse, a_c, a_t, phi_d, freq, step = task
    try:
        drive = crosstalk_service.drive_for(calibration, freq, a_c, a_t, phi_d)
        r0, r1 = dynamics_service.conditional_bloch_pair(sys, drive, pulse, step)
        return dynamics_service.r_metric(r0, r1), 'ok'
    except ZZLabError as e:
        return None, type(e).__name__


def _rz(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)])


class CalibrationService:
    """CZ calibration by simulation: R map, point selection, phase refinement, local-Z correction"""

    def __init__(self, dynamics: DynamicsService | None = None, crosstalk: CrosstalkService | None = None):
        self.dynamics = dynamics or dynamics_service
        self.crosstalk = crosstalk or crosstalk_service

    def sweep_R(
        self,
        sys: SystemParams,
        calibration: CrosstalkCalibration,
        pulse: PulseShape,
        amplitudes: Sequence[float],
        drive_freqs: Sequence[float],
        phi_d: float = 0.0,
        amp_ratio: float = 1.0,
        step: Optional[float] = None,
        jobs: Optional[int] = None,
    ) -> RMap:
        tasks = [
            (sys, calibration, pulse, float(a), float(a) * amp_ratio, phi_d, float(f), step)
            for a in amplitudes for f in drive_freqs
        ]
        workers = settings.resolved_jobs(jobs)
        logger.info(f"Sweeping R over {len(amplitudes)} x {len(drive_freqs)} points with {workers} worker(s)")
        if workers == 1 or len(tasks) == 1:
            results = [_r_cell(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(_r_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))

        cells = [
            RMapCell(a=t[3], freq_mhz=t[6], r_value=r, flag=flag)
            for t, (r, flag) in zip(tasks, results)
        ]
        rmap = RMap(amplitudes=[float(a) for a in amplitudes], drive_freqs=[float(f) for f in drive_freqs], cells=cells)
        if rmap.flagged:
            logger.warning(f"{rmap.flagged} R-map cells flagged")
        return rmap

    def select_cz_point(self, rmap: RMap, min_r: float = 1.5) -> CZPoint:
        valid = [c for c in rmap.cells if c.r_value is not None]
        if not valid:
            raise CalibrationError("R map has no valid cells; expand or move the grid")
        best = max(valid, key=lambda c: c.r_value)
        if best.r_value <= min_r:
            logger.error(f"Best R {best.r_value:.4g} does not exceed {min_r}")
            raise CalibrationError(
                f"No grid point with R > {min_r} (best {best.r_value:.4g} at A={best.a:.4g}, "
                f"f={best.freq_mhz:.6g} MHz); expand the amplitude or frequency grid"
            )
        logger.info(f"Selected CZ point A={best.a:.5g}, omega_d={best.freq_mhz:.6g} MHz, R={best.r_value:.4f}")
        return CZPoint(amplitude=best.a, drive_freq=best.freq_mhz, r_value=best.r_value)

    def band_width(self, rmap: RMap, level: float = 1.9, around: Optional[float] = None) -> float:
        """Width (MHz) of the contiguous frequency run where max over A of R reaches level"""
        n_a, n_f = len(rmap.amplitudes), len(rmap.drive_freqs)
        best_per_freq = np.full(n_f, -np.inf)
        for i in range(n_a):
            for j in range(n_f):
                value = rmap.value(i, j)
                if value is not None:
                    best_per_freq[j] = max(best_per_freq[j], value)
        above = best_per_freq >= level
        if not above.any():
            return 0.0
        if around is None:
            centre = int(np.argmax(best_per_freq))
        else:
            centre = int(np.argmin(np.abs(np.asarray(rmap.drive_freqs) - around)))
        if not above[centre]:
            return 0.0
        lo = hi = centre
        while lo > 0 and above[lo - 1]:
            lo -= 1
        while hi < n_f - 1 and above[hi + 1]:
            hi += 1
        return abs(rmap.drive_freqs[hi] - rmap.drive_freqs[lo])

    def refine_amplitude(
        self,
        sys: SystemParams,
        calibration: CrosstalkCalibration,
        pulse: PulseShape,
        point: CZPoint,
        half_width: float,
        phi_d: float = 0.0,
        amp_ratio: float = 1.0,
        step: Optional[float] = None,
    ) -> CZPoint:
        """Bounded 1-D search on A for a conditional phase of pi at the selected frequency"""

        def bloch(a: float):
            drive = self.crosstalk.drive_for(calibration, point.drive_freq, a, a * amp_ratio, phi_d)
            return self.dynamics.conditional_bloch_pair(sys, drive, pulse, step)

        def objective(a: float) -> float:
            r0, r1 = bloch(a)
            return 1.0 + math.cos(self.dynamics.conditional_phase(r0, r1))

        lower = max(0.0, point.amplitude - half_width)
        upper = point.amplitude + half_width
        result = minimize_scalar(
            objective, bounds=(lower, upper), method='bounded',
            options={'xatol': 1e-6 * max(1.0, point.amplitude)},
        )
        r0, r1 = bloch(float(result.x))
        refined = CZPoint(
            amplitude=float(result.x),
            drive_freq=point.drive_freq,
            r_value=self.dynamics.r_metric(r0, r1),
            conditional_phase=self.dynamics.conditional_phase(r0, r1),
        )
        logger.info(
            f"Refined amplitude {refined.amplitude:.6g}: conditional phase {refined.conditional_phase:.5f} rad, "
            f"R={refined.r_value:.5f}"
        )
        return refined

    def local_z_curves(
        self,
        u4: np.ndarray,
        phases: Sequence[float],
        which: Literal['ZI', 'IZ'] = 'ZI',
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Local-phase calibration experiment simulated on a computational unitary.

        For 'ZI' the control starts in |+> with the target in |0> or |1>; after
        the gate a virtual Z(phi) acts on the control and <X> of the control is
        recorded. 'IZ' swaps the roles.
        """
        if which not in ('ZI', 'IZ'):
            raise ValueError(f"which must be 'ZI' or 'IZ', got {which!r}")
        plus = np.array([1.0, 1.0]) / math.sqrt(2)
        pauli_x = np.array([[0.0, 1.0], [1.0, 0.0]])
        basis = np.eye(2)

        def on_measured(op: np.ndarray) -> np.ndarray:
            return np.kron(op, np.eye(2)) if which == 'ZI' else np.kron(np.eye(2), op)

        x = on_measured(pauli_x)
        curves = []
        for n in (0, 1):
            prepared = np.kron(plus, basis[n]) if which == 'ZI' else np.kron(basis[n], plus)
            psi = u4 @ prepared
            values = []
            for phi in phases:
                out = on_measured(_rz(phi)) @ psi
                values.append(float(np.real(out.conj() @ x @ out)))
            curves.append(np.array(values))
        return curves[0], curves[1]

    def _fit_cosine(self, phases: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
        design = np.column_stack([np.cos(phases), np.sin(phases), np.ones_like(phases)])
        (a, b, _), *_ = np.linalg.lstsq(design, values, rcond=None)
        return math.atan2(b, a), math.hypot(a, b)

    def calibrate_local_z(
        self,
        phases: Sequence[float],
        curve0: Sequence[float],
        curve1: Sequence[float],
    ) -> Tuple[float, float]:
        """Virtual-Z correction from the two conditional curves.

        Each curve is fitted to c cos(phi - phi_peak) + d. With the other qubit in
        |0> the correction sits at the maximum, with it in |1> at the minimum;
        the two estimates are averaged on the circle. Returns (phase, min contrast).
        """
        phi = np.asarray(phases, dtype=float)
        if phi.size < MIN_CURVE_POINTS:
            raise InsufficientDataError(f"Local-Z curves need {MIN_CURVE_POINTS} points, got {phi.size}")
        if np.ptp(phi) < 2 * math.pi * (1 - 1 / phi.size) - 1e-9:
            raise InsufficientDataError("Local-Z curves must span one full period of phi")

        peak0, contrast0 = self._fit_cosine(phi, np.asarray(curve0, dtype=float))
        peak1, contrast1 = self._fit_cosine(phi, np.asarray(curve1, dtype=float))
        contrast = min(contrast0, contrast1)
        if contrast < MIN_CONTRAST:
            logger.error(f"Local-Z contrast {contrast:.3g} below {MIN_CONTRAST}")
            raise LowContrastError(f"Local-Z fringe contrast {contrast:.3g} is below {MIN_CONTRAST}")
        return circular_mean([peak0, peak1 + math.pi]), contrast

    def compile_local_z(self, u4: np.ndarray, phi_zi: float, phi_iz: float) -> np.ndarray:
        return np.kron(_rz(phi_zi), _rz(phi_iz)) @ u4

    def calibrate_cz(
        self,
        sys: SystemParams,
        calibration: CrosstalkCalibration,
        pulse: PulseShape,
        spec: CalibrationSpec,
        step: Optional[float] = None,
        jobs: Optional[int] = None,
    ) -> Tuple[CalibrationReport, RMap]:
        amplitudes = spec.amplitudes.values()
        freqs = spec.drive_freqs.values()
        rmap = self.sweep_R(sys, calibration, pulse, amplitudes, freqs, spec.phi_d, spec.amp_ratio, step, jobs)
        selected = self.select_cz_point(rmap, spec.min_r)
        width = self.band_width(rmap, spec.band_level)

        refined = selected
        if spec.refine:
            spacing = float(np.min(np.diff(amplitudes))) if len(amplitudes) > 1 else 0.1 * selected.amplitude
            refined = self.refine_amplitude(
                sys, calibration, pulse, selected, spacing, spec.phi_d, spec.amp_ratio, step
            )

        drive = self.crosstalk.drive_for(
            calibration, refined.drive_freq, refined.amplitude, refined.amplitude * spec.amp_ratio, spec.phi_d
        )
        u4 = self.dynamics.computational_unitary(sys, drive, pulse, step)
        grid = np.linspace(0.0, 2 * math.pi, spec.local_z_points, endpoint=False)
        phi_zi, contrast_zi = self.calibrate_local_z(grid, *self.local_z_curves(u4, grid, 'ZI'))
        phi_iz, contrast_iz = self.calibrate_local_z(grid, *self.local_z_curves(u4, grid, 'IZ'))
        compiled = self.compile_local_z(u4, phi_zi, phi_iz)
        alpha, beta, theta = self.dynamics.zz_angles(u4)

        report = CalibrationReport(
            selected=selected,
            refined=refined,
            band_width_mhz=width,
            band_level=spec.band_level,
            local_z=LocalZCorrection(phi_zi=phi_zi, phi_iz=phi_iz, contrast_zi=contrast_zi, contrast_iz=contrast_iz),
            zz_angles={'alpha_iz': alpha, 'beta_zi': beta, 'theta_zz': theta},
            fidelity_raw=self.dynamics.average_gate_fidelity(u4, CZ),
            fidelity_compiled=self.dynamics.average_gate_fidelity(compiled, CZ),
            leakage=float(1.0 - np.trace(u4.conj().T @ u4).real / 4),
            flagged_cells=rmap.flagged,
        )
        logger.info(
            f"CZ calibration: band {width:.4g} MHz at R>={spec.band_level}, "
            f"compiled fidelity {report.fidelity_compiled:.6f}"
        )
        return report, rmap


calibration_service = CalibrationService()
