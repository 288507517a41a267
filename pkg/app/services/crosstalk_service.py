from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.optimize import least_squares

from app.core.errors import FitError, InsufficientDataError, LabelingError
from app.models.crosstalk import CrosstalkFit
from app.models.system import (
    CrosstalkCalibration,
    CrosstalkMatrix,
    DriveConfig,
    SystemParams,
    ZZSweepPoint,
)
from app.services.spectrum_service import SpectrumService, spectrum_service

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ('c_ct', 'phi_ct', 'c_tc', 'phi_tc', 'theta_c', 'scale')
MIN_POINTS = 12
# Residual (in sigma units) assigned to points that cannot be labeled
LABELING_PENALTY = 1e3
# Off-diagonal magnitudes start here at least, else their phases have no gradient
MIN_START_MAGNITUDE = 0.01


def _calibration_from_vector(x: np.ndarray) -> CrosstalkCalibration:
    c_ct, phi_ct, c_tc, phi_tc, theta_c, scale = (float(v) for v in x)
    matrix = CrosstalkMatrix(c_ct=c_ct, phi_ct=phi_ct, c_tc=c_tc, phi_tc=phi_tc, theta_c=theta_c)
    return CrosstalkCalibration(matrix=matrix, scale=scale)


def _vector_from_calibration(calibration: CrosstalkCalibration) -> np.ndarray:
    m = calibration.matrix
    return np.array([m.c_ct, m.phi_ct, m.c_tc, m.phi_tc, m.theta_c, calibration.scale], dtype=float)


def _poorly_constrained(x: np.ndarray, errors: np.ndarray) -> List[str]:
    """Parameters whose one-sigma error exceeds 2% (magnitudes, scale) or 0.05 rad (phases)"""
    loose = []
    for name, value, error in zip(PARAMETER_NAMES, x, errors):
        limit = 0.05 if name.startswith(('phi', 'theta')) else 0.02 * abs(value)
        if error > limit:
            loose.append(name)
    return loose


class CrosstalkService:
    def __init__(self, spectra: SpectrumService | None = None):
        self.spectra = spectra or spectrum_service

    def apply_crosstalk(
        self,
        xt: CrosstalkMatrix,
        a_c: float,
        a_t: float,
        phi_d: float,
        scale: float = 1.0,
    ) -> Tuple[complex, complex]:
        """On-chip fields (eps_c, eps_t) in MHz from line amplitudes: scale * M @ (A_c, A_t e^{-i phi_d})"""
        if scale <= 0:
            raise ValueError(f"scale must be positive, got {scale}")
        lines = np.array([a_c, a_t * np.exp(-1j * phi_d)], dtype=complex)
        eps_c, eps_t = scale * (xt.matrix() @ lines)
        return complex(eps_c), complex(eps_t)

    def drive_for(
        self,
        calibration: CrosstalkCalibration,
        drive_freq: float,
        a_c: float,
        a_t: float,
        phi_d: float,
    ) -> DriveConfig:
        eps_c, eps_t = self.apply_crosstalk(calibration.matrix, a_c, a_t, phi_d, calibration.scale)
        return DriveConfig(drive_freq=drive_freq, eps_c=eps_c, eps_t=eps_t)

    def model_zeta(
        self,
        sys: SystemParams,
        drive_freq: float,
        calibration: CrosstalkCalibration,
        points: Sequence[ZZSweepPoint],
    ) -> np.ndarray:
        """Exact-diagonalization ZZ at every sweep point; NaN where labeling fails"""
        values = np.empty(len(points))
        for i, point in enumerate(points):
            drive = self.drive_for(calibration, drive_freq, point.a_c, point.a_t, point.phi_d)
            try:
                values[i] = self.spectra.zz_rate(sys, drive)
            except LabelingError as e:
                logger.debug(f"Point {i} unlabeled during crosstalk fit: {e}")
                values[i] = np.nan
        return values

    def simulate_sweep(
        self,
        sys: SystemParams,
        drive_freq: float,
        calibration: CrosstalkCalibration,
        settings_grid: Sequence[Tuple[float, float, float]],
        noise_mhz: float = 0.0,
        sigma_mhz: float = 0.005,
        seed: Optional[int] = None,
    ) -> List[ZZSweepPoint]:
        """Synthetic sweep data from the forward model, with optional Gaussian noise"""
        rng = np.random.default_rng(seed)
        points = [ZZSweepPoint(a_c=a_c, a_t=a_t, phi_d=phi, zeta_mhz=0.0, sigma_mhz=sigma_mhz)
                  for a_c, a_t, phi in settings_grid]
        zeta = self.model_zeta(sys, drive_freq, calibration, points)
        if noise_mhz > 0:
            zeta = zeta + rng.normal(0.0, noise_mhz, size=zeta.shape)
        return [p.model_copy(update={'zeta_measured': float(z)}) for p, z in zip(points, zeta)]

    def _check_coverage(self, data: Sequence[ZZSweepPoint]) -> None:
        if len(data) < MIN_POINTS:
            raise InsufficientDataError(f"Crosstalk fit needs at least {MIN_POINTS} points, got {len(data)}")
        phases = np.array([p.phi_d for p in data])
        if np.ptp(phases) < math.pi:
            raise InsufficientDataError(
                f"phi_d spans {np.ptp(phases):.3g} rad; need at least half a period (pi)"
            )
        amplitudes = {(round(p.a_c, 12), round(p.a_t, 12)) for p in data}
        if len(amplitudes) < 2:
            raise InsufficientDataError("Crosstalk fit needs at least two distinct drive amplitudes")

    def fit_crosstalk(
        self,
        data: Sequence[ZZSweepPoint],
        sys: SystemParams,
        drive_freq: float,
        initial: CrosstalkCalibration | None = None,
        max_nfev: int = 400,
    ) -> CrosstalkFit:
        """Weighted least-squares fit of crosstalk matrix and amplitude scale to measured ZZ.

        Restarts from four initial points whose phases are shifted by multiples
        of pi/2; the lowest-cost converged result wins.
        """
        self._check_coverage(data)
        measured = np.array([p.zeta_measured for p in data])
        sigma = np.array([p.zeta_uncertainty for p in data])
        start = _vector_from_calibration(initial or CrosstalkCalibration())
        start[[0, 2]] = np.maximum(start[[0, 2]], MIN_START_MAGNITUDE)

        def residuals(x: np.ndarray) -> np.ndarray:
            model = self.model_zeta(sys, drive_freq, _calibration_from_vector(x), data)
            r = (model - measured) / sigma
            return np.where(np.isfinite(r), r, LABELING_PENALTY)

        lower = np.array([0.0, -np.inf, 0.0, -np.inf, -np.inf, 1e-9])
        upper = np.full(6, np.inf)

        best = None
        best_failed = None
        for k in range(4):
            x0 = start.copy()
            x0[[1, 3, 4]] += k * math.pi / 2
            result = least_squares(
                residuals, x0, method='trf', bounds=(lower, upper),
                diff_step=1e-6, xtol=1e-8, gtol=1e-10, ftol=1e-12, max_nfev=max_nfev,
            )
            logger.debug(f"Restart {k}: cost={result.cost:.6g} status={result.status} nfev={result.nfev}")
            if result.status <= 0:
                if best_failed is None or result.cost < best_failed.cost:
                    best_failed = result
                continue
            if best is None or result.cost < best.cost:
                best = result

        if best is None:
            point = _calibration_from_vector(best_failed.x)
            logger.error(f"Crosstalk fit did not converge; best cost {best_failed.cost:.6g}")
            raise FitError("Crosstalk fit did not converge in any restart", best_point=point)

        jac = best.jac
        covariance = np.linalg.pinv(jac.T @ jac)
        errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
        weighted = best.fun
        ssr = float(np.sum((weighted * sigma) ** 2))
        calibration = _calibration_from_vector(best.x)
        loose = _poorly_constrained(best.x, errors)
        if loose:
            logger.warning(
                f"Crosstalk parameters {loose} are poorly constrained; "
                f"sweeps at stronger drive separate the quadrature crosstalk terms"
            )
        fit = CrosstalkFit(
            calibration=calibration,
            uncertainties={name: float(e) for name, e in zip(PARAMETER_NAMES, errors)},
            chi2=float(np.sum(weighted ** 2)),
            ssr_mhz2=ssr,
            n_points=len(data),
            nfev=int(best.nfev),
            restarts=4,
            message=str(best.message),
            poorly_constrained=loose,
        )
        logger.info(
            f"Crosstalk fit: chi2={fit.chi2:.4g} over {len(data)} points, "
            f"C_ct={calibration.matrix.c_ct:.4g}, C_tc={calibration.matrix.c_tc:.4g}, scale={calibration.scale:.5g}"
        )
        return fit


crosstalk_service = CrosstalkService()
