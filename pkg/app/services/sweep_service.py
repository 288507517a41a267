from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

from app.core.config import settings
from app.core.errors import ConfigError, LabelingError, ResonanceError
from app.models.run import SWEEP_AXES, BaseDrive, SweepAxis
from app.models.system import CrosstalkCalibration, SystemParams
from app.services.crosstalk_service import crosstalk_service
from app.services.perturbation_service import perturbation_service
from app.services.spectrum_service import spectrum_service

logger = logging.getLogger(__name__)

Point = Dict[str, float]


@dataclass
class SweepResult:
    columns: List[str]
    rows: List[Dict[str, Any]]
    flag_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def flagged(self) -> int:
        return sum(count for flag, count in self.flag_counts.items() if flag != 'ok')


def _line_settings(base: Point, axes: Sequence[SweepAxis], outer: Tuple[float, ...], inner: Sequence[float]) -> List[Point]:
    points = []
    for value in inner:
        point = dict(base)
        for axis, v in zip(axes, (*outer, value)):
            if axis.name == 'amp_global':
                point['amp_c'] = point['amp_t'] = float(v)
            else:
                point[axis.name] = float(v)
        points.append(point)
    return points


def _evaluate_line(task: Tuple[SystemParams, CrosstalkCalibration, List[Point]]) -> List[Tuple[Optional[float], Optional[float], str]]:
    """Worker: one line of the grid along the innermost axis, labeled by continuation"""
    sys, calibration, points = task
    results = []
    reference = None
    for point in points:
        drive = crosstalk_service.drive_for(
            calibration, point['drive_freq'], point['amp_c'], point['amp_t'], point['phi_d']
        )
        try:
            spectrum = spectrum_service.labeled_spectrum(sys, drive, reference)
            zeta_exact, flag = spectrum.zeta(), spectrum.flag
            reference = spectrum
        except LabelingError:
            zeta_exact, flag = None, 'labeling_failed'
            reference = None
        try:
            zeta_pt = perturbation_service.zeta_pt_total(sys, drive)
        except ResonanceError:
            zeta_pt = None
        results.append((zeta_exact, zeta_pt, flag))
    return results


class SweepService:
    def validate_axes(self, axes: Sequence[SweepAxis]) -> None:
        seen = set()
        for axis in axes:
            if axis.name not in SWEEP_AXES:
                raise ConfigError(axis.name, f"Unknown sweep axis '{axis.name}' (allowed: {', '.join(SWEEP_AXES)})")
            if axis.name in seen:
                raise ConfigError(axis.name, f"Sweep axis '{axis.name}' given twice")
            seen.add(axis.name)
        if 'amp_global' in seen and seen & {'amp_c', 'amp_t'}:
            raise ConfigError('amp_global', "amp_global cannot be combined with amp_c or amp_t")

    def run_sweep(
        self,
        sys: SystemParams,
        base: BaseDrive,
        axes: Sequence[SweepAxis],
        calibration: Optional[CrosstalkCalibration] = None,
        jobs: Optional[int] = None,
    ) -> SweepResult:
        """ZZ (exact and perturbative) over the Cartesian grid, first axis outermost.

        Rows come back in grid order whatever the worker count.
        """
        self.validate_axes(axes)
        calibration = calibration or CrosstalkCalibration()
        start = {
            'drive_freq': base.resolve_freq(sys),
            'amp_c': base.amp_c,
            'amp_t': base.amp_t,
            'phi_d': base.phi_d,
        }
        axes = list(axes)
        if not axes:
            outer_grid, inner_axis_values = [()], [None]
        else:
            outer_grid = list(product(*(a.values() for a in axes[:-1])))
            inner_axis_values = axes[-1].values()

        if axes:
            tasks = [(sys, calibration, _line_settings(start, axes, outer, inner_axis_values)) for outer in outer_grid]
        else:
            tasks = [(sys, calibration, [dict(start)])]

        workers = settings.resolved_jobs(jobs)
        total = sum(len(t[2]) for t in tasks)
        logger.info(f"ZZ sweep: {total} points in {len(tasks)} line(s), {workers} worker(s)")
        if workers == 1 or len(tasks) == 1:
            results = [_evaluate_line(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(_evaluate_line, tasks))

        columns = [a.name for a in axes] + ['zeta_exact_mhz', 'zeta_pt_mhz', 'flag']
        rows = []
        flags: Counter = Counter()
        for outer, line in zip(outer_grid, results):
            for inner, (zeta_exact, zeta_pt, flag) in zip(inner_axis_values, line):
                row = {a.name: float(v) for a, v in zip(axes, (*outer, inner))} if axes else {}
                row.update({'zeta_exact_mhz': zeta_exact, 'zeta_pt_mhz': zeta_pt, 'flag': flag})
                rows.append(row)
                flags[flag] += 1
        result = SweepResult(columns=columns, rows=rows, flag_counts=dict(sorted(flags.items())))
        if result.flagged:
            logger.warning(f"ZZ sweep finished with {result.flagged} flagged point(s): {result.flag_counts}")
        return result


sweep_service = SweepService()
