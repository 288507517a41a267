from collections import defaultdict
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import csv
import json
import logging

import numpy as np
from pydantic import ValidationError

from app.core.errors import IngestionError
from app.models.benchmarking import DecayDataset, DecayKind
from app.models.system import ZZSweepPoint
from app.utils.helpers import file_digest, format_float

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ('a_c', 'a_t', 'phi_d', 'zeta_mhz', 'sigma_mhz')
DECAY_COLUMNS = ('m', 'value')
CB_COLUMNS = ('pauli_label', 'p', 'sigma')
VERSIONED_PACKAGES = ('numpy', 'scipy', 'lmfit', 'pydantic', 'click')

PathLike = Union[str, Path]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")


class DatasetService:
    """CSV ingestion and run-artifact emission"""

    def _read_rows(self, path: PathLike, columns: Sequence[str]) -> List[Dict[str, str]]:
        source = str(path)
        try:
            with open(path, newline='', encoding='utf-8') as handle:
                reader = csv.DictReader(handle)
                header = [h.strip() for h in (reader.fieldnames or [])]
                for column in columns:
                    if column not in header:
                        raise IngestionError(source, 0, column, "missing column in header")
                reader.fieldnames = header
                rows = [row for row in reader]
        except OSError as e:
            raise IngestionError(source, 0, '', f"cannot read file: {e}")
        if not rows:
            raise IngestionError(source, 1, '', "no data rows")
        return rows

    def _number(self, source: str, row_no: int, row: Mapping[str, str], column: str, cast=float):
        raw = (row.get(column) or '').strip()
        try:
            return cast(raw)
        except ValueError:
            raise IngestionError(source, row_no, column, f"cannot parse {raw!r} as {cast.__name__}")

    def read_sweep_csv(self, path: PathLike) -> List[ZZSweepPoint]:
        """ZZ sweep data with header a_c,a_t,phi_d,zeta_mhz,sigma_mhz"""
        source = str(path)
        points = []
        for row_no, row in enumerate(self._read_rows(path, SWEEP_COLUMNS), start=1):
            values = {c: self._number(source, row_no, row, c) for c in SWEEP_COLUMNS}
            try:
                points.append(ZZSweepPoint(**values))
            except ValidationError as e:
                loc = e.errors()[0]['loc']
                column = str(loc[0]) if loc else ''
                raise IngestionError(source, row_no, column, e.errors()[0]['msg'])
        logger.info(f"Read {len(points)} sweep points from {source}")
        return points

    def read_decay_csv(
        self,
        path: PathLike,
        kind: DecayKind = 'rb',
        label: Optional[str] = None,
        shots: Optional[int] = None,
    ) -> DecayDataset:
        """Decay samples with header m,value; rows are grouped by m and sorted"""
        source = str(path)
        grouped: Dict[int, List[float]] = defaultdict(list)
        for row_no, row in enumerate(self._read_rows(path, DECAY_COLUMNS), start=1):
            m = self._number(source, row_no, row, 'm', int)
            value = self._number(source, row_no, row, 'value')
            if m < 0:
                raise IngestionError(source, row_no, 'm', "sequence length must be non-negative")
            if not 0.0 <= value <= 1.0:
                raise IngestionError(source, row_no, 'value', f"{value} outside [0, 1]")
            grouped[m].append(value)
        lengths = sorted(grouped)
        logger.info(f"Read {sum(len(v) for v in grouped.values())} samples over {len(lengths)} lengths from {source}")
        return DecayDataset(lengths=lengths, values=[grouped[m] for m in lengths], kind=kind, label=label, shots=shots)

    def read_cb_csv(self, path: PathLike) -> Dict[str, Tuple[float, float]]:
        """Per-Pauli decays with header pauli_label,p,sigma"""
        source = str(path)
        decays: Dict[str, Tuple[float, float]] = {}
        for row_no, row in enumerate(self._read_rows(path, CB_COLUMNS), start=1):
            label = (row.get('pauli_label') or '').strip()
            if not label:
                raise IngestionError(source, row_no, 'pauli_label', "empty label")
            if label in decays:
                raise IngestionError(source, row_no, 'pauli_label', f"duplicate label {label}")
            p = self._number(source, row_no, row, 'p')
            sigma = self._number(source, row_no, row, 'sigma')
            if not 0.0 < p <= 1.0:
                raise IngestionError(source, row_no, 'p', f"{p} outside (0, 1]")
            decays[label] = (p, sigma)
        return decays

    def write_csv(self, path: PathLike, rows: Iterable[Mapping[str, Any]], fieldnames: Sequence[str]) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator='\n')
            writer.writeheader()
            for row in rows:
                writer.writerow({
                    k: (format_float(v) if isinstance(v, (float, int, np.floating, np.integer)) or v is None else v)
                    for k, v in row.items()
                })
        return target

    def write_decay_csv(self, path: PathLike, data: DecayDataset) -> Path:
        rows = [{'m': m, 'value': v} for m, samples in zip(data.lengths, data.values) for v in samples]
        return self.write_csv(path, rows, DECAY_COLUMNS)

    def write_sweep_csv(self, path: PathLike, points: Sequence[ZZSweepPoint]) -> Path:
        rows = [p.model_dump(by_alias=True) for p in points]
        return self.write_csv(path, rows, SWEEP_COLUMNS)

    def write_json(self, path: PathLike, payload: Any) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default)
        target.write_text(text + '\n', encoding='utf-8')
        return target

    def package_versions(self) -> Dict[str, str]:
        versions = {}
        for name in VERSIONED_PACKAGES:
            try:
                versions[name] = metadata.version(name)
            except metadata.PackageNotFoundError:
                versions[name] = 'unknown'
        return versions

    def write_manifest(
        self,
        out_dir: PathLike,
        command: str,
        config: Mapping[str, Any],
        seed: Optional[int] = None,
        flags: Optional[Mapping[str, int]] = None,
        inputs: Sequence[PathLike] = (),
        outputs: Sequence[PathLike] = (),
    ) -> Path:
        """manifest.json beside the outputs: config echo, versions, seed, flag counts, digests"""
        manifest = {
            'command': command,
            'config': config,
            'seed': seed,
            'flags': dict(flags or {}),
            'versions': self.package_versions(),
            'inputs': {Path(p).name: file_digest(p) for p in inputs},
            'outputs': {Path(p).name: file_digest(p) for p in outputs},
        }
        return self.write_json(Path(out_dir) / 'manifest.json', manifest)


dataset_service = DatasetService()
