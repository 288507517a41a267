import cmath
import hashlib
import math
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np


def to_complex(input_data: Any) -> complex:
    """Convert the accepted amplitude formats to a complex number.

    Accepts a plain number, a ``[re, im]`` pair, ``{"re": .., "im": ..}``,
    ``{"abs": .., "phase": ..}`` or a string parseable by ``complex()``.
    """
    if input_data is None:
        return 0j

    if isinstance(input_data, (bool,)):
        raise ValueError("Boolean is not a valid amplitude")

    if isinstance(input_data, (int, float, complex, np.number)):
        return complex(input_data)

    if isinstance(input_data, (list, tuple)):
        if len(input_data) != 2:
            raise ValueError(f"Expected [re, im], got {len(input_data)} entries")
        return complex(float(input_data[0]), float(input_data[1]))

    if isinstance(input_data, dict):
        if 're' in input_data or 'im' in input_data:
            return complex(float(input_data.get('re', 0.0)), float(input_data.get('im', 0.0)))
        if 'abs' in input_data:
            return cmath.rect(float(input_data['abs']), float(input_data.get('phase', 0.0)))
        raise ValueError(f"Unrecognized amplitude keys: {sorted(input_data)}")

    if isinstance(input_data, str):
        return complex(input_data.replace(' ', ''))

    raise ValueError(f"Cannot interpret {type(input_data).__name__} as a complex amplitude")


def wrap_phase(phase: float) -> float:
    """Map an angle into (-pi, pi]"""
    wrapped = math.remainder(phase, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


def circular_mean(angles: Iterable[float]) -> float:
    vector = sum(cmath.exp(1j * a) for a in angles)
    if abs(vector) < 1e-15:
        raise ValueError("Circular mean undefined for cancelling angles")
    return wrap_phase(cmath.phase(vector))


def format_float(value: Union[float, int, None]) -> str:
    """12 significant digits, '.' decimal, empty string for missing values"""
    if value is None:
        return ''
    if isinstance(value, float) and math.isnan(value):
        return 'nan'
    return '%.12g' % value


def file_digest(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()
