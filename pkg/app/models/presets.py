from typing import Dict, List, Tuple

from app.core.errors import ConfigError
from app.models.system import SystemParams, TransmonParams

# Device pairs measured in the lab, all MHz
PAIR_1 = SystemParams(
    control=TransmonParams(freq_01=5845.0, anharm=-244.1),
    target=TransmonParams(freq_01=5690.0, anharm=-247.1),
    coupling_J=3.45,
)

PAIR_2 = SystemParams(
    control=TransmonParams(freq_01=5469.6, anharm=-270.5),
    target=TransmonParams(freq_01=5315.0, anharm=-273.0),
    coupling_J=2.79,
)

# (T1_c, T2echo_c, T1_t, T2echo_t) in us
COHERENCE: Dict[str, Tuple[float, float, float, float]] = {
    'pair_1': (80.0, 150.0, 100.0, 180.0),
    'pair_2': (65.0, 86.0, 58.0, 77.0),
}

STATIC_ZZ_MHZ: Dict[str, float] = {'pair_1': 0.307, 'pair_2': 0.170}

_SYSTEMS: Dict[str, SystemParams] = {'pair_1': PAIR_1, 'pair_2': PAIR_2}


def preset(name: str, levels: int | None = None) -> SystemParams:
    try:
        sys = _SYSTEMS[name]
    except KeyError:
        raise ConfigError(name, f"Unknown system preset '{name}' (known: {sorted(_SYSTEMS)})")
    return sys.with_levels(levels) if levels else sys


def coherence_preset(name: str) -> Tuple[float, float, float, float]:
    try:
        return COHERENCE[name]
    except KeyError:
        raise ConfigError(name, f"Unknown coherence preset '{name}'")


def enhanced_drive_windows(sys: SystemParams) -> List[Tuple[float, float]]:
    """Drive-frequency windows with the strongest simultaneous-drive ZZ enhancement.

    Below the target but above the control's 1-2 transition, and between the
    two qubit frequencies.
    """
    windows = []
    control_12 = sys.control.freq_01 + sys.control.anharm
    if control_12 < sys.target.freq_01:
        windows.append((control_12, sys.target.freq_01))
    windows.append((sys.target.freq_01, sys.control.freq_01))
    return windows
