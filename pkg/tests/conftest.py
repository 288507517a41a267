import os
import sys
import pytest
from fastapi.testclient import TestClient

# Ensure project root is on sys.path for `import app`
_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if _ROOT not in sys.path:
    sys.path.insert(0, _ROOT)

from app.main import app
from app.models.presets import PAIR_1, PAIR_2
from app.models.system import DriveConfig, PulseShape


@pytest.fixture()
def pair_1():
    return PAIR_1


@pytest.fixture()
def pair_2():
    return PAIR_2


@pytest.fixture()
def small_pair_1():
    """Pair 1 at 4 levels per transmon, for tests that only need qualitative dynamics"""
    return PAIR_1.with_levels(4)


@pytest.fixture()
def weak_drive(pair_1):
    """Both transmons at 10 MHz, 40 MHz below the target"""
    return DriveConfig.off_target(pair_1, 40.0, amp_c=10.0, amp_t=10.0)


@pytest.fixture()
def cz_pulse():
    return PulseShape(total_duration=201.0, flat_fraction=0.4)


@pytest.fixture()
def system_payload(pair_1):
    return pair_1.model_dump(mode="json")


@pytest.fixture()
def client():
    return TestClient(app)
