import math

import pytest

from app.core.errors import ConfigError
from app.models.run import BaseDrive, SweepAxis
from app.models.system import DriveConfig
from app.services.perturbation_service import PerturbationService
from app.services.spectrum_service import SpectrumService
from app.services.sweep_service import SweepService


def test_no_axes_gives_single_point(pair_2):
    result = SweepService().run_sweep(pair_2, BaseDrive(), [], jobs=1)
    assert result.columns == ["zeta_exact_mhz", "zeta_pt_mhz", "flag"]
    assert len(result.rows) == 1
    row = result.rows[0]
    assert row["zeta_exact_mhz"] == pytest.approx(0.170, rel=0.1)
    assert row["zeta_pt_mhz"] == pytest.approx(PerturbationService().zeta2(pair_2))
    assert row["flag"] == "ok"
    assert result.flagged == 0


def test_unknown_axis_rejected(pair_2):
    with pytest.raises(ConfigError) as exc:
        SweepService().run_sweep(pair_2, BaseDrive(), [SweepAxis(name="amp_x", start=0, stop=1, count=2)], jobs=1)
    assert exc.value.name == "amp_x"


def test_amp_global_conflicts_with_single_amplitudes():
    axes = [
        SweepAxis(name="amp_global", start=0, stop=1, count=2),
        SweepAxis(name="amp_c", start=0, stop=1, count=2),
    ]
    with pytest.raises(ConfigError):
        SweepService().validate_axes(axes)


def test_repeated_axis_rejected():
    axes = [SweepAxis(name="phi_d", start=0, stop=1, count=2)] * 2
    with pytest.raises(ConfigError):
        SweepService().validate_axes(axes)


def test_grid_order_first_axis_outermost(small_pair_1):
    axes = [
        SweepAxis(name="amp_global", start=0.0, stop=10.0, count=2),
        SweepAxis(name="phi_d", start=0.0, stop=math.pi, count=3),
    ]
    result = SweepService().run_sweep(small_pair_1, BaseDrive(delta_t=40.0), axes, jobs=1)
    assert result.columns == ["amp_global", "phi_d", "zeta_exact_mhz", "zeta_pt_mhz", "flag"]
    assert [(r["amp_global"], r["phi_d"]) for r in result.rows] == [
        (0.0, 0.0), (0.0, math.pi / 2), (0.0, math.pi),
        (10.0, 0.0), (10.0, math.pi / 2), (10.0, math.pi),
    ]
    static = [r["zeta_exact_mhz"] for r in result.rows[:3]]
    assert max(static) - min(static) < 1e-9
    driven = result.rows[3:]
    assert driven[0]["zeta_exact_mhz"] > driven[1]["zeta_exact_mhz"] > driven[2]["zeta_exact_mhz"]
    assert result.flag_counts == {"ok": 6}


def test_sweep_matches_direct_spectrum(small_pair_1):
    axes = [SweepAxis(name="amp_c", start=2.0, stop=8.0, count=4)]
    base = BaseDrive(delta_t=40.0, amp_t=6.0)
    result = SweepService().run_sweep(small_pair_1, base, axes, jobs=1)
    spectra = SpectrumService()
    for row in result.rows:
        drive = DriveConfig.off_target(small_pair_1, 40.0, amp_c=row["amp_c"], amp_t=6.0)
        assert row["zeta_exact_mhz"] == pytest.approx(spectra.zz_rate(small_pair_1, drive), rel=1e-6)


def test_amp_global_through_two_photon_resonance_is_flagged(small_pair_1):
    # drive on the |00> <-> |02> two-photon line of the target
    base = BaseDrive(delta_t=-small_pair_1.target.anharm / 2)
    axes = [SweepAxis(name="amp_global", start=0.0, stop=30.0, count=4)]
    result = SweepService().run_sweep(small_pair_1, base, axes, jobs=1)
    assert [r["flag"] for r in result.rows] == ["ok", "continued", "continued", "continued"]
    assert result.flag_counts == {"continued": 3, "ok": 1}
    assert result.flagged == 3
    assert all(r["zeta_exact_mhz"] is not None for r in result.rows)


def test_parallel_sweep_keeps_grid_order(small_pair_1):
    axes = [
        SweepAxis(name="phi_d", start=0.0, stop=math.pi, count=3),
        SweepAxis(name="amp_global", start=2.0, stop=10.0, count=3),
    ]
    base = BaseDrive(delta_t=40.0)
    serial = SweepService().run_sweep(small_pair_1, base, axes, jobs=1)
    parallel = SweepService().run_sweep(small_pair_1, base, axes, jobs=3)
    assert [(r["phi_d"], r["amp_global"]) for r in parallel.rows] == [
        (r["phi_d"], r["amp_global"]) for r in serial.rows
    ]
    for a, b in zip(serial.rows, parallel.rows):
        assert b["zeta_exact_mhz"] == pytest.approx(a["zeta_exact_mhz"], rel=1e-12)
        assert b["flag"] == a["flag"]
    assert parallel.flag_counts == serial.flag_counts
