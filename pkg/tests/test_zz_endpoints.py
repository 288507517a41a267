import pytest

from app.models.system import DriveConfig
from app.services.spectrum_service import SpectrumService


def test_zz_rate_driven(client, pair_1, system_payload):
    payload = {
        "system": system_payload,
        "drive": {"drive_freq": 5650.0, "eps_c": 10.0, "eps_t": [10.0, 0.0]},
        "levels": 5,
    }
    r = client.post("/api/v1/zz/rate", json=payload)
    assert r.status_code == 200
    body = r.json()
    expected = SpectrumService().zz_rate(pair_1.with_levels(5), DriveConfig.from_polar(5650.0, 10.0, 10.0))
    assert body["zeta_mhz"] == pytest.approx(expected, rel=1e-9)
    assert body["zeta_pt_mhz"] == pytest.approx(0.326 + 2.099, abs=0.01)
    assert body["flagged"] is False
    assert body["flag"] == "ok"


def test_zz_rate_static(client, system_payload):
    r = client.post("/api/v1/zz/rate", json={"system": system_payload, "drive": {"drive_freq": 5650.0}})
    assert r.status_code == 200
    assert r.json()["zeta_mhz"] == pytest.approx(0.307, rel=0.1)


def test_zz_perturbative(client, system_payload):
    payload = {"system": system_payload, "drive": {"drive_freq": 5650.0, "eps_c": 10.0, "eps_t": 10.0}}
    r = client.post("/api/v1/zz/perturbative", json=payload)
    assert r.status_code == 200
    body = r.json()
    assert body["zeta3"] == pytest.approx(2.099, rel=2e-3)
    assert body["total"] == pytest.approx(body["zeta2"] + body["zeta3"])


def test_zz_perturbative_resonance_is_422(client, system_payload):
    payload = {"system": system_payload, "drive": {"drive_freq": 5690.0, "eps_c": 10.0, "eps_t": 10.0}}
    r = client.post("/api/v1/zz/perturbative", json=payload)
    assert r.status_code == 422
    assert r.json()["error"] == "ResonanceError"


def test_zz_rate_rejects_inverted_pair(client, system_payload):
    payload = {
        "system": {**system_payload, "control": system_payload["target"], "target": system_payload["control"]},
        "drive": {"drive_freq": 5650.0},
    }
    r = client.post("/api/v1/zz/rate", json=payload)
    assert r.status_code == 422


def test_zz_cr_conditional(client):
    payload = {"eps_tilde_0": 1.0, "eps_tilde_1": -1.0, "eps_t": 5.0, "delta_t": 40.0}
    r = client.post("/api/v1/zz/cr-conditional", json=payload)
    assert r.status_code == 200
    assert r.json()["zeta_mhz"] == pytest.approx(0.5)
    assert r.json()["mu"] == [1.0, 0.0]
