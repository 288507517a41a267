import math

import pytest


def test_apply_identity_crosstalk(client):
    payload = {"a_c": 0.4, "a_t": 0.2, "phi_d": 0.5, "scale": 25.0}
    r = client.post("/api/v1/crosstalk/apply", json=payload)
    assert r.status_code == 200
    body = r.json()
    assert body["eps_c"] == pytest.approx([10.0, 0.0])
    assert body["eps_t"] == pytest.approx([5.0 * math.cos(0.5), -5.0 * math.sin(0.5)])


def test_apply_crosstalk_matrix(client):
    payload = {"crosstalk": {"c_ct": 0.1}, "a_c": 1.0, "a_t": 1.0, "phi_d": math.pi}
    r = client.post("/api/v1/crosstalk/apply", json=payload)
    assert r.status_code == 200
    assert r.json()["eps_c"] == pytest.approx([0.9, 0.0], abs=1e-12)


def test_apply_rejects_zero_scale(client):
    r = client.post("/api/v1/crosstalk/apply", json={"a_c": 1.0, "a_t": 1.0, "scale": 0.0})
    assert r.status_code == 422
