import math

import pytest
from fastapi.testclient import TestClient

from app.main import app

client = TestClient(app)


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert "message" in response.json()


def test_list_commands():
    response = client.get("/api/runs/")
    assert response.status_code == 200
    assert set(response.json()["commands"]) == {
        "density",
        "distcheck",
        "herglotz",
        "theorem2",
        "condition-a",
        "bessel",
        "mfunction",
    }


def test_bessel_run():
    response = client.post("/api/runs/bessel", json={"nu_list": [0.0], "bessel_x": [1.0]})
    assert response.status_code == 200
    body = response.json()
    assert body["command"] == "bessel"
    assert body["columns"][:3] == ["nu", "x", "J"]
    assert body["rows"][0][2] == pytest.approx(0.7651976865579666, abs=1e-10)


def test_unknown_command():
    response = client.post("/api/runs/spectrum", json={})
    assert response.status_code == 404


def test_invalid_interval():
    response = client.post("/api/runs/theorem2", json={"lambda_interval": [4.0, 1.0]})
    assert response.status_code == 422


def test_distcheck_without_band():
    response = client.post("/api/runs/distcheck", json={})
    assert response.status_code == 422


def test_density_half_order():
    config = {"potential": {"kind": "inverse_square", "nu": 0.5, "a": 1.0}, "lambda_list": [4.0]}
    response = client.post("/api/runs/density", json=config)
    assert response.status_code == 200
    body = response.json()
    row = dict(zip(body["columns"], body["rows"][0]))
    assert row["f_numeric"] == pytest.approx(2.0 / math.pi, rel=1e-6)
