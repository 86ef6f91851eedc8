import pytest
from fastapi.testclient import TestClient

from fadeout.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_estimate_hand_case(client):
    r = client.post("/estimate", json={"method": "Exact", "beta": 0.8,
                                       "n_pop": 2, "i": 1})
    assert r.status_code == 200
    body = r.json()
    assert body["method"] == "Exact"
    assert abs(body["value"] - 1.2) < 1e-12


def test_estimate_log_value_for_asymptotics(client):
    r = client.post("/estimate", json={"method": "AD", "beta": 1.5,
                                       "n_pop": 100})
    assert r.status_code == 200
    body = r.json()
    assert body["log_value"] is not None
    assert abs(body["value"]) > 1.0


def test_estimate_rejects_unknown_method(client):
    r = client.post("/estimate", json={"method": "magic", "beta": 1.0,
                                       "n_pop": 10})
    assert r.status_code == 422


def test_estimate_rejects_inapplicable_regime(client):
    # AD needs R0 > 1
    r = client.post("/estimate", json={"method": "AD", "beta": 0.8,
                                       "n_pop": 100})
    assert r.status_code == 422


def test_estimate_validates_fields(client):
    r = client.post("/estimate", json={"method": "Exact", "beta": -1.0,
                                       "n_pop": 10})
    assert r.status_code == 422
    r = client.post("/estimate", json={"method": "Exact", "beta": 1.0,
                                       "n_pop": 1})
    assert r.status_code == 422


def test_figure_endpoint_returns_csv(client):
    r = client.post("/figure", json={"figure": "fig1", "n_grid": [2],
                                     "methods": ["Exact"]})
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/csv")
    lines = r.text.split("\n")
    assert lines[1] == "i,Exact(2)"
    assert lines[2] == "1,1.20000000000e+00"


def test_figure_endpoint_matches_library(client):
    from fadeout import figures
    spec = figures.RunSpec(figure="fig8")
    expect = figures.compute_figure(spec).to_csv_text()
    r = client.post("/figure", json={"figure": "fig8"})
    assert r.text == expect


def test_figure_endpoint_rejects_unknown_figure(client):
    r = client.post("/figure", json={"figure": "fig99"})
    assert r.status_code == 422
