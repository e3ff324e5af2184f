import pytest
from fastapi.testclient import TestClient

from mmwavesim.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_config_defaults(client):
    r = client.get("/config/defaults")
    assert r.status_code == 200
    body = r.json()
    assert body["carrier_freq_ghz"] == 28.0
    assert body["track_type"] == "hexagon"
    assert body["blockage_enabled"] is False


def test_drop_endpoint(client):
    r = client.post("/simulate/drop", json={"config": {"num_runs": 2, "seed": 8}})
    assert r.status_code == 200
    runs = r.json()["runs"]
    assert len(runs) == 2
    assert runs[0]["mpcs"] is None
    assert runs[0]["environment"] in ("LOS", "NLOS")


def test_drop_endpoint_with_mpcs(client):
    r = client.post(
        "/simulate/drop",
        json={"config": {"num_runs": 1, "seed": 8}, "include_mpcs": True},
    )
    assert r.status_code == 200
    mpcs = r.json()["runs"][0]["mpcs"]
    assert len(mpcs) >= 1
    assert mpcs[0]["is_los"] is True


def test_drop_rejects_bad_config(client):
    r = client.post("/simulate/drop", json={"config": {"carrier_freq_ghz": 150}})
    assert r.status_code == 400
    assert "carrier_freq_ghz" in r.json()["detail"]


def test_drop_rejects_unknown_key(client):
    r = client.post("/simulate/drop", json={"config": {"carier_freq": 1}})
    assert r.status_code == 400
    assert "unknown config key" in r.json()["detail"]


def test_track_endpoint(client):
    r = client.post(
        "/simulate/track",
        json={"config": {"mode": "spatial-consistency", "track_length_m": 5, "seed": 2}},
    )
    assert r.status_code == 200
    snaps = r.json()["snapshots"]
    assert len(snaps) == 6
    assert snaps[0]["n_mpcs"] >= 1


def test_outage_endpoint(client):
    r = client.post(
        "/analysis/outage",
        json={"config": {"carrier_freq_ghz": 73, "seed": 3}, "n_runs": 25, "with_blockage": True},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["n_runs"] == 25
    assert body["with_blockage"] is True
    assert body["threshold_db"] == -5.0
    assert "5" in body["snr_percentiles"] or 5 in body["snr_percentiles"]


def test_blockage_cdf_endpoint(client):
    r = client.post(
        "/analysis/blockage-cdf",
        json={"kind": "dir", "hpbw_deg": 15, "n_samples": 40, "config": {"seed": 4}},
    )
    assert r.status_code == 200
    body = r.json()
    assert len(body["loss_db"]) == 40
    assert body["cdf"][-1] == 1.0


def test_blockage_cdf_bad_kind(client):
    r = client.post("/analysis/blockage-cdf", json={"kind": "bogus", "n_samples": 5})
    assert r.status_code == 400


def test_maps_endpoint(client):
    r = client.post("/maps", json={"config": {"environment": "auto", "seed": 5}})
    assert r.status_code == 200
    body = r.json()
    assert body["sf_map"]["width"] == 201
    assert body["sf_map"]["values"] is None
    assert body["los_map"] is not None


def test_maps_endpoint_values(client):
    r = client.post(
        "/maps", json={"config": {"map_extent_m": 30, "seed": 5}, "include_values": True}
    )
    assert r.status_code == 200
    values = r.json()["sf_map"]["values"]
    assert len(values) == 31
    assert len(values[0]) == 31
