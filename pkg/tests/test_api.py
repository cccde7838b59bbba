import math
import re

import pytest
from fastapi.testclient import TestClient

from app.cache import cache_manager
from app.config import settings
from app.main import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "cache": "disabled"}


def test_root_lists_endpoints(client):
    body = client.get("/").json()
    assert set(body["endpoints"]) == {"oracle", "spectrum", "blocks", "correlate"}


def test_oracle(client):
    response = client.get("/oracle", params={"W": 3, "a": 2})
    assert response.status_code == 200
    assert response.headers["X-Cache-Status"] == "BYPASS"
    body = response.json()
    assert len(body["singular_values"]) == 6
    assert body["singular_values"][0] == pytest.approx(math.sqrt(math.pi / (10 + math.sqrt(19))))
    assert body["normal_case"] is True


def test_oracle_rejects_negative_coupling(client):
    assert client.get("/oracle", params={"W": -1}).status_code == 422


def test_spectrum(client):
    response = client.get("/spectrum", params={"kind": "quadratic", "W": 2, "a": 1, "b": "0"})
    assert response.status_code == 200
    body = response.json()
    assert body["grid_N"] % 8 == 0
    assert len(body["eigenvalues"]) == settings.experiment.j_max + 1
    assert body["singular_values"] == sorted(body["singular_values"], reverse=True)


def test_blocks_rejects_u2_violation(client):
    response = client.get("/blocks", params={"kind": "quadratic", "zeta_angle": 0.5})
    assert response.status_code == 400


def test_spectrum_rejects_invalid_b(client):
    response = client.get("/spectrum", params={"b": "-1"})
    assert response.status_code == 400


def test_correlate_rejects_fast_growing_observable(client):
    response = client.get("/correlate", params={"a": 1, "F": "x"})
    assert response.status_code == 400


def test_cache_miss_then_hit(monkeypatch):
    store = {}

    async def fake_get(prefix, params):
        return store.get(cache_manager.generate_cache_key(prefix, params))

    async def fake_set(prefix, params, result):
        store[cache_manager.generate_cache_key(prefix, params)] = result.model_dump(mode="json")

    monkeypatch.setattr(settings.redis, "enabled", True)
    monkeypatch.setattr(cache_manager, "get", fake_get)
    monkeypatch.setattr(cache_manager, "set", fake_set)
    # 不进入 lifespan，避免连接 Redis
    client = TestClient(app)

    first = client.get("/oracle", params={"W": 3, "a": 2, "j_max": 2})
    assert first.headers["X-Cache-Status"] == "MISS"
    assert len(store) == 1

    second = client.get("/oracle", params={"W": 3, "a": 2, "j_max": 2})
    assert second.headers["X-Cache-Status"] == "HIT"
    assert re.fullmatch(r"transferlab:oracle:[0-9a-f]{32}", second.headers["X-Cache-Key"])
    assert second.json()["singular_values"] == pytest.approx(first.json()["singular_values"])


def test_cache_key_is_order_independent():
    first = cache_manager.generate_cache_key("oracle", {"W": 3.0, "a": 2.0})
    second = cache_manager.generate_cache_key("oracle", {"a": 2.0, "W": 3.0})
    assert first == second
    assert first != cache_manager.generate_cache_key("spectrum", {"W": 3.0, "a": 2.0})
