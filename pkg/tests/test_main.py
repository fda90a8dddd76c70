from fastapi.testclient import TestClient

from qpmoduli.main import app

client = TestClient(app)


def test_health() -> None:
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_root() -> None:
    response = client.get("/")
    assert response.status_code == 200
    payload = response.json()
    assert payload["message"] == "API is running"
    assert payload["docs"] == "/docs"


def test_catalog() -> None:
    response = client.get("/catalog")
    assert response.status_code == 200
    entries = {entry["name"]: entry for entry in response.json()}
    assert entries["sl2"]["dim"] == 3
    assert entries["sl2"]["valid"]
    assert not entries["gl2_central"]["nondegenerate"]


def test_catalog_entry() -> None:
    response = client.get("/catalog/sl2")
    assert response.status_code == 200
    assert response.json()["labels"] == ["e", "f", "h"]
    assert client.get("/catalog/so3").status_code == 404


def test_analyze_surface() -> None:
    response = client.post("/surfaces/analyze", json={"disks": 2, "steps": [{"op": "glue", "x": "+1", "y": "+2"}]})
    assert response.status_code == 200
    assert set(response.json()) == {"surface", "analysis"}

    bad = client.post("/surfaces/analyze", json={"disks": 1, "steps": [{"op": "forget", "x": "+7"}]})
    assert bad.status_code == 400


def test_run_suite() -> None:
    payload = {"name": "api", "algebra": "sl2", "surface": "disk", "checks": ["quasi_poisson"], "seed": 3, "points": 1}
    response = client.post("/suites/run", json=payload)
    assert response.status_code == 200
    report = response.json()
    assert report["ok"]
    assert report["checks"][0]["name"] == "quasi_poisson"

    payload["algebra"] = "so3"
    assert client.post("/suites/run", json=payload).status_code == 400
    assert client.post("/suites/run", json={"name": "api"}).status_code == 422
