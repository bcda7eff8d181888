import pytest
from fastapi.testclient import TestClient

from blochloc.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_generate(client):
    resp = client.post(
        "/circuits/generate", json={"program": {"kind": "qft", "n": 3, "input": "101"}}
    )
    assert resp.status_code == 200
    data = resp.json()
    assert data["segments"] == 3
    assert data["circuit"]["n"] == 3
    assert data["circuit"]["program"]["kind"] == "qft"
    assert data["depth"] >= 1


def test_generate_rejects_bad_program(client):
    resp = client.post(
        "/circuits/generate", json={"program": {"kind": "qft", "n": 64, "input": "0"}}
    )
    assert resp.status_code == 400
    resp = client.post(
        "/circuits/generate", json={"program": {"kind": "shor", "n": 3, "input": "000"}}
    )
    assert resp.status_code == 422  # rejected by the request model


def test_inject_and_fault_enumeration(client):
    circuit = client.post(
        "/circuits/generate", json={"program": {"kind": "grover", "n": 2, "input": "11"}}
    ).json()["circuit"]
    faults = client.post("/circuits/faults", json={"circuit": circuit, "seed": 7}).json()
    assert len(faults["faults"]) == 8
    mutated = client.post(
        "/circuits/inject", json={"circuit": circuit, "fault": faults["faults"][0]}
    )
    assert mutated.status_code == 200
    assert mutated.json()["gate_count"] == 13


def test_scheme_endpoint(client):
    resp = client.post(
        "/schemes/build", json={"program": {"kind": "qft", "n": 2, "input": "01"}}
    )
    entries = resp.json()["entries"]
    assert len(entries) == 2
    assert entries[1]["bloch"][0] == pytest.approx(-1.0)


def test_localize_endpoint_reports_one_based_segment(client):
    resp = client.post("/localize", json={
        "program": {"kind": "grover", "n": 2, "input": "11"},
        "fault": {"category": "add", "gate": "x", "segment": 0, "qubits": [0],
                  "position": 10},
        "approach": "bloq",
        "backend": {"mode": "ideal", "seed": 12},
        "threshold": 6,
        "shots": 4096,
    })
    assert resp.status_code == 200
    verdict = resp.json()["verdict"]
    assert verdict["result"] == "faulty"
    assert verdict["segment"] == 1
    assert verdict["qubit"] == 0
    assert verdict["assertions"][0]["k"] == 1


def test_localize_requires_program_or_circuit(client):
    resp = client.post("/localize", json={"approach": "bloq"})
    assert resp.status_code == 400


def test_localize_custom_circuit_uses_numeric_scheme(client):
    # a hand-built circuit without program metadata still localizes via the
    # generic numeric scheme
    circuit = {
        "n": 2,
        "program": None,
        "preamble": [],
        "segments": [[{"kind": "h", "targets": [0]}, {"kind": "cnot", "targets": [1],
                                                      "controls": [0]}]],
    }
    resp = client.post("/localize", json={
        "circuit": circuit, "approach": "bloq",
        "backend": {"mode": "ideal", "seed": 1}, "threshold": 5, "shots": 0,
    })
    assert resp.status_code == 200
    assert resp.json()["verdict"]["result"] == "clean"


def test_experiment_and_report_endpoints(client):
    config = {
        "programs": [{"kind": "grover", "n_values": [2]}],
        "inputs": ["11"],
        "thresholds": [0, 6],
        "shots": 256,
        "backends": [{"mode": "ideal"}],
        "approaches": ["bloq", "proq"],
        "root_seed": 5,
    }
    resp = client.post("/experiment", json=config)
    assert resp.status_code == 200
    data = resp.json()
    assert data["error_count"] == 0
    assert len(data["rows"]) == 1 * 9 * 1 * 2 * 2
    report = client.post("/report", json={"rows": data["rows"]})
    assert report.status_code == 200
    body = report.json()
    assert body["groups"] and body["threshold_sweep"] and body["runtime_depth"]
    bad = client.post("/report", json={"rows": data["rows"], "groupings": ["nope"]})
    assert bad.status_code == 400
