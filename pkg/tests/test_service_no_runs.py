from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from annobench.schema import reference_schema_path
from annobench.service import ServiceConfig, create_app
from annobench.synth import generate_corpus, write_corpus


@pytest.fixture(scope="module")
def bare_client(tmp_path_factory):
    """Service in annotation-only mode: corpus and schema, no runs at all."""
    root = tmp_path_factory.mktemp("bare")
    truths = generate_corpus(8, seed=44)
    corpus_path = write_corpus(root / "corpus.ndjson", truths)
    config = ServiceConfig(
        workspace=root,
        corpus_path=corpus_path,
        schema_path=reference_schema_path(),
    )
    return TestClient(create_app(config))


def test_flagged_only_without_runs_is_empty_not_error(bare_client):
    response = bare_client.get("/api/reports", params={"filter": "flagged-only"})
    assert response.status_code == 200
    assert response.json()["items"] == []


def test_unannotated_filter_lists_everything(bare_client):
    body = bare_client.get("/api/reports", params={"filter": "unannotated-only"}).json()
    assert body["total"] > 0
    assert all(row["status"] == "unannotated" for row in body["items"])


def test_queue_is_empty_without_a_pair(bare_client):
    body = bare_client.get("/api/queue").json()
    assert body == {"pair": None, "items": []}


def test_compare_404_without_a_pair(bare_client):
    first = bare_client.get("/api/reports", params={"filter": "all"}).json()["items"][0]
    assert bare_client.get(f"/api/compare/{first['report_id']}").status_code == 404


def test_annotation_still_saves_without_runs(bare_client):
    rid = bare_client.get("/api/reports", params={"filter": "all"}).json()["items"][0]["report_id"]
    response = bare_client.put(f"/api/reports/{rid}/annotation", json={"values": {"n_total": "4"}})
    assert response.status_code == 200
    assert response.json()["values"]["n_total"] == 4
    listed = bare_client.get("/api/reports", params={"filter": "unannotated-only"}).json()
    assert rid not in {row["report_id"] for row in listed["items"]}
