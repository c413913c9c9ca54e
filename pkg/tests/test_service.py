"""HTTP service tests against the mock-backed app."""

import io
import threading

import pytest
from fastapi.testclient import TestClient

from citeweave.cli import main
from citeweave.config import Config
from citeweave.service import make_app

from pdfgen import GOLDEN_SPECS, generate_article


@pytest.fixture
def client(tmp_path):
    corpus_path = tmp_path / "corpus.json"
    app = make_app(str(corpus_path), Config())
    with TestClient(app) as c:
        yield c, corpus_path


def _upload(client, pdf_bytes, corpus_id="corpus", name="a.pdf"):
    return client.post(
        f"/api/corpora/{corpus_id}/documents",
        files={"file": (name, io.BytesIO(pdf_bytes), "application/pdf")},
    )


def test_upload_then_query_returns_references_and_usage(client):
    c, _ = client
    pdf, manifest = generate_article(**GOLDEN_SPECS[0])
    response = _upload(c, pdf)
    assert response.status_code == 200
    doc_id = response.json()["doc_id"]

    listing = c.get("/api/corpora/corpus/documents").json()
    assert listing["documents"][0]["doc_id"] == doc_id
    assert listing["documents"][0]["title"] == manifest.title

    query = " ".join(manifest.sections[0].paragraphs[0].split()[:6])
    response = c.post("/api/corpora/corpus/query", json={"query": query, "grain": "fine"})
    assert response.status_code == 200
    payload = response.json()
    import jsonschema

    from citeweave.pipeline import QUERY_RESPONSE_SCHEMA

    jsonschema.validate(payload, QUERY_RESPONSE_SCHEMA)
    assert payload["references"]["primary"]
    assert payload["usage"]["input_tokens"] > 0
    assert payload["rounds"] >= 1


def test_query_empty_corpus_409(client):
    c, _ = client
    response = c.post("/api/corpora/corpus/query", json={"query": "anything", "grain": "fine"})
    assert response.status_code == 409
    assert response.json()["error"]["code"] == "empty_corpus"


def test_unknown_paragraph_404(client):
    c, _ = client
    pdf, _ = generate_article(**GOLDEN_SPECS[0])
    _upload(c, pdf)
    response = c.get("/api/corpora/corpus/paragraphs/nope/0/99")
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "not_found"


def test_paragraph_lookup_round_trip(client):
    c, _ = client
    pdf, _ = generate_article(**GOLDEN_SPECS[0])
    _upload(c, pdf)
    query_payload = c.post(
        "/api/corpora/corpus/query", json={"query": "lattice coupling signal", "grain": "coarse"}
    ).json()
    para_id = query_payload["contributing_para_ids"][0]
    response = c.get(f"/api/corpora/corpus/paragraphs/{para_id}")
    assert response.status_code == 200
    body = response.json()
    assert body["para_id"] == para_id and body["text"]


def test_upload_non_pdf_422(client):
    c, _ = client
    response = _upload(c, b"not a pdf at all", name="junk.bin")
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "unsupported_document"


def test_concurrent_uploads_serialized(client):
    c, corpus_path = client
    pdf1, _ = generate_article(**GOLDEN_SPECS[0])
    pdf2, _ = generate_article(**GOLDEN_SPECS[1])
    results = {}

    def upload(name, data):
        results[name] = _upload(c, data, name=name)

    threads = [
        threading.Thread(target=upload, args=("one.pdf", pdf1)),
        threading.Thread(target=upload, args=("two.pdf", pdf2)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r.status_code == 200 for r in results.values())
    listing = c.get("/api/corpora/corpus/documents").json()
    assert len(listing["documents"]) == 2


def test_usage_endpoint_accumulates(client):
    c, _ = client
    pdf, manifest = generate_article(**GOLDEN_SPECS[0])
    _upload(c, pdf)
    before = c.get("/api/usage").json()
    query = " ".join(manifest.sections[0].paragraphs[0].split()[:6])
    c.post("/api/corpora/corpus/query", json={"query": query, "grain": "coarse"})
    after = c.get("/api/usage").json()
    assert after["totals"]["input_tokens"] > before["totals"]["input_tokens"]
    assert "retrieve" in after["stages"]


def test_job_polling_path(tmp_path):
    corpus_path = tmp_path / "corpus.json"
    config = Config(job_threshold_seconds=0.0)  # force the 202 + poll flow
    app = make_app(str(corpus_path), config)
    with TestClient(app) as c:
        pdf, manifest = generate_article(**GOLDEN_SPECS[0])
        _upload(c, pdf)
        query = " ".join(manifest.sections[0].paragraphs[0].split()[:6])
        response = c.post("/api/corpora/corpus/query", json={"query": query, "grain": "fine"})
        assert response.status_code == 202
        job_id = response.json()["job_id"]
        for _ in range(200):
            status = c.get(f"/api/jobs/{job_id}").json()
            if status["status"] != "running":
                break
        assert status["status"] == "done"
        assert status["result"]["references"]["primary"]
        assert status["progress"]["completed"] == status["progress"]["total"] > 0


def test_cli_and_service_payloads_identical(tmp_path, capsys):
    pdf, manifest = generate_article(**GOLDEN_SPECS[0])
    pdf_path = tmp_path / "a.pdf"
    pdf_path.write_bytes(pdf)
    corpus_path = tmp_path / "corpus.json"
    assert main(["ingest", "--corpus", str(corpus_path), str(pdf_path)]) == 0
    capsys.readouterr()

    query = " ".join(manifest.sections[0].paragraphs[0].split()[:6])
    assert main(["ask", "--corpus", str(corpus_path), "--grain", "fine", "--json", query]) == 0
    import json

    cli_payload = json.loads(capsys.readouterr().out)

    app = make_app(str(corpus_path), Config())
    with TestClient(app) as c:
        service_payload = c.post(
            "/api/corpora/corpus/query", json={"query": query, "grain": "fine"}
        ).json()
    assert service_payload == cli_payload


def test_wrong_corpus_id_404(client):
    c, _ = client
    response = c.get("/api/corpora/other/documents")
    assert response.status_code == 404
