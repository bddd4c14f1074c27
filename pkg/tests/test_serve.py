import json

import pytest
from fastapi.testclient import TestClient

from swipeforge.geometry import load_layout
from swipeforge.serve import create_app


@pytest.fixture(scope="module")
def client(overfit_bundle):
    app = create_app(model_dir=overfit_bundle.model_dir)
    with TestClient(app) as c:
        yield c


def decode_payload(bundle, word, k=3):
    trace = bundle.trace_for(word)
    return {
        "layout_name": "qwerty_en",
        "task": "indic_to_indic",
        "points": [[p.x, p.y] for p in trace.points],
        "k": k,
    }


class TestLayoutEndpoint:
    def test_qwerty_document(self, client):
        resp = client.get("/layout/qwerty_en")
        assert resp.status_code == 200
        doc = resp.json()
        assert len(doc["keys"]) == 26
        layout = load_layout(doc)  # round-trips through the validator
        assert layout.name == "qwerty_en"

    def test_unknown_layout_404(self, client):
        assert client.get("/layout/missing").status_code == 404

    def test_unknown_route_404(self, client):
        assert client.get("/definitely/not/here").status_code == 404


class TestHealth:
    def test_reports_checkpoints_and_layouts(self, client):
        health = client.get("/health").json()
        assert health["status"] == "ok"
        assert health["task"] == "indic_to_indic"
        assert "path_decoder.json" in health["checkpoints"]
        assert "qwerty_en" in health["layouts"]

    def test_loading_before_models_ready(self):
        app = create_app(model_dir=None, defer_load=True)
        with TestClient(app) as c:
            assert c.get("/health").json()["status"] == "loading"


class TestDecodeEndpoint:
    def test_fixture_word_at_rank_one(self, client, overfit_bundle):
        for word in overfit_bundle.words:
            resp = client.post("/decode", json=decode_payload(overfit_bundle, word))
            assert resp.status_code == 200
            body = resp.json()
            assert body["suggestions"][0]["word"] == word
            assert body["timing_ms"] >= 0
            prov = body["suggestions"][0]["stage_provenance"]
            assert set(prov) == {"path_string", "translit", "translit_log_prob", "fallback"}

    def test_single_point_is_400(self, client):
        resp = client.post("/decode", json={
            "layout_name": "qwerty_en", "task": "indic_to_indic",
            "points": [[0.1, 0.1]], "k": 3})
        assert resp.status_code == 400

    def test_malformed_body_is_400(self, client):
        resp = client.post("/decode", json={"layout_name": "qwerty_en"})
        assert resp.status_code == 400
        resp = client.post("/decode", json={
            "layout_name": "qwerty_en", "task": "indic_to_indic",
            "points": [[0.1, "oops"], [0.2, 0.2]], "k": 1})
        assert resp.status_code == 400

    def test_non_finite_points_rejected(self, client):
        resp = client.post("/decode", content=json.dumps({
            "layout_name": "qwerty_en", "task": "indic_to_indic",
            "points": [[0.1, 0.1], [1e400, 0.2]], "k": 1}),
            headers={"content-type": "application/json"})
        assert resp.status_code == 400

    def test_suggestion_count_capped_at_k(self, client, overfit_bundle):
        resp = client.post("/decode", json=decode_payload(overfit_bundle, "cat", k=3))
        assert len(resp.json()["suggestions"]) <= 3
        resp = client.post("/decode", json=decode_payload(overfit_bundle, "cat", k=1))
        assert len(resp.json()["suggestions"]) <= 1

    def test_k_out_of_range_is_400(self, client, overfit_bundle):
        payload = decode_payload(overfit_bundle, "cat", k=7)
        assert client.post("/decode", json=payload).status_code == 400

    def test_task_mismatch_is_409(self, client, overfit_bundle):
        payload = decode_payload(overfit_bundle, "cat")
        payload["task"] = "english_to_indic"
        assert client.post("/decode", json=payload).status_code == 409

    def test_layout_mismatch_is_409(self, client, overfit_bundle):
        payload = decode_payload(overfit_bundle, "cat")
        payload["layout_name"] = "devanagari_hi"
        assert client.post("/decode", json=payload).status_code == 409

    def test_service_decode_equals_pipeline_decode(self, client, overfit_bundle):
        """The service must featurize exactly as the library does."""
        from swipeforge import pipeline as pl
        for word in overfit_bundle.words:
            trace = overfit_bundle.trace_for(word)
            local = pl.run_pipeline(overfit_bundle.task, trace)
            resp = client.post("/decode", json=decode_payload(overfit_bundle, word))
            remote = resp.json()["suggestions"]
            assert [c.word for c in local.candidates] == [s["word"] for s in remote]
            for c, s in zip(local.candidates, remote):
                assert s["score"] == c.score  # bit-for-bit: same feature path

    def test_concurrent_requests_match_serial(self, client, overfit_bundle):
        from concurrent.futures import ThreadPoolExecutor
        payload = decode_payload(overfit_bundle, "dog")
        serial = client.post("/decode", json=payload).json()["suggestions"]
        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(
                lambda _: client.post("/decode", json=payload).json()["suggestions"],
                range(8)))
        assert all(r == serial for r in results)


class TestUiGestureFixtures:
    """The browser UI's recorded-gesture payloads must decode to the fixture
    words through the real service (the cross-language half of the UI loop)."""

    def test_recorded_ui_payload_decodes_to_fixture_word(self, client):
        import pathlib
        fixture_path = (pathlib.Path(__file__).parent.parent / "frontend" / "tests"
                        / "fixtures" / "gestures.json")
        fixture = json.loads(fixture_path.read_text())
        for word, gesture in fixture["gestures"].items():
            resp = client.post("/decode", json={
                "layout_name": "qwerty_en",
                "task": "indic_to_indic",
                "points": gesture["payload_points"],
                "k": 3,
            })
            assert resp.status_code == 200
            suggestions = resp.json()["suggestions"]
            assert suggestions and suggestions[0]["word"] == word


class TestTraceLogging:
    def test_opt_in_trace_log_writes_record_format(self, overfit_bundle, tmp_path):
        log = tmp_path / "traces.jsonl"
        app = create_app(model_dir=overfit_bundle.model_dir, trace_log=log)
        with TestClient(app) as c:
            c.post("/decode", json=decode_payload(overfit_bundle, "cat"))
        record = json.loads(log.read_text().splitlines()[0])
        assert set(record) == {"word", "layout_name", "points"}
        assert record["word"] == "cat"

    def test_no_log_by_default(self, client, overfit_bundle, tmp_path):
        # the module-scoped client has no trace_log; nothing to assert on disk
        resp = client.post("/decode", json=decode_payload(overfit_bundle, "cat"))
        assert resp.status_code == 200
