import json
import threading
import time
import urllib.request
from pathlib import Path

import pytest

from wearsim import cli, io
from wearsim.errors import BadWorkspace, PortInUse
from wearsim.service import ExplorerServer

pytestmark = pytest.mark.usefixtures("small_workspace")


@pytest.fixture(scope="module")
def server(small_workspace):
    srv = ExplorerServer(small_workspace, port=0)  # ephemeral port
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()
    thread.join(timeout=5)


def url(server, path):
    host, port = server.server_address[:2]
    return f"http://{host}:{port}{path}"


def get(server, path):
    try:
        with urllib.request.urlopen(url(server, path)) as resp:
            return resp.status, resp.read(), dict(resp.headers)
    except urllib.error.HTTPError as err:
        return err.code, err.read(), dict(err.headers)


def post(server, path, doc):
    req = urllib.request.Request(
        url(server, path), data=json.dumps(doc).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, resp.read(), dict(resp.headers)
    except urllib.error.HTTPError as err:
        return err.code, err.read(), dict(err.headers)


def wait_for_job(server, job_id, timeout=120.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        rec = server.job(job_id)
        if rec and rec.stage in ("done", "failed"):
            return rec
        time.sleep(0.1)
    raise TimeoutError(f"job {job_id} did not finish")


# ----------------------------------------------------------------- GET APIs

def test_health(server):
    status, body, headers = get(server, "/api/health")
    assert status == 200
    doc = json.loads(body)
    assert doc["status"] == "ok"
    assert doc["version"]
    assert headers["Content-Type"] == "application/json"


def test_cors_headers_everywhere(server):
    for path in ("/api/health", "/api/nope"):
        _, _, headers = get(server, path)
        assert headers["Access-Control-Allow-Origin"] == "*"


def test_patches_payload(server):
    status, body, _ = get(server, "/api/patches")
    assert status == 200
    doc = json.loads(body)
    assert len(doc["patches"]) == 24
    first = doc["patches"][0]
    assert set(first) >= {"id", "vertices", "centroid"}
    assert len(first["centroid"]) == 3


def test_activities(server):
    status, body, _ = get(server, "/api/activities")
    assert status == 200
    assert json.loads(body)["activities"] == ["arm_only", "leg_only",
                                              "whole_body"]


def test_utility_column(server):
    status, body, _ = get(server, "/api/utility?activity=arm_only")
    assert status == 200
    doc = json.loads(body)
    assert doc["activity"] == "arm_only"
    assert len(doc["scores"]) == 24
    assert all(0.0 <= s <= 1.0 for s in doc["scores"])


def test_utility_mean_matches_columns(server):
    mean = json.loads(get(server, "/api/utility/mean")[1])
    cols = [json.loads(get(server, f"/api/utility?activity={a}")[1])["scores"]
            for a in ("arm_only", "leg_only", "whole_body")]
    for i, s in enumerate(mean["scores"]):
        expect = sum(c[i] for c in cols) / 3
        assert s == pytest.approx(expect, abs=2e-6)


def test_utility_missing_param(server):
    status, body, _ = get(server, "/api/utility")
    assert status == 400
    assert "activity" in json.loads(body)["error"]


def test_utility_unknown_activity(server):
    status, _, _ = get(server, "/api/utility?activity=flying")
    assert status == 404


def test_unknown_endpoint(server):
    assert get(server, "/api/nothing")[0] == 404


def test_options_preflight(server):
    req = urllib.request.Request(url(server, "/api/select"), method="OPTIONS")
    with urllib.request.urlopen(req) as resp:
        assert resp.status == 204
        assert resp.headers["Access-Control-Allow-Methods"] == \
            "GET, POST, OPTIONS"


def test_get_does_not_mutate_workspace(server, small_workspace):
    ws = Path(small_workspace)
    snapshot = {p: p.stat().st_mtime_ns for p in ws.rglob("*") if p.is_file()}
    for path in ("/api/health", "/api/patches", "/api/activities",
                 "/api/utility/mean", "/api/utility?activity=arm_only"):
        get(server, path)
    after = {p: p.stat().st_mtime_ns for p in ws.rglob("*") if p.is_file()}
    assert snapshot == after


# -------------------------------------------------------------------- select

def test_select_basic(server):
    status, body, _ = post(server, "/api/select", {"tau": 0.8})
    assert status == 200
    doc = json.loads(body)
    assert doc["feasible"] is True
    assert doc["coverage"] >= 0.8
    assert doc["request"] == {"tau": 0.8, "excluded": [], "max_sensors": None}


def test_select_byte_identical_to_cli(server, small_workspace, capsys):
    payloads = [
        {"tau": 0.85},
        {"tau": 0.9, "excluded": [0, 1, 2]},
        {"tau": 0.99, "max_sensors": 2},
    ]
    for body in payloads:
        status, api_bytes, _ = post(server, "/api/select", body)
        assert status in (200,)
        argv = ["select", str(small_workspace), "--tau", str(body["tau"])]
        if body.get("excluded"):
            argv += ["--exclude", ",".join(str(v) for v in body["excluded"])]
        if body.get("max_sensors") is not None:
            argv += ["--max-sensors", str(body["max_sensors"])]
        code = cli.main(argv)
        out = capsys.readouterr().out
        assert code in (0, 3)
        assert out.encode() == api_bytes + b"\n" or out.encode() == api_bytes \
            or out == api_bytes.decode() + "\n"


def test_select_missing_tau(server):
    status, body, _ = post(server, "/api/select", {})
    assert status == 400
    assert "tau" in json.loads(body)["error"]


def test_select_bad_tau(server):
    assert post(server, "/api/select", {"tau": 1.7})[0] == 400
    assert post(server, "/api/select", {"tau": "wide"})[0] == 400


def test_select_malformed_body(server):
    req = urllib.request.Request(
        url(server, "/api/select"), data=b"{not json",
        headers={"Content-Type": "application/json"}, method="POST")
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(req)
    assert err.value.code == 400


# ---------------------------------------------------------------------- jobs

def test_job_lifecycle(server, small_workspace):
    status, body, _ = post(server, "/api/jobs",
                           {"activities": ["arm_only", "leg_only"]})
    assert status == 202
    rec_doc = json.loads(body)
    job_id = rec_doc["id"]
    assert rec_doc["stage"] in ("sampling", "synthesis", "evaluation", "done")

    rec = wait_for_job(server, job_id)
    assert rec.stage == "done"
    assert rec.progress == 1.0
    assert rec.result["activities"] == ["arm_only", "leg_only"]
    assert len(rec.result["locations"]) == 24

    status, body, _ = get(server, f"/api/jobs/{job_id}")
    assert status == 200
    doc = json.loads(body)
    assert doc["stage"] == "done"
    assert doc["progress"] == 1.0
    out_csv = Path(small_workspace) / "jobs" / job_id / "utility_matrix.csv"
    assert out_csv.exists()
    stored = io.load_utility_matrix(out_csv)
    assert stored.activities == ("arm_only", "leg_only")


def test_job_queueing_serializes(server):
    ids = [json.loads(post(server, "/api/jobs",
                           {"activities": ["arm_only", "whole_body"]})[1])["id"]
           for _ in range(2)]
    for job_id in ids:
        rec = wait_for_job(server, job_id)
        assert rec.stage == "done"


def test_job_validation(server):
    assert post(server, "/api/jobs", {})[0] == 400
    assert post(server, "/api/jobs", {"activities": []})[0] == 400
    assert post(server, "/api/jobs", {"activities": ["arm_only"]})[0] == 400
    assert post(server, "/api/jobs",
                {"activities": ["arm_only", "jousting"]})[0] == 400


def test_job_unknown_id(server):
    assert get(server, "/api/jobs/doesnotexist")[0] == 404


def test_job_progress_monotone_and_terminal_immutable(server):
    job_id = json.loads(post(server, "/api/jobs",
                             {"activities": ["leg_only", "whole_body"]})[1])["id"]
    seen = []
    while True:
        rec = server.job(job_id)
        seen.append((rec.stage, rec.progress))
        if rec.stage in ("done", "failed"):
            break
        time.sleep(0.05)
    progress = [p for _, p in seen]
    assert progress == sorted(progress)
    # terminal records refuse mutation
    server._update_job(job_id, stage="sampling", progress=0.0)
    rec = server.job(job_id)
    assert rec.stage == "done"
    assert rec.progress == 1.0


# ---------------------------------------------------------------- lifecycle

def test_port_in_use(server, small_workspace):
    port = server.server_address[1]
    with pytest.raises(PortInUse):
        ExplorerServer(small_workspace, port=port)


def test_bad_workspace(tmp_path):
    with pytest.raises(BadWorkspace):
        ExplorerServer(tmp_path / "empty", port=0)
    (tmp_path / "hollow").mkdir()
    with pytest.raises(BadWorkspace):
        ExplorerServer(tmp_path / "hollow", port=0)


def test_static_ui_serving(small_workspace, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<h1>explorer</h1>")
    (ui / "app.js").write_text("console.log('hi')")
    srv = ExplorerServer(small_workspace, port=0, ui_dir=ui)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        status, body, headers = get(srv, "/")
        assert status == 200
        assert b"explorer" in body
        assert headers["Content-Type"].startswith("text/html")
        status, body, headers = get(srv, "/app.js")
        assert status == 200
        assert headers["Content-Type"].startswith("text/javascript") or \
            headers["Content-Type"].startswith("application/javascript")
        assert get(srv, "/../secrets.txt")[0] in (403, 404)
        assert get(srv, "/missing.css")[0] == 404
    finally:
        srv.shutdown()
        srv.server_close()
        thread.join(timeout=5)
