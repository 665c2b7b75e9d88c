"""Local HTTP service exposing a pipeline workspace to the explorer UI.

Endpoints (all JSON, versioned under /api):

  GET  /api/health                    {"status", "version"}
  GET  /api/patches                   patch set with rest-pose centroids
  GET  /api/activities                {"activities": [...]}
  GET  /api/utility?activity=<label>  {"activity", "locations", "scores"}
  GET  /api/utility/mean              {"locations", "scores"}
  POST /api/select                    {"tau", "excluded"?, "max_sensors"?}
                                      -> SelectionResult, byte-identical to
                                         CLI `select` on the same inputs
  POST /api/jobs                      {"activities": [...]} -> JobRecord;
                                      re-evaluates the matrix on a label
                                      subset from the stored degraded traces
  GET  /api/jobs/<id>                 JobRecord

GET handlers never write to the workspace; job outputs land under
<workspace>/jobs/<id>/. One evaluation job runs at a time, the rest queue.
"""

from __future__ import annotations

import errno
import json
import mimetypes
import queue
import threading
import uuid
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from . import io
from .errors import (BadWorkspace, InvalidInput, PortInUse, UnknownActivity,
                     WearsimError)
from .selection import SelectionRequest, greedy_select
from .utility import EvalConfig, LabeledTraceSet, TraceEntry, utility_matrix

API_VERSION = "1"
_TERMINAL = ("done", "failed")


@dataclass
class JobRecord:
    """Async evaluation state; terminal stages are immutable."""

    id: str
    stage: str = "sampling"  # sampling | synthesis | evaluation | done | failed
    progress: float = 0.0
    error: Optional[str] = None
    activities: tuple = ()
    result: Optional[dict] = None

    def to_dict(self) -> dict:
        doc = {"id": self.id, "stage": self.stage,
               "progress": round(float(self.progress), 4),
               "error": self.error,
               "activities": list(self.activities)}
        if self.result is not None:
            doc["result"] = self.result
        return doc


class ExplorerServer(ThreadingHTTPServer):
    """Serves one workspace; all computation delegated to library calls."""

    daemon_threads = True

    def __init__(self, workspace, port: int = 8765, ui_dir=None, jobs: int = 1):
        self.workspace = Path(workspace)
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self.jobs = jobs
        self._check_workspace()
        self.matrix = io.load_utility_matrix(self.workspace / "utility_matrix.csv")
        self.patches_doc = io._parse_json(
            io.read_text(self.workspace / "patches.json"), "patch set")
        self.eval_cfg = self._stored_eval_config()
        self._job_lock = threading.Lock()
        self._job_records: dict = {}
        self._job_queue: "queue.Queue" = queue.Queue()
        try:
            super().__init__(("127.0.0.1", port), _Handler)
        except OSError as exc:
            if exc.errno in (errno.EADDRINUSE, errno.EACCES):
                raise PortInUse(f"cannot bind port {port}: {exc}") from exc
            raise
        self._worker = threading.Thread(target=self._job_loop, daemon=True)
        self._worker.start()

    # ------------------------------------------------------------ workspace

    def _check_workspace(self) -> None:
        ws = self.workspace
        if not ws.is_dir():
            raise BadWorkspace(f"workspace {ws} is not a directory")
        needed = [ws / "utility_matrix.csv", ws / "patches.json"]
        if all(p.exists() for p in needed):
            return
        # artifacts absent: build them if the workspace records a manifest
        rc = ws / "run_config.json"
        if rc.exists():
            doc = io._parse_json(io.read_text(rc), "run config")
            from .pipeline import run_pipeline
            cfg = io.run_config_from_dict(doc.get("config", {}))
            run_pipeline(doc["manifest"], cfg, ws, jobs=self.jobs)
            return
        missing = [p.name for p in needed if not p.exists()]
        raise BadWorkspace(f"workspace {ws} lacks {missing} and has no "
                           f"run_config.json to rebuild from")

    def _stored_eval_config(self) -> EvalConfig:
        rc = self.workspace / "run_config.json"
        if not rc.exists():
            return EvalConfig()
        doc = io._parse_json(io.read_text(rc), "run config")
        return io.run_config_from_dict(doc.get("config", {})).eval

    # ----------------------------------------------------------------- jobs

    def submit_job(self, activities: list) -> JobRecord:
        rec = JobRecord(id=uuid.uuid4().hex[:12], activities=tuple(activities))
        with self._job_lock:
            self._job_records[rec.id] = rec
        self._job_queue.put(rec.id)
        return rec

    def job(self, job_id: str) -> Optional[JobRecord]:
        with self._job_lock:
            return self._job_records.get(job_id)

    def _update_job(self, job_id: str, stage: Optional[str] = None,
                    progress: Optional[float] = None,
                    error: Optional[str] = None,
                    result: Optional[dict] = None) -> None:
        with self._job_lock:
            rec = self._job_records[job_id]
            if rec.stage in _TERMINAL:
                return
            if stage is not None:
                rec.stage = stage
            if progress is not None:
                rec.progress = max(rec.progress, float(progress))
            if error is not None:
                rec.error = error
            if result is not None:
                rec.result = result

    def _job_loop(self) -> None:
        while True:
            job_id = self._job_queue.get()
            if job_id is None:
                return
            try:
                self._run_job(job_id)
            except Exception as exc:
                self._update_job(job_id, stage="failed", error=str(exc))

    def _run_job(self, job_id: str) -> None:
        rec = self.job(job_id)
        self._update_job(job_id, stage="sampling", progress=0.02)
        pset, _ = io.load_patch_set(self.workspace / "patches.json")

        self._update_job(job_id, stage="synthesis", progress=0.1)
        traces_root = self.workspace / "traces"
        if not traces_root.is_dir():
            raise BadWorkspace("workspace holds no degraded traces")
        wanted = set(rec.activities)
        seq_dirs = sorted(d for d in traces_root.iterdir()
                          if (d / "_meta.json").exists())
        entries = []
        kept = 0
        for i, d in enumerate(seq_dirs):
            meta, traces = io.load_sequence_traces(d)
            if meta["activity"] not in wanted:
                continue
            kept += 1
            for t in traces:
                entries.append(TraceEntry(trace=t, activity=meta["activity"],
                                          sequence_id=meta["sequence_id"],
                                          subject=meta.get("subject")))
            self._update_job(job_id, progress=0.1 + 0.4 * (i + 1) / len(seq_dirs))
        if kept == 0:
            raise InvalidInput(f"no sequences with activities {sorted(wanted)}")

        self._update_job(job_id, stage="evaluation", progress=0.5)
        matrix = utility_matrix(LabeledTraceSet(entries=tuple(entries)), pset,
                                self.eval_cfg, jobs=self.jobs)
        out_dir = self.workspace / "jobs" / job_id
        out_dir.mkdir(parents=True, exist_ok=True)
        io.write_utility_matrix(matrix, out_dir / "utility_matrix.csv")
        self._update_job(job_id, progress=0.95)
        result = {"activities": list(matrix.activities),
                  "locations": [int(v) for v in matrix.locations],
                  "f1": [[round(float(v), 6) for v in row]
                         for row in matrix.f1]}
        self._update_job(job_id, progress=1.0, result=result)
        self._update_job(job_id, stage="done")

    def shutdown(self) -> None:
        self._job_queue.put(None)
        super().shutdown()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: ExplorerServer

    def log_message(self, fmt, *args):
        pass

    # ------------------------------------------------------------ plumbing

    def _send(self, status: int, body: bytes,
              ctype: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, obj) -> None:
        self._send(status, io.canonical_json(obj).encode("utf-8"))

    def _error(self, status: int, message: str) -> None:
        self._json(status, {"error": message})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            doc = json.loads(raw.decode("utf-8")) if raw else {}
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"malformed JSON body: {exc}")
        if not isinstance(doc, dict):
            raise InvalidInput("body must be a JSON object")
        return doc

    # -------------------------------------------------------------- routes

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        url = urlparse(self.path)
        srv = self.server
        try:
            if url.path == "/api/health":
                from . import __version__
                self._json(200, {"status": "ok", "version": __version__,
                                 "api": API_VERSION})
            elif url.path == "/api/patches":
                self._json(200, srv.patches_doc)
            elif url.path == "/api/activities":
                self._json(200, {"activities": list(srv.matrix.activities)})
            elif url.path == "/api/utility/mean":
                scores = srv.matrix.f1.mean(axis=1)
                self._json(200, {
                    "locations": [int(v) for v in srv.matrix.locations],
                    "scores": [round(float(v), 6) for v in scores]})
            elif url.path == "/api/utility":
                params = parse_qs(url.query)
                if "activity" not in params:
                    return self._error(400, "missing ?activity= parameter")
                label = params["activity"][0]
                try:
                    col = srv.matrix.column(label)
                except UnknownActivity as exc:
                    return self._error(404, str(exc))
                self._json(200, {
                    "activity": label,
                    "locations": [int(v) for v in srv.matrix.locations],
                    "scores": [round(float(v), 6) for v in col]})
            elif url.path.startswith("/api/jobs/"):
                rec = srv.job(url.path.rsplit("/", 1)[1])
                if rec is None:
                    return self._error(404, "unknown job id")
                self._json(200, rec.to_dict())
            elif url.path.startswith("/api/"):
                self._error(404, f"no such endpoint {url.path}")
            else:
                self._static(url.path)
        except WearsimError as exc:
            self._error(400, str(exc))

    def do_POST(self):
        url = urlparse(self.path)
        srv = self.server
        try:
            if url.path == "/api/select":
                body = self._read_body()
                if "tau" not in body:
                    return self._error(400, "missing required field 'tau'")
                try:
                    request = SelectionRequest(
                        tau=float(body["tau"]),
                        excluded=frozenset(int(v) for v in
                                           body.get("excluded") or ()),
                        max_sensors=(None if body.get("max_sensors") is None
                                     else int(body["max_sensors"])))
                    result = greedy_select(srv.matrix, request)
                except (TypeError, ValueError) as exc:
                    return self._error(400, f"bad select request: {exc}")
                payload = io.canonical_json(
                    io.selection_to_dict(result, request))
                self._send(200, payload.encode("utf-8"))
            elif url.path == "/api/jobs":
                body = self._read_body()
                acts = body.get("activities")
                if not isinstance(acts, list) or not acts:
                    return self._error(400, "field 'activities' must be a "
                                            "non-empty list")
                acts = sorted({str(a) for a in acts})
                unknown = [a for a in acts
                           if a not in srv.matrix.activities]
                if unknown:
                    return self._error(400, f"unknown activities {unknown}")
                if len(acts) < 2:
                    return self._error(400, "need at least 2 activities")
                rec = srv.submit_job(acts)
                self._json(202, rec.to_dict())
            elif url.path.startswith("/api/"):
                self._error(404, f"no such endpoint {url.path}")
            else:
                self._error(404, "not found")
        except WearsimError as exc:
            self._error(400, str(exc))

    # ---------------------------------------------------------- static UI

    def _static(self, path: str) -> None:
        root = self.server.ui_dir
        if root is None:
            return self._error(404, "no UI bundled; API lives under /api/")
        rel = path.lstrip("/") or "index.html"
        full = (root / rel).resolve()
        if full.is_dir():
            full = full / "index.html"
        if root not in full.parents and full != root:
            return self._error(403, "forbidden")
        if not full.is_file():
            return self._error(404, "not found")
        ctype = mimetypes.guess_type(str(full))[0] or "application/octet-stream"
        self._send(200, full.read_bytes(), ctype)


def serve_forever(workspace, port: int = 8765, ui_dir=None,
                  jobs: int = 1) -> None:
    server = ExplorerServer(workspace, port=port, ui_dir=ui_dir, jobs=jobs)
    host, actual_port = server.server_address[:2]
    print(f"serving {workspace} on http://{host}:{actual_port}/ "
          f"(API under /api/)", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
