"""Session-scoped HTTP service for datasets, model fitting, and segments.

Single-user local tool: no authentication, binds to loopback by default.
Conjoint fits run on a small worker pool with polled job status; the other
methods are quick enough to answer synchronously (the job contract is the
same either way).
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import FileResponse, JSONResponse, Response

from .analyses import basic_stats_tables, run_method
from .dataset import ImportOptions, import_dataset, summarize, transpose_copy
from .errors import ImportError_, SensokitError, ValidationError
from .inddiff import SegmentSet, segments_to_dataset
from .session import Session

ASYNC_METHODS = {"conjoint"}  # heavy fits answer via job polling


def create_app(session_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sensokit service")
    session = Session(session_dir)
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    registry_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=2)

    def error_response(exc: Exception) -> JSONResponse:
        if isinstance(exc, KeyError):
            return JSONResponse({"error": f"not found: {exc.args[0]}"}, status_code=404)
        if isinstance(exc, ImportError_):
            return JSONResponse({"error": str(exc)}, status_code=400)
        if isinstance(exc, ValidationError):
            return JSONResponse({"error": str(exc)}, status_code=422)
        if isinstance(exc, SensokitError):
            return JSONResponse({"error": str(exc)}, status_code=500)
        raise exc

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/datasets")
    def list_datasets():
        return session.list_datasets()

    @app.post("/datasets", status_code=201)
    async def upload_dataset(file: UploadFile = File(...), options: str = Form("{}")):
        try:
            raw = await file.read()
            opts_doc = json.loads(options)
            name = opts_doc.pop("dataset_name", None) or (file.filename or "dataset").rsplit(".", 1)[0]
            fmt = opts_doc.pop("format", None)
            if fmt is None:
                suffix = (file.filename or "").lower().rsplit(".", 1)[-1]
                if suffix in ("xls", "xlsx"):
                    fmt = "workbook"
                elif suffix in ("txt", "csv"):
                    fmt = "delimited"
                else:
                    return JSONResponse(
                        {"error": f"unknown file format {suffix!r}"}, status_code=415
                    )
            opts = ImportOptions(format=fmt, dataset_name=name, **opts_doc)
            d = import_dataset(raw, opts)
            with registry_lock:
                session.add_dataset(d)
            return {"id": d.id, "summary": summarize(d).to_dict()}
        except (TypeError, json.JSONDecodeError) as exc:
            return JSONResponse({"error": f"bad options: {exc}"}, status_code=400)
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP codes
            return error_response(exc)

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        try:
            return session.get_dataset(dataset_id).to_doc()
        except Exception as exc:
            return error_response(exc)

    @app.delete("/datasets/{dataset_id}", status_code=204)
    def delete_dataset(dataset_id: str):
        try:
            with registry_lock:
                session.delete_dataset(dataset_id)
            return Response(status_code=204)
        except Exception as exc:
            return error_response(exc)

    @app.post("/datasets/{dataset_id}/transpose", status_code=201)
    def transpose_dataset(dataset_id: str):
        try:
            with registry_lock:
                d = session.get_dataset(dataset_id)
                t = session.add_dataset(transpose_copy(d))
            return {"id": t.id, "summary": summarize(t).to_dict()}
        except Exception as exc:
            return error_response(exc)

    @app.get("/datasets/{dataset_id}/basic-stats")
    def basic_stats(dataset_id: str, kind: str = "box", axis: str = "row_wise",
                    series: str | None = None, lo: int | None = None, hi: int | None = None):
        try:
            d = session.get_dataset(dataset_id)
            scale = (lo, hi) if lo is not None and hi is not None else None
            return basic_stats_tables(d, kind, axis, series, scale)
        except Exception as exc:
            return error_response(exc)

    def _run_job(job_id: str, method: str, options: dict) -> None:
        with jobs_lock:
            jobs[job_id]["state"] = "running"
        try:
            result = run_method(method, session, options)
            doc = {"id": job_id, "method": method, "options": options,
                   "state": "done", "result": result}
            with registry_lock:
                session.add_model(doc)
            with jobs_lock:
                jobs[job_id].update(state="done")
        except Exception as exc:  # noqa: BLE001 - job state carries the error
            status = 404 if isinstance(exc, KeyError) else (
                422 if isinstance(exc, ValidationError) else 500
            )
            with jobs_lock:
                jobs[job_id].update(state="failed", error=str(exc), error_status=status)

    @app.post("/models", status_code=202)
    def submit_model(body: dict):
        method = body.get("method")
        options = {k: v for k, v in body.items() if k != "method"}
        job_id = f"job-{uuid.uuid4().hex[:12]}"
        # fail fast on unknown datasets / bad options so the client gets a
        # proper status code instead of a failed job
        try:
            if method not in ("pca", "plsr", "pcr", "prefmap", "conjoint", "inddiff"):
                raise ValidationError(f"unknown method {method!r}")
            refs = [options.get(k) for k in ("dataset", "x", "y", "liking",
                                             "descriptive", "design", "characteristics")]
            for ref in refs:
                for r in ref if isinstance(ref, list) else [ref]:
                    if r:
                        session.get_dataset(r)
        except Exception as exc:
            return error_response(exc)
        with jobs_lock:
            jobs[job_id] = {"id": job_id, "state": "queued", "error": None}
        if method in ASYNC_METHODS:
            pool.submit(_run_job, job_id, method, options)
        else:
            _run_job(job_id, method, options)
            with jobs_lock:
                st = jobs[job_id]
            if st["state"] == "failed":
                return JSONResponse({"error": st["error"], "id": job_id},
                                    status_code=st.get("error_status", 500))
        return {"id": job_id, "state": jobs[job_id]["state"]}

    @app.get("/models/{job_id}")
    def get_model(job_id: str):
        with jobs_lock:
            st = jobs.get(job_id)
        if st is None:
            if job_id in session.models:
                return session.models[job_id]
            return JSONResponse({"error": f"not found: {job_id}"}, status_code=404)
        if st["state"] == "failed":
            return JSONResponse(
                {"id": job_id, "state": "failed", "error": st["error"]},
                status_code=st.get("error_status", 500),
            )
        if st["state"] != "done":
            return {"id": job_id, "state": st["state"]}
        return session.models[job_id]

    @app.get("/models/{job_id}/plots/{name}")
    def get_plot(job_id: str, name: str):
        doc = session.models.get(job_id)
        if doc is None:
            return JSONResponse({"error": f"not found: {job_id}"}, status_code=404)
        plots = doc.get("result", {}).get("plots", {})
        if name == "effects":
            sub = doc["result"].get("conjoint_results", [])
            if sub:
                return sub[0]["effect_plots"]
        if name not in plots:
            return JSONResponse({"error": f"no plot {name!r}"}, status_code=404)
        return plots[name]

    @app.post("/segments", status_code=201)
    def add_segments(body: dict):
        try:
            name = body.get("name") or "segments"
            model_id = body.get("model_id")
            members = body.get("segments")
            if not isinstance(members, list) or not members:
                raise ValidationError("body needs 'segments': list of member-label lists")
            model_doc = session.models.get(model_id)
            if model_doc is None:
                raise KeyError(model_id)
            consumer_labels = model_doc.get("result", {}).get("consumer_labels")
            if not consumer_labels:
                raise ValidationError("referenced model has no consumer labels")
            seg = SegmentSet.from_member_lists(name, consumer_labels, members)
            segment_id = f"seg-{uuid.uuid4().hex[:12]}"
            with registry_lock:
                d = session.add_dataset(segments_to_dataset(seg))
                doc = session.add_segments(segment_id, seg, d.id)
            return {"id": segment_id, "dataset_id": d.id,
                    "segment_sizes": seg.segment_sizes()}
        except Exception as exc:
            return error_response(exc)

    @app.get("/segments")
    def list_segments():
        return session.list_segments()

    if static_dir is not None and Path(static_dir).is_dir():
        static_path = Path(static_dir)

        @app.get("/")
        def index():
            return FileResponse(static_path / "index.html")

        @app.get("/ui/{path:path}")
        def ui_files(path: str):
            target = (static_path / path).resolve()
            if not str(target).startswith(str(static_path.resolve())) or not target.is_file():
                return JSONResponse({"error": "not found"}, status_code=404)
            return FileResponse(target)

    return app
