"""HTTP demo service: layout documents, trace decoding, health.

Models load once at startup into an immutable snapshot shared by request
handlers; requests carry coordinates already normalized to keyboard units, so
the engine never sees device geometry. No user traces are persisted unless a
trace log path is configured explicitly.
"""

from __future__ import annotations

import json
import math
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import correct as cor
from . import ctcdecode as ctc
from . import pipeline as pl
from . import translit as tl
from .geometry import KeyboardLayout, LayoutError, bundled_layout_names, load_bundled_layout, load_layout_file
from .synth import Point, Trace

SERVE_CONFIG_NAME = "serve_config.json"
MAX_SUGGESTIONS = 3


class DecodeRequest(BaseModel):
    layout_name: str
    task: str
    points: list[list[float]]
    k: int = Field(default=3)


class ServeState:
    def __init__(self) -> None:
        self.ready = False
        self.task_spec: pl.TaskSpec | None = None
        self.layouts: dict[str, KeyboardLayout] = {}
        self.checkpoints: list[str] = []
        self.trace_log: Path | None = None

    def load(self, model_dir) -> None:
        for name in bundled_layout_names():
            self.layouts[name] = load_bundled_layout(name)
        if model_dir is None:
            self.ready = True
            return
        model_dir = Path(model_dir)
        config_path = model_dir / SERVE_CONFIG_NAME
        if not config_path.exists():
            raise FileNotFoundError(f"missing {config_path}")
        config = json.loads(config_path.read_text(encoding="utf-8"))

        layout_ref = config["layout"]
        if (model_dir / layout_ref).exists():
            layout = load_layout_file(model_dir / layout_ref)
            self.layouts[layout.name] = layout
        else:
            layout = self.layouts[layout_ref]

        path_model = ctc.PathDecoderModel.load(model_dir / config["path_checkpoint"])
        self.checkpoints.append(config["path_checkpoint"])
        translit_model = None
        if config.get("translit_checkpoint"):
            translit_model = tl.TranslitModel.load(model_dir / config["translit_checkpoint"])
            self.checkpoints.append(config["translit_checkpoint"])
        correct_model = None
        vocab = None
        if config.get("correct_checkpoint"):
            correct_model = cor.CorrectionModel.load(model_dir / config["correct_checkpoint"])
            self.checkpoints.append(config["correct_checkpoint"])
            words = cor.read_vocabulary_file(model_dir / config["vocabulary"])
            vocab = cor.Vocabulary.build(correct_model, words)
        self.task_spec = pl.TaskSpec(
            task=config["task"], layout=layout, path_model=path_model,
            translit_model=translit_model, correct_model=correct_model, vocab=vocab,
            k=int(config.get("k", 3)),
            bypass_correction=(correct_model is None))
        self.ready = True


def _bad_request(detail: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": detail})


def create_app(model_dir=None, defer_load: bool = False,
               trace_log=None, ui_dir=None) -> FastAPI:
    app = FastAPI(title="swipeforge demo service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    state = ServeState()
    state.trace_log = Path(trace_log) if trace_log else None
    app.state.engine = state
    if not defer_load:
        state.load(model_dir)
    else:
        app.state.pending_model_dir = model_dir

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _bad_request(f"malformed request: {exc.errors()[:1]}")

    @app.get("/health")
    def health():
        return {
            "status": "ok" if state.ready else "loading",
            "task": state.task_spec.task if state.task_spec else None,
            "checkpoints": state.checkpoints,
            "layouts": sorted(state.layouts),
        }

    @app.get("/layout/{name}")
    def layout(name: str):
        if name not in state.layouts:
            return JSONResponse(status_code=404, content={"detail": f"unknown layout {name!r}"})
        return state.layouts[name].to_document()

    @app.post("/decode")
    def decode(request: DecodeRequest):
        started = time.perf_counter()
        if len(request.points) < 2:
            return _bad_request("need at least 2 points")
        if request.k < 1 or request.k > MAX_SUGGESTIONS:
            return _bad_request(f"k must be in 1..{MAX_SUGGESTIONS}")
        for pt in request.points:
            if len(pt) != 2 or not all(math.isfinite(v) for v in pt):
                return _bad_request("points must be finite [x, y] pairs")
        if not state.ready or state.task_spec is None:
            return JSONResponse(status_code=409, content={"detail": "no model loaded"})
        spec = state.task_spec
        if request.task != spec.task:
            return JSONResponse(status_code=409, content={
                "detail": f"service runs task {spec.task!r}, not {request.task!r}"})
        if request.layout_name != spec.layout.name:
            return JSONResponse(status_code=409, content={
                "detail": f"service decodes layout {spec.layout.name!r}"})

        trace = Trace(points=[Point(float(x), float(y)) for x, y in request.points],
                      word="", layout_name=request.layout_name)
        try:
            result = pl.run_pipeline(spec, trace)
        except Exception as exc:  # internal failure: return an error id
            error_id = uuid.uuid4().hex
            return JSONResponse(status_code=500,
                                content={"error_id": error_id, "detail": str(exc)})
        suggestions = [
            {
                "word": c.word,
                "score": c.score,
                "score_kind": c.score_kind,
                "stage_provenance": {
                    "path_string": c.path_string,
                    "translit": c.translit,
                    "translit_log_prob": c.translit_log_prob,
                    "fallback": c.fallback,
                },
            }
            for c in result.candidates[: request.k]
        ]
        if state.trace_log is not None:
            record = {"word": suggestions[0]["word"] if suggestions else "",
                      "layout_name": request.layout_name,
                      "points": request.points}
            with open(state.trace_log, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        return {
            "suggestions": suggestions,
            "timing_ms": (time.perf_counter() - started) * 1000.0,
        }

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
