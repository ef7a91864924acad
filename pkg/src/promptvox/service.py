"""HTTP service exposing clouds, segmentation sessions, and results.

Prompts arrive in the cloud's original coordinates and are converted to the
normalized frame internally using the transform captured at upload time.
Each session owns one immutable voxel grid; prompt runs on a session are
serialized (a concurrent run gets 409), while distinct sessions run in
parallel.
"""

from __future__ import annotations

import base64
import hashlib
import threading
import uuid
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import wire
from .backends import ReferenceBackend, RemoteBackend, SegmentationBackend
from .cloud_io import (
    CloudFormat,
    NormalizationTransform,
    PointCloud,
    normalize,
    parse_kitti_bin,
    parse_ply,
    parse_xyzrgb_text,
    save_point_mask,
)
from .config import ServiceConfig
from .errors import (
    BackendUnavailable,
    DegenerateCloud,
    EmptyCloud,
    EmptyMaskPrompt,
    InvalidPrompt,
    LengthMismatch,
    MalformedPrompt,
    MalformedRecord,
    PartialBackendFailure,
    PromptOutsideGrid,
    PromptVoxError,
    ProtocolError,
    RemoteFailure,
    ResolutionOutOfRange,
    UnreadableFile,
    UnsupportedPlyFeature,
)
from .pipeline import RunParams, segment_3d
from .prompts import BoxPrompt, MaskPrompt, PointPrompt, Prompt3D, clamp_unit
from .voxels import MAX_RESOLUTION, MIN_RESOLUTION, VoxelGrid, voxelize

_PARSERS = {
    CloudFormat.XYZRGB_TEXT: parse_xyzrgb_text,
    CloudFormat.PLY: parse_ply,
    CloudFormat.KITTI_BIN: parse_kitti_bin,
}

_FORMAT_EXTENSIONS = {
    CloudFormat.XYZRGB_TEXT: ".txt",
    CloudFormat.PLY: ".ply",
    CloudFormat.KITTI_BIN: ".bin",
}

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (BackendUnavailable, 502),
    (RemoteFailure, 502),
    (ProtocolError, 502),
    (PartialBackendFailure, 502),
    (ResolutionOutOfRange, 400),
    (MalformedRecord, 400),
    (EmptyCloud, 400),
    (DegenerateCloud, 400),
    (UnsupportedPlyFeature, 400),
    (UnreadableFile, 400),
    (PromptOutsideGrid, 422),
    (EmptyMaskPrompt, 422),
    (MalformedPrompt, 422),
    (InvalidPrompt, 422),
    (LengthMismatch, 422),
]


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code


def _status_for(exc: PromptVoxError) -> int:
    for etype, status in _STATUS_BY_ERROR:
        if isinstance(exc, etype):
            return status
    return 500


@dataclass
class CloudRecord:
    cloud_id: str
    fmt: CloudFormat
    original: PointCloud
    normalized: PointCloud
    transform: NormalizationTransform


@dataclass
class SessionState:
    session_id: str
    cloud_id: str
    resolution: int
    backend_name: str
    backend: SegmentationBackend
    grid: VoxelGrid
    history: list = dataclass_field(default_factory=list)
    lock: threading.Lock = dataclass_field(default_factory=threading.Lock)


@dataclass
class ResultRecord:
    result_id: str
    session_id: str
    point_mask: np.ndarray


class CreateCloudBody(BaseModel):
    format: str
    content_b64: str


class CreateSessionBody(BaseModel):
    cloud_id: str
    resolution: int | None = None
    backend: str | None = None
    backend_url: str | None = None


class PromptParamsBody(BaseModel):
    color_tolerance: float | None = None
    seed_radius: int | None = None
    fusion_votes: int | None = None


class PromptBody(BaseModel):
    type: str
    point: list[float] | None = None
    center: list[float] | None = None
    dims: list[float] | None = None
    rotation: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    indices: list[int] | None = None
    params: PromptParamsBody | None = None


def default_backend_factory(name: str, url: str | None, config: ServiceConfig) -> SegmentationBackend:
    if name == "reference":
        return ReferenceBackend()
    if name == "remote":
        if not url:
            raise MalformedPrompt("remote backend requires backend_url")
        return RemoteBackend(endpoint=url, deadline=config.request_deadline)
    raise MalformedPrompt(f"unknown backend {name!r}")


class ServiceState:
    def __init__(self, config: ServiceConfig, backend_factory=None):
        self.config = config
        self.backend_factory = backend_factory or default_backend_factory
        self.clouds: dict[str, CloudRecord] = {}
        self.sessions: dict[str, SessionState] = {}
        self.results: dict[str, ResultRecord] = {}
        self.store_lock = threading.Lock()
        self.persist_dir = None
        if config.persist_dir:
            from pathlib import Path

            self.persist_dir = Path(config.persist_dir)
            (self.persist_dir / "clouds").mkdir(parents=True, exist_ok=True)
            (self.persist_dir / "results").mkdir(parents=True, exist_ok=True)
            self._load_persisted_clouds()

    def _load_persisted_clouds(self):
        for meta_path in sorted((self.persist_dir / "clouds").glob("*.meta")):
            fmt = CloudFormat(meta_path.read_text().strip())
            payload_path = meta_path.with_suffix(_FORMAT_EXTENSIONS[fmt])
            if payload_path.exists():
                self.add_cloud(payload_path.read_bytes(), fmt, persist=False)

    def add_cloud(self, payload: bytes, fmt: CloudFormat, persist: bool = True) -> str:
        cloud_id = hashlib.sha256(fmt.value.encode() + b"\0" + payload).hexdigest()[:16]
        with self.store_lock:
            if cloud_id in self.clouds:
                return cloud_id
        original = _PARSERS[fmt](payload)
        normalized, transform = normalize(original)
        record = CloudRecord(cloud_id, fmt, original, normalized, transform)
        with self.store_lock:
            self.clouds[cloud_id] = record
        if persist and self.persist_dir:
            base = self.persist_dir / "clouds" / cloud_id
            base.with_suffix(_FORMAT_EXTENSIONS[fmt]).write_bytes(payload)
            base.with_suffix(".meta").write_text(fmt.value)
        return cloud_id

    def persist_result(self, record: ResultRecord):
        if self.persist_dir:
            save_point_mask(
                record.point_mask, self.persist_dir / "results" / f"{record.result_id}.mask"
            )


def _prompt_from_body(body: PromptBody, record: CloudRecord) -> tuple[Prompt3D, dict]:
    transform = record.transform
    if body.type == "point":
        if body.point is None or len(body.point) != 3:
            raise MalformedPrompt("point prompt needs 'point': [x, y, z]")
        position = clamp_unit(transform.apply(np.array(body.point)))
        summary = {"type": "point", "point": list(body.point)}
        return PointPrompt(tuple(position)), summary
    if body.type == "box":
        if body.center is None or body.dims is None:
            raise MalformedPrompt("box prompt needs 'center' and 'dims'")
        if len(body.center) != 3 or len(body.dims) != 3 or len(body.rotation) != 3:
            raise MalformedPrompt("box center/dims/rotation must have 3 components")
        center = clamp_unit(transform.apply(np.array(body.center)))
        dims = tuple(d * transform.scale for d in body.dims)
        summary = {
            "type": "box",
            "center": list(body.center),
            "dims": list(body.dims),
            "rotation": list(body.rotation),
        }
        return BoxPrompt(tuple(center), dims, tuple(body.rotation)), summary
    if body.type == "mask":
        if not body.indices:
            raise EmptyMaskPrompt("mask prompt needs a non-empty 'indices' list")
        n = record.normalized.n
        bits = np.zeros(n, dtype=bool)
        for idx in body.indices:
            if not 0 <= idx < n:
                raise MalformedPrompt(f"mask index {idx} out of range for {n} points")
            bits[idx] = True
        summary = {"type": "mask", "count": int(bits.sum())}
        return MaskPrompt(bits), summary
    raise MalformedPrompt(f"unknown prompt type {body.type!r}")


def create_app(config: ServiceConfig | None = None, backend_factory=None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config, backend_factory)
    app = FastAPI(title="promptvox", version="0.1.0")
    app.state.service = state
    # the prompt studio is served from its own origin during development
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(PromptVoxError)
    async def _library_error(request: Request, exc: PromptVoxError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/clouds", status_code=201)
    def create_cloud(body: CreateCloudBody):
        try:
            fmt = CloudFormat(body.format)
        except ValueError:
            raise ApiError(400, "UnknownFormat", f"unknown format {body.format!r}")
        if fmt is CloudFormat.AUTO:
            raise ApiError(400, "UnknownFormat", "uploads must declare a concrete format")
        try:
            payload = base64.b64decode(body.content_b64, validate=True)
        except Exception as exc:
            raise ApiError(400, "BadPayload", f"content_b64 is not valid base64: {exc}")
        cloud_id = state.add_cloud(payload, fmt)
        record = state.clouds[cloud_id]
        return {"cloud_id": cloud_id, "n_points": record.original.n}

    @app.get("/clouds/{cloud_id}/points")
    def get_points(cloud_id: str, stride: int = Query(default=1)):
        record = state.clouds.get(cloud_id)
        if record is None:
            raise ApiError(404, "UnknownCloud", f"no cloud {cloud_id!r}")
        if stride < 1:
            raise ApiError(400, "BadStride", "stride must be >= 1")
        positions = record.original.positions[::stride]
        colors = record.original.colors[::stride]
        points = np.concatenate([positions, colors], axis=1)
        return {
            "n_points": record.original.n,
            "stride": stride,
            "points": [[float(x) for x in row] for row in points],
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        record = state.clouds.get(body.cloud_id)
        if record is None:
            raise ApiError(404, "UnknownCloud", f"no cloud {body.cloud_id!r}")
        resolution = body.resolution or config.default_resolution
        if not MIN_RESOLUTION <= resolution <= MAX_RESOLUTION:
            raise ResolutionOutOfRange(
                f"resolution {resolution} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
            )
        backend_name = body.backend or config.backend
        backend = state.backend_factory(
            backend_name, body.backend_url or config.backend_url, config
        )
        grid = voxelize(record.normalized, resolution)
        session = SessionState(
            session_id=uuid.uuid4().hex[:12],
            cloud_id=body.cloud_id,
            resolution=resolution,
            backend_name=backend_name,
            backend=backend,
            grid=grid,
        )
        with state.store_lock:
            state.sessions[session.session_id] = session
        return {"session_id": session.session_id, "resolution": resolution}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = state.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        return {
            "session_id": session.session_id,
            "cloud_id": session.cloud_id,
            "resolution": session.resolution,
            "backend": session.backend_name,
            "history": session.history,
        }

    @app.post("/sessions/{session_id}/prompts", status_code=201)
    def add_prompt(session_id: str, body: PromptBody):
        session = state.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        record = state.clouds[session.cloud_id]
        prompt, summary = _prompt_from_body(body, record)
        overrides = body.params or PromptParamsBody()
        params = RunParams(
            color_tolerance=(
                config.color_tolerance
                if overrides.color_tolerance is None
                else overrides.color_tolerance
            ),
            seed_radius=(
                config.seed_radius if overrides.seed_radius is None else overrides.seed_radius
            ),
            fusion_votes=overrides.fusion_votes or 1,
        )
        if not session.lock.acquire(blocking=False):
            raise ApiError(
                409, "SessionBusy", f"session {session_id} is already running a prompt"
            )
        try:
            result = segment_3d(record.normalized, session.grid, prompt, session.backend, params)
        finally:
            session.lock.release()
        result_record = ResultRecord(
            result_id=uuid.uuid4().hex[:12],
            session_id=session_id,
            point_mask=result.point_mask,
        )
        with state.store_lock:
            state.results[result_record.result_id] = result_record
        session.history.append(
            {
                "prompt": summary,
                "result_id": result_record.result_id,
                "selected_count": result.selected_count,
            }
        )
        state.persist_result(result_record)
        return {
            "result_id": result_record.result_id,
            "selected_count": result.selected_count,
            "n_points": int(result.point_mask.shape[0]),
            "anchor": list(result.anchor),
        }

    @app.get("/sessions/{session_id}/results/{result_id}/mask")
    def get_mask(session_id: str, result_id: str, format: str = Query(default="indices_json")):
        session = state.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        result = state.results.get(result_id)
        if result is None or result.session_id != session_id:
            raise ApiError(404, "UnknownResult", f"no result {result_id!r} in this session")
        mask = result.point_mask
        if format == "indices_json":
            return {"n": int(mask.shape[0]), "indices": [int(i) for i in np.flatnonzero(mask)]}
        if format == "rle_json":
            runs = wire.rle_encode(mask[:, None])
            return {"n": int(mask.shape[0]), "rle": runs}
        raise ApiError(400, "UnknownFormat", f"unknown mask format {format!r}")

    return app
