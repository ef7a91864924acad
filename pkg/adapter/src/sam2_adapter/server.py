"""HTTP server implementing POST /v1/segment_video.

Each request is self-contained: frames are decoded and written to a fresh
temporary directory as an ordered JPEG sequence, the predictor propagates
the frame-0 prompt through them, and per-frame masks come back run-length
encoded. No state survives between requests.

The occupancy channel is accepted (the protocol carries it) but not given
to the model; callers intersect returned masks with occupancy themselves.

Error bodies are always ``{"error": "<message>"}``: 400 for schema or
payload violations, 422 for requests the loaded model cannot serve, 503
when the inference queue is full, 500 for inference failures.
"""

from __future__ import annotations

import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image

from .predictor import VideoPredictor
from .protocol import ProtocolViolation, decode_png, rle_encode

DEFAULT_MAX_FRAMES = 1024
DEFAULT_QUEUE_DEPTH = 4


@dataclass
class AdapterConfig:
    checkpoint: str | None = None
    model_cfg: str = "configs/sam2.1/sam2.1_hiera_l.yaml"
    device: str = "cuda"
    host: str = "127.0.0.1"
    port: int = 8500
    max_frames: int = DEFAULT_MAX_FRAMES
    queue_depth: int = DEFAULT_QUEUE_DEPTH

    def __post_init__(self):
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")
        if self.queue_depth < 0:
            raise ValueError("queue_depth must be >= 0")


class RequestError(Exception):
    def __init__(self, status_code: int, message: str):
        super().__init__(message)
        self.status_code = status_code


class InferenceGate:
    """One inference at a time; a bounded number may wait, the rest get 503."""

    def __init__(self, queue_depth: int):
        self._run_lock = threading.Lock()
        self._count_lock = threading.Lock()
        self._pending = 0
        self._limit = queue_depth + 1  # one running plus queue_depth waiting

    def __enter__(self):
        with self._count_lock:
            if self._pending >= self._limit:
                raise RequestError(503, "inference queue is full, retry later")
            self._pending += 1
        self._run_lock.acquire()
        return self

    def __exit__(self, *exc_info):
        self._run_lock.release()
        with self._count_lock:
            self._pending -= 1
        return False


def _require(condition: bool, message: str, status_code: int = 400):
    if not condition:
        raise RequestError(status_code, message)


def _parse_request(body: dict, config: AdapterConfig, supported: frozenset[str]):
    _require(isinstance(body, dict), "body must be a JSON object")
    for key in ("width", "height", "frames", "prompt"):
        _require(key in body, f"missing field {key!r}")
    width, height = body["width"], body["height"]
    _require(
        isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0,
        "width and height must be positive integers",
    )
    frames = body["frames"]
    _require(isinstance(frames, list) and len(frames) > 0, "frames must be a non-empty list")
    _require(
        len(frames) <= config.max_frames,
        f"request has {len(frames)} frames, limit is {config.max_frames}",
        status_code=422,
    )
    decoded = []
    for idx, entry in enumerate(frames):
        _require(
            isinstance(entry, dict) and "rgb" in entry and "occupancy" in entry,
            f"frame {idx} must carry 'rgb' and 'occupancy'",
        )
        try:
            rgb = decode_png(entry["rgb"], "RGB")
            occupancy = decode_png(entry["occupancy"], "L")
        except ProtocolViolation as exc:
            raise RequestError(400, f"frame {idx}: {exc}")
        _require(
            rgb.shape == (height, width, 3),
            f"frame {idx}: rgb is {rgb.shape[1]}x{rgb.shape[0]}, expected {width}x{height}",
        )
        _require(
            occupancy.shape == (height, width),
            f"frame {idx}: occupancy is {occupancy.shape[1]}x{occupancy.shape[0]}, "
            f"expected {width}x{height}",
        )
        decoded.append(rgb)  # occupancy is validated but not fed to the model

    prompt = body["prompt"]
    _require(isinstance(prompt, dict) and "type" in prompt, "prompt must carry 'type'")
    kind = prompt["type"]
    _require(
        kind in ("point", "box", "mask"), f"unknown prompt type {kind!r}"
    )
    _require(
        kind in supported,
        f"prompt type {kind!r} is not supported by the loaded model",
        status_code=422,
    )
    parsed: dict = {"type": kind}
    if kind == "point":
        point = prompt.get("point")
        _require(
            isinstance(point, list) and len(point) == 2,
            "point prompt needs 'point': [u, v]",
        )
        u, v = point
        _require(0 <= u < width and 0 <= v < height, "point prompt outside the frame")
        parsed["point"] = [int(u), int(v)]
    elif kind == "box":
        box = prompt.get("box")
        _require(
            isinstance(box, list) and len(box) == 4, "box prompt needs 'box': [u0, v0, u1, v1]"
        )
        u0, v0, u1, v1 = box
        _require(u0 <= u1 and v0 <= v1, "box prompt corners are not ordered")
        _require(
            0 <= u0 and u1 < width and 0 <= v0 and v1 < height,
            "box prompt outside the frame",
        )
        parsed["box"] = [int(u0), int(v0), int(u1), int(v1)]
    else:
        payload = prompt.get("mask")
        _require(isinstance(payload, str), "mask prompt needs a base64 PNG in 'mask'")
        try:
            bitmap = decode_png(payload, "L")
        except ProtocolViolation as exc:
            raise RequestError(400, f"mask prompt: {exc}")
        _require(
            bitmap.shape == (height, width),
            f"mask prompt is {bitmap.shape[1]}x{bitmap.shape[0]}, expected {width}x{height}",
        )
        parsed["mask"] = bitmap > 0
    return width, height, decoded, parsed


def _write_frame_dir(frames: list[np.ndarray], target: Path) -> None:
    for idx, rgb in enumerate(frames):
        Image.fromarray(rgb, mode="RGB").save(target / f"{idx:05d}.jpg", quality=95)


def create_app(config: AdapterConfig | None = None, predictor: VideoPredictor | None = None) -> FastAPI:
    config = config or AdapterConfig()
    if predictor is None:
        _require_startup(config)
        from .predictor import Sam2VideoPredictor

        predictor = Sam2VideoPredictor(
            checkpoint=config.checkpoint, model_cfg=config.model_cfg, device=config.device
        )
    gate = InferenceGate(config.queue_depth)
    app = FastAPI(title="sam2-adapter", version="0.1.0")

    @app.exception_handler(RequestError)
    async def _request_error(request: Request, exc: RequestError):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    # sync endpoint: inference is blocking, so it must run in the threadpool
    # or a long request would stall the event loop (and /healthz with it)
    @app.post("/v1/segment_video")
    def segment_video(body: dict = Body(...)):
        width, height, frames, prompt = _parse_request(body, config, predictor.supported_prompts)
        with gate:
            with tempfile.TemporaryDirectory(prefix="segment_video_") as tmp:
                frame_dir = Path(tmp)
                _write_frame_dir(frames, frame_dir)
                try:
                    masks = predictor.segment(
                        frame_dir, len(frames), width, height, prompt
                    )
                except Exception as exc:
                    raise RequestError(500, f"inference failed: {exc}")
        if len(masks) != len(frames):
            raise RequestError(
                500, f"predictor returned {len(masks)} masks for {len(frames)} frames"
            )
        return {"masks": [{"rle": rle_encode(np.asarray(m, dtype=bool))} for m in masks]}

    return app


def _require_startup(config: AdapterConfig):
    if not config.checkpoint or not Path(config.checkpoint).exists():
        raise FileNotFoundError(
            f"model checkpoint not found: {config.checkpoint!r}; "
            "pass --checkpoint or inject a predictor"
        )
