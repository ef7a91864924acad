"""Frame-sequence segmentation backends.

Two implementations of one contract: segment a directional video given a
2D prompt on its first frame, returning one mask per frame.

* :class:`ReferenceBackend` — a deterministic color-similarity flood-fill
  propagator. It needs no model weights, so the whole pipeline is testable
  offline, and its output is reproducible bit for bit.
* :class:`RemoteBackend` — a client for the HTTP wire protocol
  (``POST /v1/segment_video``) behind which a real video segmenter runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import requests

from .errors import (
    BackendUnavailable,
    InvalidPrompt,
    ProtocolError,
    RemoteFailure,
)
from .prompts import Point2D, Prompt2D, Rect2D
from .videos import FrameSequence
from .voxels import Frame
from . import wire

DEFAULT_COLOR_TOLERANCE = 0.1
DEFAULT_SEED_RADIUS = 2


@dataclass(frozen=True)
class PropagatorParams:
    color_tolerance: float = DEFAULT_COLOR_TOLERANCE  # Euclidean RGB distance
    seed_radius: int = DEFAULT_SEED_RADIUS  # Chebyshev pixels, point prompts only

    def __post_init__(self):
        if not 0.0 <= self.color_tolerance <= 1.0:
            raise ValueError(f"color_tolerance must be in [0, 1], got {self.color_tolerance}")
        if self.seed_radius < 0:
            raise ValueError(f"seed_radius must be >= 0, got {self.seed_radius}")


@dataclass(frozen=True)
class VideoSegmentRequest:
    frames: FrameSequence
    prompt: Prompt2D
    params: PropagatorParams = field(default_factory=PropagatorParams)


@dataclass(frozen=True)
class VideoSegmentResponse:
    masks: list[np.ndarray]  # one bool (U, V) bitmap per frame


class SegmentationBackend(Protocol):
    def segment_video(self, request: VideoSegmentRequest) -> VideoSegmentResponse: ...


def _flood_fill_2d(allowed: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """4-connected flood fill of ``seeds & allowed`` through ``allowed``."""
    mask = seeds & allowed
    if not mask.any():
        return mask
    frontier = mask
    while frontier.any():
        grown = np.zeros_like(mask)
        grown[1:, :] |= frontier[:-1, :]
        grown[:-1, :] |= frontier[1:, :]
        grown[:, 1:] |= frontier[:, :-1]
        grown[:, :-1] |= frontier[:, 1:]
        frontier = grown & allowed & ~mask
        mask |= frontier
    return mask


def _nearest_occupied_seed(frame: Frame, prompt: Point2D, radius: int) -> tuple[int, int] | None:
    """Nearest occupied pixel within a Chebyshev radius; ties resolve to the
    smallest (v, u) pair."""
    u0, v0 = prompt.u, prompt.v
    if frame.occupancy[u0, v0]:
        return u0, v0
    U, V = frame.dims
    best = None
    for u in range(max(0, u0 - radius), min(U, u0 + radius + 1)):
        for v in range(max(0, v0 - radius), min(V, v0 + radius + 1)):
            if not frame.occupancy[u, v]:
                continue
            candidate = (max(abs(u - u0), abs(v - v0)), v, u)
            if best is None or candidate < best:
                best = candidate
    if best is None:
        return None
    return best[2], best[1]


def _frame0_seeds(frame: Frame, prompt: Prompt2D, params: PropagatorParams) -> np.ndarray:
    U, V = frame.dims
    seeds = np.zeros((U, V), dtype=bool)
    if isinstance(prompt, Point2D):
        if not (0 <= prompt.u < U and 0 <= prompt.v < V):
            raise InvalidPrompt(f"point prompt ({prompt.u}, {prompt.v}) outside frame {frame.dims}")
        found = _nearest_occupied_seed(frame, prompt, params.seed_radius)
        if found is None:
            raise InvalidPrompt(
                f"no occupied pixel within radius {params.seed_radius} of "
                f"({prompt.u}, {prompt.v})"
            )
        seeds[found] = True
    elif isinstance(prompt, Rect2D):
        if prompt.u_max >= U or prompt.v_max >= V:
            raise InvalidPrompt(f"rectangle {prompt} outside frame {frame.dims}")
        seeds[prompt.u_min:prompt.u_max + 1, prompt.v_min:prompt.v_max + 1] = True
        seeds &= frame.occupancy
        if not seeds.any():
            raise InvalidPrompt("box prompt covers no occupied pixel")
    else:
        if prompt.bitmap.shape != (U, V):
            raise InvalidPrompt(
                f"mask prompt shape {prompt.bitmap.shape} does not match frame {frame.dims}"
            )
        seeds = prompt.bitmap & frame.occupancy
        if not seeds.any():
            raise InvalidPrompt("mask prompt covers no occupied pixel")
    return seeds


def reference_propagate(request: VideoSegmentRequest) -> VideoSegmentResponse:
    """Deterministic stand-in for a neural video segmenter.

    Frame 0 grows a 4-connected region from the prompt seeds over occupied
    pixels whose color stays within ``color_tolerance`` of the reference
    color (the seed color for point prompts, the channel-wise seed mean
    otherwise). Each later frame is seeded by the previous frame's mask and
    grown under the same predicate; once a frame comes up empty, every
    following mask is empty.
    """
    frames = request.frames.frames
    if not frames:
        return VideoSegmentResponse(masks=[])
    seeds = _frame0_seeds(frames[0], request.prompt, request.params)
    colors0 = frames[0].color_float()
    if isinstance(request.prompt, Point2D):
        u, v = np.argwhere(seeds)[0]
        reference_color = colors0[u, v]
    else:
        reference_color = colors0[seeds].mean(axis=0)
    tolerance = request.params.color_tolerance

    masks: list[np.ndarray] = []
    previous: np.ndarray | None = None
    for t, frame in enumerate(frames):
        if t > 0 and not previous.any():
            masks.append(np.zeros(frame.dims, dtype=bool))
            continue
        distance = np.linalg.norm(frame.color_float() - reference_color, axis=2)
        allowed = frame.occupancy & (distance <= tolerance)
        frame_seeds = seeds if t == 0 else previous
        mask = _flood_fill_2d(allowed, frame_seeds)
        masks.append(mask)
        previous = mask
    return VideoSegmentResponse(masks=masks)


@dataclass(frozen=True)
class ReferenceBackend:
    def segment_video(self, request: VideoSegmentRequest) -> VideoSegmentResponse:
        return reference_propagate(request)


def encode_request(request: VideoSegmentRequest) -> dict:
    frames = request.frames.frames
    U, V = frames[0].dims if frames else (0, 0)
    payload: dict = {
        "width": U,
        "height": V,
        "frames": [
            {
                "rgb": wire.encode_rgb_png(f.color),
                "occupancy": wire.encode_gray_png(f.occupancy),
            }
            for f in frames
        ],
    }
    prompt = request.prompt
    if isinstance(prompt, Point2D):
        payload["prompt"] = {"type": "point", "point": [prompt.u, prompt.v]}
    elif isinstance(prompt, Rect2D):
        payload["prompt"] = {
            "type": "box",
            "box": [prompt.u_min, prompt.v_min, prompt.u_max, prompt.v_max],
        }
    else:
        payload["prompt"] = {"type": "mask", "mask": wire.encode_gray_png(prompt.bitmap)}
    return payload


def decode_response(body: dict, frames: list[Frame]) -> VideoSegmentResponse:
    if not isinstance(body, dict) or "masks" not in body or not isinstance(body["masks"], list):
        raise ProtocolError(f"response missing 'masks' list: {body!r}")
    if len(body["masks"]) != len(frames):
        raise ProtocolError(
            f"backend returned {len(body['masks'])} masks for {len(frames)} frames"
        )
    masks = []
    for entry, frame in zip(body["masks"], frames):
        if not isinstance(entry, dict) or "rle" not in entry:
            raise ProtocolError(f"mask entry missing 'rle': {entry!r}")
        U, V = frame.dims
        decoded = wire.rle_decode(entry["rle"], width=U, height=V)
        masks.append(decoded & frame.occupancy)
    return VideoSegmentResponse(masks=masks)


@dataclass(frozen=True)
class RemoteBackend:
    """Client for a remote segmenter speaking the wire protocol.

    Blocking, one HTTP call per video; up to the six per-view calls may run
    concurrently from the pipeline (requests sessions are not shared).
    """

    endpoint: str  # base URL, e.g. http://host:port
    deadline: float = 30.0  # seconds per call

    def segment_video(self, request: VideoSegmentRequest) -> VideoSegmentResponse:
        url = self.endpoint.rstrip("/") + "/v1/segment_video"
        started = time.monotonic()
        try:
            response = requests.post(url, json=encode_request(request), timeout=self.deadline)
        except (requests.ConnectionError, requests.Timeout) as exc:
            elapsed = time.monotonic() - started
            raise BackendUnavailable(
                f"backend {url} unreachable after {elapsed:.2f}s: {exc}", elapsed
            ) from exc
        if response.status_code != 200:
            try:
                message = response.json().get("error", response.text)
            except ValueError:
                message = response.text
            raise RemoteFailure(f"backend returned {response.status_code}: {message}")
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"backend response is not JSON: {exc}") from exc
        return decode_response(body, request.frames.frames)
