"""Codecs for the segment-video wire protocol.

Frames travel as base64 PNGs (RGB for color, 8-bit gray with 255=occupied
for occupancy) and masks come back as row-major run-length encodings:
alternating run lengths starting with a run of zeros (which may be empty),
summing to width*height.

Internal frame arrays are indexed [u, v]; PNGs and RLE flatten row-major
over (v, u), i.e. image row v holds pixels u = 0..U-1.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image

from .errors import ProtocolError


def encode_rgb_png(color_uv: np.ndarray) -> str:
    """uint8 (U, V, 3) -> base64 PNG with image size U x V."""
    img = Image.fromarray(np.ascontiguousarray(color_uv.transpose(1, 0, 2)), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_rgb_png(payload: str) -> np.ndarray:
    img = _open_png(payload)
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.uint8).transpose(1, 0, 2)


def encode_gray_png(bits_uv: np.ndarray) -> str:
    """bool (U, V) -> base64 PNG, 255 where set."""
    gray = np.where(bits_uv.T, 255, 0).astype(np.uint8)
    img = Image.fromarray(gray, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_gray_png(payload: str) -> np.ndarray:
    img = _open_png(payload)
    if img.mode != "L":
        img = img.convert("L")
    return (np.asarray(img, dtype=np.uint8) > 0).T


def _open_png(payload: str) -> Image.Image:
    try:
        raw = base64.b64decode(payload, validate=True)
        img = Image.open(io.BytesIO(raw))
        img.load()
        return img
    except Exception as exc:
        raise ProtocolError(f"bad PNG payload: {exc}") from exc


def rle_encode(mask_uv: np.ndarray) -> list[int]:
    """bool (U, V) -> alternating run lengths, starting with a run of zeros."""
    flat = np.ascontiguousarray(mask_uv.T, dtype=bool).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    boundaries = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(boundaries).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(runs: list[int], width: int, height: int) -> np.ndarray:
    """Inverse of :func:`rle_encode`; validates totals and signs."""
    total = width * height
    if any((not isinstance(r, int)) or r < 0 for r in runs):
        raise ProtocolError(f"RLE runs must be non-negative integers: {runs!r}")
    if sum(runs) != total:
        raise ProtocolError(f"RLE runs sum to {sum(runs)}, expected {total}")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width).T
