"""Wire protocol codecs, implemented against the protocol document alone.

The adapter deliberately has its own PNG and RLE code rather than importing
the client library: the HTTP contract is the only thing the two sides share.

Masks are handled as (height, width) row-major arrays. RLE is alternating
run lengths over the flattened array, starting with a run of zeros (possibly
empty), summing to width * height.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image


class ProtocolViolation(ValueError):
    """Request content that violates the wire contract."""


def decode_png(payload: str, mode: str) -> np.ndarray:
    """base64 PNG -> (height, width[, 3]) uint8 array in the given PIL mode."""
    try:
        raw = base64.b64decode(payload, validate=True)
        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception as exc:
        raise ProtocolViolation(f"bad PNG payload: {exc}") from exc
    if img.mode != mode:
        img = img.convert(mode)
    return np.asarray(img, dtype=np.uint8)


def encode_png(array: np.ndarray, mode: str) -> str:
    img = Image.fromarray(array, mode=mode)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def rle_encode(mask: np.ndarray) -> list[int]:
    flat = np.ascontiguousarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    boundaries = np.concatenate(([0], changes, [flat.size]))
    runs = [int(r) for r in np.diff(boundaries)]
    if flat[0]:
        runs.insert(0, 0)
    return runs


def rle_decode(runs: list[int], width: int, height: int) -> np.ndarray:
    total = width * height
    if any((not isinstance(r, int)) or r < 0 for r in runs):
        raise ProtocolViolation("RLE runs must be non-negative integers")
    if sum(runs) != total:
        raise ProtocolViolation(f"RLE runs sum to {sum(runs)}, expected {total}")
    flat = np.zeros(total, dtype=bool)
    pos, value = 0, False
    for run in runs:
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width)
