"""Point cloud ingestion, normalization, and mask persistence.

Supported formats:

* ``xyzrgb_text`` — one point per line, ``x y z r g b`` whitespace separated.
  Colors are either all floats in [0, 1] or all 0-255 integers; a file is
  treated as 255-scaled as soon as any color value exceeds 1. Lines with
  only ``x y z`` are accepted and get neutral gray.
* ``ply`` — ascii or binary little-endian, float/double positions, uchar or
  float colors (``red``/``green``/``blue`` or ``r``/``g``/``b``). Anything
  fancier raises :class:`~promptvox.errors.UnsupportedPlyFeature`.
* ``kitti_bin`` — headerless packed little-endian float32, 4 per point
  (x, y, z, intensity). Intensity is clamped to [0, 1] and used as a gray
  color so colorless LiDAR still drives color-based propagation.

Mask files are a plain text format: first line ``n=<count>``, then one
selected point index per line, ascending.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateCloud,
    EmptyCloud,
    IoFailure,
    LengthMismatch,
    MalformedRecord,
    UnreadableFile,
    UnsupportedPlyFeature,
)

KITTI_RECORD_BYTES = 16
GRAY = 0.5


class SourceKind(enum.Enum):
    OBJECT = "object"
    INDOOR = "indoor"
    OUTDOOR = "outdoor"
    LIDAR = "lidar"
    SYNTHETIC = "synthetic"
    UNKNOWN = "unknown"


class CloudFormat(enum.Enum):
    XYZRGB_TEXT = "xyzrgb_text"
    PLY = "ply"
    KITTI_BIN = "kitti_bin"
    AUTO = "auto"


_EXTENSION_FORMATS = {
    ".txt": CloudFormat.XYZRGB_TEXT,
    ".xyz": CloudFormat.XYZRGB_TEXT,
    ".ply": CloudFormat.PLY,
    ".bin": CloudFormat.KITTI_BIN,
}


@dataclass(frozen=True)
class PointCloud:
    """n points with positions and [0, 1] RGB colors."""

    positions: np.ndarray  # (n, 3) float64
    colors: np.ndarray  # (n, 3) float64 in [0, 1]
    source_kind: SourceKind = SourceKind.UNKNOWN

    def __post_init__(self):
        positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        colors = np.ascontiguousarray(self.colors, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError(f"positions must be (n, 3), got {positions.shape}")
        if colors.shape != positions.shape:
            raise ValueError("colors must match positions shape")
        if positions.shape[0] < 1:
            raise EmptyCloud("a point cloud needs at least one point")
        if not np.isfinite(positions).all():
            raise ValueError("positions contain non-finite values")
        if colors.min(initial=0.0) < 0.0 or colors.max(initial=0.0) > 1.0:
            raise ValueError("colors must lie in [0, 1]")
        positions.setflags(write=False)
        colors.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "colors", colors)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.positions.min(axis=0), self.positions.max(axis=0)


@dataclass(frozen=True)
class NormalizationTransform:
    """Uniform scale + translation that maps a cloud's bbox into [0, 1]^3."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        translation = np.ascontiguousarray(self.translation, dtype=np.float64)
        if translation.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        translation.setflags(write=False)
        object.__setattr__(self, "translation", translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) + self.translation) * self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) / self.scale - self.translation


def _resolve_format(path: Path, fmt: CloudFormat | str) -> CloudFormat:
    fmt = CloudFormat(fmt) if isinstance(fmt, str) else fmt
    if fmt is not CloudFormat.AUTO:
        return fmt
    try:
        return _EXTENSION_FORMATS[path.suffix.lower()]
    except KeyError:
        raise UnreadableFile(f"cannot infer format from extension {path.suffix!r}")


def load_cloud(path: str | Path, fmt: CloudFormat | str = CloudFormat.AUTO) -> PointCloud:
    """Load a point cloud, normalizing colors into [0, 1]."""
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    if fmt is CloudFormat.XYZRGB_TEXT:
        return parse_xyzrgb_text(raw)
    if fmt is CloudFormat.PLY:
        return parse_ply(raw)
    return parse_kitti_bin(raw)


def parse_xyzrgb_text(data: bytes) -> PointCloud:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRecord(f"not valid utf-8 text: {exc}") from exc
    positions: list[list[float]] = []
    colors: list[list[float]] = []
    n_fields = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if n_fields is None:
            if len(tokens) not in (3, 6):
                raise MalformedRecord(
                    f"line {lineno}: expected 3 or 6 fields, got {len(tokens)}", lineno
                )
            n_fields = len(tokens)
        if len(tokens) != n_fields:
            raise MalformedRecord(
                f"line {lineno}: expected {n_fields} fields, got {len(tokens)}", lineno
            )
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise MalformedRecord(f"line {lineno}: {exc}", lineno) from exc
        if not all(np.isfinite(values)):
            raise MalformedRecord(f"line {lineno}: non-finite value", lineno)
        positions.append(values[:3])
        if n_fields == 6:
            if min(values[3:]) < 0:
                raise MalformedRecord(f"line {lineno}: negative color value", lineno)
            colors.append(values[3:])
    if not positions:
        raise EmptyCloud("no points in text input")
    pos = np.array(positions, dtype=np.float64)
    if n_fields == 3:
        col = np.full_like(pos, GRAY)
    else:
        col = np.array(colors, dtype=np.float64)
        if col.max() > 1.0:  # any value > 1 marks the whole file as 255-scaled
            if col.max() > 255.0:
                bad = int(np.argwhere(col > 255.0)[0][0]) + 1
                raise MalformedRecord(f"line {bad}: color value exceeds 255", bad)
            col = col / 255.0
    return PointCloud(pos, col)


_PLY_SCALAR_SIZES = {
    "char": 1, "int8": 1, "uchar": 1, "uint8": 1,
    "short": 2, "int16": 2, "ushort": 2, "uint16": 2,
    "int": 4, "int32": 4, "uint": 4, "uint32": 4,
    "float": 4, "float32": 4, "double": 8, "float64": 8,
}
_PLY_NUMPY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}
_PLY_FLOAT_TYPES = {"float", "float32", "double", "float64"}
_PLY_COLOR_ALIASES = {"red": "r", "green": "g", "blue": "b", "r": "r", "g": "g", "b": "b"}


def parse_ply(data: bytes) -> PointCloud:
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise MalformedRecord("missing ply header")
    header_end = data.find(b"\n", end)
    if header_end < 0:
        raise MalformedRecord("truncated ply header")
    header = data[:header_end].decode("ascii", errors="replace").splitlines()
    body = data[header_end + 1:]

    binary = False
    vertex_count = None
    properties: list[tuple[str, str]] = []  # (type, name) in declared order
    in_vertex = False
    for line in header[1:]:
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if tokens[1] == "ascii":
                binary = False
            elif tokens[1] == "binary_little_endian":
                binary = True
            else:
                raise UnsupportedPlyFeature(f"unsupported ply format {tokens[1]!r}")
        elif tokens[0] == "element":
            if tokens[1] == "vertex":
                vertex_count = int(tokens[2])
                in_vertex = True
            else:
                if vertex_count is None:
                    raise UnsupportedPlyFeature(
                        f"element {tokens[1]!r} precedes vertex data"
                    )
                in_vertex = False
        elif tokens[0] == "property" and in_vertex:
            if tokens[1] == "list":
                raise UnsupportedPlyFeature("list properties on vertices")
            if tokens[1] not in _PLY_SCALAR_SIZES:
                raise UnsupportedPlyFeature(f"property type {tokens[1]!r}")
            properties.append((tokens[1], tokens[2]))
    if vertex_count is None:
        raise MalformedRecord("ply header declares no vertex element")
    if vertex_count == 0:
        raise EmptyCloud("ply file has zero vertices")

    names = [name for _, name in properties]
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise UnsupportedPlyFeature(f"missing {axis!r} vertex property")
        ptype = properties[names.index(axis)][0]
        if ptype not in _PLY_FLOAT_TYPES:
            raise UnsupportedPlyFeature(f"non-float position property {axis!r} ({ptype})")
    color_names = {}
    for ptype, name in properties:
        channel = _PLY_COLOR_ALIASES.get(name)
        if channel:
            if ptype not in _PLY_FLOAT_TYPES and ptype not in ("uchar", "uint8"):
                raise UnsupportedPlyFeature(f"color property {name!r} of type {ptype}")
            color_names[channel] = (name, ptype)
    has_color = set(color_names) == {"r", "g", "b"}

    if binary:
        dtype = np.dtype([(name, "<" + _PLY_NUMPY_TYPES[ptype]) for ptype, name in properties])
        needed = dtype.itemsize * vertex_count
        if len(body) < needed:
            raise MalformedRecord(
                f"ply body truncated: need {needed} bytes, have {len(body)}", len(body)
            )
        records = np.frombuffer(body[:needed], dtype=dtype)
        columns = {name: records[name].astype(np.float64) for _, name in properties}
    else:
        lines = body.decode("ascii", errors="replace").splitlines()
        rows = []
        lineno = len(header)
        for line in lines:
            lineno += 1
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != len(properties):
                raise MalformedRecord(
                    f"line {lineno}: expected {len(properties)} values, got {len(tokens)}",
                    lineno,
                )
            rows.append([float(tok) for tok in tokens])
            if len(rows) == vertex_count:
                break
        if len(rows) < vertex_count:
            raise MalformedRecord(
                f"ply body has {len(rows)} vertices, header declares {vertex_count}"
            )
        arr = np.array(rows, dtype=np.float64)
        columns = {name: arr[:, i] for i, (_, name) in enumerate(properties)}

    pos = np.stack([columns["x"], columns["y"], columns["z"]], axis=1)
    if not np.isfinite(pos).all():
        raise MalformedRecord("ply positions contain non-finite values")
    if has_color:
        chans = []
        for channel in ("r", "g", "b"):
            name, ptype = color_names[channel]
            values = columns[name]
            chans.append(values / 255.0 if ptype in ("uchar", "uint8") else values)
        col = np.clip(np.stack(chans, axis=1), 0.0, 1.0)
    else:
        col = np.full_like(pos, GRAY)
    return PointCloud(pos, col)


def parse_kitti_bin(data: bytes) -> PointCloud:
    if len(data) == 0:
        raise EmptyCloud("empty LiDAR file")
    if len(data) % KITTI_RECORD_BYTES != 0:
        raise MalformedRecord(
            f"file size {len(data)} is not a multiple of {KITTI_RECORD_BYTES}",
            len(data) - len(data) % KITTI_RECORD_BYTES,
        )
    records = np.frombuffer(data, dtype="<f4").reshape(-1, 4).astype(np.float64)
    if not np.isfinite(records[:, :3]).all():
        bad = int(np.argwhere(~np.isfinite(records[:, :3]))[0][0])
        raise MalformedRecord(f"record {bad}: non-finite position", bad * KITTI_RECORD_BYTES)
    intensity = np.clip(np.nan_to_num(records[:, 3], nan=0.0), 0.0, 1.0)
    colors = np.repeat(intensity[:, None], 3, axis=1)
    return PointCloud(records[:, :3], colors, SourceKind.LIDAR)


def save_cloud(cloud: PointCloud, path: str | Path, fmt: CloudFormat | str = CloudFormat.AUTO) -> None:
    """Write a cloud back out; text and ply are lossless, kitti_bin stores
    float32 positions with the red channel as intensity."""
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    try:
        if fmt is CloudFormat.XYZRGB_TEXT:
            with path.open("w") as fh:
                for p, c in zip(cloud.positions, cloud.colors):
                    fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g} "
                             f"{c[0]:.17g} {c[1]:.17g} {c[2]:.17g}\n")
        elif fmt is CloudFormat.KITTI_BIN:
            records = np.empty((cloud.n, 4), dtype="<f4")
            records[:, :3] = cloud.positions
            records[:, 3] = cloud.colors[:, 0]
            path.write_bytes(records.tobytes())
        else:
            _write_ply(cloud, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _write_ply(cloud: PointCloud, path: Path) -> None:
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {cloud.n}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float red\nproperty float green\nproperty float blue\n"
        "end_header\n"
    )
    records = np.empty((cloud.n, 6), dtype="<f4")
    records[:, :3] = cloud.positions
    records[:, 3:] = cloud.colors
    path.write_bytes(header.encode("ascii") + records.tobytes())


def normalize(cloud: PointCloud) -> tuple[PointCloud, NormalizationTransform]:
    """Map the cloud's bounding box into [0, 1]^3 with a single uniform scale.

    The bbox minimum goes to the origin and the longest extent to 1, so
    aspect ratio is preserved and voxels stay cubic. Raises
    :class:`DegenerateCloud` when every point coincides.
    """
    lo, hi = cloud.bounds()
    extent = float((hi - lo).max())
    if extent <= 0.0:
        raise DegenerateCloud("cloud has zero extent on all axes")
    transform = NormalizationTransform(translation=-lo, scale=1.0 / extent)
    # x * (1/x) can land one ulp above 1.0; clip so downstream [0,1] contracts hold
    positions = np.clip(transform.apply(cloud.positions), 0.0, 1.0)
    return PointCloud(positions, cloud.colors, cloud.source_kind), transform


def save_point_mask(mask: np.ndarray, path: str | Path, n: int | None = None) -> None:
    """Write a per-point mask as ``n=<count>`` plus ascending selected indices."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 1:
        raise LengthMismatch("mask must be one-dimensional")
    if n is not None and mask.shape[0] != n:
        raise LengthMismatch(f"mask has {mask.shape[0]} entries, cloud has {n} points")
    indices = np.flatnonzero(mask)
    try:
        with Path(path).open("w") as fh:
            fh.write(f"n={mask.shape[0]}\n")
            for idx in indices:
                fh.write(f"{idx}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write mask {path}: {exc}") from exc


def load_point_mask(path: str | Path) -> np.ndarray:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UnreadableFile(f"cannot read mask {path}: {exc}") from exc
    if not lines or not lines[0].startswith("n="):
        raise MalformedRecord("mask file must start with 'n=<count>'", 1)
    try:
        n = int(lines[0][2:])
    except ValueError as exc:
        raise MalformedRecord(f"bad count: {lines[0]!r}", 1) from exc
    mask = np.zeros(n, dtype=bool)
    previous = -1
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            idx = int(line)
        except ValueError as exc:
            raise MalformedRecord(f"line {lineno}: bad index {line!r}", lineno) from exc
        if idx <= previous:
            raise MalformedRecord(f"line {lineno}: indices must be ascending", lineno)
        if not 0 <= idx < n:
            raise MalformedRecord(f"line {lineno}: index {idx} out of range", lineno)
        mask[idx] = True
        previous = idx
    return mask
