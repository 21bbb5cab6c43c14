"""File formats: binary phasor containers, PFM float images, ASCII PLY
point clouds, and the JSON documents used for configs and calibration.

The binary container is little-endian: a 4-byte magic (``FSKT`` for
baseband tensors, ``FSKC`` for correlation fields), a u32 format version,
three u32 dimensions, then the complex64 payload in C (row-major) order.
Invalid correlation pixels travel as NaN entries. All writers are
deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .correlate import CandidateGrid, CorrelationField
from .depth_prior import CameraIntrinsics, Extrinsics
from .errors import StructuralError
from .reconstruct import RadarImage
from .signal_core import BasebandTensor

MAGIC_BASEBAND = b"FSKT"
MAGIC_FIELD = b"FSKC"
CONTAINER_VERSION = 1

_HEADER = struct.Struct("<4sIIII")


def _write_container(path, magic: bytes, dims: tuple, data: np.ndarray) -> None:
    payload = np.ascontiguousarray(data.astype("<c8"))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, CONTAINER_VERSION, *dims))
        fh.write(payload.tobytes())


def _read_container(path, magic: bytes) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise StructuralError(f"{path}: truncated container header")
    got, version, d0, d1, d2 = _HEADER.unpack_from(raw)
    if got != magic:
        raise StructuralError(f"{path}: expected magic {magic!r}, found {got!r}")
    if version != CONTAINER_VERSION:
        raise StructuralError(f"{path}: unsupported container version {version}")
    count = d0 * d1 * d2
    body = raw[_HEADER.size :]
    if len(body) != count * 8:
        raise StructuralError(f"{path}: payload size does not match dimensions")
    return np.frombuffer(body, dtype="<c8").reshape(d0, d1, d2).astype(np.complex128)


def write_baseband(path, baseband: BasebandTensor) -> None:
    _write_container(path, MAGIC_BASEBAND, baseband.data.shape, baseband.data)


def read_baseband(path) -> BasebandTensor:
    return BasebandTensor(_read_container(path, MAGIC_BASEBAND))


def write_field(path, field: CorrelationField) -> None:
    _write_container(path, MAGIC_FIELD, field.data.shape, field.data)


def read_field(path) -> CorrelationField:
    data = _read_container(path, MAGIC_FIELD)
    valid = np.isfinite(data).all(axis=-1)
    return CorrelationField(data=data, valid=valid)


def write_pfm(path, image: np.ndarray) -> None:
    """Grayscale portable float map: little-endian float32, rows stored
    bottom-up per the format convention. NaN marks invalid pixels."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise StructuralError("PFM writer expects a 2-D array")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(image).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] not in (b"Pf", b"PF"):
        raise StructuralError(f"{path}: not a grayscale PFM file")
    if parts[0] == b"PF":
        raise StructuralError(f"{path}: color PFM not supported")
    w, h = (int(v) for v in parts[1].split())
    scale = float(parts[2])
    dtype = "<f4" if scale < 0 else ">f4"
    body = parts[3][: w * h * 4]
    if len(body) != w * h * 4:
        raise StructuralError(f"{path}: truncated PFM payload")
    data = np.frombuffer(body, dtype=dtype).reshape(h, w).astype(np.float64)
    return np.flipud(data).copy()


def write_ply(path, points: np.ndarray, magnitude: np.ndarray | None = None) -> None:
    """ASCII PLY point cloud with an optional per-vertex magnitude scalar."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != 3:
        raise StructuralError("PLY writer expects (N, 3) points")
    n = points.shape[0]
    header = ["ply", "format ascii 1.0", f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    cols = [points]
    if magnitude is not None:
        header.append("property float magnitude")
        cols.append(np.asarray(magnitude, dtype=np.float64).reshape(n, 1))
    header.append("end_header")
    body = np.hstack(cols)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(header) + "\n")
        for row in body:
            fh.write(" ".join(f"{v:.10g}" for v in row) + "\n")


def read_ply(path):
    """Read an ASCII PLY vertex cloud; returns (points, extras) where
    extras maps any non-coordinate property name to its column."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0].strip() != "ply":
        raise StructuralError(f"{path}: not a PLY file")
    n = None
    names = []
    idx = 0
    for idx, line in enumerate(lines[1:], start=1):
        tok = line.split()
        if tok[:2] == ["element", "vertex"]:
            n = int(tok[2])
        elif tok[:1] == ["property"] and n is not None:
            names.append(tok[2])
        elif tok[:1] == ["end_header"]:
            break
    if n is None:
        raise StructuralError(f"{path}: missing vertex element")
    rows = [list(map(float, ln.split())) for ln in lines[idx + 1 : idx + 1 + n]]
    data = np.asarray(rows, dtype=np.float64).reshape(n, len(names))
    cols = {name: data[:, i] for i, name in enumerate(names)}
    points = np.column_stack([cols.pop("x"), cols.pop("y"), cols.pop("z")])
    return points, cols


def save_candidate_grid(path, grid: CandidateGrid) -> None:
    """Persist a prior grid as a JSON document embedding geometry and the
    per-pixel prior (NaN encodes invalid pixels)."""
    doc = {
        "width": grid.width,
        "height": grid.height,
        "x0": float(grid.x[0]),
        "y0": float(grid.y[0]),
        "dx": grid.spacing[0],
        "dy": grid.spacing[1],
        "prior_depth": [
            [None if not np.isfinite(v) else float(v) for v in row]
            for row in grid.prior_depth
        ],
    }
    dump_json(path, doc)


def load_candidate_grid(path) -> CandidateGrid:
    doc = load_json(path)
    w, h = int(doc["width"]), int(doc["height"])
    x = doc["x0"] + np.arange(w) * (doc["dx"] or 1.0)
    y = doc["y0"] + np.arange(h) * (doc["dy"] or 1.0)
    prior = np.array(
        [[np.nan if v is None else float(v) for v in row] for row in doc["prior_depth"]]
    )
    return CandidateGrid(x, y, prior, np.isfinite(prior))


def save_calibration(path, intrinsics: CameraIntrinsics, extrinsics: Extrinsics) -> None:
    doc = {
        "intrinsics": {
            "f_u": intrinsics.f_u,
            "f_v": intrinsics.f_v,
            "c_u": intrinsics.c_u,
            "c_v": intrinsics.c_v,
        },
        "extrinsics": {
            "rotation": [[float(v) for v in row] for row in extrinsics.rotation],
            "translation": [float(v) for v in extrinsics.translation],
        },
    }
    dump_json(path, doc)


def load_calibration(path):
    doc = load_json(path)
    intr = CameraIntrinsics(**{k: float(v) for k, v in doc["intrinsics"].items()})
    ext = Extrinsics(
        np.asarray(doc["extrinsics"]["rotation"], dtype=np.float64),
        np.asarray(doc["extrinsics"]["translation"], dtype=np.float64),
    )
    return intr, ext


def export_radar_image(outdir, stem: str, image: RadarImage) -> list:
    """Write an image as depth + magnitude PFM planes and a PLY cloud of
    its valid pixels; returns the created paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    depth = np.where(image.valid, image.depth, np.nan)
    mag = np.where(image.valid, image.magnitude, np.nan)
    joint = np.where(image.valid, image.joint_magnitude, np.nan)
    paths = [outdir / f"{stem}_depth.pfm", outdir / f"{stem}_magnitude.pfm",
             outdir / f"{stem}_joint_magnitude.pfm", outdir / f"{stem}_cloud.ply"]
    write_pfm(paths[0], depth)
    write_pfm(paths[1], mag)
    write_pfm(paths[2], joint)
    cloud, mags = image.points()
    write_ply(paths[3], cloud, mags)
    return paths


def dump_json(path, obj) -> None:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    Path(path).write_text(
        json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n",
        encoding="utf-8",
    )


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def config_hash(obj) -> str:
    """Stable hash of a JSON-serializable document."""
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]
