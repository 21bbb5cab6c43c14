"""From an optical depth map to per-pixel depth priors on the radar grid.

The pipeline back-projects valid depth pixels through the camera
intrinsics, triangulates them in the 2-D pixel domain (which also fills
holes, since the triangulation covers the convex hull), rigidly transforms
the mesh into the radar frame, and rasterizes it orthographically onto the
candidate grid with barycentric depth interpolation. Where triangles
overlap after the transform, the front-most surface (smallest depth) wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .correlate import CandidateGrid
from .errors import (
    DegenerateGeometryError,
    InsufficientDataError,
    StructuralError,
    ValidationError,
)

_ORTHONORMAL_TOL = 1e-9
_MIN_TRIANGLE_AREA = 1e-12  # squared pixels; drops numerically degenerate slivers


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters: focal lengths and principal point, in pixels."""

    f_u: float
    f_v: float
    c_u: float
    c_v: float

    def __post_init__(self):
        if self.f_u <= 0.0 or self.f_v <= 0.0:
            raise ValidationError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.f_u, 0.0, self.c_u], [0.0, self.f_v, self.c_v], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class Extrinsics:
    """Rigid camera-to-radar transform: p_radar = R p_cam + t."""

    rotation: np.ndarray     # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if rot.shape != (3, 3) or not np.isfinite(rot).all() or not np.isfinite(t).all():
            raise ValidationError("extrinsics need a finite 3x3 rotation and 3-vector")
        if not np.allclose(rot.T @ rot, np.eye(3), atol=_ORTHONORMAL_TOL):
            raise ValidationError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > _ORTHONORMAL_TOL:
            raise ValidationError("rotation must be proper (det = +1)")
        rot.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Extrinsics":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class OpticalDepthMap:
    """Per-pixel depth from the secondary sensor; invalid pixels are the
    holes real depth cameras produce on dark or reflective material."""

    depth: np.ndarray  # (H, W) meters
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if depth.ndim != 2 or valid.shape != depth.shape:
            raise StructuralError("depth and valid must be matching (H, W) arrays")
        ok = depth[valid]
        if ok.size and not (np.isfinite(ok).all() and (ok > 0.0).all()):
            raise StructuralError("valid depth pixels must be positive and finite")
        depth.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "valid", valid)


@dataclass(frozen=True)
class TriangleMesh:
    """Triangulated point cloud; ``source_pixels`` remembers each vertex's
    (u, v) origin so topology built in the pixel domain survives the 3-D
    transform."""

    vertices: np.ndarray       # (N, 3)
    triangles: np.ndarray      # (M, 3) int
    source_pixels: np.ndarray  # (N, 2)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        s = np.asarray(self.source_pixels, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise StructuralError("vertices must be (N, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise StructuralError("triangles must be (M, 3) index triples")
        if s.shape != (v.shape[0], 2):
            raise StructuralError("source_pixels must be (N, 2)")
        if t.size and (t.min() < 0 or t.max() >= v.shape[0]):
            raise StructuralError("triangle indices out of range")
        for a in (v, t, s):
            a.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "source_pixels", s)


def backproject_depth(depth_map: OpticalDepthMap, intrinsics: CameraIntrinsics):
    """Lift every valid (u, v, d) pixel to a 3-D camera-frame point.

    Returns the point cloud and the matching (u, v) source pixels; invalid
    pixels are simply skipped.
    """
    vs, us = np.nonzero(depth_map.valid)
    if us.size < 3:
        raise InsufficientDataError("need at least 3 valid depth pixels")
    d = depth_map.depth[vs, us]
    points = np.column_stack(
        [
            (us - intrinsics.c_u) * d / intrinsics.f_u,
            (vs - intrinsics.c_v) * d / intrinsics.f_v,
            d,
        ]
    )
    pixels = np.column_stack([us, vs]).astype(np.float64)
    return points, pixels


def triangulate(points: np.ndarray, pixels: np.ndarray) -> TriangleMesh:
    """Delaunay-triangulate the cloud in its 2-D pixel domain.

    The triangulation spans the convex hull of the source pixels, which is
    what fills depth holes. Collinear input cannot be triangulated.
    """
    points = np.asarray(points, dtype=np.float64)
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim != 2 or pixels.shape[1] != 2 or pixels.shape[0] != points.shape[0]:
        raise StructuralError("pixels must be (N, 2) matching the point cloud")
    if pixels.shape[0] < 3:
        raise DegenerateGeometryError("triangulation needs at least 3 points")
    try:
        tri = Delaunay(pixels)
    except QhullError as exc:
        raise DegenerateGeometryError(f"input cannot be triangulated: {exc}") from exc
    simplices = tri.simplices
    a, b, c = (pixels[simplices[:, i]] for i in range(3))
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    keep = np.abs(area2) > _MIN_TRIANGLE_AREA
    if not keep.any():
        raise DegenerateGeometryError("all triangles are degenerate (collinear input)")
    return TriangleMesh(points, simplices[keep], pixels)


def transform_mesh(mesh: TriangleMesh, extrinsics: Extrinsics) -> TriangleMesh:
    """Apply the rigid camera-to-radar transform to every vertex; topology
    is untouched."""
    moved = mesh.vertices @ extrinsics.rotation.T + extrinsics.translation
    return TriangleMesh(moved, mesh.triangles, mesh.source_pixels)


def cull_long_edges(mesh: TriangleMesh, max_edge_length: float) -> TriangleMesh:
    """Optionally drop sliver triangles whose longest 3-D edge exceeds the
    limit. Off by default in the pipeline: hole-filling triangles across
    depth gaps are a feature, not noise."""
    v = mesh.vertices
    t = mesh.triangles
    e = np.stack(
        [
            np.linalg.norm(v[t[:, 0]] - v[t[:, 1]], axis=1),
            np.linalg.norm(v[t[:, 1]] - v[t[:, 2]], axis=1),
            np.linalg.norm(v[t[:, 2]] - v[t[:, 0]], axis=1),
        ]
    )
    keep = e.max(axis=0) <= max_edge_length
    return TriangleMesh(v, t[keep], mesh.source_pixels)


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def rasterize_prior(mesh: TriangleMesh, grid: CandidateGrid) -> CandidateGrid:
    """Orthographically rasterize the mesh onto the candidate grid.

    A pixel is covered when its center lies inside a triangle's lateral
    (x, y) footprint, with a half-open boundary rule so pixels on a shared
    edge belong to exactly one triangle. Depth is barycentrically
    interpolated; overlapping triangles resolve to the smallest depth, and
    exact depth ties keep the earliest triangle.
    """
    if grid.width > 1:
        dx = grid.x[1] - grid.x[0]
    else:
        dx = 1.0
    if grid.height > 1:
        dy = grid.y[1] - grid.y[0]
    else:
        dy = 1.0
    x0, y0 = grid.x[0], grid.y[0]

    zbuf = np.full((grid.height, grid.width), np.inf)
    verts = mesh.vertices
    for tri in mesh.triangles:
        vx = (verts[tri, 0] - x0) / dx  # continuous pixel coordinates
        vy = (verts[tri, 1] - y0) / dy
        vz = verts[tri, 2]
        area2 = _edge(vx[0], vy[0], vx[1], vy[1], vx[2], vy[2])
        if area2 == 0.0:
            continue
        if area2 < 0.0:  # normalize winding so edge functions are >= 0 inside
            vx, vy, vz = vx[[0, 2, 1]], vy[[0, 2, 1]], vz[[0, 2, 1]]
            area2 = -area2

        u_lo = max(0, int(np.ceil(vx.min() - 1e-12)))
        u_hi = min(grid.width - 1, int(np.floor(vx.max() + 1e-12)))
        v_lo = max(0, int(np.ceil(vy.min() - 1e-12)))
        v_hi = min(grid.height - 1, int(np.floor(vy.max() + 1e-12)))
        if u_lo > u_hi or v_lo > v_hi:
            continue
        pu, pv = np.meshgrid(np.arange(u_lo, u_hi + 1), np.arange(v_lo, v_hi + 1))

        cover = np.ones(pu.shape, dtype=bool)
        bary = []
        for i, j in ((1, 2), (2, 0), (0, 1)):
            e = _edge(vx[i], vy[i], vx[j], vy[j], pu, pv)
            ddx, ddy = vx[j] - vx[i], vy[j] - vy[i]
            boundary_in = ddy > 0.0 or (ddy == 0.0 and ddx < 0.0)
            cover &= (e > 0.0) | ((e == 0.0) & boundary_in)
            bary.append(e / area2)
        if not cover.any():
            continue
        z = bary[0] * vz[0] + bary[1] * vz[1] + bary[2] * vz[2]
        sub = zbuf[v_lo : v_hi + 1, u_lo : u_hi + 1]
        upd = cover & (z < sub)
        sub[upd] = z[upd]

    valid = np.isfinite(zbuf)
    return grid.with_prior(np.where(valid, zbuf, np.nan), valid)


def build_prior(
    depth_map: OpticalDepthMap,
    intrinsics: CameraIntrinsics,
    extrinsics: Extrinsics,
    grid: CandidateGrid,
    max_edge_length: float | None = None,
) -> CandidateGrid:
    """Full prior pipeline: back-project, triangulate, transform, rasterize."""
    points, pixels = backproject_depth(depth_map, intrinsics)
    mesh = triangulate(points, pixels)
    if max_edge_length is not None:
        mesh = cull_long_edges(mesh, max_edge_length)
    mesh = transform_mesh(mesh, extrinsics)
    return rasterize_prior(mesh, grid)
