"""Reconstruction quality metrics: one-directional Chamfer distances and
the projective (per-pixel absolute depth) error, with optional mask erosion
against silhouette artifacts.

Both metrics compare a reconstruction against ground truth resampled to a
similar density: a surface point cloud for the Chamfer distances, a depth
map rasterized on the radar grid for the projective error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_erosion
from scipy.spatial import cKDTree

from .correlate import CandidateGrid
from .errors import InsufficientDataError, StructuralError
from .reconstruct import RadarImage
from .simulate import make_scene, surface_depth

_BRUTE_FORCE_LIMIT = 64  # below this, exhaustive search beats building a tree

# 4-neighborhood erosion structure
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class EvalReport:
    """One evaluation record: Chamfer distances in both directions, masked
    projective error with and without erosion, and the sample counts each
    value was computed over."""

    c_gt_to_r: float
    c_r_to_gt: float
    p_masked: float
    p_eroded: float
    n_points_recon: int = 0
    n_points_gt: int = 0
    n_pixels_masked: int = 0
    n_pixels_eroded: int = 0
    label: str = ""

    def __post_init__(self):
        for name in ("c_gt_to_r", "c_r_to_gt", "p_masked", "p_eroded"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise StructuralError(f"{name} must be finite and non-negative")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "c_gt_to_r": self.c_gt_to_r,
            "c_r_to_gt": self.c_r_to_gt,
            "p_masked": self.p_masked,
            "p_eroded": self.p_eroded,
            "n_points_recon": self.n_points_recon,
            "n_points_gt": self.n_points_gt,
            "n_pixels_masked": self.n_pixels_masked,
            "n_pixels_eroded": self.n_pixels_eroded,
        }


def chamfer_one_way(src: np.ndarray, dst: np.ndarray) -> float:
    """Mean distance from every source point to its nearest destination
    point. Report it in both directions; the two values differ whenever one
    cloud covers regions the other misses."""
    src = np.atleast_2d(np.asarray(src, dtype=np.float64))
    dst = np.atleast_2d(np.asarray(dst, dtype=np.float64))
    if src.shape[0] < 1 or dst.shape[0] < 1:
        raise InsufficientDataError("point clouds must be non-empty")
    if src.shape[1] != 3 or dst.shape[1] != 3:
        raise StructuralError("point clouds must be (N, 3)")
    if dst.shape[0] <= _BRUTE_FORCE_LIMIT:
        d = np.linalg.norm(src[:, None, :] - dst[None, :, :], axis=-1).min(axis=1)
    else:
        d, _ = cKDTree(dst).query(src, k=1)
    return float(d.mean())


def erode_mask(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Shrink a validity mask by 4-neighborhood erosion."""
    mask = np.asarray(mask, dtype=bool)
    if iterations <= 0:
        return mask.copy()
    return binary_erosion(mask, structure=_CROSS, iterations=iterations, border_value=0)


def projective_error(
    depth_r: np.ndarray,
    depth_gt: np.ndarray,
    valid: np.ndarray | None = None,
    erode: int = 0,
) -> float:
    """Mean absolute depth difference over the jointly valid pixels.

    The mask is the intersection of both maps' finite pixels (and ``valid``
    when given), optionally eroded; the mean is taken over the masked pixel
    count, so the value does not depend on how much dead frame surrounds
    the object.
    """
    depth_r = np.asarray(depth_r, dtype=np.float64)
    depth_gt = np.asarray(depth_gt, dtype=np.float64)
    if depth_r.shape != depth_gt.shape:
        raise StructuralError("depth maps must share their grid")
    mask = np.isfinite(depth_r) & np.isfinite(depth_gt)
    if valid is not None:
        mask &= np.asarray(valid, dtype=bool)
    mask = erode_mask(mask, erode)
    if not mask.any():
        raise InsufficientDataError("joint validity mask is empty")
    return float(np.abs(depth_r - depth_gt)[mask].mean())


def resample_gt_cloud(kind: str, params: dict, spacing: float) -> np.ndarray:
    """Ground-truth surface samples at the requested lateral spacing."""
    resampled = dict(params)
    if kind != "random-cloud":
        resampled["spacing"] = float(spacing)
    return make_scene(kind, resampled).positions.copy()


def resample_gt_depth(kind: str, params: dict, grid: CandidateGrid) -> np.ndarray:
    """Ground-truth depth rasterized on the radar pixel grid (NaN outside
    the surface footprint)."""
    if kind == "random-cloud":
        return _bin_cloud_depth(make_scene(kind, params).positions, grid)
    gx, gy = np.meshgrid(grid.x, grid.y)
    return surface_depth(kind, params, gx, gy)


def _bin_cloud_depth(points: np.ndarray, grid: CandidateGrid) -> np.ndarray:
    """Nearest-pixel binning for surfaceless clouds; the front-most point
    per pixel wins."""
    dx, dy = grid.spacing
    depth = np.full((grid.height, grid.width), np.nan)
    u = np.round((points[:, 0] - grid.x[0]) / (dx or 1.0)).astype(int)
    v = np.round((points[:, 1] - grid.y[0]) / (dy or 1.0)).astype(int)
    ok = (u >= 0) & (u < grid.width) & (v >= 0) & (v < grid.height)
    for ui, vi, zi in sorted(zip(u[ok], v[ok], points[ok, 2])):
        cur = depth[vi, ui]
        if not np.isfinite(cur) or zi < cur:
            depth[vi, ui] = zi
    return depth


def evaluate_image(
    image: RadarImage,
    kind: str,
    params: dict,
    grid: CandidateGrid,
    gt_spacing: float | None = None,
    erode: int = 1,
    label: str = "",
) -> EvalReport:
    """Score one reconstruction against its scene's ground truth.

    The ground-truth cloud is resampled near the radar pixel pitch so both
    clouds have comparable density; the projective error uses the analytic
    ground-truth depth on the same grid.
    """
    recon_cloud, _ = image.points()
    if recon_cloud.shape[0] == 0:
        raise InsufficientDataError("reconstruction has no valid pixels")
    if gt_spacing is None:
        dx, dy = grid.spacing
        gt_spacing = max(dx, dy) or 0.001
    gt_cloud = resample_gt_cloud(kind, params, gt_spacing)
    gt_depth = resample_gt_depth(kind, params, grid)
    return EvalReport(
        c_gt_to_r=chamfer_one_way(gt_cloud, recon_cloud),
        c_r_to_gt=chamfer_one_way(recon_cloud, gt_cloud),
        p_masked=projective_error(np.where(image.valid, image.depth, np.nan), gt_depth),
        p_eroded=projective_error(np.where(image.valid, image.depth, np.nan), gt_depth, erode=erode),
        n_points_recon=recon_cloud.shape[0],
        n_points_gt=gt_cloud.shape[0],
        n_pixels_masked=int((np.isfinite(gt_depth) & image.valid).sum()),
        n_pixels_eroded=int(erode_mask(np.isfinite(gt_depth) & image.valid, erode).sum()),
        label=label,
    )


def report_table(reports) -> str:
    """Aligned plain-text table, one row per evaluation record, values in
    centimeters."""
    headers = ["config", "C(gt->r) cm", "C(r->gt) cm", "P cm", "P_eroded cm"]
    rows = [
        [
            r.label or "-",
            f"{r.c_gt_to_r * 100:.3f}",
            f"{r.c_r_to_gt * 100:.3f}",
            f"{r.p_masked * 100:.3f}",
            f"{r.p_eroded * 100:.3f}",
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
