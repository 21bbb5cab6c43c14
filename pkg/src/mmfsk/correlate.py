"""Data-parallel correlation of baseband measurements against candidate
points.

For every candidate point and carrier the engine forms the mean residual
phasor over all TX-RX pairs: measurement times conjugated hypothesis,
averaged. Per-point work factorizes into one-way distance tables (T + R
norms instead of T*R), and the pair reduction follows a fixed order --
contiguous chunks of 4096 pairs in (tx-major, rx-minor) order, adjacent-pair
tree summation inside each chunk, chunks accumulated sequentially -- so the
result is bit-identical no matter how candidates are split across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientDataError, StructuralError
from .signal_core import SPEED_OF_LIGHT, AntennaArray, BasebandTensor, FrequencySet

_PAIR_CHUNK = 4096
_BLOCK_BUDGET = 24_000_000  # bytes of phasor workspace per worker


def _block_points(n_pairs: int) -> int:
    """Points processed per workspace fill: large enough to amortize call
    overhead on small arrays, capped so the buffer stays cache-friendly."""
    return max(64, min(4096, _BLOCK_BUDGET // (n_pairs * 16)))


@dataclass(frozen=True)
class CandidateGrid:
    """Regular lateral grid of candidate points with per-pixel depth priors.

    ``x`` runs along width (columns), ``y`` along height (rows);
    ``prior_depth[v, u]`` is the depth guess at (x[u], y[v]) and ``valid``
    marks pixels that actually carry one.
    """

    x: np.ndarray            # (W,)
    y: np.ndarray            # (H,)
    prior_depth: np.ndarray  # (H, W)
    valid: np.ndarray        # (H, W) bool

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        prior = np.asarray(self.prior_depth, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if x.ndim != 1 or y.ndim != 1:
            raise StructuralError("grid axes must be 1-D")
        if prior.shape != (y.size, x.size) or valid.shape != prior.shape:
            raise StructuralError("prior_depth and valid must have shape (H, W)")
        for axis in (x, y):
            if axis.size > 1:
                steps = np.diff(axis)
                if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12) or steps[0] <= 0:
                    raise StructuralError("grid spacing must be uniform and increasing")
        if not np.isfinite(prior[valid]).all():
            raise StructuralError("prior depth must be finite wherever valid")
        for a in (x, y, prior, valid):
            a.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "prior_depth", prior)
        object.__setattr__(self, "valid", valid)

    @property
    def width(self) -> int:
        return self.x.size

    @property
    def height(self) -> int:
        return self.y.size

    @property
    def spacing(self) -> tuple:
        dx = float(self.x[1] - self.x[0]) if self.width > 1 else 0.0
        dy = float(self.y[1] - self.y[0]) if self.height > 1 else 0.0
        return dx, dy

    @classmethod
    def regular(cls, width: int, height: int, spacing: float, center=(0.0, 0.0)) -> "CandidateGrid":
        """Geometry-only grid centered on the aperture; no priors yet."""
        if width < 1 or height < 1 or spacing <= 0.0:
            raise StructuralError("grid needs positive dimensions and spacing")
        x = center[0] + (np.arange(width) - (width - 1) / 2.0) * spacing
        y = center[1] + (np.arange(height) - (height - 1) / 2.0) * spacing
        return cls(x, y, np.full((height, width), np.nan), np.zeros((height, width), dtype=bool))

    def with_scalar_prior(self, depth: float) -> "CandidateGrid":
        """Broadcast one depth guess to every pixel (the radar-only mode)."""
        full = np.full((self.height, self.width), float(depth))
        return replace(self, prior_depth=full, valid=np.ones_like(full, dtype=bool))

    def with_prior(self, prior_depth: np.ndarray, valid: np.ndarray | None = None) -> "CandidateGrid":
        prior = np.asarray(prior_depth, dtype=np.float64)
        if valid is None:
            valid = np.isfinite(prior)
        return replace(self, prior_depth=prior, valid=np.asarray(valid, dtype=bool))

    def points(self) -> np.ndarray:
        """Valid candidates as (N, 3) rows in row-major pixel order."""
        gx, gy = np.meshgrid(self.x, self.y)
        m = self.valid
        return np.column_stack([gx[m], gy[m], self.prior_depth[m]])


@dataclass(frozen=True)
class CorrelationField:
    """Per-pixel, per-carrier mean residual phasors; invalid pixels carry
    NaN and are excluded from the mask."""

    data: np.ndarray   # (H, W, F) complex128
    valid: np.ndarray  # (H, W) bool


def precompute_distance_tables(p, array: AntennaArray) -> tuple:
    """One-way distances from every TX element to ``p`` and from ``p`` to
    every RX element; their broadcast sum reproduces all T*R round trips."""
    p = np.asarray(p, dtype=np.float64)
    tx_dists = np.linalg.norm(array.tx_positions - p, axis=1)
    rx_dists = np.linalg.norm(p - array.rx_positions, axis=1)
    return tx_dists, rx_dists


def _fold_pairs(a: np.ndarray) -> np.ndarray:
    """Adjacent-pair tree summation along the last axis; widths that are not
    a power of two are zero-padded, which leaves the partial sums exact."""
    n = a.shape[-1]
    if n == 1:
        return a[..., 0]
    m = 1 << (n - 1).bit_length()
    if m != n:
        padded = np.zeros(a.shape[:-1] + (m,), dtype=a.dtype)
        padded[..., :n] = a
        a = padded
    while a.shape[-1] > 1:
        a = a.reshape(a.shape[:-1] + (a.shape[-1] // 2, 2)).sum(axis=-1)
    return a[..., 0]


def _chunked_pair_sum(values: np.ndarray) -> np.ndarray:
    """Fixed-order reduction over the pair axis (last): 4096-pair chunks,
    tree-summed internally, accumulated sequentially."""
    n = values.shape[-1]
    if n <= _PAIR_CHUNK:
        return _fold_pairs(values)
    acc = np.zeros(values.shape[:-1], dtype=values.dtype)
    for start in range(0, n, _PAIR_CHUNK):
        acc = acc + _fold_pairs(values[..., start : start + _PAIR_CHUNK])
    return acc


def _phasor_block(
    points: np.ndarray,
    data: np.ndarray,
    array: AntennaArray,
    carriers,
    buf: np.ndarray | None = None,
) -> np.ndarray:
    n_t, n_r, n_f = data.shape
    n_pts = points.shape[0]
    dtx = np.linalg.norm(points[:, None, :] - array.tx_positions[None, :, :], axis=-1)
    drx = np.linalg.norm(points[:, None, :] - array.rx_positions[None, :, :], axis=-1)
    out = np.empty((n_pts, n_f), dtype=np.complex128)
    if buf is None or buf.shape[0] < n_pts:
        buf = np.empty((n_pts, n_t, n_r), dtype=np.complex128)
    work = buf[:n_pts]
    for k, f in enumerate(carriers):
        w = 2j * np.pi * f / SPEED_OF_LIGHT  # conjugated hypothesis: exp(+j 2 pi f rho / c)
        et = np.exp(w * dtx)
        er = np.exp(w * drx)
        np.multiply(et[:, :, None], er[:, None, :], out=work)
        np.multiply(work, data[None, :, :, k], out=work)
        out[:, k] = _chunked_pair_sum(work.reshape(n_pts, n_t * n_r))
    return out / (n_t * n_r)


def mean_pair_phasors(
    points: np.ndarray,
    baseband: BasebandTensor,
    array: AntennaArray,
    freqs: FrequencySet,
    workers: int | None = None,
) -> np.ndarray:
    """Mean residual phasor of every candidate point at every carrier.

    Candidates are split into contiguous ranges across a worker pool (one
    point never straddles two workers); the output is independent of the
    pool size.
    """
    baseband.check_consistent(array, freqs)
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise StructuralError("points must be a (N, 3) array")
    n = pts.shape[0]
    out = np.empty((n, len(freqs)), dtype=np.complex128)

    block = _block_points(array.n_pairs)

    def run(lo: int, hi: int) -> None:
        buf = np.empty((min(block, max(hi - lo, 1)), array.n_tx, array.n_rx), dtype=np.complex128)
        for start in range(lo, hi, block):
            stop = min(start + block, hi)
            out[start:stop] = _phasor_block(
                pts[start:stop], baseband.data, array, freqs.frequencies, buf
            )

    n_workers = workers if workers is not None else (os.cpu_count() or 1)
    n_workers = max(1, min(int(n_workers), n))
    if n_workers == 1 or n == 0:
        run(0, n)
        return out
    bounds = np.linspace(0, n, n_workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(run, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            fut.result()
    return out


def correlate_grid(
    baseband: BasebandTensor,
    grid: CandidateGrid,
    array: AntennaArray,
    freqs: FrequencySet,
    workers: int | None = None,
) -> CorrelationField:
    """Correlate a baseband tensor against every valid grid candidate.

    Invalid pixels are skipped entirely and come back as NaN with a cleared
    validity flag.
    """
    n_valid = int(grid.valid.sum())
    if n_valid == 0:
        raise InsufficientDataError("candidate grid has no valid pixels")
    vals = mean_pair_phasors(grid.points(), baseband, array, freqs, workers=workers)
    data = np.full((grid.height, grid.width, len(freqs)), np.nan, dtype=np.complex128)
    data[grid.valid] = vals
    return CorrelationField(data=data, valid=grid.valid.copy())
