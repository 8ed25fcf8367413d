"""Locally weighted linear regression: a per-pixel scale-shift field.

Each pixel (i, j) gets its own (s_ij, t_ij) from a weighted least squares
over the calibration samples, with Gaussian spatial weights

    w_k = (1 / sqrt(2*pi)) * exp(-d_k^2 / (2 b^2)),

where d_k is the Euclidean pixel distance from sample k to (i, j) and b
is the kernel bandwidth. The aligned map is S * z + T elementwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DepthMap, FloatArray, SampleSet
from .errors import DegenerateDesign, DimensionMismatch, InvalidArgument
from .gssa import VARIANCE_FLOOR
from .threads import resolve_threads

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: Local normal matrices with condition beyond this get ridge regularization.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LwlrConfig:
    """Kernel bandwidth in pixels and the ridge term for near-singular pixels."""

    bandwidth: float = 100.0
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if not (self.bandwidth > 0.0):
            raise InvalidArgument("bandwidth must be > 0")
        if self.epsilon < 0.0:
            raise InvalidArgument("epsilon must be >= 0")


@dataclass(frozen=True)
class ScaleShiftField:
    """Per-pixel scale raster S and shift raster T, shape (height, width)."""

    scale: FloatArray
    shift: FloatArray

    def __post_init__(self) -> None:
        s = np.asarray(self.scale, dtype=np.float64)
        t = np.asarray(self.shift, dtype=np.float64)
        if s.shape != t.shape or s.ndim != 2:
            raise InvalidArgument("scale and shift rasters must share a 2-D shape")
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "shift", t)

    @property
    def width(self) -> int:
        return self.scale.shape[1]

    @property
    def height(self) -> int:
        return self.scale.shape[0]


def lwlr_weight(d_k: float, b: float) -> float:
    """Gaussian kernel weight for a sample at pixel distance d_k."""
    if not (b > 0.0):
        raise InvalidArgument("bandwidth must be > 0")
    if d_k < 0.0:
        raise InvalidArgument("distance must be >= 0")
    return INV_SQRT_2PI * math.exp(-(d_k * d_k) / (2.0 * b * b))


def _accumulate_band(
    rows: slice,
    width: int,
    samples: SampleSet,
    z_p: FloatArray,
    bandwidth: float,
) -> tuple[FloatArray, ...]:
    """Accumulate the five weighted-normal-equation sums for a row band.

    Samples are accumulated in their stored order so the result is
    bit-identical to a naive per-pixel loop and independent of how pixels
    are split across bands or threads.
    """
    v_grid, u_grid = np.mgrid[rows, 0:width]
    u_grid = u_grid.astype(np.float64)
    v_grid = v_grid.astype(np.float64)
    shape = u_grid.shape
    a11 = np.zeros(shape)
    a12 = np.zeros(shape)
    a22 = np.zeros(shape)
    b1 = np.zeros(shape)
    b2 = np.zeros(shape)
    two_b2 = 2.0 * bandwidth * bandwidth
    for k in range(samples.n):
        du = u_grid - float(samples.u[k])
        dv = v_grid - float(samples.v[k])
        w = INV_SQRT_2PI * np.exp(-(du * du + dv * dv) / two_b2)
        zp = float(z_p[k])
        zc = float(samples.z_c[k])
        a11 += w * (zp * zp)
        a12 += w * zp
        a22 += w
        b1 += w * (zp * zc)
        b2 += w * zc
    return a11, a12, a22, b1, b2


def fit_lwlr(
    samples: SampleSet,
    dims: tuple[int, int],
    cfg: LwlrConfig | None = None,
    threads: int | None = None,
) -> ScaleShiftField:
    """Solve the per-pixel weighted scale-shift regression over a raster.

    Args:
        samples: paired calibration points.
        dims: (width, height) of the target raster.
        cfg: bandwidth and ridge term.
        threads: worker bound for the row-band split; None resolves via
            the MOMA_THREADS environment variable, then CPU count. Results
            are identical for every thread count.

    Raises:
        DegenerateDesign: predicted depths all equal, or a pixel's normal
            matrix stays singular after regularization.
    """
    cfg = cfg or LwlrConfig()
    width, height = dims
    if width < 1 or height < 1:
        raise InvalidArgument("target raster must be at least 1x1")
    z_p = samples.require_paired()
    if samples.n < 2:
        raise InvalidArgument("need at least 2 samples to fit scale and shift")
    if float(np.var(z_p)) < VARIANCE_FLOOR:
        raise DegenerateDesign("predicted depths are all (nearly) equal")

    n_workers = resolve_threads(threads)
    band_rows = height if n_workers <= 1 else max(8, -(-height // n_workers))
    bands = [slice(r, min(r + band_rows, height)) for r in range(0, height, band_rows)]

    def run(band: slice) -> tuple[FloatArray, ...]:
        return _accumulate_band(band, width, samples, z_p, cfg.bandwidth)

    if len(bands) == 1 or n_workers <= 1:
        parts = [run(b) for b in bands]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, bands))
    a11, a12, a22, b1, b2 = (np.concatenate(cols, axis=0) for cols in zip(*parts))

    # Symmetric 2x2 eigenvalue condition; regularize pixels beyond the limit.
    tr = a11 + a22
    disc = np.sqrt((a11 - a22) ** 2 + 4.0 * a12 * a12)
    lo = 0.5 * (tr - disc)
    hi = 0.5 * (tr + disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = ~((lo > 0.0) & (hi / lo <= CONDITION_LIMIT))
    ridge = cfg.epsilon * tr
    a11 = np.where(bad, a11 + ridge, a11)
    a22 = np.where(bad, a22 + ridge, a22)

    det = a11 * a22 - a12 * a12
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = (a22 * b1 - a12 * b2) / det
        shift = (a11 * b2 - a12 * b1) / det
    if not (np.all(np.isfinite(scale)) and np.all(np.isfinite(shift))):
        raise DegenerateDesign(
            "singular local design; increase epsilon or the bandwidth"
        )
    return ScaleShiftField(scale=scale, shift=shift)


def apply_lwlr(pred_norm: DepthMap, field: ScaleShiftField) -> DepthMap:
    """Elementwise aligned = S * z + T; NaN pixels pass through."""
    if (field.width, field.height) != (pred_norm.width, pred_norm.height):
        raise DimensionMismatch(
            f"field {field.width}x{field.height} vs map "
            f"{pred_norm.width}x{pred_norm.height}"
        )
    return DepthMap(pred_norm.values * field.scale + field.shift)
