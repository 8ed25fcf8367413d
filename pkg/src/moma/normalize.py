"""Per-image normalization of predicted depth.

Monocular depth models re-scale their output from image to image even
with a fixed camera, so a calibration fitted on one frame only transfers
if later frames are mapped into the same normalized frame first. Two
estimators are provided:

- ``median``: subtract the median, divide by the mean absolute deviation
  about it. Fully invariant to per-image affine jitter a*z + b (a > 0).
- ``minmax``: rescale to unit range, then offset by the map minimum, i.e.
  zhat = (z - z_min) / (z_max - z_min) + z_min. The leading term is
  jitter-invariant; the trailing offset is not, so at inference time the
  offset is anchored to the calibration-time statistics (see
  :func:`renormalize`), keeping one-shot calibrations valid across
  prediction fluctuation.

Statistics are computed over all non-missing (finite) pixels of the map,
never over the sparse calibration samples: at inference time no samples
exist, and calibration and inference must use the same estimator. For raw
depth exports the finite set equals the valid (positive) set.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import BoolArray, DepthMap
from .errors import DegenerateMAD, DegenerateRange, InvalidArgument


class NormalizationMethod(enum.Enum):
    MINMAX = "minmax"
    MEDIAN_MAD = "median"
    NONE = "none"

    @classmethod
    def from_tag(cls, tag: str) -> "NormalizationMethod":
        for m in cls:
            if m.value == tag:
                return m
        raise InvalidArgument(f"unknown normalization method {tag!r}")


@dataclass(frozen=True)
class NormStats:
    """Statistics captured when a map was normalized.

    ``median``/``mad`` are set for MEDIAN_MAD, ``z_min``/``z_max`` for
    MINMAX, nothing for NONE. Persisted with calibrations so inference can
    anchor into the calibration frame.
    """

    method: NormalizationMethod
    median: float | None = None
    mad: float | None = None
    z_min: float | None = None
    z_max: float | None = None


def lower_median(values: np.ndarray) -> float:
    """Median that picks the lower of the two middle elements for even counts.

    Using an element of the sample (instead of averaging the middle pair)
    keeps the estimator exactly equivariant under monotone reparametrization,
    so independent implementations agree bit-for-bit.
    """
    v = np.sort(np.asarray(values, dtype=np.float64), kind="stable")
    if v.size == 0:
        raise InvalidArgument("median of empty set")
    return float(v[(v.size - 1) // 2])


def _stats_pixels(pred: DepthMap, stats_mask: BoolArray | None) -> np.ndarray:
    sel = pred.finite_mask()
    if stats_mask is not None:
        if stats_mask.shape != pred.shape:
            raise InvalidArgument("statistics mask shape does not match the map")
        sel = sel & stats_mask
    return pred.values[sel]


def compute_stats(
    pred: DepthMap,
    method: NormalizationMethod,
    stats_mask: BoolArray | None = None,
) -> NormStats:
    """Compute the normalization statistics of a map without transforming it."""
    if method is NormalizationMethod.NONE:
        return NormStats(method=method)
    if method is NormalizationMethod.MINMAX and stats_mask is None:
        # fmin/fmax skip NaN without materializing the finite subset,
        # keeping the inference-time path within the runtime budget.
        z_min = float(np.fmin.reduce(pred.values, axis=None))
        z_max = float(np.fmax.reduce(pred.values, axis=None))
        if not (np.isfinite(z_min) and np.isfinite(z_max)):
            raise DegenerateRange("map has no valid depths")
        if z_max == z_min:
            raise DegenerateRange("z_max equals z_min")
        return NormStats(method=method, z_min=z_min, z_max=z_max)
    vals = _stats_pixels(pred, stats_mask)
    if vals.size < 2:
        # Both estimators need at least two distinct values.
        if method is NormalizationMethod.MINMAX:
            raise DegenerateRange("map has fewer than two valid depths")
        raise DegenerateMAD("map has fewer than two valid depths")
    if method is NormalizationMethod.MINMAX:
        z_min = float(vals.min())
        z_max = float(vals.max())
        if z_max == z_min:
            raise DegenerateRange("z_max equals z_min")
        return NormStats(method=method, z_min=z_min, z_max=z_max)
    m = lower_median(vals)
    mad = float(np.mean(np.abs(vals - m)))
    if mad == 0.0:
        raise DegenerateMAD("mean absolute deviation is zero")
    return NormStats(method=method, median=m, mad=mad)


def normalize(
    pred: DepthMap,
    method: NormalizationMethod,
    stats_mask: BoolArray | None = None,
) -> tuple[DepthMap, NormStats]:
    """Normalize a prediction map with its own statistics.

    MEDIAN_MAD: zhat = (z - median) / mad.
    MINMAX:     zhat = (z - z_min) / (z_max - z_min) + z_min.
    NONE:       identity.

    Invalid (NaN) pixels stay invalid. Returns the transformed map and the
    statistics used, which calibration persists for inference anchoring.
    """
    stats = compute_stats(pred, method, stats_mask)
    return renormalize(pred, stats, stats_mask), stats


def renormalize(
    pred: DepthMap,
    anchor: NormStats,
    stats_mask: BoolArray | None = None,
) -> DepthMap:
    """Normalize a map into the frame described by ``anchor``.

    The scale factor always comes from the map's own statistics (that is
    what cancels per-image jitter); only the minmax trailing offset is
    taken from the anchor, so every image a calibration touches lands in
    the calibration image's frame. When ``anchor`` was computed from
    ``pred`` itself this is exactly :func:`normalize`.
    """
    method = anchor.method
    if method is NormalizationMethod.NONE:
        return pred
    own = compute_stats(pred, method, stats_mask)
    v = pred.values
    if method is NormalizationMethod.MINMAX:
        out = (v - own.z_min) / (own.z_max - own.z_min) + anchor.z_min
    else:
        out = (v - own.median) / own.mad
    return DepthMap(out)
