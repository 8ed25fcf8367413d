"""Standard depth-estimation metrics over masked regions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DepthMap, Mask
from .errors import DimensionMismatch, NoValidPixels

DELTA_THRESHOLDS = (1.05, 1.10, 1.25)


@dataclass(frozen=True)
class MetricsReport:
    """RMSE/REL/MAE in meters plus delta-threshold accuracies.

    delta_* is the fraction of evaluated pixels with
    max(d / d_p, d_p / d) strictly below the threshold; ties fail.
    """

    rmse: float
    rel: float
    mae: float
    delta_105: float
    delta_110: float
    delta_125: float
    pixel_count: int

    def as_dict(self) -> dict:
        return {
            "delta_105": self.delta_105,
            "delta_110": self.delta_110,
            "delta_125": self.delta_125,
            "rel": self.rel,
            "rmse": self.rmse,
            "mae": self.mae,
            "pixel_count": self.pixel_count,
        }


def evaluate(pred: DepthMap, gt: DepthMap, mask: Mask | None = None) -> MetricsReport:
    """Compare an aligned prediction against ground truth.

    A pixel is evaluated when the ground truth is valid (finite, > 0), the
    prediction is not missing (non-NaN), and the mask (if any) admits it.
    Nonpositive finite predictions are alignment failures, not missing
    data: they fail every delta threshold but still contribute their error
    to MAE, RMSE, and REL, so bad alignments are penalized rather than
    hidden. REL normalizes by the ground-truth depth.
    """
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise DimensionMismatch(
            f"prediction {pred.width}x{pred.height} vs gt {gt.width}x{gt.height}"
        )
    include = gt.valid_mask() & pred.finite_mask()
    if mask is not None:
        if (mask.width, mask.height) != (gt.width, gt.height):
            raise DimensionMismatch("mask dimensions do not match the maps")
        include &= mask.bits
    count = int(include.sum())
    if count == 0:
        raise NoValidPixels("no pixel is valid in both maps under the mask")

    d = gt.values[include]
    d_p = pred.values[include]
    diff = d_p - d
    abs_diff = np.abs(diff)
    mae = float(np.mean(abs_diff))
    rmse = float(np.sqrt(np.mean(diff * diff)))
    rel = float(np.mean(abs_diff / d))

    ratio = np.full(count, np.inf)
    pos = d_p > 0.0
    ratio[pos] = np.maximum(d[pos] / d_p[pos], d_p[pos] / d[pos])
    deltas = [float(np.mean(ratio < thr)) for thr in DELTA_THRESHOLDS]

    return MetricsReport(
        rmse=rmse,
        rel=rel,
        mae=mae,
        delta_105=deltas[0],
        delta_110=deltas[1],
        delta_125=deltas[2],
        pixel_count=count,
    )
