"""Global scale-shift alignment: the closed-form least-squares baseline.

Fits one (s, t) mapping predicted depth to metric depth over all samples,
min_{s,t} sum (z_c - (s*z_p + t))^2, via the 2x2 normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DepthMap, SampleSet
from .errors import DegenerateDesign, InvalidArgument

#: Predicted-depth variance below this is treated as a singular design.
VARIANCE_FLOOR = 1e-15


@dataclass(frozen=True)
class GlobalScaleShift:
    """A single affine depth correction: aligned = s * z + t."""

    s: float
    t: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.s) and np.isfinite(self.t)):
            raise InvalidArgument("scale and shift must be finite")


def fit_gssa(samples: SampleSet) -> GlobalScaleShift:
    """Solve the scale-shift least squares exactly.

    A negative fitted scale is allowed: depth models can invert relative
    depth, and the fit must be able to undo that.

    Raises:
        InvalidArgument: fewer than 2 samples or unpaired set.
        DegenerateDesign: predicted depths are (numerically) all equal.
    """
    z_p = samples.require_paired()
    z_c = samples.z_c
    n = samples.n
    if n < 2:
        raise InvalidArgument("need at least 2 samples to fit scale and shift")
    if float(np.var(z_p)) < VARIANCE_FLOOR:
        raise DegenerateDesign("predicted depths are all (nearly) equal")
    # Normal equations for the design [z_p, 1].
    spp = float(z_p @ z_p)
    sp = float(z_p.sum())
    spc = float(z_p @ z_c)
    sc = float(z_c.sum())
    det = spp * n - sp * sp
    s = (spc * n - sp * sc) / det
    t = (spp * sc - sp * spc) / det
    return GlobalScaleShift(s=s, t=t)


def residual_cost(samples: SampleSet, p: GlobalScaleShift) -> float:
    """Mean squared residual of the fit over the sample set."""
    r = samples.z_c - (p.s * samples.require_paired() + p.t)
    return float(np.mean(r * r))


def apply_gssa(pred_norm: DepthMap, p: GlobalScaleShift) -> DepthMap:
    """Map every non-missing pixel affinely; NaN pixels pass through."""
    return DepthMap(pred_norm.values * p.s + p.t)
