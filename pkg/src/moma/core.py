"""Depth-map primitives, validity masking, and sparse calibration samples.

Conventions used throughout the package:

- Depth rasters are float64 arrays of shape (height, width), row-major,
  in meters. Missing/invalid pixels are canonicalized to NaN.
- A pixel is *valid* iff its value is finite and strictly positive.
  Sensor exports encode invalid pixels as 0.0 or NaN; both are mapped to
  NaN on load. Derived maps (normalized predictions, aligned output) may
  legitimately hold zero or negative finite values, which are preserved.
- ``u`` is the column index, ``v`` the row index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import (
    DimensionMismatch,
    EmptyAfterPairing,
    InvalidArgument,
    NoValidPixels,
)

FloatArray = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]
IntArray = npt.NDArray[np.int64]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DepthMap:
    """Immutable single-channel depth raster.

    ``values`` has shape (height, width). Non-finite entries become NaN;
    finite zeros and negatives are kept as data (validity is a predicate,
    not a storage rule, so aligned maps can carry nonpositive depth).
    Use :meth:`from_sensor` for raw exports where 0.0 means "missing".
    """

    values: FloatArray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidArgument(f"depth map must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgument("depth map must be at least 1x1")
        arr = arr.copy()
        arr[~np.isfinite(arr)] = np.nan
        object.__setattr__(self, "values", _freeze(arr))

    @classmethod
    def from_sensor(cls, values: npt.ArrayLike) -> "DepthMap":
        """Build from a sensor export: 0.0, negatives, and non-finite are invalid."""
        arr = np.asarray(values, dtype=np.float64).copy()
        with np.errstate(invalid="ignore"):
            arr[~(np.isfinite(arr) & (arr > 0.0))] = np.nan
        return cls(arr)

    @classmethod
    def from_flat(cls, data: npt.ArrayLike, width: int, height: int) -> "DepthMap":
        """Build from a row-major flat buffer of length width*height."""
        arr = np.asarray(data, dtype=np.float64)
        if arr.size != width * height:
            raise InvalidArgument(
                f"flat buffer has {arr.size} entries, expected {width * height}"
            )
        return cls(arr.reshape(height, width))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # (height, width)

    def valid_mask(self) -> BoolArray:
        """True where the pixel is finite and strictly positive."""
        with np.errstate(invalid="ignore"):
            return np.isfinite(self.values) & (self.values > 0.0)

    def finite_mask(self) -> BoolArray:
        """True where the pixel is not NaN (may include nonpositive values)."""
        return np.isfinite(self.values)

    def num_valid(self) -> int:
        return int(self.valid_mask().sum())


@dataclass(frozen=True)
class Mask:
    """Boolean pixel mask with the same (height, width) layout as DepthMap."""

    bits: BoolArray

    def __post_init__(self) -> None:
        arr = np.asarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise InvalidArgument(f"mask must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "bits", _freeze(arr.copy()))

    @classmethod
    def full(cls, width: int, height: int) -> "Mask":
        return cls(np.ones((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class SamplePoint:
    """One sparse calibration point: pixel (u, v), ground truth, prediction."""

    u: int
    v: int
    z_c: float
    z_p: float | None = None


@dataclass(frozen=True)
class SampleSet:
    """Column-array view of n calibration points.

    ``z_p`` is None until :func:`pair_predictions` fills it. ``width`` and
    ``height`` record the raster the samples were drawn from when known.
    Duplicate (u, v) pairs are rejected except for multi-scene
    concatenations (see :func:`concat_samples`), where the same pixel can
    appear once per scene.
    """

    u: IntArray
    v: IntArray
    z_c: FloatArray
    z_p: FloatArray | None = None
    width: int | None = None
    height: int | None = None
    allow_duplicate_uv: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=np.int64).copy()
        v = np.asarray(self.v, dtype=np.int64).copy()
        z_c = np.asarray(self.z_c, dtype=np.float64).copy()
        if not (u.ndim == v.ndim == z_c.ndim == 1):
            raise InvalidArgument("sample columns must be 1-D arrays")
        if not (u.size == v.size == z_c.size):
            raise InvalidArgument("sample columns must have equal length")
        if u.size < 1:
            raise InvalidArgument("a sample set needs at least one point")
        if not np.all(np.isfinite(z_c) & (z_c > 0.0)):
            raise InvalidArgument("ground-truth depths must be finite and > 0")
        if np.any(u < 0) or np.any(v < 0):
            raise InvalidArgument("pixel indices must be nonnegative")
        if self.width is not None and np.any(u >= self.width):
            raise InvalidArgument("column index out of range for declared width")
        if self.height is not None and np.any(v >= self.height):
            raise InvalidArgument("row index out of range for declared height")
        if not self.allow_duplicate_uv:
            flat = u.astype(np.int64) * (2**31) + v
            if np.unique(flat).size != flat.size:
                raise InvalidArgument("duplicate (u, v) sample positions")
        object.__setattr__(self, "u", _freeze(u))
        object.__setattr__(self, "v", _freeze(v))
        object.__setattr__(self, "z_c", _freeze(z_c))
        if self.z_p is not None:
            z_p = np.asarray(self.z_p, dtype=np.float64).copy()
            if z_p.shape != z_c.shape:
                raise InvalidArgument("z_p column must match z_c length")
            object.__setattr__(self, "z_p", _freeze(z_p))

    @property
    def n(self) -> int:
        return int(self.u.size)

    @property
    def points(self) -> list[SamplePoint]:
        zp = self.z_p
        return [
            SamplePoint(
                int(self.u[i]),
                int(self.v[i]),
                float(self.z_c[i]),
                float(zp[i]) if zp is not None else None,
            )
            for i in range(self.n)
        ]

    def require_paired(self) -> FloatArray:
        if self.z_p is None:
            raise InvalidArgument("sample set has no predicted depths (pair it first)")
        return self.z_p


def concat_samples(sets: list[SampleSet]) -> SampleSet:
    """Stack sample sets from several scenes at the same camera pose.

    The same pixel may legitimately appear in more than one scene, so the
    duplicate-position check is skipped across set boundaries.
    """
    if not sets:
        raise InvalidArgument("need at least one sample set")
    if len(sets) == 1:
        return sets[0]
    paired = [s.z_p is not None for s in sets]
    if any(paired) != all(paired):
        raise InvalidArgument("cannot mix paired and unpaired sample sets")
    dims = {(s.width, s.height) for s in sets}
    if len(dims) > 1:
        raise DimensionMismatch(f"sample sets come from different rasters: {dims}")
    width, height = dims.pop()
    return SampleSet(
        u=np.concatenate([s.u for s in sets]),
        v=np.concatenate([s.v for s in sets]),
        z_c=np.concatenate([s.z_c for s in sets]),
        z_p=np.concatenate([s.z_p for s in sets]) if all(paired) else None,
        width=width,
        height=height,
        allow_duplicate_uv=True,
    )


def sample_points(gt: DepthMap, mask: Mask, n: int, seed: int) -> SampleSet:
    """Draw up to n distinct valid masked pixels uniformly without replacement.

    Deterministic for a fixed seed. Returns min(n, #valid) points with z_c
    filled from ``gt``; z_p stays unset until :func:`pair_predictions`.

    Raises:
        InvalidArgument: n < 1.
        DimensionMismatch: mask does not match the map.
        NoValidPixels: the masked map has no valid pixel.
    """
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if (mask.width, mask.height) != (gt.width, gt.height):
        raise DimensionMismatch(
            f"mask {mask.width}x{mask.height} vs depth {gt.width}x{gt.height}"
        )
    eligible = gt.valid_mask() & mask.bits
    flat = np.flatnonzero(eligible)
    if flat.size == 0:
        raise NoValidPixels("no valid pixels under the given mask")
    k = min(n, flat.size)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(flat, size=k, replace=False)
    u = (chosen % gt.width).astype(np.int64)
    v = (chosen // gt.width).astype(np.int64)
    z_c = gt.values[v, u]
    return SampleSet(u=u, v=v, z_c=z_c, width=gt.width, height=gt.height)


def pair_predictions(samples: SampleSet, pred: DepthMap) -> SampleSet:
    """Fill z_p from the prediction map, dropping points on NaN pixels.

    (u, v, z_c) of every surviving point is preserved. Zero or negative
    finite predictions are kept: normalized predictions can go nonpositive.

    Raises:
        DimensionMismatch: prediction size disagrees with the sample origin.
        EmptyAfterPairing: every sampled pixel is invalid in the prediction.
    """
    if samples.width is not None and samples.height is not None:
        if (samples.width, samples.height) != (pred.width, pred.height):
            raise DimensionMismatch(
                f"prediction {pred.width}x{pred.height} vs samples drawn from "
                f"{samples.width}x{samples.height}"
            )
    if np.any(samples.u >= pred.width) or np.any(samples.v >= pred.height):
        raise DimensionMismatch("sample coordinates fall outside the prediction map")
    z_p = pred.values[samples.v, samples.u]
    keep = np.isfinite(z_p)
    if not np.any(keep):
        raise EmptyAfterPairing("all sampled pixels are invalid in the prediction")
    return SampleSet(
        u=samples.u[keep],
        v=samples.v[keep],
        z_c=samples.z_c[keep],
        z_p=z_p[keep],
        width=samples.width,
        height=samples.height,
        allow_duplicate_uv=samples.allow_duplicate_uv,
    )
