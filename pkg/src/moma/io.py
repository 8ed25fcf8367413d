"""File formats: PFM and 16-bit PNG depth rasters, PNG masks, CSV samples.

Depth interchange defaults to PFM (grayscale "Pf", negative scale for
little-endian, rows stored bottom to top). 16-bit PNG is supported for
sensor-export compatibility with an explicit meters-per-unit scale
(default 0.001, i.e. millimeters). The format is chosen by file
extension; there is no content sniffing.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from .core import DepthMap, Mask, SampleSet
from .errors import InvalidArgument

DEFAULT_PNG_SCALE = 0.001  # meters per 16-bit unit


# --------------------------------------------------------------------------
# PFM
# --------------------------------------------------------------------------

def read_pfm(path: str | Path) -> DepthMap:
    """Read a grayscale PFM depth map (invalid pixels: 0.0 or NaN)."""
    with open(path, "rb") as f:
        magic = _pfm_token(f)
        if magic != b"Pf":
            raise InvalidArgument(f"{path}: expected grayscale PFM magic 'Pf', got {magic!r}")
        width = int(_pfm_token(f))
        height = int(_pfm_token(f))
        scale = float(_pfm_token(f))
        if width < 1 or height < 1:
            raise InvalidArgument(f"{path}: bad PFM dimensions {width}x{height}")
        dtype = "<f4" if scale < 0 else ">f4"
        raw = f.read(width * height * 4)
    if len(raw) != width * height * 4:
        raise InvalidArgument(f"{path}: truncated PFM payload")
    data = np.frombuffer(raw, dtype=dtype)
    rows_bottom_up = data.reshape(height, width)
    return DepthMap.from_sensor(np.flipud(rows_bottom_up).astype(np.float64))


def _pfm_token(f) -> bytes:
    """Read one whitespace-delimited ASCII token from a binary stream."""
    token = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise InvalidArgument("unexpected end of PFM header")
        if c.isspace():
            if token:
                return token
            continue
        token += c


def write_pfm(path: str | Path, depth: DepthMap) -> None:
    """Write little-endian grayscale PFM; invalid pixels are stored as 0.0."""
    values = depth.values.copy()
    values[~np.isfinite(values)] = 0.0
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{depth.width} {depth.height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        np.flipud(values).astype("<f4").tofile(f)


# --------------------------------------------------------------------------
# 16-bit PNG depth
# --------------------------------------------------------------------------

def read_depth_png(path: str | Path, scale: float = DEFAULT_PNG_SCALE) -> DepthMap:
    """Read a 16-bit grayscale PNG as depth = pixel * scale; 0 means invalid."""
    if scale <= 0:
        raise InvalidArgument("depth scale must be > 0")
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidArgument(f"{path}: expected single-channel depth PNG")
    return DepthMap.from_sensor(arr.astype(np.float64) * scale)


def write_depth_png(path: str | Path, depth: DepthMap, scale: float = DEFAULT_PNG_SCALE) -> None:
    """Write depth as 16-bit PNG with round(depth / scale); invalid becomes 0."""
    if scale <= 0:
        raise InvalidArgument("depth scale must be > 0")
    values = depth.values / scale
    values = np.where(np.isfinite(values), np.rint(values), 0.0)
    clipped = np.clip(values, 0, 65535).astype(np.uint16)
    Image.fromarray(clipped).save(path)


# --------------------------------------------------------------------------
# Masks and dispatch helpers
# --------------------------------------------------------------------------

def read_mask(path: str | Path) -> Mask:
    """Read an 8-bit PNG mask; any nonzero pixel is True."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return Mask(arr != 0)


def write_mask(path: str | Path, mask: Mask) -> None:
    Image.fromarray(np.where(mask.bits, 255, 0).astype(np.uint8)).save(path)


def load_depth(path: str | Path, scale: float = DEFAULT_PNG_SCALE) -> DepthMap:
    """Load depth by extension: .pfm or .png."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        return read_pfm(path)
    if suffix == ".png":
        return read_depth_png(path, scale)
    raise InvalidArgument(f"unsupported depth format {suffix!r} (use .pfm or .png)")


def save_depth(path: str | Path, depth: DepthMap, scale: float = DEFAULT_PNG_SCALE) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        write_pfm(path, depth)
    elif suffix == ".png":
        write_depth_png(path, depth, scale)
    else:
        raise InvalidArgument(f"unsupported depth format {suffix!r} (use .pfm or .png)")


# --------------------------------------------------------------------------
# Sample CSV: header u,v,z_c[,z_p]
# --------------------------------------------------------------------------

def write_samples_csv(path: str | Path, samples: SampleSet) -> None:
    paired = samples.z_p is not None
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["u", "v", "z_c", "z_p"] if paired else ["u", "v", "z_c"])
        for i in range(samples.n):
            row = [int(samples.u[i]), int(samples.v[i]), repr(float(samples.z_c[i]))]
            if paired:
                row.append(repr(float(samples.z_p[i])))
            writer.writerow(row)


def read_samples_csv(path: str | Path) -> SampleSet:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidArgument(f"{path}: empty sample file") from None
        header = [h.strip() for h in header]
        if header not in (["u", "v", "z_c"], ["u", "v", "z_c", "z_p"]):
            raise InvalidArgument(f"{path}: expected header u,v,z_c[,z_p], got {header}")
        paired = len(header) == 4
        u, v, z_c, z_p = [], [], [], []
        for row in reader:
            if not row:
                continue
            u.append(int(row[0]))
            v.append(int(row[1]))
            z_c.append(float(row[2]))
            if paired:
                z_p.append(float(row[3]))
    if not u:
        raise InvalidArgument(f"{path}: sample file holds no points")
    return SampleSet(
        u=np.array(u, dtype=np.int64),
        v=np.array(v, dtype=np.int64),
        z_c=np.array(z_c),
        z_p=np.array(z_p) if paired else None,
    )
