"""Persisted calibrations and the calibrate/apply pipeline.

An AlignmentModel bundles a fitted method (gssa | lwlr | ssra) with the
normalization method and statistics captured at calibration time, so a
one-time calibration can be re-applied to any later prediction from the
same camera pose. Model files are versioned, human-readable JSON; a
read-write cycle is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import DepthMap, Mask, SampleSet, concat_samples, pair_predictions, sample_points
from .errors import DimensionMismatch, InvalidArgument
from .gssa import GlobalScaleShift, apply_gssa, fit_gssa
from .lwlr import LwlrConfig, apply_lwlr, fit_lwlr
from .normalize import NormalizationMethod, NormStats, normalize, renormalize
from .ssra import (
    SolverConfig,
    SolverReport,
    ThetaParams,
    apply_ssra,
    fit_ssra,
    forward_model,
)

FORMAT_VERSION = 1

METHODS = ("gssa", "lwlr", "ssra")


@dataclass(frozen=True)
class LwlrModel:
    """LWLR persists its inputs; the field is recomputed at apply time."""

    samples: SampleSet
    config: LwlrConfig


@dataclass(frozen=True)
class AlignmentModel:
    method: str
    params: GlobalScaleShift | LwlrModel | ThetaParams
    norm: NormalizationMethod
    norm_stats: NormStats | None
    calib_dims: tuple[int, int]  # (width, height)
    sample_count: int
    created_at: str

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown method tag {self.method!r}")
        expected = {"gssa": GlobalScaleShift, "lwlr": LwlrModel, "ssra": ThetaParams}
        if not isinstance(self.params, expected[self.method]):
            raise InvalidArgument(f"payload type does not match tag {self.method!r}")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        if isinstance(self.params, GlobalScaleShift):
            payload = {"s": self.params.s, "t": self.params.t}
        elif isinstance(self.params, ThetaParams):
            payload = {
                "s": self.params.s,
                "theta": self.params.theta,
                "phi": self.params.phi,
                "t3": self.params.t3,
                "cxp": self.params.cxp,
                "cyp": self.params.cyp,
                "fp": self.params.fp,
            }
        else:
            s = self.params.samples
            payload = {
                "bandwidth": self.params.config.bandwidth,
                "epsilon": self.params.config.epsilon,
                "samples": {
                    "u": [int(x) for x in s.u],
                    "v": [int(x) for x in s.v],
                    "z_c": [float(x) for x in s.z_c],
                    "z_p": [float(x) for x in s.require_paired()],
                },
            }
        stats = None
        if self.norm_stats is not None and self.norm is not NormalizationMethod.NONE:
            if self.norm is NormalizationMethod.MINMAX:
                stats = {"z_min": self.norm_stats.z_min, "z_max": self.norm_stats.z_max}
            else:
                stats = {"median": self.norm_stats.median, "mad": self.norm_stats.mad}
        return {
            "format_version": FORMAT_VERSION,
            "method": self.method,
            "norm": self.norm.value,
            "norm_stats": stats,
            "calib_dims": [self.calib_dims[0], self.calib_dims[1]],
            "n": self.sample_count,
            "created_at": self.created_at,
            "payload": payload,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AlignmentModel":
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise InvalidArgument(f"unsupported model format_version {version!r}")
        method = doc["method"]
        norm = NormalizationMethod.from_tag(doc["norm"])
        payload = doc["payload"]
        params: GlobalScaleShift | LwlrModel | ThetaParams
        if method == "gssa":
            params = GlobalScaleShift(s=payload["s"], t=payload["t"])
        elif method == "ssra":
            params = ThetaParams(**{k: payload[k] for k in ("s", "theta", "phi", "t3", "cxp", "cyp", "fp")})
        elif method == "lwlr":
            sdoc = payload["samples"]
            dims = doc["calib_dims"]
            params = LwlrModel(
                samples=SampleSet(
                    u=np.array(sdoc["u"], dtype=np.int64),
                    v=np.array(sdoc["v"], dtype=np.int64),
                    z_c=np.array(sdoc["z_c"]),
                    z_p=np.array(sdoc["z_p"]),
                    width=int(dims[0]),
                    height=int(dims[1]),
                    allow_duplicate_uv=True,
                ),
                config=LwlrConfig(bandwidth=payload["bandwidth"], epsilon=payload["epsilon"]),
            )
        else:
            raise InvalidArgument(f"unknown method tag {method!r}")
        stats = None
        if norm is not NormalizationMethod.NONE:
            sdoc = doc.get("norm_stats")
            if sdoc is None:
                raise InvalidArgument("model is missing norm_stats for its method")
            if norm is NormalizationMethod.MINMAX:
                stats = NormStats(method=norm, z_min=sdoc["z_min"], z_max=sdoc["z_max"])
            else:
                stats = NormStats(method=norm, median=sdoc["median"], mad=sdoc["mad"])
        return cls(
            method=method,
            params=params,
            norm=norm,
            norm_stats=stats,
            calib_dims=(int(doc["calib_dims"][0]), int(doc["calib_dims"][1])),
            sample_count=int(doc["n"]),
            created_at=str(doc["created_at"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="ascii")

    @classmethod
    def load(cls, path: str | Path) -> "AlignmentModel":
        try:
            doc = json.loads(Path(path).read_text(encoding="ascii"))
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: not a valid model file: {exc}") from exc
        return cls.from_dict(doc)


@dataclass(frozen=True)
class CalibrationInfo:
    """Diagnostics from one calibration run."""

    solver_report: SolverReport | None
    sample_rmse: float
    sample_mae: float
    sample_max_abs: float
    n_samples: int


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def calibrate(
    gt_maps: list[DepthMap],
    pred_maps: list[DepthMap],
    *,
    method: str = "ssra",
    norm: NormalizationMethod = NormalizationMethod.MINMAX,
    n: int = 100,
    seed: int = 0,
    mask: Mask | None = None,
    bandwidth: float = 100.0,
    epsilon: float = 1e-6,
    solver: SolverConfig | None = None,
    norm_over_mask: bool = False,
    threads: int | None = None,
) -> tuple[AlignmentModel, CalibrationInfo]:
    """One-time alignment parameter estimation.

    Draws n ground-truth samples per scene, normalizes each prediction,
    pairs, and fits the chosen method. Several (gt, pred) pairs from the
    same camera pose stack their samples (few-shot mode); the first
    prediction provides the normalization anchor statistics.

    Args:
        norm_over_mask: compute normalization statistics over the masked
            region only instead of the whole image.
    """
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r} (expected one of {METHODS})")
    if len(gt_maps) != len(pred_maps) or not gt_maps:
        raise InvalidArgument("need one prediction per ground-truth map")
    dims = (gt_maps[0].width, gt_maps[0].height)
    for g, p in zip(gt_maps, pred_maps):
        if (g.width, g.height) != dims or (p.width, p.height) != dims:
            raise DimensionMismatch("all calibration maps must share one raster size")
    used_mask = mask if mask is not None else Mask.full(*dims)
    stats_mask = used_mask.bits if (norm_over_mask and mask is not None) else None

    anchor: NormStats | None = None
    per_scene: list[SampleSet] = []
    for idx, (gt, pred) in enumerate(zip(gt_maps, pred_maps)):
        if anchor is None:
            pred_n, anchor = normalize(pred, norm, stats_mask)
        else:
            pred_n = renormalize(pred, anchor, stats_mask)
        drawn = sample_points(gt, used_mask, n, seed + idx)
        per_scene.append(pair_predictions(drawn, pred_n))
    samples = concat_samples(per_scene)

    report: SolverReport | None = None
    params: GlobalScaleShift | LwlrModel | ThetaParams
    if method == "gssa":
        params = fit_gssa(samples)
        fitted = params.s * samples.require_paired() + params.t
    elif method == "lwlr":
        cfg = LwlrConfig(bandwidth=bandwidth, epsilon=epsilon)
        field = fit_lwlr(samples, dims, cfg, threads=threads)
        params = LwlrModel(samples=samples, config=cfg)
        fitted = (
            field.scale[samples.v, samples.u] * samples.require_paired()
            + field.shift[samples.v, samples.u]
        )
    else:
        theta, report = fit_ssra(samples, dims, solver)
        params = theta
        fitted = forward_model(
            samples.u.astype(float), samples.v.astype(float), samples.require_paired(), theta
        )

    resid = samples.z_c - fitted
    info = CalibrationInfo(
        solver_report=report,
        sample_rmse=float(np.sqrt(np.mean(resid**2))),
        sample_mae=float(np.mean(np.abs(resid))),
        sample_max_abs=float(np.max(np.abs(resid))),
        n_samples=samples.n,
    )
    model = AlignmentModel(
        method=method,
        params=params,
        norm=norm,
        norm_stats=anchor if norm is not NormalizationMethod.NONE else None,
        calib_dims=dims,
        sample_count=samples.n,
        created_at=_utc_now(),
    )
    return model, info


def apply_model(model: AlignmentModel, pred: DepthMap, threads: int | None = None) -> DepthMap:
    """Normalize a prediction into the calibration frame and align it.

    Raises DimensionMismatch for ssra/lwlr when the prediction raster does
    not match the calibration raster (gssa is size-independent).
    """
    if model.method in ("ssra", "lwlr"):
        if (pred.width, pred.height) != model.calib_dims:
            raise DimensionMismatch(
                f"prediction {pred.width}x{pred.height} vs calibration "
                f"{model.calib_dims[0]}x{model.calib_dims[1]}"
            )
    if model.norm is NormalizationMethod.NONE:
        pred_n = pred
    else:
        if model.norm_stats is None:
            raise InvalidArgument("model lacks normalization statistics")
        pred_n = renormalize(pred, model.norm_stats)
    if isinstance(model.params, GlobalScaleShift):
        return apply_gssa(pred_n, model.params)
    if isinstance(model.params, ThetaParams):
        return apply_ssra(pred_n, model.params)
    field = fit_lwlr(
        model.params.samples,
        (pred.width, pred.height),
        model.params.config,
        threads=threads,
    )
    return apply_lwlr(pred_n, field)
