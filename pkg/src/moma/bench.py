"""Benchmark sweeps: synthesize, calibrate, apply, evaluate, one CSV row per run."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import MomaError
from .metrics import evaluate
from .model import apply_model, calibrate
from .normalize import NormalizationMethod
from .synth import PerturbationSpec, SceneSpec, perturb, render_scene

CSV_COLUMNS = [
    "method",
    "n",
    "seed",
    "status",
    "delta_105",
    "delta_110",
    "delta_125",
    "rel",
    "rmse",
    "mae",
    "pixel_count",
    "calib_seconds",
    "error",
]


@dataclass(frozen=True)
class BenchRow:
    method: str
    n: int
    seed: int
    status: str
    metrics: dict | None
    calib_seconds: float | None
    error: str = ""

    def as_record(self) -> dict:
        rec = {
            "method": self.method,
            "n": self.n,
            "seed": self.seed,
            "status": self.status,
            "calib_seconds": "" if self.calib_seconds is None else repr(self.calib_seconds),
            "error": self.error,
        }
        for key in ("delta_105", "delta_110", "delta_125", "rel", "rmse", "mae", "pixel_count"):
            rec[key] = "" if self.metrics is None else repr(self.metrics[key])
        return rec


def run_bench(
    scene: SceneSpec,
    pspec: PerturbationSpec,
    methods: list[str],
    n_values: list[int],
    seeds: list[int],
    *,
    norm: NormalizationMethod = NormalizationMethod.MINMAX,
    bandwidth: float = 100.0,
    threads: int | None = None,
) -> list[BenchRow]:
    """Run every (method, n, seed) combination over one synthetic scene.

    The rendered scene is fixed; each seed re-draws the calibration samples
    and the ground-truth sensor noise. The noisy ground truth is both the
    sampling source and the evaluation reference, as with a real sensor.
    Failures become rows with status="error" instead of aborting the sweep.
    """
    gt_clean = render_scene(scene)
    rows: list[BenchRow] = []
    for method in methods:
        for n in n_values:
            for seed in seeds:
                rows.append(
                    _run_one(gt_clean, pspec, method, n, seed, norm, bandwidth, threads)
                )
    return rows


def _run_one(gt_clean, pspec, method, n, seed, norm, bandwidth, threads) -> BenchRow:
    try:
        pred, gt = perturb(gt_clean, pspec, seed=seed + 7_919)
        start = time.perf_counter()
        model, _ = calibrate(
            [gt],
            [pred],
            method=method,
            norm=norm,
            n=n,
            seed=seed,
            bandwidth=bandwidth,
            threads=threads,
        )
        calib_seconds = time.perf_counter() - start
        aligned = apply_model(model, pred, threads=threads)
        report = evaluate(aligned, gt)
        return BenchRow(
            method=method,
            n=n,
            seed=seed,
            status="ok",
            metrics=report.as_dict(),
            calib_seconds=calib_seconds,
        )
    except MomaError as exc:
        return BenchRow(
            method=method,
            n=n,
            seed=seed,
            status="error",
            metrics=None,
            calib_seconds=None,
            error=f"{type(exc).__name__}: {exc}",
        )


def write_bench_csv(path: str | Path, rows: list[BenchRow]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())


def read_bench_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
