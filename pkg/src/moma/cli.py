"""Command-line interface.

Subcommands: calibrate, apply, eval, sample, synth, bench. Exit codes:
0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import io as mio
from .bench import run_bench, write_bench_csv
from .core import Mask, sample_points
from .errors import MomaError
from .metrics import evaluate
from .model import AlignmentModel, apply_model, calibrate
from .normalize import NormalizationMethod
from .ssra import SolverConfig
from .synth import config_example, load_scene_config, perturb, render_scene


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _add_shared(parser: argparse.ArgumentParser, *, norm: bool = True) -> None:
    parser.add_argument("--depth-scale", type=_positive_float, default=mio.DEFAULT_PNG_SCALE,
                        help="meters per unit for 16-bit PNG depth (default 0.001)")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="worker bound for pixel-parallel steps (default: MOMA_THREADS or CPU count)")
    if norm:
        parser.add_argument("--norm", choices=[m.value for m in NormalizationMethod],
                            default="minmax", help="prediction normalization (default minmax)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moma",
        description="Recover metric depth from affine-invariant monocular depth "
                    "predictions via one-shot calibration at a fixed camera pose.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit alignment parameters from gt/pred pairs")
    p.add_argument("maps", nargs="+", metavar="GT PRED",
                   help="alternating ground-truth and prediction depth files")
    p.add_argument("--method", choices=("gssa", "lwlr", "ssra"), default="ssra")
    p.add_argument("--n", type=_positive_int, default=100,
                   help="ground-truth samples per scene (default 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask", type=Path, default=None, help="8-bit PNG mask over sampling")
    p.add_argument("--norm-mask", action="store_true",
                   help="compute normalization statistics over the masked region only")
    p.add_argument("--bandwidth", type=_positive_float, default=100.0,
                   help="LWLR Gaussian kernel bandwidth in pixels (default 100)")
    p.add_argument("--epsilon", type=float, default=1e-6,
                   help="LWLR ridge term for near-singular pixels (default 1e-6)")
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--out", type=Path, required=True, help="model file to write")
    p.add_argument("--json", action="store_true", help="print diagnostics as JSON")
    _add_shared(p)

    p = sub.add_parser("apply", help="align a prediction with a stored model")
    p.add_argument("pred", type=Path, help="prediction depth file")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="aligned depth file to write")
    p.add_argument("--time", action="store_true",
                   help="report the wall-clock of the normalize+align step")
    _add_shared(p, norm=False)

    p = sub.add_parser("eval", help="compare a depth map against ground truth")
    p.add_argument("pred", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("--mask", type=Path, default=None)
    p.add_argument("--json", action="store_true")
    _add_shared(p, norm=False)

    p = sub.add_parser("sample", help="draw calibration samples from a depth map")
    p.add_argument("gt", type=Path)
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True, help="CSV file to write")
    _add_shared(p, norm=False)

    p = sub.add_parser("synth", help="render a synthetic gt/pred pair from a config")
    p.add_argument("--config", type=Path, help="scene configuration document")
    p.add_argument("--print-example", action="store_true",
                   help="print a sample configuration and exit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-gt", type=Path)
    p.add_argument("--out-pred", type=Path)
    p.add_argument("--out-theta", type=Path,
                   help="write the generating parameters as JSON (for oracle tests)")
    _add_shared(p, norm=False)

    p = sub.add_parser("bench", help="sweep (method, n, seed) over a synthetic scene")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--methods", default="gssa,lwlr,ssra",
                   help="comma-separated subset of gssa,lwlr,ssra")
    p.add_argument("--n-sweep", type=_int_list, default=[20, 50, 100, 400, 1000],
                   help="comma-separated sample counts")
    p.add_argument("--seeds", default="5",
                   help="either a count K (seeds 0..K-1) or comma-separated seeds")
    p.add_argument("--bandwidth", type=_positive_float, default=100.0)
    p.add_argument("--out", type=Path, required=True, help="CSV report to write")
    _add_shared(p)

    return parser


def _load_depth(path: Path, scale: float):
    return mio.load_depth(path, scale)


def _load_mask(path: Path | None):
    return mio.read_mask(path) if path is not None else None


def _cmd_calibrate(args: argparse.Namespace) -> int:
    if len(args.maps) < 2 or len(args.maps) % 2 != 0:
        print("calibrate expects GT PRED path pairs", file=sys.stderr)
        return 2
    gt_maps = [_load_depth(Path(p), args.depth_scale) for p in args.maps[0::2]]
    pred_maps = [_load_depth(Path(p), args.depth_scale) for p in args.maps[1::2]]
    model, info = calibrate(
        gt_maps,
        pred_maps,
        method=args.method,
        norm=NormalizationMethod.from_tag(args.norm),
        n=args.n,
        seed=args.seed,
        mask=_load_mask(args.mask),
        bandwidth=args.bandwidth,
        epsilon=args.epsilon,
        solver=SolverConfig(max_iter=args.max_iter),
        norm_over_mask=args.norm_mask,
        threads=args.threads,
    )
    model.save(args.out)
    diag = {
        "model": str(args.out),
        "method": model.method,
        "norm": model.norm.value,
        "n_samples": info.n_samples,
        "sample_rmse": info.sample_rmse,
        "sample_mae": info.sample_mae,
        "sample_max_abs": info.sample_max_abs,
    }
    if info.solver_report is not None:
        diag["solver"] = {
            "init_cost": info.solver_report.init_cost,
            "final_cost": info.solver_report.final_cost,
            "iterations": info.solver_report.iterations,
            "converged": info.solver_report.converged,
        }
    if args.json:
        print(json.dumps(diag, indent=2, sort_keys=True))
    else:
        print(f"wrote {args.out}")
        print(f"method={model.method} norm={model.norm.value} n={info.n_samples}")
        print(
            "sample residuals: "
            f"rmse={info.sample_rmse:.6g} mae={info.sample_mae:.6g} "
            f"max={info.sample_max_abs:.6g}"
        )
        if info.solver_report is not None:
            r = info.solver_report
            print(
                f"solver: cost {r.init_cost:.6g} -> {r.final_cost:.6g} in "
                f"{r.iterations} iterations (converged={r.converged})"
            )
    return 0


def _cmd_apply(args: argparse.Namespace) -> int:
    model = AlignmentModel.load(args.model)
    pred = _load_depth(args.pred, args.depth_scale)
    start = time.perf_counter()
    aligned = apply_model(model, pred, threads=args.threads)
    elapsed = time.perf_counter() - start
    mio.save_depth(args.out, aligned, args.depth_scale)
    print(f"wrote {args.out}")
    if args.time:
        print(f"align_ms={elapsed * 1e3:.3f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    pred = _load_depth(args.pred, args.depth_scale)
    gt = _load_depth(args.gt, args.depth_scale)
    report = evaluate(pred, gt, _load_mask(args.mask))
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        for key, value in report.as_dict().items():
            print(f"{key}={value}")
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    gt = _load_depth(args.gt, args.depth_scale)
    mask = _load_mask(args.mask)
    samples = sample_points(gt, mask or Mask.full(gt.width, gt.height), args.n, args.seed)
    mio.write_samples_csv(args.out, samples)
    print(f"wrote {args.out} ({samples.n} points)")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.print_example:
        print(config_example(), end="")
        return 0
    if args.config is None or args.out_gt is None or args.out_pred is None:
        print("synth requires --config, --out-gt, and --out-pred", file=sys.stderr)
        return 2
    scene, pspec = load_scene_config(args.config.read_text())
    gt_clean = render_scene(scene)
    pred, gt = perturb(gt_clean, pspec, seed=args.seed)
    mio.save_depth(args.out_gt, gt, args.depth_scale)
    mio.save_depth(args.out_pred, pred, args.depth_scale)
    if args.out_theta is not None:
        t = pspec.theta_star
        doc = {
            "s": t.s, "theta": t.theta, "phi": t.phi, "t3": t.t3,
            "cxp": t.cxp, "cyp": t.cyp, "fp": t.fp,
            "jitter_a": pspec.jitter_a, "jitter_b": pspec.jitter_b,
            "gt_noise_sigma": pspec.gt_noise_sigma,
        }
        args.out_theta.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out_gt} and {args.out_pred}")
    return 0


def _parse_seeds(text: str) -> list[int]:
    values = [int(tok) for tok in text.split(",") if tok.strip()]
    if len(values) == 1 and "," not in text:
        return list(range(values[0]))
    return values


def _cmd_bench(args: argparse.Namespace) -> int:
    scene, pspec = load_scene_config(args.config.read_text())
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("gssa", "lwlr", "ssra"):
            print(f"unknown method {m!r}", file=sys.stderr)
            return 2
    seeds = _parse_seeds(args.seeds)
    rows = run_bench(
        scene,
        pspec,
        methods,
        args.n_sweep,
        seeds,
        norm=NormalizationMethod.from_tag(args.norm),
        bandwidth=args.bandwidth,
        threads=args.threads,
    )
    write_bench_csv(args.out, rows)
    failures = sum(1 for r in rows if r.status != "ok")
    print(f"wrote {args.out}: {len(rows)} rows, {failures} failed")
    return 0


_COMMANDS = {
    "calibrate": _cmd_calibrate,
    "apply": _cmd_apply,
    "eval": _cmd_eval,
    "sample": _cmd_sample,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (MomaError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
