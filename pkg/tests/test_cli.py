"""End-to-end tests of the command-line interface."""

import json

import numpy as np
import pytest

from moma import DepthMap, Mask
from moma.bench import read_bench_csv
from moma.cli import main
from moma.io import load_depth, read_samples_csv, save_depth, write_mask
from moma.model import AlignmentModel

SMALL_CONFIG = """\
camera.width = 64
camera.height = 48
camera.fx = 60
camera.fy = 60
camera.cx = 32
camera.cy = 24
plane.normal = 0.05 -0.08 1.0
plane.offset = 1.05
box.1.center = -0.15 0.10 0.90
box.1.half_extents = 0.06 0.05 0.07
perturb.s = 1.4
perturb.theta = 0.12
perturb.phi = -0.08
perturb.t3 = 0.25
perturb.cxp = 32
perturb.cyp = 24
perturb.fp = 64
"""


@pytest.fixture()
def synth_files(tmp_path):
    cfg = tmp_path / "scene.cfg"
    cfg.write_text(SMALL_CONFIG)
    gt = tmp_path / "gt.pfm"
    pred = tmp_path / "pred.pfm"
    assert main(["synth", "--config", str(cfg), "--out-gt", str(gt),
                 "--out-pred", str(pred)]) == 0
    return cfg, gt, pred


class TestCalibrateApplyEval:
    def test_oracle_pipeline_via_files(self, tmp_path, synth_files, capsys):
        _, gt, pred = synth_files
        model = tmp_path / "model.json"
        assert main([
            "calibrate", "--method", "ssra", "--norm", "none", "--n", "100",
            "--seed", "7", "--out", str(model), str(gt), str(pred),
        ]) == 0
        aligned = tmp_path / "aligned.pfm"
        assert main(["apply", "--model", str(model), "--out", str(aligned),
                     "--time", str(pred)]) == 0
        capsys.readouterr()
        assert main(["eval", "--json", str(aligned), str(gt)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["mae"] < 1e-6
        assert report["delta_105"] == 1.0

    def test_calibrate_identity_gssa(self, tmp_path, synth_files):
        _, gt, _ = synth_files
        model_path = tmp_path / "model.json"
        assert main([
            "calibrate", "--method", "gssa", "--norm", "none",
            "--out", str(model_path), str(gt), str(gt),
        ]) == 0
        model = AlignmentModel.load(model_path)
        assert model.params.s == pytest.approx(1.0, abs=1e-6)
        assert model.params.t == pytest.approx(0.0, abs=1e-6)

    def test_calibrate_n_zero_exits_2(self, tmp_path, synth_files):
        _, gt, pred = synth_files
        with pytest.raises(SystemExit) as err:
            main(["calibrate", "--n", "0", "--out", str(tmp_path / "m.json"),
                  str(gt), str(pred)])
        assert err.value.code == 2

    def test_calibrate_odd_paths_exit_2(self, tmp_path, synth_files):
        _, gt, _ = synth_files
        assert main(["calibrate", "--out", str(tmp_path / "m.json"), str(gt)]) == 2

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["eval", str(tmp_path / "a.pfm"), str(tmp_path / "b.pfm")]) == 1

    def test_apply_dim_mismatch_exit_1(self, tmp_path, synth_files):
        _, gt, pred = synth_files
        model = tmp_path / "model.json"
        assert main(["calibrate", "--method", "ssra", "--norm", "none",
                     "--out", str(model), str(gt), str(pred)]) == 0
        small = tmp_path / "small.pfm"
        save_depth(small, DepthMap(np.ones((8, 8))))
        assert main(["apply", "--model", str(model), "--out",
                     str(tmp_path / "out.pfm"), str(small)]) == 1

    def test_eval_text_output_column_order(self, tmp_path, capsys):
        m = tmp_path / "m.pfm"
        save_depth(m, DepthMap(np.full((4, 4), 1.5)))
        assert main(["eval", str(m), str(m)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        keys = [line.split("=")[0] for line in lines]
        assert keys == ["delta_105", "delta_110", "delta_125", "rel", "rmse", "mae",
                        "pixel_count"]

    def test_eval_identity_values(self, tmp_path, capsys):
        m = tmp_path / "m.pfm"
        save_depth(m, DepthMap(np.full((4, 4), 1.5)))
        assert main(["eval", "--json", str(m), str(m)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["rmse"] == report["mae"] == report["rel"] == 0.0
        assert report["delta_105"] == report["delta_110"] == report["delta_125"] == 1.0

    def test_few_shot_pairs(self, tmp_path, synth_files, capsys):
        cfg, gt, pred = synth_files
        pred_b = tmp_path / "pred_b.pfm"
        jittered = DepthMap(load_depth(pred).values * 1.2 - 0.1)
        save_depth(pred_b, jittered)
        model = tmp_path / "model.json"
        assert main([
            "calibrate", "--method", "ssra", "--n", "40", "--json",
            "--out", str(model), str(gt), str(pred), str(gt), str(pred_b),
        ]) == 0
        diag = json.loads(capsys.readouterr().out)
        assert diag["n_samples"] == 80
        assert AlignmentModel.load(model).sample_count == 80

    def test_norm_mask_flag(self, tmp_path, synth_files):
        _, gt, pred = synth_files
        bits = np.zeros((48, 64), dtype=bool)
        bits[8:40, 8:56] = True
        mask_p = tmp_path / "mask.png"
        write_mask(mask_p, Mask(bits))
        model = tmp_path / "model.json"
        assert main([
            "calibrate", "--method", "gssa", "--mask", str(mask_p), "--norm-mask",
            "--n", "50", "--out", str(model), str(gt), str(pred),
        ]) == 0
        assert AlignmentModel.load(model).method == "gssa"

    def test_eval_with_mask(self, tmp_path, capsys):
        gt = DepthMap(np.ones((4, 4)))
        pred_values = np.ones((4, 4))
        pred_values[0, 0] = 9.0
        bits = np.ones((4, 4), dtype=bool)
        bits[0, 0] = False
        gt_p, pred_p, mask_p = tmp_path / "g.pfm", tmp_path / "p.pfm", tmp_path / "m.png"
        save_depth(gt_p, gt)
        save_depth(pred_p, DepthMap(pred_values))
        write_mask(mask_p, Mask(bits))
        assert main(["eval", "--json", "--mask", str(mask_p), str(pred_p), str(gt_p)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["mae"] == 0.0
        assert report["pixel_count"] == 15


class TestSampleCommand:
    def test_writes_csv(self, tmp_path, synth_files):
        _, gt, _ = synth_files
        out = tmp_path / "samples.csv"
        assert main(["sample", "--n", "25", "--seed", "3", "--out", str(out), str(gt)]) == 0
        samples = read_samples_csv(out)
        assert samples.n == 25

    def test_deterministic(self, tmp_path, synth_files):
        _, gt, _ = synth_files
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sample", "--n", "10", "--seed", "3", "--out", str(a), str(gt)]) == 0
        assert main(["sample", "--n", "10", "--seed", "3", "--out", str(b), str(gt)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestSynthCommand:
    def test_print_example_parses(self, capsys):
        assert main(["synth", "--print-example"]) == 0
        text = capsys.readouterr().out
        from moma import load_scene_config

        scene, _ = load_scene_config(text)
        assert scene.camera.width == 320

    def test_requires_outputs(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(SMALL_CONFIG)
        assert main(["synth", "--config", str(cfg)]) == 2

    def test_writes_theta_json(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(SMALL_CONFIG)
        theta_path = tmp_path / "theta.json"
        assert main(["synth", "--config", str(cfg), "--out-gt", str(tmp_path / "g.pfm"),
                     "--out-pred", str(tmp_path / "p.pfm"),
                     "--out-theta", str(theta_path)]) == 0
        doc = json.loads(theta_path.read_text())
        assert doc["s"] == 1.4
        assert doc["t3"] == 0.25

    def test_png_output(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(SMALL_CONFIG)
        gt = tmp_path / "g.png"
        assert main(["synth", "--config", str(cfg), "--out-gt", str(gt),
                     "--out-pred", str(tmp_path / "p.png"),
                     "--depth-scale", "0.0005"]) == 0
        back = load_depth(gt, scale=0.0005)
        assert 0.8 < np.nanmedian(back.values) < 1.3


class TestBenchCommand:
    def test_sweep_cardinality(self, tmp_path):
        cfg = tmp_path / "scene.cfg"
        cfg.write_text(SMALL_CONFIG + "perturb.gt_noise_sigma = 0.005\n")
        out = tmp_path / "bench.csv"
        assert main([
            "bench", "--config", str(cfg), "--methods", "gssa,lwlr,ssra",
            "--n-sweep", "20,50,100,400,1000", "--seeds", "5",
            "--norm", "none", "--out", str(out),
        ]) == 0
        rows = read_bench_csv(out)
        assert len(rows) == 75
        assert all(r["status"] == "ok" for r in rows)

    def test_noise_free_ssra_mae_zero(self, tmp_path):
        cfg = tmp_path / "scene.cfg"
        cfg.write_text(SMALL_CONFIG)
        out = tmp_path / "bench.csv"
        assert main([
            "bench", "--config", str(cfg), "--methods", "ssra",
            "--n-sweep", "20,100", "--seeds", "0,1,2",
            "--norm", "none", "--out", str(out),
        ]) == 0
        rows = read_bench_csv(out)
        assert len(rows) == 6
        assert all(float(r["mae"]) < 1e-6 for r in rows)

    def test_explicit_seed_list(self, tmp_path):
        cfg = tmp_path / "scene.cfg"
        cfg.write_text(SMALL_CONFIG)
        out = tmp_path / "bench.csv"
        assert main(["bench", "--config", str(cfg), "--methods", "gssa",
                     "--n-sweep", "20", "--seeds", "3,9", "--out", str(out)]) == 0
        rows = read_bench_csv(out)
        assert [r["seed"] for r in rows] == ["3", "9"]

    def test_unknown_method_exit_2(self, tmp_path):
        cfg = tmp_path / "scene.cfg"
        cfg.write_text(SMALL_CONFIG)
        assert main(["bench", "--config", str(cfg), "--methods", "ransac",
                     "--out", str(tmp_path / "b.csv")]) == 2

    def test_failed_runs_recorded_not_fatal(self, tmp_path):
        # n=1 cannot fit any model; the row must record the error.
        cfg = tmp_path / "scene.cfg"
        cfg.write_text(SMALL_CONFIG)
        out = tmp_path / "bench.csv"
        assert main(["bench", "--config", str(cfg), "--methods", "gssa",
                     "--n-sweep", "1,20", "--seeds", "1", "--norm", "none",
                     "--out", str(out)]) == 0
        rows = read_bench_csv(out)
        assert len(rows) == 2
        statuses = {r["n"]: r["status"] for r in rows}
        assert statuses["1"] == "error"
        assert statuses["20"] == "ok"
        assert rows[0]["error"] != ""


class TestIdempotence:
    def test_rerun_reproduces_everything_but_timestamp(self, tmp_path, synth_files):
        _, gt, pred = synth_files
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        argv = ["calibrate", "--method", "ssra", "--n", "60", "--seed", "11"]
        assert main(argv + ["--out", str(m1), str(gt), str(pred)]) == 0
        assert main(argv + ["--out", str(m2), str(gt), str(pred)]) == 0
        a = AlignmentModel.load(m1)
        b = AlignmentModel.load(m2)
        assert a.params == b.params
        assert a.norm_stats == b.norm_stats
        assert (a.method, a.norm, a.calib_dims, a.sample_count) == (
            b.method, b.norm, b.calib_dims, b.sample_count
        )
        o1, o2 = tmp_path / "o1.pfm", tmp_path / "o2.pfm"
        assert main(["apply", "--model", str(m1), "--out", str(o1), str(pred)]) == 0
        assert main(["apply", "--model", str(m2), "--out", str(o2), str(pred)]) == 0
        assert o1.read_bytes() == o2.read_bytes()


class TestThreadsPlumbing:
    def test_env_override(self, monkeypatch):
        from moma.threads import resolve_threads

        monkeypatch.setenv("MOMA_THREADS", "3")
        assert resolve_threads() == 3
        assert resolve_threads(2) == 2
        monkeypatch.setenv("MOMA_THREADS", "junk")
        from moma import InvalidArgument

        with pytest.raises(InvalidArgument):
            resolve_threads()

    def test_cli_threads_flag(self, tmp_path, synth_files):
        _, gt, pred = synth_files
        model = tmp_path / "m.json"
        assert main(["calibrate", "--method", "lwlr", "--norm", "none", "--n", "30",
                     "--threads", "2", "--bandwidth", "30",
                     "--out", str(model), str(gt), str(pred)]) == 0
        assert main(["apply", "--model", str(model), "--threads", "2",
                     "--out", str(tmp_path / "o.pfm"), str(pred)]) == 0
