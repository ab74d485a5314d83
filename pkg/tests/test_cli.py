import csv
import json

from nmsloss.cli import main


def _fast_overrides(extra=()):
    """Small scene count and training budget to keep CLI tests quick."""
    base = ["--set", "n_scenes=4", "--set", "train.iters=10",
            "--set", "scene.n_gt=4", "--set", "scene.preds_per_gt=3"]
    for item in extra:
        base += ["--set", item]
    return base


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestGen:
    def test_writes_scene_suite(self, tmp_path):
        out = tmp_path / "run"
        assert main(["gen", "--out", str(out)] + _fast_overrides()) == 0
        docs = json.loads((out / "scenes.json").read_text())
        assert len(docs) == 4
        assert set(docs[0]) == {"id", "image", "gt", "detections"}
        det = docs[0]["detections"][0]
        assert set(det) == {"x1", "y1", "x2", "y2", "score", "gt"}

    def test_byte_identical_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = _fast_overrides()
        assert main(["gen", "--out", str(a)] + args) == 0
        assert main(["gen", "--out", str(b)] + args) == 0
        assert (a / "scenes.json").read_bytes() == (b / "scenes.json").read_bytes()

    def test_seed_flag_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen", "--out", str(a), "--seed", "1"] + _fast_overrides()) == 0
        assert main(["gen", "--out", str(b), "--seed", "2"] + _fast_overrides()) == 0
        assert (a / "scenes.json").read_bytes() != (b / "scenes.json").read_bytes()


class TestTrain:
    def test_outputs_and_row_counts(self, tmp_path):
        out = tmp_path / "run"
        assert main(["train", "--out", str(out)] + _fast_overrides()) == 0
        rows = _read_csv(out / "summary.csv")
        assert rows[0] == ["mode", "nt", "lambda_pull", "lambda_push",
                           "mr_log_average", "nms_fp", "nms_fn", "tp", "fp", "fn"]
        assert [r[0] for r in rows[1:]] == ["baseline", "full"]
        curves = _read_csv(out / "loss_curves.csv")
        assert curves[0] == ["scene_id", "iter", "l_reg", "l_pull", "l_push",
                             "l_total"]
        assert len(curves) == 1 + 4 * 10  # header + scenes * iters
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mode"] == "full"
        baseline = json.loads((out / "metrics-baseline.json").read_text())
        assert baseline["lambda_pull"] == 0.0 and baseline["lambda_push"] == 0.0

    def test_byte_identical_summary(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = _fast_overrides()
        assert main(["train", "--out", str(a)] + args) == 0
        assert main(["train", "--out", str(b)] + args) == 0
        assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()

    def test_config_file_plus_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"mode": "pull", "n_scenes": 3,
                                   "train": {"iters": 5},
                                   "scene": {"n_gt": 4, "preds_per_gt": 3}}))
        out = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--out", str(out),
                     "--set", "loss.nt=0.45"]) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mode"] == "pull" and metrics["nt"] == 0.45
        assert metrics["lambda_push"] == 0.0


class TestSweep:
    def test_one_row_per_threshold_plus_baseline(self, tmp_path):
        out = tmp_path / "run"
        assert main(["sweep", "--out", str(out)] + _fast_overrides()) == 0
        rows = _read_csv(out / "summary.csv")
        assert [r[0] for r in rows[1:]] == ["baseline"] + ["nt-sweep"] * 4
        assert [r[1] for r in rows[2:]] == ["0.4", "0.45", "0.5", "0.55"]
        metrics = json.loads((out / "metrics.json").read_text())
        assert [m["nt"] for m in metrics] == [0.4, 0.45, 0.5, 0.55]


class TestEval:
    def test_eval_reads_generated_scenes(self, tmp_path):
        gen_out = tmp_path / "gen"
        assert main(["gen", "--out", str(gen_out)] + _fast_overrides()) == 0
        out = tmp_path / "eval"
        assert main(["eval", "--out", str(out)] + _fast_overrides(
            [f"scenes_path={gen_out / 'scenes.json'}"])) == 0
        rows = _read_csv(out / "summary.csv")
        assert len(rows) == 2 and rows[1][0] == "eval"


class TestGradcheck:
    def test_passes_and_prints(self, tmp_path, capsys):
        out = tmp_path / "run"
        # suite sizes are fixed; keep this test at full strength but rely on
        # the suites being fast
        assert main(["gradcheck", "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "geometry-grad: PASS" in printed
        assert "nms-loss-grad: PASS" in printed
        doc = json.loads((out / "gradcheck.json").read_text())
        assert doc["geometry"]["failed"] == 0 and doc["nms_loss"]["failed"] == 0


class TestErrors:
    def test_unknown_mode_json_error_exit_2(self, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["train", "--out", str(out), "--set", "mode=bogus"])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ConfigError" and "bogus" in err["message"]

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["train", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "o")])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"

    def test_malformed_override(self, tmp_path, capsys):
        rc = main(["train", "--out", str(tmp_path / "o"), "--set", "garbage"])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"

    def test_failed_run_cleans_partial_outputs(self, tmp_path, capsys):
        out = tmp_path / "run"
        # infeasible scene spec: generation fails after the out dir exists
        rc = main(["gen", "--out", str(out), "--set", "scene.n_gt=500",
                   "--set", "scene.image_h=80",
                   "--set", "scene.gt_height_range=[70, 75]"])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "SceneGenError"
        assert not (out / "scenes.json").exists()
