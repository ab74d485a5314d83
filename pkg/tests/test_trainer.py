import dataclasses
import math

import numpy as np
import pytest

from nmsloss import (BBox, Detection, GtBox, LossConfig, NmsInput, Scene,
                     SceneSpec, TrainConfig, TrainingError, generate_scene,
                     history_rows, iou, nms_greedy, train_scene)


def _scene(gt_boxes, dets):
    gt = [GtBox(box=b, height=b.height(), visibility=1.0) for b in gt_boxes]
    return Scene(id="t", image_w=640, image_h=480, gt=gt, detections=dets)


def _pull_scene():
    """One gt, an exact top det, and a shifted duplicate that survives NMS."""
    g = BBox(100, 100, 141, 200)
    dup = BBox(120, 110, 161, 210)  # IoU with the top det well below 0.5
    return _scene([g], [Detection(box=g, score=0.9, gt=0),
                        Detection(box=dup, score=0.8, gt=0)])


def _push_scene():
    """Two lightly-overlapping gts; the second det drifted onto the first
    so NMS wrongly suppresses it."""
    g0 = BBox(100, 100, 141, 200)
    g1 = BBox(160, 100, 201, 200)
    drifted = BBox(110, 102, 151, 202)  # IoU with det0 above nt
    return _scene([g0, g1], [Detection(box=g0, score=0.9, gt=0),
                             Detection(box=drifted, score=0.8, gt=1)])


class TestTrainConfig:
    @pytest.mark.parametrize("kwargs", [dict(lr=0.0), dict(iters=0)])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestTrainScene:
    def test_no_assigned_detections_raises(self):
        s = _scene([BBox(0, 0, 10, 20)],
                   [Detection(box=BBox(50, 50, 60, 70), score=0.4, gt=None)])
        with pytest.raises(TrainingError):
            train_scene(s, TrainConfig())

    def test_baseline_regression_converges(self):
        spec = SceneSpec(seed=3, coord_noise_sigma=8.0)
        scene = generate_scene(spec)
        cfg = TrainConfig(lr=8.0, iters=300, enable_pull=False, enable_push=False)
        state, final = train_scene(scene, cfg)
        for d in final.detections:
            if d.gt is not None:
                assert iou(d.box, final.gt[d.gt].box) > 0.9

    def test_history_finite_and_complete(self):
        scene = generate_scene(SceneSpec(seed=1))
        cfg = TrainConfig(lr=0.5, iters=25)
        state, _ = train_scene(scene, cfg)
        assert len(state.history) == 25
        for h in state.history:
            assert all(math.isfinite(h[k])
                       for k in ("l_reg", "l_pull", "l_push", "l_total"))
        rows = history_rows(scene.id, state)
        assert len(rows) == 25 and rows[0][0] == scene.id
        assert [r[1] for r in rows] == list(range(25))

    def test_baseline_ignores_nms_loss_entirely(self):
        scene = generate_scene(SceneSpec(seed=4, coord_noise_sigma=16.0))
        base = TrainConfig(lr=0.5, iters=30, enable_pull=False, enable_push=False)
        loud = dataclasses.replace(
            base, loss_cfg=LossConfig(lambda_pull=10.0, lambda_push=10.0))
        sa, fa = train_scene(scene, base)
        sb, fb = train_scene(scene, loud)
        np.testing.assert_array_equal(sa.coords, sb.coords)
        np.testing.assert_array_equal(sa.logits, sb.logits)

    def test_single_step_is_descent(self):
        scene = generate_scene(SceneSpec(seed=6, coord_noise_sigma=16.0))
        for lr in (0.5, 0.25, 0.125):
            cfg = TrainConfig(lr=lr, iters=2)
            state, _ = train_scene(scene, cfg)
            assert state.history[1]["l_total"] < state.history[0]["l_total"]

    def test_frozen_assignments(self):
        scene = generate_scene(SceneSpec(seed=2))
        _, final = train_scene(scene, TrainConfig(lr=0.5, iters=10))
        assert [d.gt for d in final.detections] == [d.gt for d in scene.detections]


class TestPullBehavior:
    def test_pull_raises_duplicate_overlap_past_threshold(self):
        scene = _pull_scene()
        assert iou(scene.detections[0].box, scene.detections[1].box) < 0.5
        cfg = TrainConfig(lr=64.0, iters=300, lambda_reg=0.0,
                          enable_pull=True, enable_push=False)
        _, final = train_scene(scene, cfg)
        d0, d1 = final.detections
        assert iou(d0.box, d1.box) >= 0.5
        kept = nms_greedy(NmsInput(boxes=[d0.box, d1.box],
                                   scores=[d0.score, d1.score], nt=0.5))
        assert kept == [0]

    def test_pull_robust_to_lr_halving(self):
        scene = _pull_scene()
        for lr in (128.0, 64.0, 32.0):
            cfg = TrainConfig(lr=lr, iters=400, lambda_reg=0.0,
                              enable_pull=True, enable_push=False)
            _, final = train_scene(scene, cfg)
            assert iou(final.detections[0].box, final.detections[1].box) >= 0.5

    def test_pull_leaves_top_detection_untouched(self):
        scene = _pull_scene()
        cfg = TrainConfig(lr=64.0, iters=300, lambda_reg=0.0,
                          enable_pull=True, enable_push=False)
        _, final = train_scene(scene, cfg)
        assert final.detections[0].box == scene.detections[0].box

    def test_disabled_pull_leaves_duplicate_below_threshold(self):
        scene = _pull_scene()
        cfg = TrainConfig(lr=64.0, iters=300, lambda_reg=0.0,
                          enable_pull=False, enable_push=False)
        _, final = train_scene(scene, cfg)
        assert iou(final.detections[0].box, final.detections[1].box) < 0.5


class TestPushBehavior:
    def test_push_separates_wrongly_suppressed_pair(self):
        scene = _push_scene()
        d0, d1 = scene.detections
        assert iou(d0.box, d1.box) >= 0.5
        cfg = TrainConfig(lr=64.0, iters=300, lambda_reg=0.0,
                          enable_pull=False, enable_push=True)
        _, final = train_scene(scene, cfg)
        f0, f1 = final.detections
        assert iou(f0.box, f1.box) < 0.5
        kept = nms_greedy(NmsInput(boxes=[f0.box, f1.box],
                                   scores=[f0.score, f1.score], nt=0.5))
        assert kept == [0, 1]

    def test_push_leaves_suppressor_untouched(self):
        scene = _push_scene()
        cfg = TrainConfig(lr=64.0, iters=300, lambda_reg=0.0,
                          enable_pull=False, enable_push=True)
        _, final = train_scene(scene, cfg)
        assert final.detections[0].box == scene.detections[0].box

    def test_disabled_push_keeps_pair_suppressed(self):
        scene = _push_scene()
        cfg = TrainConfig(lr=64.0, iters=300, lambda_reg=0.0,
                          enable_pull=False, enable_push=False)
        _, final = train_scene(scene, cfg)
        assert iou(final.detections[0].box, final.detections[1].box) >= 0.5
