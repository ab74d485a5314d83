"""Seeded gradient-verification suites over geometry and the NMS loss.

Shared by the CLI's diagnostic mode and the acceptance tests. Probe points
sitting on a min/max argument tie, or whose event set flips under the
finite-difference step, are rejected and counted, never silently skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox, iou, iou_grad
from .gradcheck import FDConfig, check_grads, fd_gradient
from .loss import Detection, LossConfig, nms_loss_forward_backward
from .scenegen import SceneSpec, generate_scene


@dataclass
class SuiteReport:
    name: str
    n_checked: int = 0
    n_rejected: int = 0
    n_failed: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0 and self.n_checked > 0

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.name}: {status} ({self.n_checked} checked, "
                f"{self.n_rejected} rejected probes, {self.n_failed} failed)")


def _tie_free(a: BBox, b: BBox, margin: float) -> bool:
    """No competing min/max arguments within margin, and a solid overlap."""
    pairs = [(a.x1, b.x1), (a.y1, b.y1), (a.x2, b.x2), (a.y2, b.y2)]
    if any(abs(u - v) <= margin for u, v in pairs):
        return False
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    return iw > margin and ih > margin


def random_overlapping_pair(rng: np.random.Generator,
                            margin: float = 1e-3) -> tuple[BBox, BBox]:
    """A seeded overlapping, tie-free box pair."""
    while True:
        x1, y1 = rng.uniform(0, 50, size=2)
        w, h = rng.uniform(5, 40, size=2)
        a = BBox(x1, y1, x1 + w, y1 + h)
        shift = rng.uniform(-0.6, 0.6, size=2) * np.array([w, h])
        scale = rng.uniform(0.6, 1.4, size=2)
        b = BBox(x1 + shift[0], y1 + shift[1],
                 x1 + shift[0] + w * scale[0], y1 + shift[1] + h * scale[1])
        if iou(a, b) > 0 and _tie_free(a, b, margin):
            return a, b


def geometry_gradient_suite(n_pairs: int = 1000, seed: int = 0,
                            fd_cfg: FDConfig = FDConfig()) -> SuiteReport:
    """Analytic IoU partials vs central differences on random tie-free pairs."""
    rng = np.random.default_rng(seed)
    report = SuiteReport(name="geometry-grad")
    for _ in range(n_pairs):
        a, b = random_overlapping_pair(rng, fd_cfg.tie_margin)
        g = iou_grad(a, b)
        analytic = np.concatenate([g.d_a, g.d_b])

        def f(x):
            return iou(BBox.from_array(x[:4]), BBox.from_array(x[4:]))

        numeric = fd_gradient(f, np.concatenate([a.as_array(), b.as_array()]), fd_cfg)
        res = check_grads(analytic, numeric, fd_cfg)
        report.n_checked += 1
        if not res.passed:
            report.n_failed += 1
            report.failures.append(f"pair {a} / {b}: {res}")
    return report


def _event_signature(result):
    return (tuple((e.fp_index, e.max_index) for e in result.pull_events),
            tuple((e.fn_index, e.suppressor_index) for e in result.push_events))


def _loss_with_det(dets, gt_boxes, cfg, i, coords=None, score=None):
    det = dets[i]
    box = BBox.from_array(coords) if coords is not None else det.box
    new = list(dets)
    new[i] = Detection(box=box, score=det.score if score is None else float(score),
                       gt=det.gt)
    return nms_loss_forward_backward(new, gt_boxes, cfg)


def _stable_under_probe(dets, gt_boxes, cfg, i, sig0, h):
    """Event set unchanged when each parameter of detection i moves +-h."""
    base = dets[i].box.as_array()
    for j in range(4):
        for s in (h, -h):
            probe = base.copy()
            probe[j] += s
            res = _loss_with_det(dets, gt_boxes, cfg, i, coords=probe)
            if _event_signature(res) != sig0:
                return False
    for s in (h, -h):
        res = _loss_with_det(dets, gt_boxes, cfg, i, score=dets[i].score + s)
        if _event_signature(res) != sig0:
            return False
    return True


def nms_loss_gradient_suite(n_scenes: int = 200, seed: int = 0,
                            loss_cfg: LossConfig = LossConfig(),
                            fd_cfg: FDConfig = FDConfig()) -> SuiteReport:
    """Analytic NMS-loss gradients vs finite differences on random scenes.

    Checks, per scene: coordinate and score gradients of every
    event-participating detection at stable probe points; exact zeros on
    every stop-gradient side and on push-event scores.
    """
    report = SuiteReport(name="nms-loss-grad")
    for s in range(n_scenes):
        spec = SceneSpec(seed=seed + s, n_gt=4, preds_per_gt=3,
                         crowd_iou=0.35, coord_noise_sigma=10.0,
                         n_background=1)
        scene = generate_scene(spec)
        dets = scene.detections
        gt_boxes = [g.box for g in scene.gt]
        res = nms_loss_forward_backward(dets, gt_boxes, loss_cfg)
        sig0 = _event_signature(res)

        pull_fp = {e.fp_index for e in res.pull_events}
        push_fn = {e.fn_index for e in res.push_events}
        partners = {e.max_index for e in res.pull_events}
        partners |= {e.suppressor_index for e in res.push_events}

        # stop-gradient sides and push scores must be exactly zero
        for i in partners - pull_fp - push_fn:
            report.n_checked += 1
            if np.any(res.coord_grads[i] != 0.0) or res.score_grads[i] != 0.0:
                report.n_failed += 1
                report.failures.append(f"scene {spec.seed}: stop-grad leak at {i}")
        for i in push_fn:
            report.n_checked += 1
            if res.score_grads[i] != 0.0:
                report.n_failed += 1
                report.failures.append(f"scene {spec.seed}: push score grad at {i}")

        # finite differences are only meaningful for pure receivers: a
        # detection serving as a stop-gradient partner elsewhere diverges
        # from full-forward FD by design, and push scores are detached.
        for i in sorted((pull_fp | push_fn) - partners):
            partner_boxes = [dets[e.max_index].box for e in res.pull_events
                             if e.fp_index == i]
            partner_boxes += [dets[e.suppressor_index].box for e in res.push_events
                              if e.fn_index == i]
            if not all(_tie_free(dets[i].box, p, fd_cfg.tie_margin)
                       for p in partner_boxes):
                report.n_rejected += 1
                continue
            if not _stable_under_probe(dets, gt_boxes, loss_cfg, i, sig0, fd_cfg.h):
                report.n_rejected += 1
                continue

            def f_coords(x, i=i):
                return _loss_with_det(dets, gt_boxes, loss_cfg, i, coords=x).l_nms

            num_c = fd_gradient(f_coords, dets[i].box.as_array(), fd_cfg)
            analytic = res.coord_grads[i]
            numeric = num_c
            if i in pull_fp:  # score is live only through pull events
                def f_score(x, i=i):
                    return _loss_with_det(dets, gt_boxes, loss_cfg, i,
                                          score=x[0]).l_nms

                num_s = fd_gradient(f_score, np.array([dets[i].score]), fd_cfg)
                analytic = np.concatenate([analytic, [res.score_grads[i]]])
                numeric = np.concatenate([numeric, num_s])
            check = check_grads(analytic, numeric, fd_cfg)
            report.n_checked += 1
            if not check.passed:
                report.n_failed += 1
                report.failures.append(f"scene {spec.seed} det {i}: {check}")
    return report
