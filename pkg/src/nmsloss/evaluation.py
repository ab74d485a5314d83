"""Pedestrian-detection evaluation: Reasonable filter, greedy matching,
and log-average miss rate over FPPI in [1e-2, 1e0].

Follows the Caltech-style protocol: detections are matched greedily in
score order against the filtered ground truth at IoU >= 0.5; the score
threshold is then swept and miss rate is sampled at 9 reference FPPI
values evenly spaced in log10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import iou
from .loss import Detection, LossConfig, nms_loss_forward_backward
from .scenegen import GtBox, Scene

MR_FLOOR = 1e-10


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    match_iou: float = 0.5
    min_height: float = 50.0
    min_visibility: float = 0.65
    fppi_points: int = 9
    fppi_range: tuple[float, float] = (1e-2, 1e0)

    def __post_init__(self):
        if self.fppi_points < 2:
            raise EvaluationError("fppi_points must be >= 2")
        lo, hi = self.fppi_range
        if not 0.0 < lo < hi:
            raise EvaluationError("fppi_range endpoints must be positive, increasing")


@dataclass
class EvalReport:
    mr_log_average: float
    curve: list[tuple[float, float]]  # (fppi, miss_rate) samples
    tp: int
    fp: int
    fn: int
    nms_fp_count: int = 0
    nms_fn_count: int = 0

    def to_dict(self) -> dict:
        return {"mr_log_average": self.mr_log_average,
                "curve": [{"fppi": f, "miss_rate": m} for f, m in self.curve],
                "tp": self.tp, "fp": self.fp, "fn": self.fn,
                "nms_fp_count": self.nms_fp_count,
                "nms_fn_count": self.nms_fn_count}


def reasonable_filter(gt: Sequence[GtBox],
                      cfg: EvalConfig = EvalConfig()) -> tuple[list[int], list[int]]:
    """Split gt indices into (evaluated, ignored) by height/visibility."""
    evaluated, ignored = [], []
    for i, g in enumerate(gt):
        if (not g.ignore and g.height >= cfg.min_height
                and g.visibility >= cfg.min_visibility):
            evaluated.append(i)
        else:
            ignored.append(i)
    return evaluated, ignored


TP, FP, IGNORED_MATCH = "TP", "FP", "ignored-match"


def match_detections(dets: Sequence[Detection], gt: Sequence[GtBox],
                     evaluated: Sequence[int], ignored: Sequence[int],
                     cfg: EvalConfig = EvalConfig()):
    """Greedy score-order matching.

    Each detection takes the highest-IoU unmatched evaluated gt at
    IoU >= match_iou (TP), else the highest-IoU ignored gt (ignored-match,
    not penalized), else it is an FP. Returns per-detection labels and the
    per-gt matched flags.
    """
    for a, b in zip(dets, dets[1:]):
        if b.score > a.score:
            raise EvaluationError("detections must be sorted by descending score")

    matched = [False] * len(gt)
    labels = []
    ignored_set = set(ignored)
    for det in dets:
        best_i, best_ov = None, 0.0
        for gi in evaluated:
            if matched[gi]:
                continue
            ov = iou(det.box, gt[gi].box)
            if ov >= cfg.match_iou and ov > best_ov:
                best_i, best_ov = gi, ov
        if best_i is not None:
            matched[best_i] = True
            labels.append(TP)
            continue
        ig_ov = max((iou(det.box, gt[gi].box) for gi in ignored_set), default=0.0)
        labels.append(IGNORED_MATCH if ig_ov >= cfg.match_iou else FP)
    return labels, matched


@dataclass
class SceneMatchResult:
    """Scored labels of one scene plus its evaluated-gt count."""

    scored_labels: list[tuple[float, str]]
    n_evaluated_gt: int


def match_scene(scene: Scene, cfg: EvalConfig = EvalConfig()) -> SceneMatchResult:
    evaluated, ignored = reasonable_filter(scene.gt, cfg)
    order = sorted(range(len(scene.detections)),
                   key=lambda i: (-scene.detections[i].score, i))
    dets = [scene.detections[i] for i in order]
    labels, _ = match_detections(dets, scene.gt, evaluated, ignored, cfg)
    return SceneMatchResult(
        scored_labels=[(d.score, lab) for d, lab in zip(dets, labels)],
        n_evaluated_gt=len(evaluated))


def mr_fppi(scenes: Sequence[SceneMatchResult],
            cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Sweep score thresholds and log-average the miss rate at the
    reference FPPI points."""
    if not scenes:
        raise EvaluationError("need at least one scene")
    total_gt = sum(s.n_evaluated_gt for s in scenes)
    if total_gt == 0:
        raise EvaluationError("no evaluated ground truth")
    n_scenes = len(scenes)

    all_pairs = [(s, lab) for sc in scenes for s, lab in sc.scored_labels
                 if lab != IGNORED_MATCH]
    curve = []
    for t in sorted({s for s, _ in all_pairs}, reverse=True):
        tp = sum(1 for s, lab in all_pairs if s >= t and lab == TP)
        fp = sum(1 for s, lab in all_pairs if s >= t and lab == FP)
        curve.append((fp / n_scenes, (total_gt - tp) / total_gt))

    refs = np.logspace(math.log10(cfg.fppi_range[0]),
                       math.log10(cfg.fppi_range[1]), cfg.fppi_points)
    samples = []
    for ref in refs:
        under = [(f, m) for f, m in curve if f <= ref]
        if under:
            # miss rate at the largest fppi <= ref; equal-fppi thresholds
            # share an operating point, so take the best of them
            best_f = max(f for f, _ in under)
            samples.append(min(m for f, m in under if f == best_f))
        elif curve:
            samples.append(max(m for _, m in curve))
        else:
            samples.append(1.0)
    mr_avg = math.exp(float(np.mean([math.log(max(m, MR_FLOOR)) for m in samples])))

    tp_all = sum(1 for _, lab in all_pairs if lab == TP)
    fp_all = sum(1 for _, lab in all_pairs if lab == FP)
    return EvalReport(mr_log_average=mr_avg, curve=curve, tp=tp_all, fp=fp_all,
                      fn=total_gt - tp_all)


def nms_event_counts(scene: Scene, cfg: LossConfig) -> tuple[int, int]:
    """(kept duplicates, cross-gt suppressions) from the NMS sweep's
    bookkeeping, losses ignored."""
    res = nms_loss_forward_backward(scene.detections, [g.box for g in scene.gt], cfg)
    return len(res.pull_events), len(res.push_events)


def curve_rows(report: EvalReport) -> list[tuple[float, float]]:
    return list(report.curve)
