"""Differentiable NMS loss: pull/push terms computed inside the NMS sweep.

The sweep is the same greedy NMS as :mod:`nmsloss.nms`, augmented with
bookkeeping over ground-truth assignments:

* a kept detection whose ground truth already has a kept max-score
  detection is an unsuppressed duplicate -> pull event, loss
  ``-ln(1 - nt + IoU(b_max, b_m)) * s_m``;
* a suppressed detection whose ground truth differs from its suppressor's
  is a lost recall case -> push event, loss ``-ln(1 - IoU(b_i, b_m)) * s_i``,
  emitted only when the detection-pair IoU exceeds the IoU of the two
  ground-truth boxes (crowd exception).

Gradients are analytic. Pull gradients flow to the duplicate's coordinates
and score; push gradients flow to the eliminated detection's coordinates
only. The higher-score member of each pair never receives gradient, and
no gradient flows through the discrete suppression decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import BBox, iou, iou_grad, iou_many


class SceneValidationError(ValueError):
    """Raised on malformed scenes (bad scores, out-of-range gt indices)."""


@dataclass(frozen=True)
class Detection:
    """A predicted box with confidence score and optional ground-truth index."""

    box: BBox
    score: float
    gt: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.score <= 1.0:
            raise SceneValidationError(f"score must be in (0, 1], got {self.score}")
        if self.gt is not None and self.gt < 0:
            raise SceneValidationError(f"gt index must be >= 0, got {self.gt}")


@dataclass(frozen=True)
class LossConfig:
    """Threshold, balance weights, clamp, and reduction for the NMS loss."""

    nt: float = 0.5
    lambda_pull: float = 0.1
    lambda_push: float = 0.1
    iou_clamp_eps: float = 1e-6
    reduction: str = "mean"  # "mean": per-event mean, "sum": plain sum

    def __post_init__(self):
        if not 0.0 < self.nt < 1.0:
            raise SceneValidationError(f"nt must be in (0, 1), got {self.nt}")
        if self.lambda_pull < 0 or self.lambda_push < 0:
            raise SceneValidationError("loss weights must be non-negative")
        if not 0.0 < self.iou_clamp_eps <= 1e-3:
            raise SceneValidationError(
                f"iou_clamp_eps must be in (0, 1e-3], got {self.iou_clamp_eps}")
        if self.reduction not in ("mean", "sum"):
            raise SceneValidationError(f"unknown reduction {self.reduction!r}")


@dataclass(frozen=True)
class PullEvent:
    """A kept duplicate: fp_index survived NMS despite sharing max_index's gt."""

    fp_index: int
    max_index: int
    gt: int
    iou: float
    loss: float


@dataclass(frozen=True)
class PushEvent:
    """A cross-gt elimination: fn_index was suppressed by suppressor_index."""

    fn_index: int
    suppressor_index: int
    iou: float
    gt_pair_iou: float
    loss: float


@dataclass
class NmsLossResult:
    kept: list[int]
    pull_events: list[PullEvent] = field(default_factory=list)
    push_events: list[PushEvent] = field(default_factory=list)
    l_pull: float = 0.0
    l_push: float = 0.0
    l_nms: float = 0.0
    coord_grads: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    score_grads: np.ndarray = field(default_factory=lambda: np.zeros(0))


def pull_loss(iou_max_m: float, s_m: float, nt: float) -> float:
    """Eq. for unsuppressed duplicates: -ln(1 - nt + iou) * s, floored at 0.

    The floor only engages when iou > nt, which the sweep's own gating
    never produces; it is defensive.
    """
    return max(0.0, -math.log(1.0 - nt + iou_max_m)) * s_m


def push_loss(iou_i_m: float, s_i: float, eps: float = 1e-6) -> float:
    """Loss for wrongly eliminated detections: -ln(1 - iou) * s.

    The log argument is floored at eps so coincident boxes stay finite.
    The score enters as a constant weight only.
    """
    return -math.log(max(1.0 - iou_i_m, eps)) * s_i


def _check_scene(detections, gt_boxes):
    m = len(gt_boxes)
    for i, det in enumerate(detections):
        if det.gt is not None and det.gt >= m:
            raise SceneValidationError(
                f"detection {i} references gt {det.gt}, only {m} gt boxes")


def nms_loss_forward_backward(detections: Sequence[Detection],
                              gt_boxes: Sequence[BBox],
                              cfg: LossConfig) -> NmsLossResult:
    """Run the NMS sweep, collect pull/push events, and accumulate gradients.

    The kept list is identical to plain greedy NMS on the same boxes and
    scores; the loss bookkeeping never perturbs suppression. Event gating
    (which pairs fire) is a constant of the forward pass, so gradients are
    exact within the current smooth piece of the loss.
    """
    _check_scene(detections, gt_boxes)
    n = len(detections)
    result = NmsLossResult(kept=[], coord_grads=np.zeros((n, 4)),
                           score_grads=np.zeros(n))
    if n == 0:
        return result

    box_arr = np.array([d.box.as_array() for d in detections])
    scores = np.array([d.score for d in detections])
    alive = np.ones(n, dtype=bool)
    max_of_gt: dict[int, int] = {}

    while alive.any():
        masked = np.where(alive, scores, -np.inf)
        m = int(np.argmax(masked))
        g_m = detections[m].gt
        if g_m is not None:
            if g_m not in max_of_gt:
                max_of_gt[g_m] = m
            else:
                b_max = detections[max_of_gt[g_m]].box
                ov = iou(b_max, detections[m].box)
                result.pull_events.append(PullEvent(
                    fp_index=m, max_index=max_of_gt[g_m], gt=g_m,
                    iou=ov, loss=pull_loss(ov, detections[m].score, cfg.nt)))
        result.kept.append(m)
        alive[m] = False

        idx = np.flatnonzero(alive)
        if idx.size:
            overlaps = iou_many(detections[m].box, box_arr[idx])
            for i, ov in zip(idx[overlaps >= cfg.nt],
                             overlaps[overlaps >= cfg.nt]):
                i = int(i)
                g_i = detections[i].gt
                if g_m is not None and g_i is not None and g_m != g_i:
                    gt_ov = iou(gt_boxes[g_i], gt_boxes[g_m])
                    if ov > gt_ov:
                        result.push_events.append(PushEvent(
                            fn_index=i, suppressor_index=m, iou=float(ov),
                            gt_pair_iou=gt_ov,
                            loss=push_loss(float(ov), detections[i].score,
                                           cfg.iou_clamp_eps)))
                alive[i] = False

    _reduce_and_backprop(result, detections, cfg)
    return result


def _reduce_and_backprop(result: NmsLossResult,
                         detections: Sequence[Detection],
                         cfg: LossConfig) -> None:
    n_pull = len(result.pull_events)
    n_push = len(result.push_events)
    pull_scale = 1.0 / n_pull if (cfg.reduction == "mean" and n_pull) else 1.0
    push_scale = 1.0 / n_push if (cfg.reduction == "mean" and n_push) else 1.0

    result.l_pull = pull_scale * sum(e.loss for e in result.pull_events)
    result.l_push = push_scale * sum(e.loss for e in result.push_events)
    result.l_nms = cfg.lambda_pull * result.l_pull + cfg.lambda_push * result.l_push

    for e in result.pull_events:
        if e.iou > cfg.nt:  # defensive floor engaged: loss is constant 0
            continue
        det = detections[e.fp_index]
        g = iou_grad(detections[e.max_index].box, det.box)
        # d/d iou of -ln(1 - nt + iou) * s  ->  coords of the duplicate only
        coeff = cfg.lambda_pull * pull_scale * (-det.score / (1.0 - cfg.nt + e.iou))
        result.coord_grads[e.fp_index] += coeff * g.d_b
        result.score_grads[e.fp_index] += (
            cfg.lambda_pull * pull_scale * -math.log(1.0 - cfg.nt + e.iou))

    for e in result.push_events:
        det = detections[e.fn_index]
        g = iou_grad(detections[e.suppressor_index].box, det.box)
        # d/d iou of -ln(1 - iou) * s, clamped denominator; no score gradient
        coeff = (cfg.lambda_push * push_scale * det.score
                 / max(1.0 - e.iou, cfg.iou_clamp_eps))
        result.coord_grads[e.fn_index] += coeff * g.d_b
