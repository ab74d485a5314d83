"""Toy end-to-end training through the NMS loss.

Every detection's four corners and score logit are free parameters updated
by plain gradient descent on smooth-L1 regression toward the assigned
ground truth plus the NMS loss. No network: the point is to show the
pull/push gradients fixing NMS-induced errors in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import BBox
from .loss import Detection, LossConfig, NmsLossResult, nms_loss_forward_backward
from .scenegen import Scene


class TrainingError(RuntimeError):
    """Raised when a scene has nothing to train on."""


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.5
    iters: int = 200
    lambda_reg: float = 1.0
    # logits are unitless while coords are pixels; an equal step size lets
    # the score collapse long before the box can move, so scores get a
    # smaller per-group step
    score_lr_scale: float = 0.01
    loss_cfg: LossConfig = LossConfig()
    enable_pull: bool = True
    enable_push: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


@dataclass
class TrainState:
    coords: np.ndarray           # (n, 4) box corner parameters
    logits: np.ndarray           # (n,) score logits; score = sigmoid(logit)
    iteration: int = 0
    history: list[dict] = field(default_factory=list)


_LOGIT_CLIP = 1e-4


def _logit(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, _LOGIT_CLIP, 1.0 - _LOGIT_CLIP)
    return np.log(s / (1.0 - s))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _clamp_boxes(coords: np.ndarray) -> np.ndarray:
    """Re-clamp degenerate boxes to a minimum 1px extent."""
    out = coords.copy()
    out[:, 2] = np.maximum(out[:, 2], out[:, 0] + 1.0)
    out[:, 3] = np.maximum(out[:, 3], out[:, 1] + 1.0)
    return out


def _smooth_l1(diff: np.ndarray):
    """Per-coordinate smooth L1 with 1px transition; returns (loss, grad)."""
    a = np.abs(diff)
    loss = np.where(a <= 1.0, 0.5 * diff * diff, a - 0.5)
    grad = np.where(a <= 1.0, diff, np.sign(diff))
    return loss, grad


def _effective_loss_cfg(cfg: TrainConfig) -> LossConfig:
    return replace(cfg.loss_cfg,
                   lambda_pull=cfg.loss_cfg.lambda_pull if cfg.enable_pull else 0.0,
                   lambda_push=cfg.loss_cfg.lambda_push if cfg.enable_push else 0.0)


def _decoded_detections(state: TrainState, gts: list) -> list[Detection]:
    boxes = _clamp_boxes(state.coords)
    scores = _sigmoid(state.logits)
    return [Detection(box=BBox.from_array(boxes[i]), score=float(scores[i]),
                      gt=gts[i])
            for i in range(len(gts))]


def train_scene(scene: Scene, cfg: TrainConfig) -> tuple[TrainState, Scene]:
    """Gradient-descend the scene's detections; returns state and the
    rewritten scene. Assignments are frozen from the input scene."""
    n = len(scene.detections)
    gts = [d.gt for d in scene.detections]
    assigned = [i for i, g in enumerate(gts) if g is not None]
    if not assigned:
        raise TrainingError(f"scene {scene.id} has no assigned detections")

    state = TrainState(
        coords=np.array([d.box.as_array() for d in scene.detections]),
        logits=_logit(np.array([d.score for d in scene.detections])))
    gt_targets = np.array([scene.gt[g].box.as_array() if g is not None
                           else np.zeros(4) for g in gts])
    assigned_mask = np.array([g is not None for g in gts])
    n_assigned = int(assigned_mask.sum())
    loss_cfg = _effective_loss_cfg(cfg)

    for it in range(cfg.iters):
        dets = _decoded_detections(state, gts)

        # regression toward the assigned gt box, mean over assigned detections
        diff = state.coords - gt_targets
        sl1, sl1_grad = _smooth_l1(diff)
        l_reg = float(sl1[assigned_mask].sum() / n_assigned)
        reg_grad = np.where(assigned_mask[:, None], sl1_grad / n_assigned, 0.0)

        res: NmsLossResult = nms_loss_forward_backward(
            dets, [g.box for g in scene.gt], loss_cfg)

        l_total = cfg.lambda_reg * l_reg + res.l_nms
        state.history.append({"iter": it, "l_reg": l_reg, "l_pull": res.l_pull,
                              "l_push": res.l_push, "l_total": l_total})

        scores = _sigmoid(state.logits)
        state.coords -= cfg.lr * (cfg.lambda_reg * reg_grad + res.coord_grads)
        score_lr = cfg.lr * cfg.score_lr_scale
        state.logits -= score_lr * res.score_grads * scores * (1.0 - scores)
        # background stand-in for a classification loss: decay the logit
        state.logits[~assigned_mask] *= 1.0 - score_lr * 0.01
        state.iteration = it + 1

    final = Scene(id=scene.id, image_w=scene.image_w, image_h=scene.image_h,
                  gt=list(scene.gt),
                  detections=_decoded_detections(state, gts))
    return state, final


def history_rows(scene_id: str, state: TrainState) -> list[tuple]:
    """Loss-curve rows (scene_id, iter, l_reg, l_pull, l_push, l_total)."""
    return [(scene_id, h["iter"], h["l_reg"], h["l_pull"], h["l_push"],
             h["l_total"]) for h in state.history]
