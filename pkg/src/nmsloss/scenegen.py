"""Seeded synthetic crowded-scene generator.

Stands in for real crowded pedestrian imagery: rows of person-aspect
ground-truth boxes with a controlled neighbor IoU, plus jittered duplicate
predictions and background noise boxes. Everything derives from the spec's
seed; identical specs serialize bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .assignment import AssignConfig, assign_gt
from .geometry import BBox, iou_many
from .loss import Detection

# width / height prior for pedestrian boxes
PERSON_ASPECT = 0.41


class SceneGenError(RuntimeError):
    """Raised when a spec cannot be realized within bounded retries."""


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    image_w: int = 640
    image_h: int = 480
    n_gt: int = 6
    crowd_iou: float = 0.4
    preds_per_gt: int = 4
    coord_noise_sigma: float = 8.0
    score_range: tuple[float, float] = (0.3, 0.95)
    n_background: int = 2
    gt_height_range: tuple[float, float] = (60.0, 110.0)
    visibility_model: str = "pairwise-occlusion"  # or "full"

    def __post_init__(self):
        if self.n_gt < 1:
            raise ValueError("n_gt must be >= 1")
        if self.coord_noise_sigma < 0:
            raise ValueError("coord_noise_sigma must be >= 0")
        low, high = self.score_range
        if not 0.0 < low < high <= 1.0:
            raise ValueError(f"score_range must satisfy 0 < low < high <= 1, got {self.score_range}")
        if not 0.0 <= self.crowd_iou <= 0.8:
            raise ValueError("crowd_iou must be in [0, 0.8]")
        if self.visibility_model not in ("full", "pairwise-occlusion"):
            raise ValueError(f"unknown visibility model {self.visibility_model!r}")


@dataclass(frozen=True)
class GtBox:
    box: BBox
    height: float
    visibility: float
    ignore: bool = False


@dataclass
class Scene:
    id: str
    image_w: int
    image_h: int
    gt: list[GtBox] = field(default_factory=list)
    detections: list[Detection] = field(default_factory=list)


def _place_gt_boxes(spec: SceneSpec, rng: np.random.Generator) -> list[BBox]:
    """Row-wise chains of same-height boxes at the target neighbor IoU.

    Two equal boxes of width w shifted horizontally by d have
    IoU = (w - d) / (w + d), so d = w (1 - t) / (1 + t) realizes IoU t.
    """
    margin = 2.0
    boxes: list[BBox] = []
    y = margin
    row_h = rng.uniform(*spec.gt_height_range)
    x = margin
    while len(boxes) < spec.n_gt:
        w = row_h * PERSON_ASPECT
        if spec.crowd_iou > 0:
            step = w * (1.0 - spec.crowd_iou) / (1.0 + spec.crowd_iou)
        else:
            step = w * 1.3  # strict gap: neighbor IoU exactly 0
        if x + w > spec.image_w - margin:
            y += row_h + 4.0
            row_h = rng.uniform(*spec.gt_height_range)
            x = margin
            continue
        if y + row_h > spec.image_h - margin:
            raise SceneGenError(
                f"cannot place {spec.n_gt} boxes of height ~{row_h:.0f} "
                f"in a {spec.image_w}x{spec.image_h} image")
        boxes.append(BBox(x, y, x + w, y + row_h))
        x += step
    return boxes


def _visibility(boxes: list[BBox], model: str) -> list[float]:
    if model == "full":
        return [1.0] * len(boxes)
    # fraction of each box not covered by later-placed (nearer) boxes,
    # sampled on a 64x64 grid per box
    out = []
    for i, b in enumerate(boxes):
        xs = np.linspace(b.x1, b.x2, 64, endpoint=False) + b.width() / 128
        ys = np.linspace(b.y1, b.y2, 64, endpoint=False) + b.height() / 128
        gx, gy = np.meshgrid(xs, ys)
        covered = np.zeros(gx.shape, dtype=bool)
        for o in boxes[i + 1:]:
            covered |= ((gx >= o.x1) & (gx < o.x2) & (gy >= o.y1) & (gy < o.y2))
        out.append(float(1.0 - covered.mean()))
    return out


def _jitter_box(box: BBox, sigma: float, spec: SceneSpec,
                rng: np.random.Generator) -> BBox:
    c = box.as_array() + rng.normal(0.0, sigma, size=4) if sigma > 0 else box.as_array()
    x1 = float(np.clip(c[0], 0.0, spec.image_w - 1.0))
    y1 = float(np.clip(c[1], 0.0, spec.image_h - 1.0))
    x2 = float(np.clip(c[2], x1 + 1.0, spec.image_w))
    y2 = float(np.clip(c[3], y1 + 1.0, spec.image_h))
    return BBox(x1, y1, x2, y2)


def _place_background(spec: SceneSpec, gt_arr: np.ndarray,
                      rng: np.random.Generator) -> list[BBox]:
    out: list[BBox] = []
    for _ in range(spec.n_background):
        for _attempt in range(200):
            h = rng.uniform(*spec.gt_height_range) * rng.uniform(0.5, 1.0)
            w = h * PERSON_ASPECT
            x = rng.uniform(0.0, max(1.0, spec.image_w - w))
            y = rng.uniform(0.0, max(1.0, spec.image_h - h))
            cand = BBox(x, y, x + w, y + h)
            if gt_arr.size == 0 or float(iou_many(cand, gt_arr).max()) < 0.1:
                out.append(cand)
                break
        else:
            raise SceneGenError("could not place a background box clear of all gt")
    return out


def generate_scene(spec: SceneSpec) -> Scene:
    """Build one scene deterministically from the spec's seed."""
    rng = np.random.default_rng(spec.seed)
    gt_boxes = _place_gt_boxes(spec, rng)
    vis = _visibility(gt_boxes, spec.visibility_model)
    gt = [GtBox(box=b, height=b.height(), visibility=v) for b, v in zip(gt_boxes, vis)]
    gt_arr = np.array([b.as_array() for b in gt_boxes])

    # jitter ramps up across a gt's copies; each gt's scores are drawn from
    # the full range and sorted against the jitter rank, so the
    # least-jittered copy always scores highest within its gt while the
    # cross-gt score ordering stays interleaved
    k = spec.preds_per_gt
    ramps = np.linspace(0.3, 1.0, k) if k > 1 else np.array([1.0])
    low, high = spec.score_range
    pred_boxes: list[BBox] = []
    scores: list[float] = []
    for gbox in gt_boxes:
        draws = np.sort(rng.uniform(low, high, size=k))[::-1]
        for j in range(k):
            pred_boxes.append(_jitter_box(gbox, spec.coord_noise_sigma * ramps[j],
                                          spec, rng))
            scores.append(float(draws[j]))

    bg = _place_background(spec, gt_arr, rng)
    band = (high - low) / max(k, 2)
    pred_boxes.extend(bg)
    scores.extend(float(rng.uniform(low, low + band * 0.5)) for _ in bg)

    assigned = assign_gt(pred_boxes, gt_boxes, AssignConfig())
    dets = [Detection(box=b, score=s, gt=g)
            for b, s, g in zip(pred_boxes, scores, assigned)]
    return Scene(id=f"scene-{spec.seed}", image_w=spec.image_w,
                 image_h=spec.image_h, gt=gt, detections=dets)


def mean_neighbor_iou(scene: Scene) -> float:
    """Mean IoU over consecutive overlapping gt pairs (0 when no pair overlaps)."""
    vals = []
    for a, b in zip(scene.gt, scene.gt[1:]):
        vals.append(float(iou_many(a.box, b.box.as_array()[None, :])[0]))
    overlapping = [v for v in vals if v > 0]
    if not vals:
        return 0.0
    return float(np.mean(overlapping)) if overlapping else 0.0


def scene_to_dict(scene: Scene) -> dict:
    return {
        "id": scene.id,
        "image": {"w": scene.image_w, "h": scene.image_h},
        "gt": [{"x1": g.box.x1, "y1": g.box.y1, "x2": g.box.x2, "y2": g.box.y2,
                "height": g.height, "visibility": g.visibility, "ignore": g.ignore}
               for g in scene.gt],
        "detections": [{"x1": d.box.x1, "y1": d.box.y1, "x2": d.box.x2,
                        "y2": d.box.y2, "score": d.score,
                        "gt": d.gt if d.gt is not None else None}
                       for d in scene.detections],
    }


def scene_from_dict(doc: dict) -> Scene:
    gt = [GtBox(box=BBox(g["x1"], g["y1"], g["x2"], g["y2"]),
                height=g["height"], visibility=g["visibility"],
                ignore=bool(g["ignore"]))
          for g in doc["gt"]]
    dets = [Detection(box=BBox(d["x1"], d["y1"], d["x2"], d["y2"]),
                      score=d["score"], gt=d["gt"])
            for d in doc["detections"]]
    return Scene(id=doc["id"], image_w=doc["image"]["w"], image_h=doc["image"]["h"],
                 gt=gt, detections=dets)


def scene_to_json(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene))


def scene_from_json(text: str) -> Scene:
    return scene_from_dict(json.loads(text))
