"""Max-IoU assignment of predictions to ground-truth boxes.

Deliberately many-to-one: duplicate predictions on the same ground truth
are exactly what the pull loss needs to see.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import BBox, iou_many


@dataclass(frozen=True)
class AssignConfig:
    match_iou: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.match_iou < 1.0:
            raise ValueError(f"match_iou must be in (0, 1), got {self.match_iou}")


def assign_gt(pred_boxes: Sequence[BBox], gt_boxes: Sequence[BBox],
              cfg: AssignConfig = AssignConfig()) -> list[Optional[int]]:
    """Assign each prediction the gt index with maximal IoU, if >= match_iou.

    Ties break toward the lowest gt index; predictions below the floor are
    unassigned (None). Order- and score-independent.
    """
    if not gt_boxes:
        return [None] * len(pred_boxes)
    gt_arr = np.array([b.as_array() for b in gt_boxes])
    out: list[Optional[int]] = []
    for box in pred_boxes:
        overlaps = iou_many(box, gt_arr)
        best = int(np.argmax(overlaps))
        out.append(best if overlaps[best] >= cfg.match_iou else None)
    return out
