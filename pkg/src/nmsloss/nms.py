"""Classical greedy non-maximum suppression.

Loss-free NMS used at inference time and by the evaluator. Selects the
highest-scoring remaining detection, keeps it, and removes every remaining
detection whose IoU with it is >= the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import BBox, iou_many


class NmsInputError(ValueError):
    """Raised on malformed NMS inputs (length mismatch, bad threshold)."""


@dataclass(frozen=True)
class NmsInput:
    boxes: Sequence[BBox]
    scores: Sequence[float]
    nt: float

    def __post_init__(self):
        if len(self.boxes) != len(self.scores):
            raise NmsInputError(
                f"{len(self.boxes)} boxes but {len(self.scores)} scores")
        if not 0.0 < self.nt < 1.0:
            raise NmsInputError(f"threshold must be in (0, 1), got {self.nt}")


def nms_greedy(inp: NmsInput) -> list[int]:
    """Greedy NMS returning kept ORIGINAL indices in selection order.

    Score ties break toward the lowest original index. Suppression uses
    IoU >= nt (non-strict). Empty input yields an empty list.
    """
    n = len(inp.boxes)
    if n == 0:
        return []

    box_arr = np.array([b.as_array() for b in inp.boxes])
    scores = np.asarray(inp.scores, dtype=float)
    alive = np.ones(n, dtype=bool)
    kept: list[int] = []

    while alive.any():
        # argmax over alive entries; np.argmax already prefers the lowest index on ties
        masked = np.where(alive, scores, -np.inf)
        m = int(np.argmax(masked))
        kept.append(m)
        alive[m] = False
        idx = np.flatnonzero(alive)
        if idx.size:
            overlaps = iou_many(inp.boxes[m], box_arr[idx])
            alive[idx[overlaps >= inp.nt]] = False
    return kept
