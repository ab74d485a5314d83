"""Axis-aligned boxes, IoU, and analytic IoU gradients.

Boxes are corner-parameterized (x1, y1, x2, y2) in continuous pixel
coordinates. All gradient formulas come from differentiating
IoU = I / (A + B - I) with the quotient rule; the min/max picking the
intersection edges is differentiated by the active-argument convention
(ties go to the first box).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidBoxError(ValueError):
    """Raised when a box violates x1 < x2, y1 < y2."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle with strictly positive width and height."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (np.isfinite(self.x1) and np.isfinite(self.y1)
                and np.isfinite(self.x2) and np.isfinite(self.y2)):
            raise InvalidBoxError(f"non-finite box coordinates: {self}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidBoxError(
                f"degenerate box: need x1 < x2 and y1 < y2, got {self}")

    def width(self) -> float:
        return self.x2 - self.x1

    def height(self) -> float:
        return self.y2 - self.y1

    def area(self) -> float:
        return self.width() * self.height()

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=float)

    @staticmethod
    def from_array(arr) -> "BBox":
        x1, y1, x2, y2 = (float(v) for v in arr)
        return BBox(x1, y1, x2, y2)

    def translated(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


@dataclass(frozen=True)
class IoUGrad:
    """Partials of iou(a, b) with respect to each box's 4 corners."""

    d_a: np.ndarray  # d iou / d (a.x1, a.y1, a.x2, a.y2)
    d_b: np.ndarray


def _intersection(a: BBox, b: BBox):
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    return iw, ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint, 1 iff identical."""
    iw, ih = _intersection(a, b)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    return inter / union


def iou_many(box: BBox, boxes: np.ndarray) -> np.ndarray:
    """IoU of one box against an (n, 4) array of boxes."""
    if boxes.size == 0:
        return np.zeros(0)
    iw = np.minimum(box.x2, boxes[:, 2]) - np.maximum(box.x1, boxes[:, 0])
    ih = np.minimum(box.y2, boxes[:, 3]) - np.maximum(box.y1, boxes[:, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    union = box.area() + areas - inter
    return inter / union


def iou_grad(a: BBox, b: BBox) -> IoUGrad:
    """Analytic partials of iou(a, b) w.r.t. both boxes' corners.

    Disjoint or merely touching boxes get all-zero gradients (one-sided
    derivative of the clamped intersection). At min/max argument ties the
    full subgradient is assigned to box a's coordinate.
    """
    iw, ih = _intersection(a, b)
    if iw <= 0.0 or ih <= 0.0:
        z = np.zeros(4)
        return IoUGrad(d_a=z, d_b=z.copy())

    inter = iw * ih
    area_a = a.area()
    area_b = b.area()
    union = area_a + area_b - inter

    # d inter / d corner. The active argument of each min/max owns the
    # derivative; ties go to box a.
    di_a = np.zeros(4)
    di_b = np.zeros(4)
    if a.x1 >= b.x1:
        di_a[0] = -ih
    else:
        di_b[0] = -ih
    if a.y1 >= b.y1:
        di_a[1] = -iw
    else:
        di_b[1] = -iw
    if a.x2 <= b.x2:
        di_a[2] = ih
    else:
        di_b[2] = ih
    if a.y2 <= b.y2:
        di_a[3] = iw
    else:
        di_b[3] = iw

    # d area / d corner
    da_a = np.array([-a.height(), -a.width(), a.height(), a.width()])
    da_b = np.array([-b.height(), -b.width(), b.height(), b.width()])

    # iou = I / U with U = A + B - I, so d iou = (dI * U - I * (dA - dI)) / U^2
    # (the other box's area does not depend on this box's corners).
    inv_u2 = 1.0 / (union * union)
    d_a = (di_a * union - inter * (da_a - di_a)) * inv_u2
    d_b = (di_b * union - inter * (da_b - di_b)) * inv_u2
    return IoUGrad(d_a=d_a, d_b=d_b)
