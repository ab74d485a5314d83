"""Flat-buffer boundary for the NMS loss kernel.

External frameworks hand over contiguous primitive arrays instead of scene
objects: detections as an (n, 6) row-major array of
``x1, y1, x2, y2, score, gt`` (gt == -1 for unassigned) and ground truths
as an (m, 4) array. Results come back as dense arrays. Run as a module
(``python -m nmsloss.ffi``) it speaks one JSON request per line on stdin,
one JSON response per line on stdout, which is the wire surface
out-of-process hosts bind against.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import numpy as np

from .geometry import BBox, InvalidBoxError
from .loss import (Detection, LossConfig, SceneValidationError,
                   nms_loss_forward_backward)


class BufferError_(ValueError):
    """Raised on malformed flat buffers; carries a stable error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class FfiResult:
    l_pull: float
    l_push: float
    l_nms: float
    kept: np.ndarray         # int array of kept original indices
    coord_grads: np.ndarray  # (n, 4)
    score_grads: np.ndarray  # (n,)


def _decode(det_buf: np.ndarray, gt_buf: np.ndarray):
    det_buf = np.asarray(det_buf, dtype=float)
    gt_buf = np.asarray(gt_buf, dtype=float)
    if det_buf.size == 0:
        det_buf = det_buf.reshape(0, 6)
    if gt_buf.size == 0:
        gt_buf = gt_buf.reshape(0, 4)
    if det_buf.ndim != 2 or det_buf.shape[1] != 6:
        raise BufferError_("bad-shape", f"detection buffer must be (n, 6), got {det_buf.shape}")
    if gt_buf.ndim != 2 or gt_buf.shape[1] != 4:
        raise BufferError_("bad-shape", f"gt buffer must be (m, 4), got {gt_buf.shape}")
    m = gt_buf.shape[0]
    dets = []
    for i, row in enumerate(det_buf):
        gt_idx = int(round(row[5]))
        if gt_idx < -1 or gt_idx >= m:
            raise BufferError_("gt-out-of-range",
                               f"detection {i}: gt index {gt_idx} not in [-1, {m})")
        try:
            dets.append(Detection(box=BBox(*row[:4]), score=float(row[4]),
                                  gt=None if gt_idx == -1 else gt_idx))
        except (InvalidBoxError, SceneValidationError) as exc:
            raise BufferError_("bad-detection", f"detection {i}: {exc}") from exc
    try:
        gt_boxes = [BBox(*row) for row in gt_buf]
    except InvalidBoxError as exc:
        raise BufferError_("bad-gt-box", str(exc)) from exc
    return dets, gt_boxes


def nms_loss(detections, gt_boxes, nt: float = 0.5, lambda_pull: float = 0.1,
             lambda_push: float = 0.1, reduction: str = "mean",
             iou_clamp_eps: float = 1e-6) -> FfiResult:
    """Flat-buffer entry point; numerically identical to the object API."""
    dets, gts = _decode(detections, gt_boxes)
    try:
        cfg = LossConfig(nt=nt, lambda_pull=lambda_pull, lambda_push=lambda_push,
                         reduction=reduction, iou_clamp_eps=iou_clamp_eps)
    except SceneValidationError as exc:
        raise BufferError_("bad-config", str(exc)) from exc
    res = nms_loss_forward_backward(dets, gts, cfg)
    return FfiResult(l_pull=res.l_pull, l_push=res.l_push, l_nms=res.l_nms,
                     kept=np.array(res.kept, dtype=int),
                     coord_grads=res.coord_grads, score_grads=res.score_grads)


def handle_request(doc: dict) -> dict:
    """One wire-format request -> response; errors become codes, not crashes."""
    try:
        res = nms_loss(np.array(doc.get("detections", []), dtype=float),
                       np.array(doc.get("gt", []), dtype=float),
                       nt=doc.get("nt", 0.5),
                       lambda_pull=doc.get("lambda_pull", 0.1),
                       lambda_push=doc.get("lambda_push", 0.1),
                       reduction=doc.get("reduction", "mean"),
                       iou_clamp_eps=doc.get("iou_clamp_eps", 1e-6))
    except BufferError_ as exc:
        return {"ok": False, "code": exc.code, "message": str(exc)}
    except Exception as exc:  # never crash the host over one request
        return {"ok": False, "code": "internal", "message": str(exc)}
    return {"ok": True, "l_pull": res.l_pull, "l_push": res.l_push,
            "l_nms": res.l_nms, "kept": res.kept.tolist(),
            "coord_grads": res.coord_grads.tolist(),
            "score_grads": res.score_grads.tolist()}


def serve(stdin=None, stdout=None) -> None:
    """Line-delimited JSON request/response loop."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            resp = {"ok": False, "code": "bad-json", "message": str(exc)}
        else:
            resp = handle_request(doc)
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()


if __name__ == "__main__":
    serve()
