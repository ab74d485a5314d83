"""Independent reference implementations used as test oracles.

Everything here is deliberately naive pure Python, transcribed directly
from the suppress-and-log procedure, with no shared code with the package
under test.
"""

import math


def iou_ref(a, b):
    """a, b are (x1, y1, x2, y2) tuples."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def nms_ref(boxes, scores, nt):
    """Direct transcription of greedy NMS on index lists."""
    remaining = list(range(len(boxes)))
    kept = []
    while remaining:
        m = max(remaining, key=lambda i: (scores[i], -i))
        kept.append(m)
        remaining.remove(m)
        for i in list(remaining):
            if iou_ref(boxes[m], boxes[i]) >= nt:
                remaining.remove(i)
    return kept


def nms_loss_events_ref(boxes, scores, gts, gt_boxes, nt):
    """Greedy sweep with pull/push bookkeeping; returns
    (kept, [(fp, max)], [(fn, suppressor)])."""
    remaining = list(range(len(boxes)))
    kept, pulls, pushes = [], [], []
    max_of_gt = {}
    while remaining:
        m = max(remaining, key=lambda i: (scores[i], -i))
        g_m = gts[m]
        if g_m is not None:
            if g_m not in max_of_gt:
                max_of_gt[g_m] = m
            else:
                pulls.append((m, max_of_gt[g_m]))
        kept.append(m)
        remaining.remove(m)
        for i in list(remaining):
            if iou_ref(boxes[m], boxes[i]) >= nt:
                g_i = gts[i]
                if (g_m is not None and g_i is not None and g_m != g_i
                        and iou_ref(boxes[i], boxes[m])
                        > iou_ref(gt_boxes[g_i], gt_boxes[g_m])):
                    pushes.append((i, m))
                remaining.remove(i)
    return kept, pulls, pushes


def mr_fppi_ref(scene_labels, total_gt, n_scenes, fppi_points=9,
                fppi_lo=1e-2, fppi_hi=1e0, floor=1e-10):
    """Exhaustive threshold sweep; scene_labels is a flat list of
    (score, label) with label in {"TP", "FP"}."""
    thresholds = sorted({s for s, _ in scene_labels}, reverse=True)
    curve = []
    for t in thresholds:
        tp = sum(1 for s, lab in scene_labels if s >= t and lab == "TP")
        fp = sum(1 for s, lab in scene_labels if s >= t and lab == "FP")
        curve.append((fp / n_scenes, (total_gt - tp) / total_gt))
    samples = []
    for k in range(fppi_points):
        ref = 10 ** (math.log10(fppi_lo)
                     + k * (math.log10(fppi_hi) - math.log10(fppi_lo))
                     / (fppi_points - 1))
        under = [(f, m) for f, m in curve if f <= ref]
        if under:
            best_f = max(f for f, _ in under)
            samples.append(min(m for f, m in under if f == best_f))
        elif curve:
            samples.append(max(m for _, m in curve))
        else:
            samples.append(1.0)
    return math.exp(sum(math.log(max(m, floor)) for m in samples) / len(samples))


def random_instance(rng, n_max=50, with_gt=False, n_gt=5):
    """A random NMS problem instance; boxes overlap enough to suppress."""
    n = int(rng.integers(1, n_max + 1))
    boxes, scores, gts = [], [], []
    for _ in range(n):
        x1 = float(rng.uniform(0, 60))
        y1 = float(rng.uniform(0, 60))
        w = float(rng.uniform(2, 30))
        h = float(rng.uniform(2, 30))
        boxes.append((x1, y1, x1 + w, y1 + h))
        scores.append(float(rng.uniform(0.05, 1.0)))
        g = int(rng.integers(-1, n_gt))
        gts.append(None if g < 0 else g)
    gt_boxes = []
    for _ in range(n_gt):
        x1 = float(rng.uniform(0, 60))
        y1 = float(rng.uniform(0, 60))
        gt_boxes.append((x1, y1, x1 + float(rng.uniform(5, 30)),
                         y1 + float(rng.uniform(5, 30))))
    if with_gt:
        return boxes, scores, gts, gt_boxes
    return boxes, scores
