"""Verify the analytic gradients against central finite differences.

Runs both seeded verification suites — IoU partials on random box pairs
and the full loss on random scenes — and shows a single hand-worked
example in between. Run:

    python3 demos/gradient_check.py
"""

import numpy as np

from nmsloss import BBox, fd_gradient, iou, iou_grad
from nmsloss.suites import geometry_gradient_suite, nms_loss_gradient_suite

# one pair by hand first: analytic vs numeric side by side
a, b = BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)
g = iou_grad(a, b)


def f(x):
    return iou(BBox.from_array(x[:4]), BBox.from_array(x[4:]))


numeric = fd_gradient(f, np.concatenate([a.as_array(), b.as_array()]))
print("analytic d_a:", np.round(g.d_a, 6))
print("numeric  d_a:", np.round(numeric[:4], 6))
print("analytic d_b:", np.round(g.d_b, 6))
print("numeric  d_b:", np.round(numeric[4:], 6))

# then the full suites; probe points on min/max ties or whose event set
# flips under the finite-difference step are rejected, never skipped
print()
print(geometry_gradient_suite(1000, seed=0))
print(nms_loss_gradient_suite(200, seed=0))
