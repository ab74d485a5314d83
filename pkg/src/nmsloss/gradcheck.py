"""Central finite-difference gradients and analytic-vs-numeric comparison.

The independent oracle for every analytic gradient in this package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np


class GradCheckError(RuntimeError):
    """Raised when the probed function is non-finite near the probe point."""


@dataclass(frozen=True)
class FDConfig:
    h: float = 1e-6
    scheme: str = "central"
    rel_tol: float = 1e-5
    abs_tol: float = 1e-8
    tie_margin: float = 1e-3  # min separation of competing min/max arguments

    def __post_init__(self):
        if self.h <= 0 or self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("h and tolerances must be positive")
        if self.scheme != "central":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                cfg: FDConfig = FDConfig()) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = cfg.h
        fp = f(x + step)
        fm = f(x - step)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise GradCheckError(f"non-finite evaluation at coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * cfg.h)
    return grad


@dataclass
class GradReport:
    passed: bool
    worst_index: int
    worst_error: float
    n_checked: int

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed, "worst_index": self.worst_index,
                           "worst_error": self.worst_error,
                           "n_checked": self.n_checked})

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"gradcheck {status}: {self.n_checked} coords, worst "
                f"|err|={self.worst_error:.3e} at coordinate {self.worst_index}")


def check_grads(analytic, numeric, cfg: FDConfig = FDConfig()) -> GradReport:
    """Pass iff per-coordinate |a - n| <= abs_tol + rel_tol * max(|a|, |n|)."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if analytic.shape != numeric.shape:
        raise ValueError("analytic and numeric gradients differ in shape")
    err = np.abs(analytic - numeric)
    allowed = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(analytic), np.abs(numeric))
    # excess over allowance, so the worst coordinate is tolerance-relative
    excess = err - allowed
    worst = int(np.argmax(excess)) if excess.size else 0
    return GradReport(passed=bool((err <= allowed).all()),
                      worst_index=worst,
                      worst_error=float(err[worst]) if err.size else 0.0,
                      n_checked=int(err.size))
