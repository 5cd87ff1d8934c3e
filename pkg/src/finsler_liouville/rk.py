"""Dormand–Prince 5(4) with step-size control that lands exactly on
requested output abscissae (no dense-output interpolation error)."""
from __future__ import annotations

import numpy as np

from .errors import StiffnessError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_E = _B - _B_LOW


def dopri5(fun, x0: float, y0, outputs, *, rtol: float = 1e-9, atol: float | None = None,
           h0: float | None = None, max_steps: int = 1_000_000, min_step: float = 1e-14):
    """Integrate y' = fun(x, y) from x0 and return y at each of ``outputs``
    (increasing, all >= x0) together with the number of accepted steps.

    Raises :class:`StiffnessError` when the controller drives the step below
    ``min_step * max(1, |x|)``.
    """
    atol = rtol if atol is None else atol
    outputs = np.asarray(outputs, dtype=float)
    y = np.array(y0, dtype=float)
    x = float(x0)
    res = np.empty((outputs.size, y.size))
    k = np.empty((7, y.size))
    k[0] = fun(x, y)
    span = outputs[-1] - x if outputs.size else 0.0
    h = h0 if h0 is not None else max(1e-6 * max(span, 1.0), 1e-3 * span)
    steps = 0
    idx = 0
    while idx < outputs.size and outputs[idx] <= x:
        res[idx] = y
        idx += 1
    while idx < outputs.size:
        target = outputs[idx]
        hit = x + h >= target
        step = target - x if hit else h
        for i in range(1, 7):
            k[i] = fun(x + _C[i] * step, y + step * np.dot(_A[i], k[:i]))
        y_new = y + step * np.dot(_B, k)
        err_vec = step * np.dot(_E, k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            x = target if hit else x + step
            y = y_new
            k[0] = k[6]  # first-same-as-last
            steps += 1
            if hit:
                res[idx] = y
                idx += 1
            if steps > max_steps:
                raise StiffnessError(f"exceeded {max_steps} steps at x={x:.6g}")
        factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if err > 1.0:
            factor = min(factor, 0.9)
        h = step * factor
        if h < min_step * max(1.0, abs(x)):
            raise StiffnessError(f"step size underflow at x={x:.6g} (h={h:.3e})")
    return res, steps
