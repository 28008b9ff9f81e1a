"""Embedded Dormand-Prince 5(4) integrator with cubic Hermite dense output."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["SolverConfig", "SolverError", "DenseSolution", "dopri45"]


class SolverError(RuntimeError):
    """Integration failed (step underflow, step budget, bad coefficients)."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and limits for :func:`dopri45`.

    ``max_step`` bounds the step size; ``None`` leaves it to the
    error controller.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 1_000_000
    initial_step: float | None = None
    max_step: float | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")


# Dormand & Prince (1980) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class DenseSolution:
    """Accepted steps plus cubic Hermite interpolation between them."""

    def __init__(self, ts: list[float], ys: np.ndarray, dys: np.ndarray):
        self.ts = ts
        self.ys = ys
        self.dys = dys

    @property
    def t0(self) -> float:
        return self.ts[0]

    @property
    def t1(self) -> float:
        return self.ts[-1]

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """State and its derivative at ``t``."""
        ts = self.ts
        if t < ts[0] or t > ts[-1]:
            span = ts[-1] - ts[0]
            if not (ts[0] - 1e-12 * span <= t <= ts[-1] + 1e-12 * span):
                raise ValueError(f"t={t!r} outside solution range [{ts[0]!r}, {ts[-1]!r}]")
            t = min(max(t, ts[0]), ts[-1])
        k = bisect.bisect_right(ts, t) - 1
        if k >= len(ts) - 1:
            k = len(ts) - 2
        a, b = ts[k], ts[k + 1]
        h = b - a
        s = (t - a) / h
        y0, y1, d0, d1 = self.ys[k], self.ys[k + 1], self.dys[k], self.dys[k + 1]
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
        dh00 = (6 * s2 - 6 * s) / h
        dh10 = 3 * s2 - 4 * s + 1
        dh01 = (-6 * s2 + 6 * s) / h
        dh11 = 3 * s2 - 2 * s
        dy = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1
        return y, dy


def _initial_step(fun, t0, y0, f0, direction_span, cfg: SolverConfig) -> float:
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def dopri45(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0,
    cfg: SolverConfig = SolverConfig(),
) -> DenseSolution:
    """Integrate ``y' = fun(t, y)`` forward over ``t_span``.

    Returns a :class:`DenseSolution`.  Raises :class:`SolverError` on step
    underflow, exhausted step budget or a non-finite right-hand side.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    y = np.asarray(y0, dtype=float).copy()

    def rhs(t, yy):
        out = np.asarray(fun(t, yy), dtype=float)
        if not np.all(np.isfinite(out)):
            raise SolverError(f"non-finite right-hand side at t={t!r}")
        return out

    f = rhs(t0, y)
    span = t1 - t0
    h_max = min(cfg.max_step, span) if cfg.max_step is not None else span
    h = cfg.initial_step if cfg.initial_step is not None else _initial_step(rhs, t0, y, f, span, cfg)
    h = min(h, h_max)

    ts = [t0]
    ys = [y.copy()]
    dys = [f.copy()]
    t = t0
    k = np.empty((7, y.size))
    steps = 0
    while t < t1:
        if steps >= cfg.max_steps:
            raise SolverError(f"max_steps={cfg.max_steps} exceeded at t={t!r}")
        min_step = 16 * math.ulp(max(abs(t), 1.0))
        if h < min_step:
            raise SolverError(f"step size underflow at t={t!r}")
        last = False
        if t + h >= t1 or t1 - (t + h) < min_step:
            h = t1 - t
            last = True
        k[0] = f
        for i in range(1, 7):
            dy = np.dot(_A[i], k[:i])
            k[i] = rhs(t + _C[i] * h, y + h * dy)
        y_new = y + h * np.dot(_B5[:6], k[:6])
        err = h * np.dot(_E, k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm <= 1.0:
            t = t1 if last else t + h
            y = y_new
            f = k[6]  # FSAL
            ts.append(t)
            ys.append(y.copy())
            dys.append(f.copy())
            steps += 1
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
            h = min(h * factor, h_max)
        else:
            h *= max(0.2, 0.9 * err_norm ** -0.2)
    return DenseSolution(ts, np.array(ys), np.array(dys))
