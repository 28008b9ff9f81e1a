"""Quadratic invariant of the unforced oscillator and its phase.

The invariant is ``I = g- p^2/2 + g0 (pq + qp)/2 + g+ q^2/2``.  Given a
classical basis ``f1, f2`` the coefficients are the quadratic family::

    g-  = c1 f1^2 + c2 f1 f2 + c3 f2^2
    g0  = -(M/2) dg-/dt
    g+  = M^2 (c1 f1'^2 + c2 f1' f2' + c3 f2'^2)

and ``g+ g- - g0^2 = W^2 (c1 c3 - c2^2/4) = omega_I^2`` is constant.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .classical import ClassicalBasis, OscillatorModel
from .quadrature import adaptive_simpson

__all__ = ["FrameError", "InvariantFrame", "PhaseAccumulator", "build_frame", "theta"]

EIGHTH_PHASE = math.pi / 8


class FrameError(ValueError):
    """Invariant constants or basis do not define a valid frame."""


class PhaseAccumulator:
    """Cumulative ``Theta(t) = int_{t0}^t omega_I / (M g-) dt'``.

    Nodes are laid out so that ``Theta`` grows by at most pi/8 per panel and
    no panel exceeds ``max_panel``.  The node table only ever grows, under a
    lock; readers see a consistent prefix.
    """

    def __init__(self, frame: "InvariantFrame", tol: float = 1e-11, max_panel: float = 0.5):
        self.frame = frame
        self.tol = tol
        self.max_panel = max_panel
        self.t0 = frame.t0
        self.t1 = frame.t1
        self.nodes = [self.t0]
        self.values = [0.0]
        self._lock = threading.Lock()

    def rate(self, t: float) -> float:
        g_minus = self.frame.g_minus(t)
        return self.frame.omega_I / (self.frame.M(t) * g_minus)

    def _next_width(self, a: float) -> float:
        h = min(self.max_panel, self.t1 - a, EIGHTH_PHASE / self.rate(a))
        for _ in range(8):
            r = max(self.rate(a + 0.5 * h), self.rate(a + h))
            limit = EIGHTH_PHASE / r
            if h <= limit * (1 + 1e-12):
                break
            h = 0.9 * limit
        return h

    def extend_to(self, t: float) -> int:
        """Grow the node table to cover ``t``; return the number of nodes."""
        if self.nodes[-1] >= t:
            return len(self.nodes)
        with self._lock:
            while self.nodes[-1] < t:
                a = self.nodes[-1]
                h = self._next_width(a)
                b = self.t1 if self.t1 - (a + h) < 1e-9 * h else a + h
                value = self.values[-1] + adaptive_simpson(self.rate, a, b, self.tol)
                # values first: a reader bounded by len(nodes) never sees a gap
                self.values.append(value)
                self.nodes.append(b)
            return len(self.nodes)

    def extend_all(self) -> None:
        self.extend_to(self.t1)

    def locate(self, t: float) -> int:
        """Index of the last node at or before ``t``."""
        n = self.extend_to(t)
        k = bisect.bisect_right(self.nodes, t, 0, n) - 1
        return max(k, 0)

    def __call__(self, t: float) -> float:
        t = self.frame.clamp(t)
        k = self.locate(t)
        a = self.nodes[k]
        if t == a:
            return self.values[k]
        return self.values[k] + adaptive_simpson(self.rate, a, t, self.tol)


@dataclass(eq=False)
class InvariantFrame:
    """Coefficients ``g-, g0, g+`` of the invariant and the constant ``omega_I``."""

    basis: ClassicalBasis
    model: OscillatorModel
    c1: float
    c2: float
    c3: float
    omega_I: float
    phase: PhaseAccumulator = field(init=False, repr=False)

    def __post_init__(self):
        self.phase = PhaseAccumulator(self)

    @property
    def t0(self) -> float:
        return self.model.t0

    @property
    def t1(self) -> float:
        return self.model.t1

    def M(self, t: float) -> float:
        return self.model.M(t)

    def clamp(self, t: float) -> float:
        slack = 1e-12 * max(1.0, abs(self.t1 - self.t0))
        if not (self.t0 - slack <= t <= self.t1 + slack):
            raise ValueError(f"t={t!r} outside model domain [{self.t0!r}, {self.t1!r}]")
        return min(max(t, self.t0), self.t1)

    def g_minus(self, t: float) -> float:
        f1, f2, _, _ = self.basis(t)
        return self.c1 * f1 * f1 + self.c2 * f1 * f2 + self.c3 * f2 * f2

    def g(self, t: float) -> tuple[float, float, float]:
        """``(g-, g0, g+)`` at ``t``."""
        f1, f2, d1, d2 = self.basis(t)
        c1, c2, c3 = self.c1, self.c2, self.c3
        m = self.M(t)
        g_minus = c1 * f1 * f1 + c2 * f1 * f2 + c3 * f2 * f2
        g_zero = -m * (c1 * f1 * d1 + 0.5 * c2 * (f1 * d2 + f2 * d1) + c3 * f2 * d2)
        g_plus = m * m * (c1 * d1 * d1 + c2 * d1 * d2 + c3 * d2 * d2)
        return g_minus, g_zero, g_plus

    def omega_I_sq_at(self, t: float) -> float:
        """``g+ g- - g0^2`` evaluated from the coefficients at ``t``."""
        g_minus, g_zero, g_plus = self.g(t)
        return g_plus * g_minus - g_zero * g_zero

    def derivatives(self, t: float) -> tuple[float, float, float]:
        """``(dg-/dt, dg0/dt, dg+/dt)`` from the first-order system."""
        g_minus, g_zero, g_plus = self.g(t)
        m = self.M(t)
        k = m * self.model.omega2(t)
        return -2.0 * g_zero / m, k * g_minus - g_plus / m, 2.0 * k * g_zero

    def theta(self, t: float) -> float:
        return self.phase(t)


def build_frame(
    basis: ClassicalBasis,
    model: OscillatorModel,
    c1: float | None = None,
    c2: float | None = None,
    c3: float | None = None,
    check_samples: int = 65,
) -> InvariantFrame:
    """Invariant frame for ``basis`` with quadratic-form constants ``c1, c2, c3``.

    Unspecified constants fall back to ``model.default_constants``.
    """
    d1, d2, d3 = model.default_constants
    c1 = d1 if c1 is None else float(c1)
    c2 = d2 if c2 is None else float(c2)
    c3 = d3 if c3 is None else float(c3)
    det = c1 * c3 - 0.25 * c2 * c2
    if not (det > 0 and c1 > 0):
        raise FrameError(f"constants (c1, c2, c3) = ({c1!r}, {c2!r}, {c3!r}) give non-positive omega_I^2")
    W = basis.wronskian
    if W == 0 or not math.isfinite(W):
        raise FrameError("basis solutions are not independent (zero Wronskian)")
    frame = InvariantFrame(basis, model, c1, c2, c3, abs(W) * math.sqrt(det))
    # A positive-definite form in (f1, f2) with W != 0 cannot vanish; this
    # guards against a broken basis rather than bad constants.
    for t in np.linspace(model.t0, model.t1, check_samples):
        if not frame.g_minus(float(t)) > 0:
            raise FrameError(f"g- vanishes at t={float(t)!r}")
    return frame


def theta(frame: InvariantFrame, t: float) -> float:
    return frame.theta(t)
