"""Exact Heisenberg motion as an affine-symplectic map.

``(q(t), p(t)) = A(t) (q(t0), p(t0)) + c(t)``.  ``A`` depends only on the
invariant frame and the phase; the force enters only through ``c`` via
``Fcal``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .classical import OscillatorModel
from .forced import DriftState
from .invariant import InvariantFrame

__all__ = [
    "PropagatorStep",
    "BogoliubovPair",
    "LadderMap",
    "step",
    "bogoliubov",
    "ladder_map",
    "displacement_d",
    "ladder_row",
]


@dataclass(frozen=True)
class PropagatorStep:
    t: float
    A: np.ndarray  # 2x2, rows (q, p), columns (q(t0), p(t0))
    c: np.ndarray  # force-induced offset (c_q, c_p)

    def apply(self, q0: float, p0: float) -> tuple[float, float]:
        q, p = self.A @ np.array([q0, p0]) + self.c
        return float(q), float(p)

    @property
    def det(self) -> float:
        return float(self.A[0, 0] * self.A[1, 1] - self.A[0, 1] * self.A[1, 0])

    def then(self, later: "PropagatorStep") -> "PropagatorStep":
        """Compose with a step that starts where this one ends."""
        return PropagatorStep(later.t, later.A @ self.A, later.A @ self.c + later.c)


def _offset(g_minus: float, g_zero: float, omega_I: float, F_cal: complex) -> np.ndarray:
    # q: sqrt(g-/2w)(F + F*);  p: -i sqrt(w/2g-)[(1 - i g0/w) F - (1 + i g0/w) F*]
    re, im = F_cal.real, F_cal.imag
    c_q = math.sqrt(g_minus / (2.0 * omega_I)) * 2.0 * re
    c_p = math.sqrt(omega_I / (2.0 * g_minus)) * (2.0 * im - 2.0 * (g_zero / omega_I) * re)
    return np.array([c_q, c_p])


def matrix(frame: InvariantFrame, t: float, theta: float | None = None) -> np.ndarray:
    """The force-independent part ``A(t)``."""
    w = frame.omega_I
    gm0, g00, _ = frame.g(frame.t0)
    gm, g0, _ = frame.g(t)
    th = frame.theta(t) if theta is None else theta
    c, s = math.cos(th), math.sin(th)
    return np.array(
        [
            [math.sqrt(gm / gm0) * (c + (g00 / w) * s), math.sqrt(gm * gm0) * s / w],
            [
                ((g00 - g0) * c - (w + g00 * g0 / w) * s) / math.sqrt(gm * gm0),
                math.sqrt(gm0 / gm) * (c - (g0 / w) * s),
            ],
        ]
    )


def step(frame: InvariantFrame, drift_state: DriftState, t: float) -> PropagatorStep:
    th, _, F_cal = drift_state.evaluate(t)
    gm, g0, _ = frame.g(t)
    return PropagatorStep(t, matrix(frame, t, th), _offset(gm, g0, frame.omega_I, F_cal))


@dataclass(frozen=True)
class BogoliubovPair:
    """``B = v1 a + v2 a^dagger + beta`` with ``a`` the instantaneous ladder operator."""

    t: float
    v1: complex
    v2: complex

    @property
    def norm(self) -> float:
        """``|v1|^2 - |v2|^2``; unity for a canonical transformation."""
        return abs(self.v1) ** 2 - abs(self.v2) ** 2

    @property
    def squeeze(self) -> float:
        """Squeeze magnitude ``r = arccosh |v1|``."""
        return math.acosh(max(abs(self.v1), 1.0))


def bogoliubov(frame: InvariantFrame, model: OscillatorModel, t: float) -> BogoliubovPair:
    w2 = model.omega2(t)
    if not w2 > 0:
        raise ValueError(f"instantaneous frequency is not positive at t={t!r} (omega^2 = {w2!r})")
    omega = math.sqrt(w2)
    gm, g0, _ = frame.g(t)
    w = frame.omega_I
    x = math.sqrt(model.M(t) * gm * omega / w)
    tail = (1.0 / x) * complex(1.0, g0 / w)
    return BogoliubovPair(t, 0.5 * (x + tail), 0.5 * (-x + tail))


def ladder_row(frame: InvariantFrame, t: float) -> tuple[complex, complex]:
    """Coefficients ``(kq, kp)`` with ``b(t) = kq q + kp p``."""
    gm, g0, _ = frame.g(t)
    w = frame.omega_I
    kq = complex(math.sqrt(w / (2.0 * gm)), g0 / math.sqrt(2.0 * w * gm))
    kp = complex(0.0, math.sqrt(gm / (2.0 * w)))
    return kq, kp


@dataclass(frozen=True)
class LadderMap:
    """``U^dagger B(t0) U = u1 e^{-i Theta} B(t0) - u2* e^{i Theta} B^dagger(t0) + d``."""

    t: float
    theta: float
    u1: complex
    u2: complex
    d: complex

    def apply(self, B0: complex) -> complex:
        """Image of a c-number ``<B(t0)>``."""
        return (
            self.u1 * cmath.exp(-1j * self.theta) * B0
            - self.u2.conjugate() * cmath.exp(1j * self.theta) * B0.conjugate()
            + self.d
        )


def ladder_map(frame: InvariantFrame, drift_state: DriftState, t: float) -> LadderMap:
    """Recover ``u1, u2`` and ``d`` from the propagator step.

    ``b(t0) = kappa . (q, p)``; substituting the Heisenberg motion and
    rewriting ``(q, p)`` in ``b(t0), b^dagger(t0)`` gives the linear
    coefficients, and ``b(t0) = B(t0) - beta0`` moves the constant into ``d``.
    """
    st = step(frame, drift_state, t)
    th = frame.theta(t)
    gm0, g00, _ = frame.g(frame.t0)
    w = frame.omega_I
    kappa = np.array(ladder_row(frame, frame.t0))
    s = math.sqrt(gm0 / (2.0 * w))
    # columns: (q, p) per unit b(t0) and per unit b^dagger(t0)
    to_qp = np.array(
        [
            [s, s],
            [-1j / (2.0 * s) - (g00 / gm0) * s, 1j / (2.0 * s) - (g00 / gm0) * s],
        ]
    )
    coef_b, coef_bd = kappa @ st.A @ to_qp
    beta0 = drift_state.beta0
    d = complex(kappa @ st.c) + beta0 - coef_b * beta0 - coef_bd * beta0.conjugate()
    u1 = coef_b * cmath.exp(1j * th)
    u2 = -(coef_bd * cmath.exp(-1j * th)).conjugate()
    return LadderMap(t, th, complex(u1), complex(u2), complex(d))


def displacement_d(frame: InvariantFrame, drift_state: DriftState, t: float) -> complex:
    return ladder_map(frame, drift_state, t).d
