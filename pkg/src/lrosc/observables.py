"""Means, dispersions, energies and phase-space ellipses.

States are eigenstates of the shifted ladder operator ``B``: number states
``|n>_B`` and coherent states ``B|alpha> = alpha|alpha>`` with
``alpha = |alpha| exp(-i delta)``.  For either kind the fluctuations are
those of ``|n>_b`` (``n = 0`` for coherent states) and the means follow
from ``<b(t)> = exp(-i Theta) (<B(t0)> - beta0) + Fcal(t)``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .classical import OscillatorModel
from .forced import DriftState
from .invariant import InvariantFrame
from .propagator import ladder_row

__all__ = [
    "StateSpec",
    "MomentRecord",
    "dispersions",
    "coherent_means",
    "number_means",
    "moments",
    "energy",
    "instantaneous_vacuum",
    "ellipse",
]


@dataclass(frozen=True)
class StateSpec:
    kind: str  # "number" or "coherent"
    n: int = 0
    magnitude: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("number", "coherent"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("number state index must be a nonnegative integer")
        if not (self.magnitude >= 0 and math.isfinite(self.magnitude)):
            raise ValueError("coherent amplitude magnitude must be finite and >= 0")
        if not math.isfinite(self.delta):
            raise ValueError("coherent phase must be finite")

    @classmethod
    def number(cls, n: int) -> "StateSpec":
        return cls("number", n=int(n))

    @classmethod
    def coherent(cls, magnitude: float, delta: float = 0.0) -> "StateSpec":
        return cls("coherent", magnitude=float(magnitude), delta=float(delta))

    @classmethod
    def coherent_from_alpha(cls, alpha: complex) -> "StateSpec":
        return cls.coherent(abs(alpha), -cmath.phase(alpha) if alpha != 0 else 0.0)

    @classmethod
    def with_initial_means(cls, frame: InvariantFrame, beta0: complex, q0: float, p0: float) -> "StateSpec":
        """Coherent state whose means at ``t0`` are ``(q0, p0)``."""
        kq, kp = ladder_row(frame, frame.t0)
        return cls.coherent_from_alpha(kq * q0 + kp * p0 + beta0)

    @property
    def alpha(self) -> complex:
        """Eigenvalue of ``B`` (zero for number states)."""
        if self.kind == "number":
            return 0j
        return self.magnitude * cmath.exp(-1j * self.delta)

    @property
    def level(self) -> int:
        return self.n if self.kind == "number" else 0

    def describe(self) -> str:
        if self.kind == "number":
            return f"number:{self.n}"
        return f"coherent:{self.magnitude!r},{self.delta!r}"

    @classmethod
    def parse(cls, text: str) -> "StateSpec":
        """``number:N`` or ``coherent:MAG,DELTA`` (``coherent:MAG`` means delta = 0)."""
        m = re.fullmatch(r"\s*(number|coherent)\s*:\s*(.+?)\s*", text)
        if not m:
            raise ValueError(f"state must look like 'number:N' or 'coherent:MAG,DELTA', got {text!r}")
        kind, body = m.groups()
        if kind == "number":
            try:
                return cls.number(int(body))
            except ValueError:
                raise ValueError(f"bad number-state index {body!r}") from None
        parts = [p.strip() for p in body.split(",")]
        if len(parts) > 2:
            raise ValueError(f"coherent state takes MAG[,DELTA], got {body!r}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"bad coherent-state parameters {body!r}") from None
        return cls.coherent(*values)


@dataclass(frozen=True)
class MomentRecord:
    t: float
    q_mean: float
    p_mean: float
    var_q: float
    var_p: float
    cov_qp: float
    energy: float = float("nan")

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.var_q, self.cov_qp], [self.cov_qp, self.var_p]])

    @property
    def uncertainty(self) -> float:
        """``var_q var_p - cov_qp^2`` (>= 1/4 for physical states)."""
        return self.var_q * self.var_p - self.cov_qp * self.cov_qp


def dispersions(frame: InvariantFrame, t: float, n: int = 0) -> tuple[float, float, float]:
    """``(var_q, var_p, cov_qp)`` of ``|n>_B`` (and of coherent states for ``n = 0``)."""
    gm, g0, _ = frame.g(t)
    w = frame.omega_I
    k = 2 * n + 1
    # vacuum values times (2n+1), so the level scaling is exact in floating point
    var_q = gm / (2.0 * w)
    var_p = (w / (2.0 * gm)) * (1.0 + (g0 / w) ** 2)
    cov_qp = -g0 / (2.0 * w)
    return k * var_q, k * var_p, k * cov_qp


def _means_from_b(frame: InvariantFrame, t: float, b_mean: complex) -> tuple[float, float]:
    gm, g0, _ = frame.g(t)
    w = frame.omega_I
    q = math.sqrt(gm / (2.0 * w)) * 2.0 * b_mean.real
    p = math.sqrt(w / (2.0 * gm)) * 2.0 * b_mean.imag - (g0 / gm) * q
    return q, p


def coherent_means(
    frame: InvariantFrame, drift_state: DriftState, t: float, alpha_mag: float, delta: float
) -> tuple[float, float]:
    """``(<q>, <p>)`` in the coherent state ``alpha = alpha_mag exp(-i delta)``."""
    return _means(frame, drift_state, t, alpha_mag * cmath.exp(-1j * delta))


def _means(frame, drift_state, t, alpha):
    th, _, F_cal = drift_state.evaluate(t)
    b_mean = cmath.exp(-1j * th) * (alpha - drift_state.beta0) + F_cal
    return _means_from_b(frame, t, b_mean)


def number_means(frame: InvariantFrame, drift_state: DriftState, t: float) -> tuple[float, float]:
    """``(<q>, <p>)`` in any ``|n>_B`` (where ``<B> = 0``)."""
    return _means(frame, drift_state, t, 0j)


def energy(model: OscillatorModel, m: MomentRecord, t: float | None = None) -> float:
    """``<H_T>`` of a Gaussian state from its first and second moments."""
    t = m.t if t is None else t
    M = model.M(t)
    return (
        (m.var_p + m.p_mean ** 2) / (2.0 * M)
        + 0.5 * M * model.omega2(t) * (m.var_q + m.q_mean ** 2)
        - M * model.F(t) * m.q_mean
    )


def moments(
    model: OscillatorModel, frame: InvariantFrame, drift_state: DriftState, state: StateSpec, t: float
) -> MomentRecord:
    q, p = _means(frame, drift_state, t, state.alpha)
    var_q, var_p, cov = dispersions(frame, t, state.level)
    m = MomentRecord(t, q, p, var_q, var_p, cov)
    return replace(m, energy=energy(model, m, t))


def instantaneous_vacuum(model: OscillatorModel, t: float) -> MomentRecord:
    """Moments of ``|0, t>_a``, the ground state of the force-free ``H(t)``."""
    w2 = model.omega2(t)
    if not w2 > 0:
        raise ValueError("instantaneous vacuum needs omega^2 > 0")
    M, w = model.M(t), math.sqrt(w2)
    m = MomentRecord(t, 0.0, 0.0, 1.0 / (2.0 * M * w), M * w / 2.0, 0.0)
    return replace(m, energy=energy(model, m, t))


def ellipse(m: MomentRecord) -> tuple[tuple[float, float], float]:
    """Principal semi-axes (major first) and tilt of the covariance ellipse.

    The tilt is the angle of the major axis from the q axis, in
    ``(-pi/2, pi/2]``.  Isotropic covariances report a tilt of 0.
    """
    a, b, c = m.var_q, m.cov_qp, m.var_p
    if not (a > 0 and c > 0 and a * c - b * b > 0):
        raise ValueError(f"covariance at t={m.t!r} is not positive definite")
    mean = 0.5 * (a + c)
    radius = math.hypot(0.5 * (a - c), b)
    lam_major, lam_minor = mean + radius, mean - radius
    if radius == 0.0:
        tilt = 0.0
    else:
        tilt = 0.5 * math.atan2(2.0 * b, a - c)
        if tilt <= -math.pi / 2:
            tilt += math.pi
    return (math.sqrt(lam_major), math.sqrt(lam_minor)), tilt
