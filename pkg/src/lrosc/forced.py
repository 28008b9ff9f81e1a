"""c-number drift of the forced invariant.

The shifted ladder operator is ``B = b + beta`` with::

    beta(t) = exp(-i Theta) [beta0 - i J(t)],
    J(t)    = int_{t0}^t sqrt(g-/(2 omega_I)) M F exp(i Theta) dt',

and the force-driven part is ``Fcal(t) = exp(-i Theta) beta0 - beta(t) =
i exp(-i Theta) J(t)``.
"""

from __future__ import annotations

import bisect
import cmath
import math
import threading

from .classical import OscillatorModel
from .invariant import InvariantFrame
from .quadrature import _ROUNDOFF, QuadratureError, adaptive_simpson

__all__ = ["DriftState", "beta0_hamiltonian_matching", "drift", "energy_offset"]


def beta0_hamiltonian_matching(model: OscillatorModel, frame: InvariantFrame) -> complex:
    """``beta0`` that turns the linear-in-q part of ``I_T(t0)`` into ``-M F q``.

    Together with a frame satisfying ``I(t0) = H(t0)`` (``g-(t0) = 1/M``,
    ``g0(t0) = 0``, ``g+(t0) = M omega^2``) this makes
    ``I_T(t0) = H_T(t0) + energy_offset``.
    """
    t0 = model.t0
    w = frame.omega_I
    value = -0.5 * (model.M(t0) / w) * math.sqrt(2.0 * frame.g_minus(t0) / w) * model.F(t0)
    return complex(value, 0.0)


def energy_offset(frame: InvariantFrame, beta0: complex) -> float:
    """``omega_I |beta0|^2``: the constant separating ``I_T(t0)`` from ``H_T(t0)``.

    The ground level of ``I_T`` is ``omega_I / 2``, so the ground energy of
    ``H_T(t0)`` in ``|0>_B`` is ``omega_I / 2 - energy_offset`` when the
    frame matches ``H(t0)``.
    """
    return frame.omega_I * abs(beta0) ** 2


class DriftState:
    """``beta(t)`` and ``Fcal(t)`` for a model, frame and ``beta0``.

    By default ``J`` is accumulated panel by panel on the phase grid of the
    frame with adaptive Simpson (tolerance ``rtol`` scaled by the panel's
    integrand size).  With ``panel_width`` set, uniform panels and a single
    Simpson step per panel are used instead; this exists for convergence
    studies.
    """

    def __init__(
        self,
        model: OscillatorModel,
        frame: InvariantFrame,
        beta0: complex = 0j,
        rtol: float = 1e-10,
        panel_width: float | None = None,
    ):
        if panel_width is not None and not panel_width > 0:
            raise ValueError("panel_width must be positive")
        self.model = model
        self.frame = frame
        self.beta0 = complex(beta0)
        self.rtol = rtol
        self.panel_width = panel_width
        self._amp = math.sqrt(1.0 / (2.0 * frame.omega_I))
        self._phase_tol = 1e-3 * frame.phase.tol
        self._nodes = [model.t0]
        self._J = [0j]
        self._lock = threading.Lock()

    # integrand ---------------------------------------------------------

    def weight(self, t: float) -> float:
        """``sqrt(g-/(2 omega_I)) M F`` at ``t``."""
        return self._amp * math.sqrt(self.frame.g_minus(t)) * self.model.M(t) * self.model.F(t)

    def integrand(self, t: float) -> complex:
        return self.weight(t) * cmath.exp(1j * self.frame.theta(t))

    def _sample(self, x: float, left: float, th_left: float) -> tuple[complex, float]:
        # Theta(x) from the nearest known sample, so the nested phase
        # quadrature only ever spans one bisection step
        th = th_left + adaptive_simpson(self.frame.phase.rate, left, x, self._phase_tol) if x != left else th_left
        return self.weight(x) * cmath.exp(1j * th), th

    def _integrate(self, a: float, b: float, th_a: float, th_b: float, fa: complex | None = None) -> complex:
        """``int_a^b`` of the integrand given ``Theta`` at both ends."""
        if fa is None:
            fa = self.weight(a) * cmath.exp(1j * th_a)
        fb = self.weight(b) * cmath.exp(1j * th_b)
        m = 0.5 * (a + b)
        fm, th_m = self._sample(m, a, th_a)
        if self.panel_width is not None:
            return (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        scale = max(abs(fa), abs(fm), abs(fb), 1e-300)
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        return self._recurse(a, m, b, fa, fm, fb, th_a, th_m, whole, self.rtol * (b - a) * scale, 48)

    def _recurse(self, a, m, b, fa, fm, fb, th_a, th_m, whole, tol, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, th_lm = self._sample(lm, a, th_a)
        frm, th_rm = self._sample(rm, m, th_m)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or abs(delta) <= _ROUNDOFF * (abs(left) + abs(right)):
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureError(f"drift quadrature did not converge on [{a!r}, {b!r}]")
        return self._recurse(a, lm, m, fa, flm, fm, th_a, th_lm, left, 0.5 * tol, depth - 1) + self._recurse(
            m, rm, b, fm, frm, fb, th_m, th_rm, right, 0.5 * tol, depth - 1
        )

    def _panel(self, a: float, b: float) -> complex:
        phase = self.frame.phase
        return self._integrate(a, b, phase(a), phase(b))

    # node table --------------------------------------------------------

    def _node_after(self, a: float) -> float:
        t1 = self.model.t1
        if self.panel_width is not None:
            k = round((a - self.model.t0) / self.panel_width) + 1
            b = self.model.t0 + k * self.panel_width
        else:
            # shares the phase grid: a is always one of its nodes
            phase = self.frame.phase
            n = phase.extend_to(math.nextafter(a, math.inf))
            b = phase.nodes[bisect.bisect_right(phase.nodes, a, 0, n)]
        return t1 if b > t1 or t1 - b < 1e-9 * (b - a) else b

    def _extend_to(self, t: float) -> int:
        if self._nodes[-1] >= t:
            return len(self._nodes)
        with self._lock:
            while self._nodes[-1] < t:
                a = self._nodes[-1]
                b = self._node_after(a)
                self._J.append(self._J[-1] + self._panel(a, b))
                self._nodes.append(b)
            return len(self._nodes)

    def J(self, t: float) -> complex:
        """``int_{t0}^t sqrt(g-/(2 omega_I)) M F exp(i Theta) dt'``."""
        t = self.frame.clamp(t)
        n = self._extend_to(t)
        k = max(bisect.bisect_right(self._nodes, t, 0, n) - 1, 0)
        a = self._nodes[k]
        if t == a:
            return self._J[k]
        return self._J[k] + self._integrate(a, t, self.frame.theta(a), self.frame.theta(t))

    # drift data --------------------------------------------------------

    def beta(self, t: float) -> complex:
        return cmath.exp(-1j * self.frame.theta(t)) * (self.beta0 - 1j * self.J(t))

    def F_cal(self, t: float) -> complex:
        """``exp(-i Theta) beta0 - beta``; vanishes at ``t0`` and for ``F = 0``."""
        return 1j * cmath.exp(-1j * self.frame.theta(t)) * self.J(t)

    def evaluate(self, t: float) -> tuple[float, complex, complex]:
        """``(Theta, beta, Fcal)`` at ``t`` sharing one phase and one ``J`` evaluation."""
        th = self.frame.theta(t)
        J = self.J(t)
        rot = cmath.exp(-1j * th)
        return th, rot * (self.beta0 - 1j * J), 1j * rot * J

    def rhs_residual(self, t: float, h: float = 1e-4) -> complex:
        """Residual of ``beta' + i omega_I/(M g-) beta + i M F sqrt(g-/(2 omega_I))``
        with a central difference for ``beta'``."""
        db = (self.beta(t + h) - self.beta(t - h)) / (2 * h)
        rate = self.frame.phase.rate(t)
        return db + 1j * rate * self.beta(t) + 1j * self.weight(t)


def drift(
    model: OscillatorModel,
    frame: InvariantFrame,
    beta0: complex = 0j,
    rtol: float = 1e-10,
    panel_width: float | None = None,
) -> DriftState:
    return DriftState(model, frame, beta0, rtol=rtol, panel_width=panel_width)
