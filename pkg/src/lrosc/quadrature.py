"""Simpson quadrature: adaptive (recursive, Richardson-corrected) and composite."""

from __future__ import annotations

import sys
from typing import Callable, TypeVar

__all__ = ["QuadratureError", "adaptive_simpson", "adaptive_simpson_from", "composite_simpson"]

T = TypeVar("T", float, complex)

_ROUNDOFF = 64 * sys.float_info.epsilon


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its depth limit without meeting tolerance."""


def adaptive_simpson(f: Callable[[float], T], a: float, b: float, tol: float, max_depth: int = 48) -> T:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Works for real or complex integrands.
    """
    if a == b:
        return 0.0 * f(a)
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    return adaptive_simpson_from(f, a, b, fa, fm, fb, tol, max_depth)


def adaptive_simpson_from(f, a, b, fa, fm, fb, tol, max_depth=48):
    """:func:`adaptive_simpson` with the three Simpson samples already known."""
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _recurse(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    # actual widths: a rounded midpoint does not bisect exactly at large |t|
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    # second test: difference already at rounding level of the panel sums
    if abs(delta) <= 15.0 * tol or abs(delta) <= _ROUNDOFF * (abs(left) + abs(right)):
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureError(f"adaptive Simpson did not converge on [{a!r}, {b!r}] (|error| ~ {abs(delta) / 15:.3g})")
    return _recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _recurse(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )


def composite_simpson(f: Callable[[float], T], a: float, b: float, panels: int) -> T:
    """Composite Simpson rule with ``panels`` equal panels (``2*panels+1`` samples)."""
    if panels < 1:
        raise ValueError("panels must be >= 1")
    h = (b - a) / panels
    total = 0.0 * f(a)
    for k in range(panels):
        x0 = a + k * h
        x1 = b if k == panels - 1 else a + (k + 1) * h
        total += (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1))
    return total
