"""Oscillator models and independent classical solutions.

The classical equation is ``d/dt (M f') + M omega^2 f = 0``.  It is
integrated as the first-order system in ``(f, pi)`` with ``pi = M f'``,
which makes the Wronskian ``W = M (f1 f2' - f2 f1') = f1 pi2 - f2 pi1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .expr import TimeFunction
from .rk import SolverConfig, SolverError, dopri45

__all__ = [
    "ModelError",
    "OscillatorModel",
    "ClassicalBasis",
    "NumericBasis",
    "AnalyticBasis",
    "solve_basis",
    "basis_for",
    "catalog",
    "CATALOG",
    "SolverConfig",
    "SolverError",
]


class ModelError(ValueError):
    """Invalid model definition or catalog request."""


@dataclass(frozen=True)
class OscillatorModel:
    """``H = p^2/(2M) + M omega^2 q^2 / 2 - M F q`` on ``[t0, t1]``.

    ``force`` is a force per unit mass.  ``omega_sq`` may go negative
    (inverted oscillator); only ``M > 0`` is required.  Catalog models carry
    an analytic classical basis and their preferred invariant constants.
    """

    mass: TimeFunction
    omega_sq: TimeFunction
    force: TimeFunction
    t0: float = 0.0
    t1: float = 1.0
    name: str = "expr"
    params: Mapping[str, float] = field(default_factory=dict)
    analytic_basis: "AnalyticBasis | None" = field(default=None, compare=False)
    default_constants: tuple[float, float, float] = (1.0, 0.0, 1.0)

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)):
            raise ModelError("t0 and t1 must be finite")
        if not self.t1 > self.t0:
            raise ModelError(f"empty time interval: t1={self.t1!r} must exceed t0={self.t0!r}")

    def M(self, t: float) -> float:
        m = self.mass(t)
        if not m > 0:
            raise ModelError(f"mass M(t) must be positive; M({t!r}) = {m!r}")
        return m

    def omega2(self, t: float) -> float:
        return self.omega_sq(t)

    def F(self, t: float) -> float:
        return self.force(t)

    def with_force(self, force: TimeFunction | str) -> "OscillatorModel":
        if isinstance(force, str):
            force = TimeFunction.from_expression(force)
        return replace(self, force=force)

    def with_interval(self, t0: float, t1: float) -> "OscillatorModel":
        basis = self.analytic_basis.rebased(t0) if self.analytic_basis is not None else None
        return replace(self, t0=t0, t1=t1, analytic_basis=basis)

    def check(self, samples: int = 257) -> None:
        """Spot-check positivity of M and finiteness of all three functions."""
        for t in np.linspace(self.t0, self.t1, samples):
            t = float(t)
            self.M(t)
            self.omega2(t)
            self.F(t)


class ClassicalBasis:
    """Two solutions ``f1, f2`` with derivatives and Wronskian ``W``.

    ``__call__`` returns ``(f1, f2, df1, df2)`` at ``t``.
    """

    wronskian: float
    t0: float
    t1: float

    def __call__(self, t: float) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def wronskian_at(self, t: float, M: Callable[[float], float]) -> float:
        f1, f2, d1, d2 = self(t)
        return M(t) * (f1 * d2 - f2 * d1)


class NumericBasis(ClassicalBasis):
    """Basis from :func:`dopri45` with ``f1(t0)=1, f1'=0, f2=0, f2'=1/M(t0)``."""

    def __init__(self, model: OscillatorModel, solution):
        self.model = model
        self.solution = solution
        self.t0 = solution.t0
        self.t1 = solution.t1
        self.wronskian = 1.0

    def __call__(self, t):
        y, _ = self.solution(t)
        m = self.model.M(t)
        return float(y[0]), float(y[2]), float(y[1]) / m, float(y[3]) / m

    def node_wronskians(self) -> np.ndarray:
        ys = self.solution.ys
        return ys[:, 0] * ys[:, 3] - ys[:, 2] * ys[:, 1]


class AnalyticBasis(ClassicalBasis):
    """Closed-form basis supplied by a catalog model."""

    def __init__(
        self,
        evaluate: Callable[[float, float], tuple[float, float, float, float]],
        wronskian: float,
        t0: float,
        label: str,
    ):
        self._evaluate = evaluate
        self.wronskian = wronskian
        self.t0 = t0
        self.t1 = math.inf
        self.label = label

    def __call__(self, t):
        return self._evaluate(t, self.t0)

    def rebased(self, t0: float) -> "AnalyticBasis":
        return AnalyticBasis(self._evaluate, self.wronskian, t0, self.label)

    def __repr__(self):
        return f"AnalyticBasis({self.label!r}, t0={self.t0!r})"


def solve_basis(model: OscillatorModel, cfg: SolverConfig = SolverConfig()) -> NumericBasis:
    """Integrate the classical equation numerically on ``[model.t0, model.t1]``."""
    def rhs(t, y):
        m = model.M(t)
        k = m * model.omega2(t)
        return np.array([y[1] / m, -k * y[0], y[3] / m, -k * y[2]])

    # state (f1, pi1, f2, pi2); pi2(t0) = 1 <=> f2'(t0) = 1/M(t0), so W = 1
    try:
        sol = dopri45(rhs, (model.t0, model.t1), [1.0, 0.0, 0.0, 1.0], cfg)
    except SolverError as exc:
        raise SolverError(f"classical basis for {model.name!r}: {exc}") from None
    return NumericBasis(model, sol)


def basis_for(model: OscillatorModel, cfg: SolverConfig = SolverConfig(), prefer_analytic: bool = True):
    """The model's analytic basis if it has one, else a numeric solve."""
    if prefer_analytic and model.analytic_basis is not None:
        return model.analytic_basis
    return solve_basis(model, cfg)


# Catalog -----------------------------------------------------------------


def _number(name: str, value) -> float:
    if isinstance(value, str):
        try:
            value = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ModelError(f"parameter {name}: cannot parse {value!r} as a number") from None
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ModelError(f"parameter {name}: not a number: {value!r}") from None
    if not math.isfinite(value):
        raise ModelError(f"parameter {name} must be finite")
    return value


def _constant_model(p: dict, t0: float, t1: float) -> OscillatorModel:
    m, w, F = p["m"], p["omega"], p["F"]
    if not m > 0:
        raise ModelError("parameter m must be positive")
    if not w > 0:
        raise ModelError("parameter omega must be positive")

    def evaluate(t, t0_):
        x = w * (t - t0_)
        c, s = math.cos(x), math.sin(x)
        return c, s / (m * w), -w * s, c / m

    basis = AnalyticBasis(evaluate, 1.0, t0, "constant")
    return OscillatorModel(
        mass=TimeFunction.from_catalog("constant", value=m),
        omega_sq=TimeFunction.from_catalog("constant", value=w * w),
        force=TimeFunction.from_catalog("constant", value=F),
        t0=t0,
        t1=t1,
        name="constant",
        params=dict(p),
        analytic_basis=basis,
        # stationary frame: g- = 1/m, g0 = 0, g+ = m omega^2
        default_constants=(1.0 / m, 0.0, m * w * w),
    )


def _pulsating_model(p: dict, t0: float, t1: float) -> OscillatorModel:
    m0, gamma, mu, nu, Omega = p["m0"], p["gamma"], p["mu"], p["nu"], p["Omega"]
    if not m0 > 0:
        raise ModelError("parameter m0 must be positive")
    if not Omega > 0:
        raise ModelError("parameter Omega must be positive")
    mass = TimeFunction.from_catalog("pulsating-mass", m0=m0, gamma=gamma, mu=mu, nu=nu)

    def evaluate(t, t0_):
        # real and imaginary parts of exp(i Omega (t - t0)) / sqrt(M)
        rm = 1.0 / math.sqrt(m0 * math.exp(2.0 * (gamma * t + mu * math.sin(nu * t))))
        s = gamma + mu * nu * math.cos(nu * t)
        x = Omega * (t - t0_)
        c, sn = math.cos(x), math.sin(x)
        return c * rm, sn * rm, (-Omega * sn - s * c) * rm, (Omega * c - s * sn) * rm

    basis = AnalyticBasis(evaluate, Omega, t0, "pulsating")
    return OscillatorModel(
        mass=mass,
        omega_sq=TimeFunction.from_catalog("pulsating-omega-sq", Omega=Omega, gamma=gamma, mu=mu, nu=nu),
        force=TimeFunction.constant(0.0),
        t0=t0,
        t1=t1,
        name="pulsating",
        params=dict(p),
        analytic_basis=basis,
    )


# name -> (builder, required params, defaults, description)
CATALOG: dict[str, tuple[Callable, tuple[str, ...], dict, str]] = {
    "constant": (
        _constant_model,
        ("m", "omega", "F"),
        {"F": 0.0},
        "constant mass m, frequency omega and force F",
    ),
    "pulsating": (
        _pulsating_model,
        ("m0", "gamma", "mu", "nu", "Omega"),
        {},
        "M = m0 exp(2(gamma t + mu sin nu t)), omega^2 = Omega^2 + (sqrt M)''/sqrt M",
    ),
}


def catalog(name: str, params: Mapping[str, object], t0: float = 0.0, t1: float = 1.0) -> OscillatorModel:
    """Build a named model.  Values may be numbers or strings such as ``"1/3"``."""
    try:
        builder, required, defaults, _ = CATALOG[name]
    except KeyError:
        raise ModelError(f"unknown catalog model {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    unknown = set(params) - set(required)
    if unknown:
        raise ModelError(f"model {name!r} does not take parameter(s): {', '.join(sorted(unknown))}")
    values = dict(defaults)
    values.update(params)
    missing = [k for k in required if k not in values]
    if missing:
        raise ModelError(f"model {name!r} missing parameter(s): {', '.join(missing)}")
    numeric = {k: _number(k, values[k]) for k in required}
    return builder(numeric, float(t0), float(t1))
