"""Independent ground truth by direct numerical evolution of Gaussian moments.

Means follow ``dX/dt = S X + u`` and the covariance ``dSigma/dt = S Sigma
+ Sigma S^T`` with ``S = [[0, 1/M], [-M omega^2, 0]]`` and ``u = (0, M F)``.
Nothing here touches the invariant frame or the drift quadratures; only the
model's time functions are shared with the closed-form path.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .classical import OscillatorModel
from .observables import MomentRecord, energy

__all__ = ["OracleConfig", "OracleError", "OracleRun", "evolve_moments", "VerifyReport", "verify", "verify_evolution", "compare", "QUANTITIES"]

QUANTITIES = ("q_mean", "p_mean", "var_q", "var_p", "cov_qp", "energy")


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    """DOP853 settings.

    ``rtol`` at scipy's floor (100 machine epsilons) and a step cap keep the
    global error of the fast-growing moments of the reference pulsating setup near 1e-13 relative.
    """

    rtol: float = 2.3e-14
    atol: float = 1e-20
    max_step: float = 0.02
    method: str = "DOP853"

    def tighter(self, factor: float = 10.0) -> "OracleConfig":
        return OracleConfig(
            rtol=max(self.rtol / factor, 2.3e-14),
            atol=self.atol / factor,
            max_step=self.max_step / math.sqrt(factor),
            method=self.method,
        )


@dataclass
class OracleRun:
    t: np.ndarray
    mean: np.ndarray  # (N, 2)
    cov: np.ndarray  # (N, 2, 2)
    model: OscillatorModel = field(repr=False)

    @property
    def det(self) -> np.ndarray:
        return self.cov[:, 0, 0] * self.cov[:, 1, 1] - self.cov[:, 0, 1] * self.cov[:, 1, 0]

    def det_drift(self) -> float:
        d = self.det
        return float(np.max(np.abs(d - d[0])) / abs(d[0]))

    def record(self, i: int) -> MomentRecord:
        t = float(self.t[i])
        q, p = (float(x) for x in self.mean[i])
        m = MomentRecord(t, q, p, float(self.cov[i, 0, 0]), float(self.cov[i, 1, 1]), float(self.cov[i, 0, 1]))
        return replace(m, energy=energy(self.model, m, t))

    def records(self) -> list[MomentRecord]:
        return [self.record(i) for i in range(len(self.t))]


def evolve_moments(
    model: OscillatorModel,
    initial: MomentRecord,
    grid: Sequence[float],
    cfg: OracleConfig = OracleConfig(),
) -> OracleRun:
    """Evolve ``initial`` (taken at ``grid[0]``) and sample on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D sequence")
    if not (initial.var_q > 0 and initial.var_p > 0 and initial.uncertainty > 0):
        raise ValueError("initial covariance must be positive definite")
    M, w2, F = model.M, model.omega2, model.F

    def rhs(t, y):
        q, p, a, b, c = y  # a = var_q, b = cov_qp, c = var_p
        m = M(t)
        k = m * w2(t)
        return [p / m, -k * q + m * F(t), 2.0 * b / m, c / m - k * a, -2.0 * k * b]

    y0 = [initial.q_mean, initial.p_mean, initial.var_q, initial.cov_qp, initial.var_p]
    if grid.size == 1:
        ys = np.array(y0, dtype=float)[:, None]
    else:
        sol = solve_ivp(
            rhs,
            (grid[0], grid[-1]),
            y0,
            method=cfg.method,
            rtol=cfg.rtol,
            atol=cfg.atol,
            max_step=cfg.max_step,
            t_eval=grid,
        )
        if not sol.success:
            raise OracleError(f"oracle integration failed: {sol.message}")
        ys = sol.y
    cov = np.empty((grid.size, 2, 2))
    cov[:, 0, 0] = ys[2]
    cov[:, 0, 1] = cov[:, 1, 0] = ys[3]
    cov[:, 1, 1] = ys[4]
    return OracleRun(grid, np.stack([ys[0], ys[1]], axis=1), cov, model)


@dataclass
class VerifyReport:
    """Per-quantity deviations between closed form and oracle."""

    tol: float
    rows: list[dict]

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)

    def deviation(self, quantity: str) -> float:
        return next(r["max_abs_dev"] for r in self.rows if r["quantity"] == quantity)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "max_abs_dev", "t_at_max", "max_rel_dev", "tol", "status"])
        for r in self.rows:
            w.writerow(
                [
                    r["quantity"],
                    f"{r['max_abs_dev']:.17g}",
                    f"{r['t_at_max']:.17g}",
                    f"{r['max_rel_dev']:.17g}",
                    f"{self.tol:.17g}",
                    "pass" if r["pass"] else "fail",
                ]
            )
        return buf.getvalue()


def compare(closed: Sequence[MomentRecord], oracle: Sequence[MomentRecord], tol: float) -> VerifyReport:
    rows = []
    t = np.array([r.t for r in closed])
    for name in QUANTITIES:
        a = np.array([getattr(r, name) for r in closed])
        b = np.array([getattr(r, name) for r in oracle])
        dev = np.abs(a - b)
        i = int(np.argmax(dev))
        rel = dev / np.maximum(1.0, np.abs(b))
        rows.append(
            {
                "quantity": name,
                "max_abs_dev": float(dev[i]),
                "t_at_max": float(t[i]),
                "max_rel_dev": float(np.max(rel)),
                "pass": bool(dev[i] < tol),
            }
        )
    return VerifyReport(tol, rows)


def verify_evolution(evolution, grid: Sequence[float], tol: float = 1e-6, cfg: OracleConfig = OracleConfig()) -> VerifyReport:
    """Compare an :class:`~lrosc.pipeline.Evolution` against the oracle.

    The oracle is seeded with the closed-form moments at ``grid[0]`` only.
    """
    closed = [evolution.moments(float(t)) for t in grid]
    run = evolve_moments(evolution.model, closed[0], grid, cfg)
    return compare(closed, run.records(), tol)


def verify(
    model: OscillatorModel,
    state,
    grid: Sequence[float],
    tol: float = 1e-6,
    cfg: OracleConfig = OracleConfig(),
    **options,
) -> VerifyReport:
    """Build the closed-form evolution of ``state`` and check it against the oracle.

    ``options`` are passed to :meth:`lrosc.pipeline.Evolution.build`.
    """
    from .pipeline import Evolution

    return verify_evolution(Evolution.build(model, state, **options), grid, tol, cfg)
