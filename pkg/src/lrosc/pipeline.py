"""One closed-form evolution: model -> basis -> frame -> drift -> moments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .classical import OscillatorModel, SolverConfig, basis_for
from .forced import DriftState, beta0_hamiltonian_matching, drift, energy_offset
from .invariant import InvariantFrame, build_frame
from .observables import MomentRecord, StateSpec, ellipse, moments
from .propagator import PropagatorStep, step

__all__ = ["Beta0Policy", "Evolution", "resolve_beta0"]

# "matched", "zero", or an explicit complex value
Beta0Policy = Union[str, complex]


def resolve_beta0(policy: Beta0Policy, model: OscillatorModel, frame: InvariantFrame) -> complex:
    if isinstance(policy, str):
        if policy == "matched":
            return beta0_hamiltonian_matching(model, frame)
        if policy == "zero":
            return 0j
        try:
            return complex(policy.replace(" ", ""))
        except ValueError:
            raise ValueError(f"beta0 must be 'matched', 'zero' or a complex number, got {policy!r}") from None
    return complex(policy)


@dataclass(eq=False)
class Evolution:
    """Closed-form moments of ``state`` under ``model``.

    ``state`` may be ``None`` when only the propagator is needed.
    """

    model: OscillatorModel
    frame: InvariantFrame
    drift: DriftState
    state: StateSpec | None = None

    @classmethod
    def build(
        cls,
        model: OscillatorModel,
        state: StateSpec | None = None,
        constants: tuple[float | None, float | None, float | None] = (None, None, None),
        beta0: Beta0Policy = "matched",
        solver: SolverConfig = SolverConfig(),
        analytic_basis: bool = True,
        drift_rtol: float = 1e-10,
        initial_means: tuple[float, float] | None = None,
    ) -> "Evolution":
        """Assemble every stage.

        With ``initial_means`` the state becomes the coherent state whose
        means at ``t0`` equal the given ``(q, p)``.
        """
        basis = basis_for(model, solver, prefer_analytic=analytic_basis)
        frame = build_frame(basis, model, *constants)
        b0 = resolve_beta0(beta0, model, frame)
        if initial_means is not None:
            state = StateSpec.with_initial_means(frame, b0, *initial_means)
        return cls(model, frame, drift(model, frame, b0, rtol=drift_rtol), state)

    @property
    def beta0(self) -> complex:
        return self.drift.beta0

    @property
    def energy_offset(self) -> float:
        return energy_offset(self.frame, self.beta0)

    def moments(self, t: float) -> MomentRecord:
        if self.state is None:
            raise ValueError("no state attached to this evolution")
        return moments(self.model, self.frame, self.drift, self.state, t)

    def step(self, t: float) -> PropagatorStep:
        return step(self.frame, self.drift, t)

    def row(self, t: float) -> dict:
        """One output row (see the CLI for column meanings)."""
        m = self.moments(t)
        th, beta, _ = self.drift.evaluate(t)
        return {
            "t": t,
            "q_mean": m.q_mean,
            "p_mean": m.p_mean,
            "var_q": m.var_q,
            "var_p": m.var_p,
            "cov_qp": m.cov_qp,
            "theta": th,
            "re_beta": beta.real,
            "im_beta": beta.imag,
            "omega_I_sq": self.frame.omega_I_sq_at(t),
            "energy": m.energy,
        }

    def ellipse_row(self, t: float) -> dict:
        (major, minor), tilt = ellipse(self.moments(t))
        return {"t": t, "axis_major": major, "axis_minor": minor, "tilt": tilt}
