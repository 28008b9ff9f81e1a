"""Exact quantum motion of a forced time-dependent harmonic oscillator via a
quadratic Lewis-Riesenfeld invariant, with an independent moment oracle."""

from .classical import CATALOG, ModelError, OscillatorModel, SolverConfig, catalog, solve_basis
from .expr import ExprError, ExprEvaluationError, ExprSyntaxError, TimeFunction, parse
from .forced import DriftState, beta0_hamiltonian_matching, drift, energy_offset
from .invariant import InvariantFrame, build_frame, theta
from .observables import MomentRecord, StateSpec, dispersions, ellipse, energy, moments
from .oracle import OracleConfig, evolve_moments, verify
from .pipeline import Evolution
from .propagator import bogoliubov, displacement_d, step

__version__ = "0.1.0"
