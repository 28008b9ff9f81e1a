import csv
import io
import math

import numpy as np
import pytest

from lrosc import Evolution, MomentRecord, StateSpec, catalog, evolve_moments, verify
from lrosc.forced import DriftState
from lrosc.oracle import OracleConfig, OracleError, compare, verify_evolution

from conftest import COHERENT_REF, ref_model

GRID = np.linspace(0.0, 40.0, 801)


def test_free_oscillator():
    model = catalog("constant", dict(m=1, omega=1), 0.0, 40.0)
    run = evolve_moments(model, MomentRecord(0.0, 5.0, 0.0, 0.5, 0.5, 0.0), GRID)
    assert np.max(np.abs(run.mean[:, 0] - 5 * np.cos(GRID))) < 1e-8
    assert np.max(np.abs(run.cov[:, 0, 0] - 0.5)) < 1e-8


def test_determinant_conserved(ref_forced):
    run = evolve_moments(ref_forced.model, ref_forced.moments(0.0), GRID)
    assert run.det_drift() < 1e-8


def test_refinement_is_converged(ref_forced):
    start = ref_forced.moments(0.0)
    base = evolve_moments(ref_forced.model, start, GRID)
    fine = evolve_moments(ref_forced.model, start, GRID, OracleConfig().tighter())
    # var_p reaches ~1e6 on this run, so changes are measured against max(1, |x|)
    for a, b in ((base.mean, fine.mean), (base.cov, fine.cov)):
        assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))) < 1e-8


def test_ref_forced_verifies(ref_forced):
    report = verify_evolution(ref_forced, GRID, 1e-6)
    assert report.passed, report.to_csv()


def test_unforced_verifies_tightly(ref_free):
    ev = Evolution.build(ref_free.model, COHERENT_REF, beta0="zero")
    report = verify_evolution(ev, GRID, 1e-6)
    assert report.passed
    assert all(row["max_rel_dev"] < 1e-8 for row in report.rows)
    flat = catalog("constant", dict(m=1.0, omega=2.0), 0.0, 40.0)
    report = verify(flat, StateSpec.coherent(1.5, 0.4), GRID, 1e-8, beta0="zero")
    assert report.passed


def test_corrupted_phase_is_caught(monkeypatch):
    ev = Evolution.build(ref_model("sin(t)"), COHERENT_REF)
    original = DriftState.evaluate

    def corrupted(self, t):
        th, beta, F = original(self, t)
        return (th + 1e-3 if t > self.model.t0 else th), beta, F

    monkeypatch.setattr(DriftState, "evaluate", corrupted)
    report = verify_evolution(ev, GRID, 1e-6)
    assert not report.passed
    assert report.deviation("q_mean") > 1e-3


def test_number_state_seed(pulsating):
    ev = Evolution.build(pulsating, StateSpec.number(2))
    assert verify_evolution(ev, GRID, 1e-6).passed


def test_report_csv(ref_forced):
    report = verify_evolution(ref_forced, GRID[:41], 1e-6)
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == ["quantity", "max_abs_dev", "t_at_max", "max_rel_dev", "tol", "status"]
    assert [r[0] for r in rows[1:]] == ["q_mean", "p_mean", "var_q", "var_p", "cov_qp", "energy"]
    assert all(r[5] == "pass" for r in rows[1:])


def test_compare_flags_failures():
    a = [MomentRecord(0.0, 1, 0, 1, 1, 0, 0), MomentRecord(1.0, 1, 0, 1, 1, 0, 0)]
    b = [MomentRecord(0.0, 1, 0, 1, 1, 0, 0), MomentRecord(1.0, 1.5, 0, 1, 1, 0, 0)]
    report = compare(a, b, 1e-3)
    assert not report.passed
    assert report.deviation("q_mean") == 0.5


def test_grid_and_covariance_validation(pulsating):
    good = MomentRecord(0.0, 0, 0, 1, 1, 0)
    with pytest.raises(ValueError):
        evolve_moments(pulsating, good, [0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        evolve_moments(pulsating, MomentRecord(0.0, 0, 0, 1, 1, 2), [0.0, 1.0])


def test_solver_failure_reported():
    model = catalog("constant", dict(m=1, omega=1), 0.0, 10.0).with_force("exp(t^3)")
    with pytest.raises((OracleError, Exception)):
        evolve_moments(model, MomentRecord(0.0, 0, 0, 1, 1, 0), [0.0, 10.0])


def test_oracle_independent_of_closed_form():
    import lrosc.oracle as oracle

    source = open(oracle.__file__, encoding="utf-8").read()
    for name in ("invariant", "forced", "propagator", "InvariantFrame", "DriftState"):
        assert f"import {name}" not in source and f".{name} import" not in source
