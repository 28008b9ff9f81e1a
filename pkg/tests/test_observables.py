import math

import numpy as np
import pytest

from lrosc import Evolution, MomentRecord, StateSpec, build_frame, catalog, dispersions, ellipse, evolve_moments
from lrosc.observables import coherent_means, instantaneous_vacuum, number_means

from conftest import COHERENT_REF, ref_model

GRID = np.linspace(0.0, 40.0, 801)


@pytest.fixture(scope="module")
def frame(pulsating):
    return build_frame(pulsating.analytic_basis, pulsating)


def test_vacuum_var_q_at_origin(frame):
    assert dispersions(frame, 0.0, 0)[0] == 0.5


def test_pulsating_dispersion_formulas(frame, pulsating):
    for t in np.linspace(0, 40, 401):
        t = float(t)
        var_q, var_p, _ = dispersions(frame, t, 0)
        M = pulsating.M(t)
        s = 0.1 + 4 / 3 * math.cos(t / 3)
        assert abs(var_q * 2 * M - 1) < 1e-10
        assert var_p == pytest.approx(M / 2 * (1 + s * s), rel=1e-10)


@pytest.mark.parametrize("n", range(6))
def test_level_scaling_exact(frame, n):
    for t in (0.0, 7.0, 23.0):
        base = dispersions(frame, t, 0)
        level = dispersions(frame, t, n)
        assert level == tuple((2 * n + 1) * x for x in base)


def test_vacuum_means_vanish(pulsating):
    ev = Evolution.build(pulsating, StateSpec.coherent(0.0), beta0="zero")
    for t in (0.0, 10.0, 40.0):
        assert coherent_means(ev.frame, ev.drift, t, 0.0, 0.0) == (0.0, 0.0)
        assert number_means(ev.frame, ev.drift, t) == (0.0, 0.0)


def test_fig1_coherent_start(ref_free):
    m = ref_free.moments(0.0)
    assert m.q_mean == pytest.approx(5.0, rel=1e-15)
    # g0(0) = gamma + mu nu feeds the momentum mean: p = -(g0/g-) q
    assert m.p_mean == pytest.approx(-(0.1 + 4 / 3) * 5.0, rel=1e-14)


def test_initial_means_option(pulsating):
    ev = Evolution.build(pulsating, initial_means=(5.0, 0.0))
    m = ev.moments(0.0)
    assert m.q_mean == pytest.approx(5.0, abs=1e-14)
    assert abs(m.p_mean) < 1e-14
    assert ev.state.magnitude == pytest.approx(5 / math.sqrt(2) * math.hypot(1, 0.1 + 4 / 3), rel=1e-14)


def test_forced_and_free_variances_identical(ref_forced, ref_free):
    a = [ref_forced.moments(float(t)) for t in GRID]
    b = [ref_free.moments(float(t)) for t in GRID]
    assert max(abs(x.var_q - y.var_q) for x, y in zip(a, b)) < 1e-12
    assert max(abs(x.var_p - y.var_p) for x, y in zip(a, b)) < 1e-12
    assert max(abs(x.q_mean - y.q_mean) for x, y in zip(a, b)) > 1.0


def test_uncertainty_saturated(ref_forced):
    for t in GRID[::10]:
        m = ref_forced.moments(float(t))
        assert m.uncertainty == pytest.approx(0.25, rel=1e-10)


def test_number_state_uncertainty(pulsating):
    ev = Evolution.build(pulsating, StateSpec.number(3))
    m = ev.moments(12.0)
    assert m.uncertainty == pytest.approx(49 / 4, rel=1e-10)


def test_means_follow_classical_motion(ref_forced):
    model = ref_forced.model
    h = 1e-5
    for t in np.linspace(1, 39, 20):
        t = float(t)
        dq = (ref_forced.moments(t + h).q_mean - ref_forced.moments(t - h).q_mean) / (2 * h)
        m = ref_forced.moments(t)
        expected = m.p_mean / model.M(t)
        assert abs(dq - expected) <= 1e-5 * max(1.0, abs(expected))


def test_energy_unforced_ground_state():
    model = catalog("constant", dict(m=1.3, omega=0.7), 0.0, 5.0)
    ev = Evolution.build(model, StateSpec.number(0))
    assert ev.moments(0.0).energy == pytest.approx(0.35, rel=1e-14)
    assert instantaneous_vacuum(model, 0.0).energy == pytest.approx(0.35, rel=1e-14)


def test_energy_forced_ground_state(constant_forced):
    ev = Evolution.build(constant_forced, StateSpec.number(0), beta0="matched")
    e_b = ev.moments(0.0).energy
    e_a = instantaneous_vacuum(constant_forced, 0.0).energy
    assert abs(e_b) < 1e-10
    assert abs(e_a - e_b - 0.5) < 1e-10
    assert ev.energy_offset == pytest.approx(0.5, rel=1e-15)
    # stationary: |0>_B of the matched invariant is the displaced ground state
    for t in (3.0, 17.0):
        assert abs(ev.moments(t).energy) < 1e-9


def test_ellipse_examples():
    axes, tilt = ellipse(MomentRecord(0.0, 0, 0, 0.5, 0.5, 0.0))
    assert axes == (math.sqrt(0.5), math.sqrt(0.5)) and tilt == 0.0
    axes, tilt = ellipse(MomentRecord(0.0, 0, 0, 0.5, 2.0, 0.0))
    assert axes == (math.sqrt(2.0), math.sqrt(0.5)) and tilt == math.pi / 2
    axes, tilt = ellipse(MomentRecord(0.0, 0, 0, 2.0, 0.5, 0.0))
    assert tilt == 0.0
    _, tilt = ellipse(MomentRecord(0.0, 0, 0, 1.0, 1.0, 0.5))
    assert tilt == pytest.approx(math.pi / 4)


def test_ellipse_rejects_bad_covariance():
    with pytest.raises(ValueError):
        ellipse(MomentRecord(0.0, 0, 0, 1.0, 1.0, 1.0))


def test_ellipse_against_oracle(ref_forced):
    start = ref_forced.moments(0.0)
    run = evolve_moments(ref_forced.model, start, [0.0, 4.0])
    oracle_axes, oracle_tilt = ellipse(run.record(1))
    axes, tilt = ellipse(ref_forced.moments(4.0))
    assert max(abs(a - b) for a, b in zip(axes, oracle_axes)) < 1e-6
    assert abs(tilt - oracle_tilt) < 1e-6


@pytest.mark.parametrize(
    "text,expected",
    [
        ("number:3", StateSpec.number(3)),
        ("coherent:2.5", StateSpec.coherent(2.5, 0.0)),
        ("coherent: 1.5 , 0.25", StateSpec.coherent(1.5, 0.25)),
    ],
)
def test_state_parse(text, expected):
    assert StateSpec.parse(text) == expected


@pytest.mark.parametrize("text", ["number:-1", "number:1.5", "coherent:-1", "coherent:1,2,3", "squeezed:1", "coherent:nan"])
def test_state_parse_errors(text):
    with pytest.raises(ValueError):
        StateSpec.parse(text)


def test_alpha_convention():
    s = StateSpec.coherent(2.0, 0.3)
    assert s.alpha == pytest.approx(2.0 * complex(math.cos(0.3), -math.sin(0.3)))
    assert StateSpec.coherent_from_alpha(s.alpha).delta == pytest.approx(0.3)
