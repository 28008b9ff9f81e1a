import math

import pytest

from lrosc import Evolution, StateSpec, catalog

REFERENCE = dict(m0=1, gamma=0.1, mu=4, nu="1/3", Omega=1)
COHERENT_REF = StateSpec.coherent(5 / math.sqrt(2), 0.0)


def ref_model(force=None, t1=40.0):
    m = catalog("pulsating", REFERENCE, 0.0, t1)
    return m if force is None else m.with_force(force)


@pytest.fixture(scope="session")
def pulsating():
    return ref_model()


@pytest.fixture(scope="session")
def pulsating_forced():
    return ref_model("sin(t)")


@pytest.fixture(scope="session")
def ref_forced():
    return Evolution.build(ref_model("sin(t)"), COHERENT_REF)


@pytest.fixture(scope="session")
def ref_free():
    return Evolution.build(ref_model(), COHERENT_REF)


@pytest.fixture(scope="session")
def constant_forced():
    return catalog("constant", dict(m=1, omega=1, F=1), 0.0, 40.0)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
