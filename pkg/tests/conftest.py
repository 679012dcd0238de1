import numpy as np
import pytest

from swicert.densities import Expression, SignalProfile
from swicert.family import SystemFamily, mu_table, synthesize_family
from swicert.signal import HFunction, TransitionGraph

A1 = [[-0.1, -0.2], [0.1, -0.4]]
A2 = [[0.0, 0.1], [-0.1, 0.0]]
A3 = [[0.1, 0.2], [0.4, 0.3]]
A4 = [[0.2, 0.1], [0.3, 0.0]]
P1_PAPER = np.array([[3.8333, -1.1667], [-1.1667, 1.8333]])
EDGES = [(1, 2), (1, 3), (1, 4), (2, 1), (2, 3), (2, 4), (3, 1), (3, 2), (4, 1), (4, 2)]


def example_profile():
    eps = 0.1
    share = 0.5 - 0.5 / (1 + eps)
    unstable = Expression(((share, 1.0, 0), (0.5, 0.5, 0), (-0.5, 1 / 9, 0)))
    return SignalProfile(
        HFunction.identity(),
        Expression(((1 / 3, 1.0, 0), (1.0, 0.5, 0))),
        {
            1: Expression(((1 / (1 + eps), 1.0, 0), (-1.0, 0.5, 0))),
            2: Expression(((1.0, 1 / 9, 0),)),
            3: unstable,
            4: unstable,
        },
        {e: 0.1 for e in EDGES},
    )


@pytest.fixture(scope="session")
def fam4():
    return SystemFamily.from_matrices([A1, A2, A3, A4])


@pytest.fixture(scope="session")
def graph4():
    return TransitionGraph.from_edges(EDGES)


@pytest.fixture(scope="session")
def pairs4(fam4):
    return synthesize_family(fam4)


@pytest.fixture(scope="session")
def mu4(pairs4, graph4):
    return mu_table(pairs4, graph4)


@pytest.fixture(scope="session")
def profile4():
    return example_profile()


def random_hurwitz(rng, d):
    a = rng.normal(size=(d, d))
    shift = np.max(np.linalg.eigvals(a).real)
    return a - (shift + rng.uniform(0.05, 1.0)) * np.eye(d)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    results = getattr(test_acceptance, "RESULTS", {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
