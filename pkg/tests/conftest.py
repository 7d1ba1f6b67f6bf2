import random
from fractions import Fraction

import pytest
from hypothesis import settings

from graphmcp.casestudy import data_path
from graphmcp.io import load_graph, load_pvalues
from graphmcp.sim import random_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# acceptance verdicts, printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")


@pytest.fixture
def acceptance():
    def record(n, ok, detail):
        ACCEPTANCE[n] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")
    return record


@pytest.fixture(scope="session")
def diabetes():
    return load_graph(data_path("diabetes.graph"))


@pytest.fixture(scope="session")
def atmosphere():
    g = load_graph(data_path("atmosphere.graph"))
    return g, load_pvalues(data_path("atmosphere.pvals"), g)


@pytest.fixture(scope="session")
def pd_graphs():
    g3 = load_graph(data_path("pd.graph"))
    g15 = load_graph(data_path("pd15.graph"))
    return g3, g15, load_pvalues(data_path("pd.pvals"), g3)


DIABETES_P = [Fraction("0.01"), Fraction("0.03"), Fraction("0.02"), Fraction("0.024")]
DIABETES_P_FDP = [Fraction("0.01"), Fraction("0.015"), Fraction("0.02"), Fraction("0.024")]

STYLES = ("random", "zero", "deficient", "holm")


def random_instance(seed, max_m=6):
    """A random graph together with random rational p-values."""
    rng = random.Random(seed)
    m = rng.randint(1, max_m)
    g = random_graph(seed, m, sparsity=rng.choice([0.0, 0.3, 0.6, 1.0]), weight_style=rng.choice(STYLES))
    p = [Fraction(rng.randint(0, 400), 1000) if rng.random() < 0.8 else Fraction(rng.randint(0, 1000), 1000)
         for _ in range(m)]
    return g, p
