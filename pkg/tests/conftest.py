from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kstab.exact import Poly
from kstab.scenario import load_directory, run_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

settings.register_profile(
    "default",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
    database=None,
)
settings.load_profile("default")

# the listed invariants keep the 1000-example profile; sympy oracles and
# auxiliary checks run fewer cases to keep the whole suite fast
oracle = settings(max_examples=150)
light = settings(max_examples=200)

VARS = ("x", "y", "z")

# strategies keep the number of draws small: hypothesis overhead per draw
# dominates the cost of the exact arithmetic being tested
small_ints = st.integers(min_value=-20, max_value=20)
fractions = st.builds(Fraction, small_ints, st.integers(min_value=1, max_value=12))
nonzero_fractions = fractions.filter(bool)


def _poly_from(terms, den):
    out = {}
    for code, c in terms:
        mono = tuple((v, (code >> (2 * k)) & 3) for k, v in enumerate(VARS))
        out[mono] = Fraction(c, den)
    return Poly(out)


polys = st.builds(_poly_from, st.lists(st.tuples(st.integers(0, 63), small_ints), max_size=4),
                  st.integers(1, 6))
upolys = st.builds(lambda cs, den: Poly({(("x", i),) if i else (): Fraction(c, den) for i, c in enumerate(cs)}),
                   st.lists(small_ints, min_size=1, max_size=4), st.integers(1, 6))


# for bulky inputs a seeded Random is drawn once and the data built from it
rngs = st.randoms(use_true_random=False)


def rand_fraction(r, size=20, den=12):
    return Fraction(r.randint(-size, size), r.randint(1, den))


def rand_upoly(r, var="x", degree=3):
    den = r.randint(1, 6)
    return Poly({((var, i),) if i else (): Fraction(r.randint(-20, 20), den) for i in range(r.randint(0, degree) + 1)})


def to_sympy(p):
    import sympy

    p = Poly.lift(p)
    names = {v: sympy.Symbol(v) for v in p.variables}
    return sympy.expand(sympy.sympify(str(p), locals=names))


@pytest.fixture(scope="session")
def all_scenarios():
    return {sc.id: sc for sc in load_directory(SCENARIOS)}


@pytest.fixture(scope="session")
def results(all_scenarios):
    return {sid: run_scenario(sc) for sid, sc in all_scenarios.items()}


# outcomes of every test call, read by the acceptance report
OUTCOMES: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::", 1)[-1]
    if (report.when == "call" or report.failed) and OUTCOMES.get(name) != "failed":
        OUTCOMES[name] = report.outcome


def pytest_collection_modifyitems(items):
    # the acceptance report summarises other tests, so it runs last
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
