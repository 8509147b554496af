import os
import sys
from fractions import Fraction

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from fairdiv import Allocation, Instance

sys.path.insert(0, os.path.dirname(__file__))

# the reference oracles are slow on purpose; per-example timing is noise here
settings.register_profile("fairdiv", deadline=None)
settings.load_profile("fairdiv")

# nine goods: a1 a2 b1 b2 c1 c2 d1 d2 e, three agents
NINE_GOODS = [
    [50, 50, 1, 1, 10, 10, 1, 1, 1],
    [1, 1, 10, 10, 1, 1, 50, 50, 1],
    [10, 10, 1, 1, 10, 10, 1, 1, 25],
]
NINE_X = [[0, 1, 2, 3], [4, 5, 6, 7], [8]]
NINE_Y = [[0, 1, 4, 5], [2, 3, 6, 7], [8]]


@pytest.fixture
def nine_goods():
    return Instance.additive(NINE_GOODS)


@pytest.fixture
def nine_x():
    return Allocation(NINE_X)


@pytest.fixture
def nine_y():
    return Allocation(NINE_Y)


def value_rows(n, m, lo=0, hi=20):
    return st.lists(
        st.lists(st.integers(lo, hi), min_size=m, max_size=m), min_size=n, max_size=n
    )


@st.composite
def additive_instances(draw, kind="goods", max_agents=4, max_items=7, lo=0, hi=20):
    n = draw(st.integers(1, max_agents))
    m = draw(st.integers(0, max_items))
    rows = draw(value_rows(n, m, lo, hi))
    if kind == "chores":
        rows = [[-x for x in r] for r in rows]
    return Instance.additive(rows, kind)


@st.composite
def allocations(draw, n, m):
    owners = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    return Allocation([[g for g in range(m) if owners[g] == i] for i in range(n)])


@st.composite
def instance_with_allocation(draw, kind="goods", max_agents=4, max_items=7, lo=0, hi=20):
    inst = draw(additive_instances(kind, max_agents, max_items, lo, hi))
    return inst, draw(allocations(inst.n, inst.m))


def frac_table(draw, m, lo=-10, hi=10):
    vals = draw(st.lists(st.integers(lo, hi), min_size=(1 << m) - 1, max_size=(1 << m) - 1))
    return [Fraction(0)] + [Fraction(v) for v in vals]


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {detail}")
