"""Shared fixtures: the worked-example tables, the bundled problems, and
the spec sets most tests need."""

from __future__ import annotations

from pathlib import Path

import pytest

from tablesynth.components import builtin_registry
from tablesynth.problems import load_problem
from tablesynth.specs import load_builtin_specs
from tablesynth.tables import Example, SpecLevel, make_table

BENCH_DIR = Path(__file__).resolve().parent.parent / "benchmarks"


@pytest.fixture(scope="session")
def t1():
    """The 3x4 roster table driving the filter/select walkthroughs."""
    return make_table(
        [("id", "num"), ("name", "str"), ("age", "num"), ("GPA", "num")],
        [(1, "Alice", 8, "4.0"), (2, "Bob", 18, "3.2"), (3, "Tom", 12, "3.0")],
    )


@pytest.fixture(scope="session")
def t2():
    """Rows of t1 whose age exceeds 8."""
    return make_table(
        [("id", "num"), ("name", "str"), ("age", "num"), ("GPA", "num")],
        [(2, "Bob", 18, "3.2"), (3, "Tom", 12, "3.0")],
    )


@pytest.fixture(scope="session")
def t3():
    """t2 projected onto id and name."""
    return make_table([("id", "num"), ("name", "str")], [(2, "Bob"), (3, "Tom")])


@pytest.fixture(scope="session")
def roster_example(t1, t2):
    """Input t1, expected output t2: solvable by one filter."""
    return Example((("x1", t1),), t2)


@pytest.fixture(scope="session")
def project_example(t1, t3):
    """Input t1, expected output t3: needs a filter under a select."""
    return Example((("x1", t1),), t3)


@pytest.fixture(scope="session")
def ex1():
    return load_problem(BENCH_DIR / "ex1_pivot.json")


@pytest.fixture(scope="session")
def ex2():
    return load_problem(BENCH_DIR / "ex2_flights.json")


@pytest.fixture(scope="session")
def ex3():
    return load_problem(BENCH_DIR / "ex3_cars.json")


@pytest.fixture(scope="session")
def registry():
    return builtin_registry()


@pytest.fixture(scope="session")
def spec_none():
    return load_builtin_specs(SpecLevel.NONE)


@pytest.fixture(scope="session")
def spec1():
    return load_builtin_specs(SpecLevel.SPEC1)


@pytest.fixture(scope="session")
def spec2():
    return load_builtin_specs(SpecLevel.SPEC2)
