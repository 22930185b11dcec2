"""Random generation for the property and bulk suites.

Two flavors live here: hypothesis strategies for the per-module property
tests, and plain seeded generators (random.Random in, data out) for the
bulk acceptance suites where the count and the seed are pinned.
"""

from __future__ import annotations

import random
from itertools import islice
from typing import Optional, Sequence

from hypothesis import strategies as st

from tablesynth.completion import inhabit
from tablesynth.components import (
    ComponentRegistry,
    InterpreterError,
    builtin_registry,
    eval_table_component,
)
from tablesynth.formulas import (
    And,
    Atom,
    AttrVar,
    AttributeKind,
    Formula,
    HoleId,
    LinExpr,
    Or,
    Rel,
    conj,
    disj,
)
from tablesynth.tables import Str, Table, make_table

_COL_POOL = ("a", "b", "c", "d", "k", "v")
# p_q style cells keep separate applicable; plain words feed unite/spread.
_STR_POOL = ("x", "y", "z", "p_q", "r_s")
FRESH_NAMES = tuple(f"zz{i}" for i in range(1, 10))
FRESH_CONSTANTS = tuple(Str(n) for n in FRESH_NAMES)


# ---------------------------------------------------------------------------
# hypothesis strategies


@st.composite
def small_tables(draw, max_rows: int = 4, max_cols: int = 4, min_rows: int = 0):
    n_cols = draw(st.integers(1, max_cols))
    names = draw(
        st.lists(
            st.sampled_from(_COL_POOL),
            min_size=n_cols,
            max_size=n_cols,
            unique=True,
        )
    )
    types = [draw(st.sampled_from(["num", "str"])) for _ in range(n_cols)]
    n_rows = draw(st.integers(min_rows, max_rows))
    rows = []
    for _ in range(n_rows):
        row = []
        for ty in types:
            if ty == "num":
                row.append(draw(st.integers(0, 9)))
            else:
                row.append(draw(st.sampled_from(_STR_POOL)))
        rows.append(tuple(row))
    return make_table(list(zip(names, types)), rows)


# ---------------------------------------------------------------------------
# seeded table / pipeline generation


def random_table(
    rng: random.Random, max_rows: int = 4, max_cols: int = 4, min_rows: int = 1
) -> Table:
    n_cols = rng.randint(1, max_cols)
    names = rng.sample(_COL_POOL, n_cols)
    types = [rng.choice(["num", "str"]) for _ in range(n_cols)]
    n_rows = rng.randint(min_rows, max_rows)
    rows = []
    for _ in range(n_rows):
        row = []
        for ty in types:
            if ty == "num":
                row.append(rng.randint(0, 9))
            else:
                row.append(rng.choice(_STR_POOL))
        rows.append(tuple(row))
    return make_table(list(zip(names, types)), rows)


def random_step(
    rng: random.Random,
    registry: ComponentRegistry,
    pool: Sequence[tuple[object, Table]],
    term_depth: int = 1,
    value_ops: Optional[frozenset] = None,
    attempts: int = 40,
):
    """One applicable component call over tables drawn from ``pool``
    (plan, table) pairs.  Returns (name, chosen plans, chosen tables,
    terms, output) or None when nothing applies."""
    names = [c.name for c in registry.table]
    for _ in range(attempts):
        name = rng.choice(names)
        comp = registry.table_component(name)
        if comp.n_tables > len(pool):
            continue
        if comp.n_tables == 2:
            picks = [rng.choice(pool), rng.choice(pool)]
        else:
            # Bias toward the newest table so pipelines chain.
            picks = [pool[-1] if rng.random() < 0.7 else rng.choice(pool)]
        tables = [t for _, t in picks]
        terms = []
        feasible = True
        for ty in comp.value_params:
            candidates = list(
                islice(
                    inhabit(ty, tables[0], (), term_depth, FRESH_CONSTANTS, value_ops),
                    300,
                )
            )
            if not candidates:
                feasible = False
                break
            terms.append(rng.choice(candidates))
        if not feasible:
            continue
        try:
            out = eval_table_component(name, tables, terms)
        except InterpreterError:
            continue
        if out.n_rows == 0 and rng.random() < 0.8:
            # Mostly avoid dead-ending the chain on an empty table.
            continue
        return name, [p for p, _ in picks], tables, tuple(terms), out
    return None


def random_pipeline(
    rng: random.Random,
    registry: Optional[ComponentRegistry] = None,
    length: Optional[int] = None,
    n_inputs: int = 1,
    term_depth: int = 1,
    value_ops: Optional[frozenset] = None,
    max_resamples: int = 20,
):
    """A well-defined random program: returns (plan, inputs, steps,
    output) where plan feeds helpers.build_program, inputs is the
    (argName, Table) list, and steps records every intermediate call as
    (componentName, inputTables, outputTable)."""
    registry = registry or builtin_registry()
    want = length if length is not None else rng.randint(1, 3)
    for _ in range(max_resamples):
        inputs = [(f"x{i + 1}", random_table(rng)) for i in range(n_inputs)]
        pool = [(("@", name, table), table) for name, table in inputs]
        steps = []
        for _ in range(want):
            step = random_step(rng, registry, pool, term_depth, value_ops)
            if step is None:
                break
            name, plans, tables, terms, out = step
            steps.append((name, tuple(tables), out))
            pool.append(((name, *plans, *terms), out))
        if len(steps) == want:
            plan, output = pool[-1][0], pool[-1][1]
            return plan, inputs, steps, output
    raise RuntimeError("could not sample a pipeline; widen the pools")


# ---------------------------------------------------------------------------
# seeded formula generation (solver fuzzing)

_FUZZ_KINDS = (
    AttributeKind.ROW,
    AttributeKind.COL,
    AttributeKind.NEW_VALS,
    AttributeKind.NEW_COLS,
)


def random_formula(
    rng: random.Random, max_vars: int = 5, max_const: int = 8
) -> tuple[Formula, list[AttrVar]]:
    n = rng.randint(1, max_vars)
    variables = [
        AttrVar(HoleId(i // len(_FUZZ_KINDS)), _FUZZ_KINDS[i % len(_FUZZ_KINDS)])
        for i in range(n)
    ]

    def rand_linexpr() -> LinExpr:
        k = rng.randint(1, min(3, n))
        pairs = tuple(
            (v, rng.choice((-3, -2, -1, 1, 2, 3))) for v in rng.sample(variables, k)
        )
        return LinExpr.of(*pairs, const=rng.randint(-max_const, max_const))

    def rand_atom() -> Atom:
        return Atom(rand_linexpr(), rng.choice(tuple(Rel)), rand_linexpr())

    pieces: list[Formula] = [rand_atom() for _ in range(rng.randint(1, 6))]
    if rng.random() < 0.4:
        pieces.append(disj([rand_atom(), rand_atom()]))
    return conj(pieces), variables
