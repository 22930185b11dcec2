"""Deduction: constraint generation and the feasibility decision."""

import random

from helpers import build_program, cmp
from strategies import random_pipeline
from tablesynth.components import TBL
from tablesynth.deduction import DeduceContext, Feasibility, deduce, phi
from tablesynth.formulas import (
    And,
    Atom,
    AttributeKind,
    AttrVar,
    HoleId,
    LinExpr,
    Rel,
    TRUE,
    attr_eq,
)
from tablesynth.hypotheses import (
    Hole,
    InputBinding,
    QualifiedHole,
    TermBinding,
    bind_hole,
    iter_nodes,
    refine,
    replace_node,
    root_hole,
    sketches,
)
from tablesynth.tables import Example, make_table

ROW = AttributeKind.ROW
COL = AttributeKind.COL

FEASIBLE = Feasibility.FEASIBLE
INFEASIBLE = Feasibility.INFEASIBLE


def flat_atoms(f) -> set:
    """All linear atoms of a conjunction (no disjunctions expected)."""
    if isinstance(f, Atom):
        return {f}
    assert isinstance(f, And), f
    out = set()
    for item in f.items:
        out |= flat_atoms(item)
    return out


def spec_atom(out_hole: int, attr, rel: Rel, in_hole: int, shift: int = 0) -> Atom:
    lhs = LinExpr.var(AttrVar(HoleId(out_hole), attr))
    rhs = LinExpr.var(AttrVar(HoleId(in_hole), attr)) + LinExpr.constant(shift)
    return Atom(lhs, rel, rhs)


def select_after_filter():
    """?0^select(?1^filter(?3, ?4), ?2)"""
    h = refine(root_hole(), 0, "select")
    return refine(h, 1, "filter")


# ---------------------------------------------------------------------------
# phi: structural constraints


def test_phi_of_bare_hole_is_trivial(roster_example, spec1):
    assert phi(root_hole(), roster_example, spec1) is TRUE


def test_phi_chains_component_specs(roster_example, spec1):
    atoms = flat_atoms(phi(select_after_filter(), roster_example, spec1))
    assert atoms == {
        spec_atom(0, ROW, Rel.EQ, 1),  # select keeps rows
        spec_atom(0, COL, Rel.LT, 1),  # select drops a column
        spec_atom(1, ROW, Rel.LT, 3),  # filter shrinks rows
        spec_atom(1, COL, Rel.EQ, 3),  # filter keeps columns
    }


def test_phi_adds_facts_from_evaluated_prefixes(t1, roster_example, spec1):
    # Binding the filter's inputs makes the intermediate concrete: one
    # row survives age > 12, so its abstraction joins the constraints.
    h = select_after_filter()
    h = bind_hole(h, 3, InputBinding("x1", t1))
    h = bind_hole(h, 4, TermBinding(cmp("age", ">", 12)))
    atoms = flat_atoms(phi(h, roster_example, spec1))
    structural = flat_atoms(phi(select_after_filter(), roster_example, spec1))
    assert atoms == structural | {
        attr_eq(HoleId(1), ROW, 1),
        attr_eq(HoleId(1), COL, 4),
    }


def test_phi_is_trivial_at_level_none(roster_example, spec_none):
    assert phi(select_after_filter(), roster_example, spec_none) is TRUE


# ---------------------------------------------------------------------------
# deduce: worked verdicts


def test_project_after_filter_is_rejected(roster_example, spec1, spec2):
    # Output has all four input columns, but a select in the chain must
    # drop one; no completion can work.
    h = select_after_filter()
    assert deduce(h, roster_example, spec1) is INFEASIBLE
    assert deduce(h, roster_example, spec2) is INFEASIBLE


def test_project_after_filter_survives_narrower_output(project_example, spec1):
    assert deduce(select_after_filter(), project_example, spec1) is FEASIBLE


def test_spread_on_pivot_example_needs_level_two(ex1, spec1, spec2):
    # One spread alone reshapes 2x4 -> at most as many rows and at least
    # as many columns, which fits the pivot example's counts; only the
    # newVals/newCols reasoning of level 2 sees that the output needs
    # values a single spread cannot mint.
    h = refine(root_hole(), 0, "spread")
    first_arg = ex1.example.inputs[0]
    h = bind_hole(h, 1, InputBinding(first_arg[0], first_arg[1]))
    assert deduce(h, ex1.example, spec1) is FEASIBLE
    assert deduce(h, ex1.example, spec2) is INFEASIBLE


def test_bare_hole_feasible_iff_output_is_an_input(t1, t2, roster_example, spec1):
    identity = Example((("x1", t1),), t1)
    assert deduce(root_hole(), identity, spec1) is FEASIBLE
    # Completions of a bare hole are exactly the inputs, and t2 != t1.
    assert deduce(root_hole(), roster_example, spec1) is INFEASIBLE


def test_complete_programs_skip_the_solver(t1, t2, roster_example, spec2):
    good = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 8)))
    ctx = DeduceContext()
    assert deduce(good, roster_example, spec2, ctx=ctx) is FEASIBLE
    assert ctx.solver_calls == 0
    bad = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 12)))
    assert deduce(bad, roster_example, spec2, ctx=ctx) is INFEASIBLE
    assert ctx.solver_calls == 0


def test_evaluation_failures_are_infeasible(t1, roster_example, spec_none, spec2):
    # age > 0 keeps every row; filter treats that as a no-op error.
    h = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 0)))
    assert deduce(h, roster_example, spec2) is INFEASIBLE
    assert deduce(h, roster_example, spec_none) is INFEASIBLE


def test_row_order_only_matters_when_asked(t1, t2, spec1):
    reversed_out = make_table(
        [("id", "num"), ("name", "str"), ("age", "num"), ("GPA", "num")],
        [(3, "Tom", 12, "3.0"), (2, "Bob", 18, "3.2")],
    )
    ex = Example((("x1", t1),), reversed_out)
    prog = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 8)))
    assert deduce(prog, ex, spec1) is FEASIBLE
    assert deduce(prog, ex, spec1, ordered_rows=True) is INFEASIBLE


def test_level_none_accepts_anything_incomplete(roster_example, spec_none):
    assert deduce(select_after_filter(), roster_example, spec_none) is FEASIBLE


# ---------------------------------------------------------------------------
# Properties over random hypotheses


def _random_partial(rng: random.Random, example: Example):
    """A random 1-3 component tree with some leaves bound to inputs."""
    h = root_hole()
    names = (
        "filter", "select", "gather", "spread", "mutate",
        "summarise", "group_by", "unite", "separate", "inner_join",
    )
    for _ in range(rng.randrange(1, 4)):
        open_tables = [
            n for n in iter_nodes(h) if isinstance(n, Hole) and n.type is TBL
        ]
        if not open_tables:
            break
        h = refine(h, rng.choice(open_tables).id, rng.choice(names))
    for node in list(iter_nodes(h)):
        if isinstance(node, Hole) and node.type is TBL and rng.random() < 0.5:
            arg, table = example.inputs[rng.randrange(len(example.inputs))]
            h = bind_hole(h, node.id, InputBinding(arg, table))
    return h


def test_level_two_rejections_cover_level_one(roster_example, ex1, spec1, spec2):
    examples = [roster_example, ex1.example]
    rejected = 0
    for seed in range(150):
        rng = random.Random(seed)
        example = examples[seed % len(examples)]
        h = _random_partial(rng, example)
        first = deduce(h, example, spec1)
        if first is INFEASIBLE:
            rejected += 1
            assert deduce(h, example, spec2) is INFEASIBLE
    assert rejected >= 30


def test_planted_solutions_are_never_rejected(spec1, spec2):
    checked = 0
    for seed in range(60):
        rng = random.Random(seed)
        made = random_pipeline(rng)
        if made is None:
            continue
        plan, inputs, steps, output = made
        example = Example(tuple(inputs), output)
        prog = build_program(plan, inputs)
        # Unbind a random subset of leaves; the original program remains
        # one of the completions, so deduction must keep the hypothesis.
        partial = prog
        for node in iter_nodes(prog):
            if isinstance(node, QualifiedHole) and rng.random() < 0.5:
                partial = replace_node(partial, node.id, Hole(node.id, node.type))
        checked += 1
        for specs in (spec1, spec2):
            assert deduce(prog, example, specs) is FEASIBLE
            assert deduce(partial, example, specs) is FEASIBLE, (seed, specs.level)
    assert checked >= 40
