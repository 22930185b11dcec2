"""Hypothesis trees: refinement, sketching, partial evaluation."""

import random
import re

import pytest

from helpers import build_program, cmp, cols
from strategies import random_pipeline
from tablesynth.components import COLS, TBL, UnknownComponentError, builtin_registry
from tablesynth.hypotheses import (
    ComponentNode,
    Concrete,
    EvalFailed,
    Evaluated,
    Hole,
    InputBinding,
    NotATableHoleError,
    QualifiedHole,
    Residual,
    TermBinding,
    bind_hole,
    component_sequence,
    eval_failures,
    find_node,
    is_complete,
    is_sketch,
    iter_nodes,
    node_text,
    open_holes,
    open_table_holes,
    partial_eval,
    refine,
    root_hole,
    sketches,
    stable_hash,
    transformer_count,
)
from tablesynth.tables import tables_equal


def test_root_hole_is_one_open_table_hole():
    h = root_hole()
    assert h == Hole(0, TBL)
    assert open_table_holes(h) == [h]
    assert not is_sketch(h)
    assert not is_complete(h)
    assert transformer_count(h) == 0


def test_refine_assigns_sequential_child_ids():
    h = refine(root_hole(), 0, "select")
    assert isinstance(h, ComponentNode)
    assert h.id == 0 and h.component == "select"
    assert h.children == (Hole(1, TBL), Hole(2, COLS))
    two_deep = refine(h, 1, "filter")
    inner = find_node(two_deep, 1)
    assert isinstance(inner, ComponentNode) and inner.component == "filter"
    assert [c.id for c in inner.children] == [3, 4]
    assert inner.children[0].type is TBL
    assert node_text(two_deep).startswith("?0^select(?1^filter(?3:")


def test_refine_grows_node_count_by_arity():
    h = root_hole()
    for name in ("gather", "unite", "spread"):
        before = len(list(iter_nodes(h)))
        arity = len(builtin_registry().table_component(name).hole_types())
        target = open_table_holes(h)[0].id
        h = refine(h, target, name)
        assert len(list(iter_nodes(h))) == before + arity


def test_refine_only_accepts_open_table_holes():
    h = refine(root_hole(), 0, "select")
    with pytest.raises(NotATableHoleError):
        refine(h, 2, "filter")  # cols hole
    with pytest.raises(NotATableHoleError):
        refine(h, 0, "filter")  # already refined
    with pytest.raises(NotATableHoleError):
        refine(h, 99, "filter")  # no such hole
    with pytest.raises(UnknownComponentError):
        refine(h, 1, "nosuch")


def test_bind_hole_rejects_bound_targets(t1):
    h = refine(root_hole(), 0, "filter")
    h = bind_hole(h, 1, InputBinding("x1", t1))
    with pytest.raises(NotATableHoleError):
        bind_hole(h, 1, InputBinding("x1", t1))


def test_component_sequence_is_preorder():
    h = refine(root_hole(), 0, "spread")
    h = refine(h, 1, "unite")
    h = refine(h, 4, "gather")
    assert component_sequence(h) == ("spread", "unite", "gather")
    assert transformer_count(h) == 3


def test_sketches_enumerate_input_bindings(t1, t2):
    h = refine(root_hole(), 0, "inner_join")
    inputs = [("x1", t1), ("x2", t2)]
    result = sketches(h, inputs)
    assert len(result) == 4
    names = [
        tuple(
            n.qualifier.arg_name
            for n in iter_nodes(s)
            if isinstance(n, QualifiedHole)
        )
        for s in result
    ]
    # Leftmost hole varies slowest, inputs in declaration order.
    assert names == [("x1", "x1"), ("x1", "x2"), ("x2", "x1"), ("x2", "x2")]
    assert all(is_sketch(s) for s in result)
    assert sketches(h, inputs) == result


def test_sketch_leaves_value_holes_open(t1):
    h = refine(root_hole(), 0, "select")
    (s,) = sketches(h, [("x1", t1)])
    assert is_sketch(s) and not is_complete(s)
    assert [hole.id for hole in open_holes(s)] == [2]


def test_partial_eval_runs_complete_programs(t1, t2):
    prog = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 8)))
    result = partial_eval(prog)
    assert isinstance(result, Concrete)
    assert tables_equal(result.table, t2, ordered_rows=True)


def test_partial_eval_reduces_bound_prefixes(t1):
    h = refine(root_hole(), 0, "select")
    (s,) = sketches(h, [("x1", t1)])
    result = partial_eval(s)
    assert isinstance(result, Residual)
    assert re.match(r"\?0\^select\(\?1=<table:[0-9a-f]{12}>, \?2:", node_text(result.tree))
    inner = find_node(result.tree, 1)
    assert isinstance(inner, Evaluated) and inner.table == t1


def test_partial_eval_marks_interpreter_failures(t1):
    # age > 0 keeps every row, which filter rejects as a no-op.
    prog = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 0)))
    result = partial_eval(prog)
    assert isinstance(result, Residual)
    failures = eval_failures(result.tree)
    assert len(failures) == 1
    assert "NoOpApplicationError" in failures[0].error


def test_partial_eval_failure_poisons_enclosing_tree(t1):
    prog = build_program(
        ("select", ("filter", ("@", "x1", t1), cmp("age", ">", 0)), cols("id"))
    )
    result = partial_eval(prog)
    assert isinstance(result, Residual)
    assert isinstance(find_node(result.tree, 1), EvalFailed)
    assert not is_complete(result.tree) or eval_failures(result.tree)


def test_partial_eval_trusts_known_tables(t1, t3):
    prog = build_program(("filter", ("@", "x1", t1), cmp("age", ">", 8)))
    result = partial_eval(prog, known_tables={0: t3})
    assert isinstance(result, Concrete)
    assert result.table == t3


def test_partial_eval_is_idempotent_on_residuals(t1):
    h = refine(root_hole(), 0, "select")
    h = refine(h, 1, "filter")
    (s,) = sketches(h, [("x1", t1)])
    first = partial_eval(s)
    assert isinstance(first, Residual)
    second = partial_eval(first.tree)
    assert isinstance(second, Residual)
    assert second.tree == first.tree


def test_partial_eval_staging_matches_direct_run(t1):
    # Filling the last hole of a reduced residual must give the same
    # table as filling it first and evaluating from scratch.
    h = refine(root_hole(), 0, "select")
    h = refine(h, 1, "filter")
    (s,) = sketches(h, [("x1", t1)])
    s = bind_hole(s, 4, TermBinding(cmp("age", ">", 8)))
    residual = partial_eval(s)
    assert isinstance(residual, Residual)
    binding = TermBinding(cols("id", "name"))
    staged = partial_eval(bind_hole(residual.tree, 2, binding))
    direct = partial_eval(bind_hole(s, 2, binding))
    assert isinstance(staged, Concrete) and isinstance(direct, Concrete)
    assert staged.table == direct.table


def test_partial_eval_agrees_with_generator_output():
    for seed in range(40):
        rng = random.Random(seed)
        made = random_pipeline(rng)
        if made is None:
            continue
        plan, inputs, steps, output = made
        prog = build_program(plan, inputs)
        assert is_complete(prog)
        result = partial_eval(prog)
        assert isinstance(result, Concrete), node_text(prog)
        assert result.table == output


def test_node_text_and_hash_are_stable(t1):
    def make():
        h = refine(root_hole(), 0, "filter")
        h = bind_hole(h, 1, InputBinding("x1", t1))
        return bind_hole(h, 2, TermBinding(cmp("age", ">", 8)))

    a, b = make(), make()
    assert node_text(a) == node_text(b)
    assert stable_hash(a) == stable_hash(b)
    other = refine(root_hole(), 0, "filter")
    other = bind_hole(other, 1, InputBinding("x1", t1))
    other = bind_hole(other, 2, TermBinding(cmp("age", ">", 12)))
    assert stable_hash(other) != stable_hash(a)


def test_refinement_is_functional(t1):
    h = refine(root_hole(), 0, "filter")
    bound = bind_hole(h, 1, InputBinding("x1", t1))
    assert isinstance(find_node(h, 1), Hole)
    assert isinstance(find_node(bound, 1), QualifiedHole)
