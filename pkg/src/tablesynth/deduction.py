"""Deduction: reject hypotheses that cannot match the example.

``phi`` turns a hypothesis into constraints: each component node
contributes its spec atoms over the node and its table children, each
input-bound leaf contributes nothing by itself (its facts arrive
through the input equality below), and each subtree that already
evaluates to a concrete table contributes that table's abstraction as
hard equalities.

``deduce`` conjoins phi with the example: every open table leaf must be
*some* input (a disjunction when there are several), bound leaves equal
their input, the root equals the expected output, and the inputs and
output contribute their abstractions.  An unsatisfiable conjunction
proves no completion of the hypothesis can work.

Two shortcuts sit in front of the solver.  A hypothesis whose
evaluation already failed can never be completed and is Infeasible
outright.  A hypothesis that is a complete program is simply executed
and compared against the expected output, no solver involved.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .formulas import (
    ArgName,
    Formula,
    HoleId,
    OUTPUT,
    TableEq,
    conj,
    disj,
)
from .hypotheses import (
    ComponentNode,
    EvalFailed,
    Evaluated,
    Hole,
    InputBinding,
    Node,
    QualifiedHole,
    TermBinding,
    is_complete,
)
from .solver import SatCache, is_satisfiable
from .specs import SpecSet
from .tables import (
    Example,
    SpecLevel,
    Table,
    abstract,
    abstract_output,
    tables_equal,
)
from .components import TBL


class Feasibility(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass
class DeduceContext:
    """Shared state for the many deduce calls of one search: the solver
    memo, the ablation switch for concrete-subtree collapse, an optional
    SMT-LIB dump hook, and reject counters.

    A context also memoizes the formula pieces that recur across calls
    (example facts, concrete-table abstractions), so it is bound to a
    single example; use a fresh context per search."""

    collapse_concrete: bool = True
    case_cap: int = 4096
    cache: SatCache = field(default_factory=SatCache)
    explain: Optional[Callable[[str], None]] = None
    solver_calls: int = 0
    facts_cache: dict = field(default_factory=dict, repr=False)
    abstraction_cache: dict = field(default_factory=dict, repr=False)


def _annotate(h: Node, known: Optional[dict[int, Table]]) -> dict[int, Union[Table, str]]:
    """Map node id -> concrete table for every subtree that evaluates,
    or an error string where evaluation failed."""
    out: dict[int, Union[Table, str]] = {}

    def walk(node: Node) -> Optional[Table]:
        if isinstance(node, QualifiedHole):
            if isinstance(node.qualifier, InputBinding):
                out[node.id] = node.qualifier.table
                return node.qualifier.table
            return None
        if isinstance(node, Evaluated):
            out[node.id] = node.table
            return node.table
        if isinstance(node, EvalFailed):
            out[node.id] = node.error
            return None
        if not isinstance(node, ComponentNode):
            return None
        if known is not None and node.id in known:
            out[node.id] = known[node.id]
            # still walk children so their facts are available
            for c in node.children:
                walk(c)
            return known[node.id]
        tables = []
        terms = []
        ready = True
        for c in node.children:
            sub = walk(c)
            if isinstance(c, QualifiedHole) and isinstance(c.qualifier, TermBinding):
                terms.append(c.qualifier.term)
            elif sub is not None:
                tables.append(sub)
            else:
                ready = False
        if not ready or any(
            isinstance(out.get(c.id), str) for c in node.children
        ):
            return None
        from .components import InterpreterError, eval_table_component

        try:
            result = eval_table_component(node.component, tables, terms)
        except InterpreterError as e:
            out[node.id] = f"{type(e).__name__}: {e}"
            return None
        out[node.id] = result
        return result

    walk(h)
    return out


def phi(
    h: Node,
    reference: Example,
    specs: SpecSet,
    *,
    annotations: Optional[dict[int, Union[Table, str]]] = None,
    collapse_concrete: bool = True,
    ctx: Optional[DeduceContext] = None,
) -> Formula:
    """Structural constraints of the hypothesis alone (no example input
    or output facts).  With ``collapse_concrete`` set, subtrees that
    partially evaluate contribute their concrete abstraction on top of
    their spec atoms."""
    if specs.level is SpecLevel.NONE:
        return conj(())
    if annotations is None:
        annotations = _annotate(h, None)
    pieces: list[Formula] = []

    def walk(node: Node) -> None:
        if isinstance(node, ComponentNode):
            table_children = [c for c in node.children if _is_table_node(c)]
            owners = {"out": HoleId(node.id)}
            for i, c in enumerate(table_children):
                owners[f"in{i + 1}"] = HoleId(c.id)
            pieces.append(specs.formula_for(node.component, owners))
            value = annotations.get(node.id)
            if collapse_concrete and isinstance(value, Table):
                pieces.append(
                    _abstraction(ctx, value, reference, specs.level, node.id)
                )
            for c in node.children:
                walk(c)
        elif isinstance(node, Evaluated):
            pieces.append(
                _abstraction(ctx, node.table, reference, specs.level, node.id)
            )

    walk(h)
    return conj(pieces)


def _abstraction(
    ctx: Optional[DeduceContext],
    table: Table,
    reference: Example,
    level: SpecLevel,
    node_id: int,
) -> Formula:
    """Abstraction of a concrete table named as node ``node_id``, cached
    per context (the completion engine re-derives the same intermediate
    tables across sibling branches)."""
    if ctx is None:
        return abstract(table, reference, level, HoleId(node_id))
    key = (table, node_id, level)
    hit = ctx.abstraction_cache.get(key)
    if hit is None:
        hit = abstract(table, reference, level, HoleId(node_id))
        ctx.abstraction_cache[key] = hit
    return hit


def _example_facts(
    ctx: DeduceContext, example: Example, specs: SpecSet
) -> tuple[Formula, ...]:
    """Input abstractions plus the output abstraction; identical for
    every deduce call of a search, so built once per context."""
    key = (id(example), specs.level)
    hit = ctx.facts_cache.get(key)
    if hit is None:
        pieces = tuple(
            abstract(table, example, specs.level, ArgName(arg))
            for arg, table in example.inputs
        ) + (abstract_output(example, specs.level),)
        # Keep the example alive so its id() cannot be recycled.
        hit = (example, pieces)
        ctx.facts_cache[key] = hit
    return hit[1]


def _is_table_node(node: Node) -> bool:
    if isinstance(node, (ComponentNode, Evaluated, EvalFailed)):
        return True
    if isinstance(node, (Hole, QualifiedHole)):
        return node.type is TBL
    return False


def deduce(
    h: Node,
    example: Example,
    specs: SpecSet,
    *,
    ordered_rows: bool = False,
    ctx: Optional[DeduceContext] = None,
    annotations: Optional[dict[int, Union[Table, str]]] = None,
) -> Feasibility:
    """Can some completion of ``h`` still produce the expected output?

    INFEASIBLE is a proof (modulo the component specs being true
    over-approximations) that none can.

    ``annotations`` is an externally maintained node-id -> table map of
    subtree evaluations; the completion engine passes its own, which
    saves re-running the tree here.  Left as None, the tree is evaluated
    on the spot.
    """
    ctx = ctx or DeduceContext()
    if annotations is None:
        # With concrete-subtree collapsing off, hypotheses are never run
        # ahead of time; only a complete program is executed, for the
        # final comparison below.
        if ctx.collapse_concrete or is_complete(h):
            annotations = _annotate(h, None)
        else:
            annotations = {}
        if any(isinstance(v, str) for v in annotations.values()):
            return Feasibility.INFEASIBLE

    root_value = annotations.get(h.id)
    if isinstance(root_value, Table):
        ok = tables_equal(root_value, example.output, ordered_rows)
        return Feasibility.FEASIBLE if ok else Feasibility.INFEASIBLE

    if specs.level is SpecLevel.NONE:
        return Feasibility.FEASIBLE

    pieces: list[Formula] = [
        phi(
            h,
            example,
            specs,
            annotations=annotations,
            collapse_concrete=ctx.collapse_concrete,
            ctx=ctx,
        )
    ]
    # Input facts and the output abstraction (fixed per search, cached).
    pieces.extend(_example_facts(ctx, example, specs))
    # Open table leaves must be some input; bound leaves are their input.
    for node in _table_leaves(h):
        if isinstance(node, Hole):
            pieces.append(
                disj(
                    TableEq(HoleId(node.id), ArgName(arg))
                    for arg, _ in example.inputs
                )
            )
        elif isinstance(node, QualifiedHole) and isinstance(
            node.qualifier, InputBinding
        ):
            pieces.append(TableEq(HoleId(node.id), ArgName(node.qualifier.arg_name)))
    # The root must be the output.
    pieces.append(TableEq(OUTPUT, HoleId(h.id)))

    formula = conj(pieces)
    ctx.solver_calls += 1
    sat = is_satisfiable(formula, case_cap=ctx.case_cap, cache=ctx.cache)
    if not sat and ctx.explain is not None:
        from .formulas import to_smtlib

        expanded = _expand_for_dump(formula)
        ctx.explain(to_smtlib(expanded))
    return Feasibility.FEASIBLE if sat else Feasibility.INFEASIBLE


def _table_leaves(h: Node):
    from .hypotheses import iter_nodes

    for node in iter_nodes(h):
        if isinstance(node, (Hole, QualifiedHole)) and node.type is TBL:
            yield node


@dataclass(frozen=True)
class SketchFacts:
    """The parts of a sketch's deduction formula that completion cannot
    change: spec atoms per component node, leaf/input equalities, and
    the root/output equality.  Built once per sketch; each fill and
    assembly then only re-conjoins the example facts and the
    abstractions of subtrees that have evaluated."""

    root_id: int
    component_ids: tuple[int, ...]
    static: Formula


def sketch_facts(sketch: Node, example: Example, specs: SpecSet) -> SketchFacts:
    pieces: list[Formula] = []
    ids: list[int] = []

    def walk(node: Node) -> None:
        if isinstance(node, ComponentNode):
            ids.append(node.id)
            table_children = [c for c in node.children if _is_table_node(c)]
            owners = {"out": HoleId(node.id)}
            for i, c in enumerate(table_children):
                owners[f"in{i + 1}"] = HoleId(c.id)
            pieces.append(specs.formula_for(node.component, owners))
            for c in node.children:
                walk(c)

    walk(sketch)
    for node in _table_leaves(sketch):
        if isinstance(node, QualifiedHole) and isinstance(
            node.qualifier, InputBinding
        ):
            pieces.append(TableEq(HoleId(node.id), ArgName(node.qualifier.arg_name)))
        elif isinstance(node, Hole):
            pieces.append(
                disj(
                    TableEq(HoleId(node.id), ArgName(arg))
                    for arg, _ in example.inputs
                )
            )
    pieces.append(TableEq(OUTPUT, HoleId(sketch.id)))
    return SketchFacts(sketch.id, tuple(ids), conj(pieces))


def deduce_completion_state(
    facts: SketchFacts,
    tables: dict[int, Table],
    example: Example,
    specs: SpecSet,
    *,
    ordered_rows: bool = False,
    ctx: DeduceContext,
) -> Feasibility:
    """Deduce specialized for the completion engine: the sketch's static
    formula is prebuilt and every evaluation result lives in ``tables``,
    so no tree is walked and nothing is executed.  Verdicts match
    ``deduce`` on the equivalent bound tree."""
    root_value = tables.get(facts.root_id)
    if root_value is not None:
        ok = tables_equal(root_value, example.output, ordered_rows)
        return Feasibility.FEASIBLE if ok else Feasibility.INFEASIBLE
    if specs.level is SpecLevel.NONE:
        return Feasibility.FEASIBLE

    pieces: list[Formula] = [facts.static]
    pieces.extend(_example_facts(ctx, example, specs))
    if ctx.collapse_concrete:
        for nid in facts.component_ids:
            value = tables.get(nid)
            if value is not None:
                pieces.append(
                    _abstraction(ctx, value, example, specs.level, nid)
                )

    formula = conj(pieces)
    ctx.solver_calls += 1
    sat = is_satisfiable(formula, case_cap=ctx.case_cap, cache=ctx.cache)
    if not sat and ctx.explain is not None:
        from .formulas import to_smtlib

        expanded = _expand_for_dump(formula)
        ctx.explain(to_smtlib(expanded))
    return Feasibility.FEASIBLE if sat else Feasibility.INFEASIBLE


def _expand_for_dump(f: Formula) -> Formula:
    """Replace TableEq literals with attribute equalities so the
    SMT-LIB dump is self-contained."""
    from .formulas import And, AttributeKind, Or, Atom, AttrVar, LinExpr, Rel, TRUE, FALSE

    def attrs_eq(a, b) -> Formula:
        return conj(
            Atom(
                LinExpr.var(AttrVar(a, kind)),
                Rel.EQ,
                LinExpr.var(AttrVar(b, kind)),
            )
            for kind in AttributeKind
        )

    def walk(g: Formula) -> Formula:
        if g is TRUE or g is FALSE or isinstance(g, Atom):
            return g
        if isinstance(g, TableEq):
            return attrs_eq(g.a, g.b)
        if isinstance(g, And):
            return conj(walk(i) for i in g.items)
        if isinstance(g, Or):
            return disj(walk(i) for i in g.items)
        raise TypeError(f"not a formula: {g!r}")

    return walk(f)
