"""Completion: enumerate terms for value holes and finish sketches.

``inhabit`` enumerates the terms of a type that a context table makes
available: column subsets in index order, constants drawn from the
table's cells (plus caller-supplied extras), column references,
comparisons, aggregates, and arithmetic, bounded by an application
nesting budget.  The default budget of 2 admits one aggregate inside
one arithmetic operator (``n / sum(n)``); arithmetic operands are
atoms or aggregates, never other arithmetic, which keeps the space
quadratic in the constant pool instead of exponential.

``fill_sketch`` walks a sketch bottom-up: table children are completed
and executed before the value holes of their parent, every hole fill
and node assembly is re-checked by deduction, and rejected branches are
abandoned without enumerating the holes to their right.  The result is
a lazy, deterministic stream of verified complete programs.  With the
trivial spec level nothing is pruned and the stream is exactly the
brute-force enumeration (minus completions that fail to execute).
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Union

from .components import (
    AGGREGATE_NAMES,
    ARITHMETIC_NAMES,
    BOOL,
    COLS,
    COMPARISON_NAMES,
    NUM,
    ROW,
    STR,
    TBL,
    Apply,
    ColsLiteral,
    ColumnRef,
    Const,
    Func,
    InterpreterError,
    Lambda,
    Product,
    Term,
    TypeExpr,
    Var,
    eval_table_component,
)
from .deduction import (
    DeduceContext,
    Feasibility,
    _annotate,
    deduce,
    deduce_completion_state,
    sketch_facts,
)
from .hypotheses import (
    ComponentNode,
    Hole,
    InputBinding,
    Node,
    QualifiedHole,
    TermBinding,
    replace_node,
)
from .specs import SpecSet
from .tables import (
    CellValue,
    ColumnType,
    Example,
    Num,
    SpecLevel,
    Str,
    Table,
)


class Interrupted(Exception):
    """Search stopped by deadline or cancellation."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class CrossTable:
    """Column universe of several tables side by side.  Never holds row
    data; it only answers the questions inhabitation asks (columns and
    the constant pool).  Shared column names get positional suffixes."""

    tables: tuple[Table, ...]

    def columns(self) -> tuple[tuple[str, ColumnType], ...]:
        counts: dict[str, int] = {}
        for t in self.tables:
            for name, _ in t.schema:
                counts[name] = counts.get(name, 0) + 1
        out = []
        for i, t in enumerate(self.tables, start=1):
            for name, ty in t.schema:
                if counts[name] > 1:
                    out.append((f"{name}.{i}", ty))
                else:
                    out.append((name, ty))
        return tuple(out)

    def constant_cells(self) -> tuple[CellValue, ...]:
        out: list[CellValue] = []
        for t in self.tables:
            for r in t.rows:
                out.extend(r)
        return tuple(out)

    def name_strings(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns())


def _columns(t: Union[Table, CrossTable]) -> tuple[tuple[str, ColumnType], ...]:
    if isinstance(t, Table):
        return t.schema
    return t.columns()


def _cells(t: Union[Table, CrossTable]) -> tuple[CellValue, ...]:
    if isinstance(t, Table):
        return tuple(v for r in t.rows for v in r)
    return t.constant_cells()


def _dedup(items):
    seen = set()
    for x in items:
        if x not in seen:
            seen.add(x)
            yield x


def _num_constants(
    t: Union[Table, CrossTable], extras: Sequence[CellValue]
) -> list[Term]:
    cells = [v for v in _cells(t) if isinstance(v, Num)]
    cells += [v for v in extras if isinstance(v, Num)]
    return [Const(v) for v in _dedup(cells)]


def _str_constants(
    t: Union[Table, CrossTable], extras: Sequence[CellValue]
) -> list[Term]:
    names = [Str(n) for n, _ in _columns(t)]
    cells = [v for v in _cells(t) if isinstance(v, Str)]
    extra = [v for v in extras if isinstance(v, Str)]
    return [Const(v) for v in _dedup(names + cells + extra)]


def inhabit(
    tau: TypeExpr,
    t: Union[Table, CrossTable],
    env: Sequence[tuple[str, TypeExpr]] = (),
    depth_budget: int = 2,
    extra_constants: Sequence[CellValue] = (),
    value_ops: Optional[frozenset] = None,
) -> Iterator[Term]:
    """Deterministic, duplicate-free enumeration of the terms of type
    ``tau`` available in the context of table ``t``.  ``value_ops``
    restricts which named operators may appear (None means all)."""
    seen: set = set()

    def emit(stream) -> Iterator[Term]:
        for term in stream:
            if term not in seen:
                seen.add(term)
                yield term

    if tau is COLS:
        names = [n for n, _ in _columns(t)]
        yield from emit(
            ColsLiteral(combo)
            for size in range(1, len(names) + 1)
            for combo in itertools.combinations(names, size)
        )
        return
    if tau is NUM:
        yield from emit(
            _num_terms(t, env, depth_budget, extra_constants, True, value_ops)
        )
        return
    if tau is STR:
        yield from emit(_str_terms(t, env, extra_constants))
        return
    if tau is BOOL:
        yield from emit(_bool_terms(t, env, extra_constants, True, value_ops))
        return
    if tau is TBL or tau is ROW:
        return  # bound by the search, not inhabited
    if isinstance(tau, Product):
        streams = [
            list(inhabit(item, t, env, depth_budget, extra_constants, value_ops))
            for item in tau.items
        ]
        for combo in itertools.product(*streams):
            yield combo  # type: ignore[misc]
        return
    if isinstance(tau, Func):
        # Implicit-row function holes are filled with bare bodies; the
        # row (or group table) is supplied by the component at run time.
        if tau.params == (ROW,) and tau.ret is BOOL:
            yield from emit(_bool_terms(t, env, extra_constants, True, value_ops))
            return
        if tau.params == (ROW,) and tau.ret is NUM:
            yield from emit(
                _num_terms(t, env, depth_budget, extra_constants, True, value_ops)
            )
            return
        if tau.params == (TBL,) and tau.ret is NUM:
            yield from emit(_aggregate_terms(t, value_ops))
            return
        # Explicit lambda: named parameters in scope for the body.
        params = tuple(
            (f"y{i + 1}", p) for i, p in enumerate(tau.params)
        )
        inner_env = tuple(env) + params
        if tau.ret is BOOL:
            bodies = _bool_terms(t, inner_env, extra_constants, False, value_ops)
        elif tau.ret is NUM:
            bodies = _num_terms(
                t, inner_env, depth_budget - 1, extra_constants, False, value_ops
            )
        elif tau.ret is STR:
            bodies = _str_terms(t, inner_env, extra_constants)
        else:
            return
        yield from emit(Lambda(params, body) for body in bodies)
        return
    raise TypeError(f"cannot inhabit {tau!r}")


def _str_terms(t, env, extras) -> Iterator[Term]:
    yield from _str_constants(t, extras)
    for name, ty in env:
        if ty is STR:
            yield Var(name)


def _num_atoms(t, env, extras, row_ok: bool) -> list[Term]:
    atoms: list[Term] = list(_num_constants(t, extras))
    if row_ok:
        atoms.extend(
            ColumnRef(n) for n, ty in _columns(t) if ty is ColumnType.NUM
        )
    atoms.extend(Var(name) for name, ty in env if ty is NUM)
    return atoms


def _allowed(names: tuple[str, ...], value_ops: Optional[frozenset]) -> tuple:
    if value_ops is None:
        return names
    return tuple(n for n in names if n in value_ops)


def _aggregate_terms(t, value_ops: Optional[frozenset] = None) -> Iterator[Term]:
    num_cols = [n for n, ty in _columns(t) if ty is ColumnType.NUM]
    for agg in _allowed(AGGREGATE_NAMES, value_ops):
        if agg == "count":
            yield Apply("count", ())
        else:
            for c in num_cols:
                yield Apply(agg, (ColumnRef(c),))


def _num_terms(
    t, env, depth: int, extras, row_ok: bool, value_ops: Optional[frozenset] = None
) -> Iterator[Term]:
    atoms = _num_atoms(t, env, extras, row_ok)
    yield from atoms
    if depth <= 0:
        return
    aggs = list(_aggregate_terms(t, value_ops)) if row_ok else []
    yield from aggs
    operands = atoms + aggs if depth >= 2 else atoms
    for op in _allowed(ARITHMETIC_NAMES, value_ops):
        for a in operands:
            for b in operands:
                yield Apply(op, (a, b))


def _bool_terms(
    t, env, extras, row_ok: bool, value_ops: Optional[frozenset] = None
) -> Iterator[Term]:
    columns = _columns(t) if row_ok else ()
    num_consts = _num_constants(t, extras)
    str_consts = _str_constants(t, extras)
    str_vars = [Var(n) for n, ty in env if ty is STR]
    num_vars = [Var(n) for n, ty in env if ty is NUM]

    def rhs_candidates(lhs_ty: ColumnType, lhs_name: Optional[str]):
        if lhs_ty is ColumnType.NUM:
            consts: list[Term] = list(num_consts)
            refs = [
                ColumnRef(n)
                for n, ty in columns
                if ty is ColumnType.NUM and n != lhs_name
            ]
            return consts + refs + num_vars
        consts = list(str_consts)
        refs = [
            ColumnRef(n)
            for n, ty in columns
            if ty is ColumnType.STR and n != lhs_name
        ]
        return consts + refs + str_vars

    for name, ty in columns:
        ops = COMPARISON_NAMES if ty is ColumnType.NUM else ("==", "!=")
        for op in _allowed(ops, value_ops):
            for rhs in rhs_candidates(ty, name):
                yield Apply(op, (ColumnRef(name), rhs))
    for var_name, var_ty in env:
        if var_ty not in (NUM, STR):
            continue
        cell_ty = ColumnType.NUM if var_ty is NUM else ColumnType.STR
        ops = COMPARISON_NAMES if var_ty is NUM else ("==", "!=")
        for op in _allowed(ops, value_ops):
            for rhs in rhs_candidates(cell_ty, None):
                if rhs != Var(var_name):
                    yield Apply(op, (Var(var_name), rhs))


# ---------------------------------------------------------------------------
# Sketch completion


@dataclass
class CompletionLimits:
    term_depth: int = 2
    extra_constants: tuple[CellValue, ...] = ()
    value_ops: Optional[frozenset] = None
    deadline: Optional[float] = None
    cancel: Optional[threading.Event] = None


@dataclass(frozen=True)
class _Fill:
    hole_id: int
    hole_type: TypeExpr
    owner_id: int


@dataclass(frozen=True)
class _Assemble:
    node_id: int


def _plan(node: Node, events: list) -> None:
    """Post-order: complete and execute table children before the value
    holes of their parent, then assemble the parent."""
    if isinstance(node, ComponentNode):
        value_holes = []
        for c in node.children:
            if isinstance(c, ComponentNode):
                _plan(c, events)
            elif isinstance(c, Hole):
                if c.type is TBL:
                    raise ValueError("fill_sketch needs a sketch (table leaves bound)")
                value_holes.append(c)
        for c in value_holes:
            events.append(_Fill(c.id, c.type, node.id))
        events.append(_Assemble(node.id))


TraceHook = Callable[[str, int, Optional[Term], str], None]


def fill_sketch(
    sketch: Node,
    example: Example,
    specs: SpecSet,
    limits: Optional[CompletionLimits] = None,
    ctx: Optional[DeduceContext] = None,
    trace: Optional[TraceHook] = None,
    ordered_rows: bool = False,
    partial_eval: bool = True,
) -> Iterator[Node]:
    """Lazily yield complete programs refining ``sketch``.

    Under spec levels 1/2 every yielded program already reproduces the
    expected output (the final deduction on a complete program is an
    exact table comparison).  Under the trivial level the stream is the
    full error-free completion space, unchecked.

    ``partial_eval=False`` hides interior evaluation results from
    deduction, which then rests only on the component specs and the
    example facts.  (Nodes are still executed once assembled; later
    holes need their tables as vocabulary.)  The flag shapes the default
    context; callers passing their own ``ctx`` control the same switch
    through ``collapse_concrete``.
    """
    limits = limits or CompletionLimits()
    ctx = ctx or DeduceContext(collapse_concrete=partial_eval)

    events: list = []
    _plan(sketch, events)

    if not events:
        # Zero-component sketch: a bare input binding.
        ann = _annotate(sketch, None)
        value = ann.get(sketch.id)
        if isinstance(value, str):
            return
        if specs.level is SpecLevel.NONE:
            yield sketch
            return
        verdict = deduce(sketch, example, specs, ordered_rows=ordered_rows, ctx=ctx)
        if trace:
            trace("assemble", sketch.id, None, verdict.value)
        if verdict is Feasibility.FEASIBLE:
            yield sketch
        return

    node_index: dict[int, ComponentNode] = {}

    def index_nodes(n: Node) -> None:
        if isinstance(n, ComponentNode):
            node_index[n.id] = n
            for c in n.children:
                index_nodes(c)

    index_nodes(sketch)

    # Pre-seed tables of bound leaves.
    seed_tables: dict[int, Table] = {}

    def seed(n: Node) -> None:
        if isinstance(n, QualifiedHole) and isinstance(n.qualifier, InputBinding):
            seed_tables[n.id] = n.qualifier.table
        elif isinstance(n, ComponentNode):
            for c in n.children:
                seed(c)

    seed(sketch)

    assignment: dict[int, Term] = {}
    tables: dict[int, Table] = dict(seed_tables)

    def check_interrupts() -> None:
        if limits.cancel is not None and limits.cancel.is_set():
            raise Interrupted("cancelled")
        if limits.deadline is not None and time.monotonic() > limits.deadline:
            raise Interrupted("timeout")

    def context_for(owner_id: int) -> Union[Table, CrossTable]:
        node = node_index[owner_id]
        child_tables = [
            tables[c.id]
            for c in node.children
            if not (isinstance(c, Hole) and c.type is not TBL)
            and not (
                isinstance(c, QualifiedHole)
                and isinstance(c.qualifier, TermBinding)
            )
        ]
        if len(child_tables) == 1:
            return child_tables[0]
        return CrossTable(tuple(child_tables))

    facts = (
        sketch_facts(sketch, example, specs)
        if specs.level is not SpecLevel.NONE
        else None
    )

    def accept(event_kind: str, event_id: int, term) -> bool:
        """Deduction gate; False abandons the branch.  The engine hands
        over its evaluation map, so nothing is re-executed here; a fill,
        which adds no new concrete fact, costs one memo lookup."""
        if facts is None:
            return True
        verdict = deduce_completion_state(
            facts,
            tables,
            example,
            specs,
            ordered_rows=ordered_rows,
            ctx=ctx,
        )
        if trace:
            trace(event_kind, event_id, term, verdict.value)
        return verdict is Feasibility.FEASIBLE

    def run(i: int, tree: Node) -> Iterator[Node]:
        check_interrupts()
        if i == len(events):
            yield tree
            return
        ev = events[i]
        if isinstance(ev, _Fill):
            context = context_for(ev.owner_id)
            for term in inhabit(
                ev.hole_type,
                context,
                (),
                limits.term_depth,
                limits.extra_constants,
                limits.value_ops,
            ):
                check_interrupts()
                assignment[ev.hole_id] = term
                bound = replace_node(
                    tree,
                    ev.hole_id,
                    QualifiedHole(ev.hole_id, ev.hole_type, TermBinding(term)),
                )
                if accept("fill", ev.hole_id, term):
                    yield from run(i + 1, bound)
                del assignment[ev.hole_id]
            return
        # Assemble: execute the node now that its children are concrete.
        # Evaluation errors are silent skips (brute force cannot use
        # those completions either); deduction rejects are traced.
        node = node_index[ev.node_id]
        child_tables = []
        terms = []
        for c in node.children:
            if isinstance(c, Hole):
                terms.append(assignment[c.id])
            elif isinstance(c, QualifiedHole) and isinstance(
                c.qualifier, TermBinding
            ):
                terms.append(c.qualifier.term)
            else:
                child_tables.append(tables[c.id])
        try:
            result = eval_table_component(node.component, child_tables, terms)
        except InterpreterError:
            if trace:
                trace("assemble", ev.node_id, None, "eval_error")
            return
        tables[ev.node_id] = result
        if accept("assemble", ev.node_id, None):
            yield from run(i + 1, tree)
        del tables[ev.node_id]

    yield from run(0, sketch)
