"""Hypotheses: refinement trees of typed holes.

A hypothesis starts as a single table-typed hole and grows by refining
table holes into component applications whose children are fresh holes.
Binding every table leaf to an example input makes it a sketch; binding
every remaining leaf (to input tables or to value terms) makes it a
complete program.

``partial_eval`` executes every subtree whose inputs are already
concrete, replacing it in place with its result table, so deduction can
treat finished prefixes of a program as plain facts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

from .components import (
    TBL,
    ComponentRegistry,
    InterpreterError,
    Term,
    TypeExpr,
    builtin_registry,
    eval_table_component,
)
from .tables import Example, Table


class NotATableHoleError(Exception):
    pass


@dataclass(frozen=True)
class InputBinding:
    """Leaf qualifier: this hole is one of the example's input tables."""

    arg_name: str
    table: Table


@dataclass(frozen=True)
class TermBinding:
    """Leaf qualifier: this value hole is a concrete term."""

    term: Term


Qualifier = Union[InputBinding, TermBinding]


@dataclass(frozen=True)
class Hole:
    id: int
    type: TypeExpr


@dataclass(frozen=True)
class QualifiedHole:
    id: int
    type: TypeExpr
    qualifier: Qualifier


@dataclass(frozen=True)
class ComponentNode:
    """A component application; keeps the id of the hole it refined."""

    id: int
    component: str
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Evaluated:
    """A subtree partial evaluation already reduced to a table."""

    id: int
    table: Table


@dataclass(frozen=True)
class EvalFailed:
    """A subtree whose evaluation raised; poisons the hypothesis."""

    id: int
    error: str


Node = Union[Hole, QualifiedHole, ComponentNode, Evaluated, EvalFailed]

Hypothesis = Node


def root_hole() -> Hole:
    """The starting hypothesis: one table-typed hole."""
    return Hole(0, TBL)


def iter_nodes(h: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [h]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, ComponentNode):
            stack.extend(reversed(node.children))


def max_id(h: Node) -> int:
    return max(n.id for n in iter_nodes(h))


def transformer_count(h: Node) -> int:
    return sum(1 for n in iter_nodes(h) if isinstance(n, ComponentNode))


def component_sequence(h: Node) -> tuple[str, ...]:
    return tuple(
        n.component for n in iter_nodes(h) if isinstance(n, ComponentNode)
    )


def open_table_holes(h: Node) -> list[Hole]:
    """Unqualified table-typed holes in pre-order (left-to-right)."""
    return [
        n
        for n in iter_nodes(h)
        if isinstance(n, Hole) and n.type is TBL
    ]


def open_holes(h: Node) -> list[Hole]:
    return [n for n in iter_nodes(h) if isinstance(n, Hole)]


def is_sketch(h: Node) -> bool:
    """All table leaves bound (value holes may stay open)."""
    return not open_table_holes(h)


def is_complete(h: Node) -> bool:
    return not open_holes(h)


def find_node(h: Node, node_id: int) -> Optional[Node]:
    for n in iter_nodes(h):
        if n.id == node_id:
            return n
    return None


def replace_node(h: Node, node_id: int, new_node: Node) -> Node:
    """Functional single-node replacement by id."""
    if h.id == node_id:
        return new_node
    if isinstance(h, ComponentNode):
        changed = False
        children = []
        for c in h.children:
            r = replace_node(c, node_id, new_node)
            changed = changed or (r is not c)
            children.append(r)
        if changed:
            return ComponentNode(h.id, h.component, tuple(children))
    return h


def refine(
    h: Node,
    hole_id: int,
    component_name: str,
    registry: Optional[ComponentRegistry] = None,
) -> Node:
    """Replace an open table hole with an application of the component,
    whose children are fresh holes typed by the component signature.
    Fresh ids continue from the largest id in the tree, child order
    first, so ids match the left-to-right order holes were created in.
    """
    registry = registry or builtin_registry()
    comp = registry.table_component(component_name)  # UnknownComponentError
    target = find_node(h, hole_id)
    if target is None or not isinstance(target, Hole) or target.type is not TBL:
        raise NotATableHoleError(f"hole {hole_id} is not an open table hole")
    next_id = max_id(h) + 1
    children = []
    for ty in comp.hole_types():
        children.append(Hole(next_id, ty))
        next_id += 1
    node = ComponentNode(hole_id, component_name, tuple(children))
    return replace_node(h, hole_id, node)


def bind_hole(h: Node, hole_id: int, qualifier: Qualifier) -> Node:
    target = find_node(h, hole_id)
    if not isinstance(target, Hole):
        raise NotATableHoleError(f"hole {hole_id} is not open")
    return replace_node(h, hole_id, QualifiedHole(target.id, target.type, qualifier))


def sketches(h: Node, inputs: Sequence[tuple[str, Table]]) -> list[Node]:
    """All ways to bind the open table leaves to example inputs, leaves
    left-to-right varying slowest, inputs in declaration order."""
    holes = open_table_holes(h)
    results = [h]
    for hole in holes:
        extended = []
        for partial in results:
            for arg_name, table in inputs:
                extended.append(
                    bind_hole(partial, hole.id, InputBinding(arg_name, table))
                )
        results = extended
    return results


# ---------------------------------------------------------------------------
# Partial evaluation


@dataclass(frozen=True)
class Concrete:
    table: Table


@dataclass(frozen=True)
class Residual:
    tree: Node


PartialValue = Union[Concrete, Residual]


def _eval_node(h: Node, known: Optional[dict[int, Table]]) -> Node:
    if isinstance(h, QualifiedHole):
        if isinstance(h.qualifier, InputBinding):
            return Evaluated(h.id, h.qualifier.table)
        return h
    if not isinstance(h, ComponentNode):
        return h
    if known is not None and h.id in known:
        return Evaluated(h.id, known[h.id])
    children = tuple(_eval_node(c, known) for c in h.children)
    tables = []
    terms = []
    ready = True
    for c in children:
        if isinstance(c, Evaluated):
            tables.append(c.table)
        elif isinstance(c, QualifiedHole) and isinstance(c.qualifier, TermBinding):
            terms.append(c.qualifier.term)
        else:
            ready = False
    if ready:
        try:
            result = eval_table_component(h.component, tables, terms)
        except InterpreterError as e:
            return EvalFailed(h.id, f"{type(e).__name__}: {e}")
        return Evaluated(h.id, result)
    return ComponentNode(h.id, h.component, children)


def partial_eval(
    h: Node, known_tables: Optional[dict[int, Table]] = None
) -> PartialValue:
    """Evaluate every subtree whose table inputs are bound and whose
    value holes are filled.  A subtree that raises an interpreter error
    becomes an EvalFailed marker in the residual tree.  ``known_tables``
    lets callers reuse tables they already computed for given node ids.
    """
    reduced = _eval_node(h, known_tables)
    if isinstance(reduced, Evaluated):
        return Concrete(reduced.table)
    return Residual(reduced)


def eval_failures(h: Node) -> list[EvalFailed]:
    return [n for n in iter_nodes(h) if isinstance(n, EvalFailed)]


# ---------------------------------------------------------------------------
# Printing and hashing


def _term_text(term: Term) -> str:
    from .dsl import term_to_text  # local import to avoid a cycle

    return term_to_text(term)


def node_text(h: Node) -> str:
    """Stable one-line rendering with explicit hole ids, for hashing,
    debugging, and worklist traces."""
    if isinstance(h, Hole):
        return f"?{h.id}:{h.type!r}"
    if isinstance(h, QualifiedHole):
        if isinstance(h.qualifier, InputBinding):
            return f"?{h.id}@{h.qualifier.arg_name}"
        return f"?{h.id}={_term_text(h.qualifier.term)}"
    if isinstance(h, Evaluated):
        return f"?{h.id}=<table:{_table_digest(h.table)}>"
    if isinstance(h, EvalFailed):
        return f"?{h.id}=<failed:{h.error}>"
    inner = ", ".join(node_text(c) for c in h.children)
    return f"?{h.id}^{h.component}({inner})"


def _table_digest(t: Table) -> str:
    parts = [",".join(f"{n}:{ty.value}" for n, ty in t.schema)]
    parts.append(";".join(",".join(v.render() for v in r) for r in t.rows))
    parts.append(",".join(t.group_cols))
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:12]


def stable_hash(h: Node) -> str:
    return hashlib.sha256(node_text(h).encode()).hexdigest()
