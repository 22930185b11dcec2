"""Construction shorthand shared by the test modules: terms, predicate
comparisons, and complete-program trees built without going through the
search."""

from __future__ import annotations

from typing import Sequence, Union

from tablesynth.components import (
    Apply,
    ColsLiteral,
    ColumnRef,
    Const,
    TBL,
    Term,
)
from tablesynth.hypotheses import (
    ComponentNode,
    Node,
    QualifiedHole,
    InputBinding,
    TermBinding,
)
from tablesynth.tables import Num, Str, Table


def num(x) -> Const:
    return Const(Num(x))


def text(x: str) -> Const:
    return Const(Str(x))


def cols(*names: str) -> ColsLiteral:
    return ColsLiteral(tuple(names))


def cmp(column: str, op: str, rhs: Union[Term, int, float, str]) -> Apply:
    """Row predicate `column OP rhs`; bare numbers and strings become
    constants, another column name must be passed as ColumnRef."""
    if isinstance(rhs, (int, float)):
        rhs = num(rhs)
    elif isinstance(rhs, str):
        rhs = text(rhs)
    return Apply(op, (ColumnRef(column), rhs))


# Plans are nested tuples: ("comp", child_plan_or_term, ...) with table
# leaves written as ("@", argName, table).  Ids are assigned root-first,
# children left to right, matching how refine numbers fresh holes.


def build_program(plan, inputs: Sequence[tuple[str, Table]] = ()) -> Node:
    counter = [0]

    def fresh() -> int:
        counter[0] += 1
        return counter[0] - 1

    def walk(p) -> Node:
        node_id = fresh()
        if isinstance(p, tuple) and p and p[0] == "@":
            _, arg_name, table = p
            return QualifiedHole(node_id, TBL, InputBinding(arg_name, table))
        if isinstance(p, tuple):
            name, *rest = p
            children = []
            for item in rest:
                if isinstance(item, tuple):
                    children.append(walk(item))
                else:
                    hole_id = fresh()
                    # The type slot is unused once a term is bound.
                    children.append(
                        QualifiedHole(hole_id, None, TermBinding(item))
                    )
            return ComponentNode(node_id, name, tuple(children))
        raise TypeError(f"bad plan node: {p!r}")

    return walk(plan)
