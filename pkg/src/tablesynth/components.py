"""Component vocabulary and its concrete interpreter.

Ten table transformers (the tidyr/dplyr core: spread, gather, select,
filter, summarise, group_by, mutate, unite, separate, inner_join) plus
the value-level operators usable inside predicates, aggregates, and
mutate expressions.  All evaluation is exact: numbers are rationals and
the string separator for unite/separate is fixed to ``_``.

The interpreter is deliberately strict.  Calls that cannot possibly
advance a synthesis pipeline (a filter that keeps every row, a select
that keeps every column, a gather of fewer than two columns, a spread
of fewer than two distinct keys) raise NoOpApplicationError instead of
returning their input unchanged; this keeps the interpreter's reachable
behaviors inside what the deduction specs promise about each component.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .tables import (
    CellValue,
    ColumnType,
    Num,
    Str,
    Table,
    cell_type,
)

SEPARATOR = "_"


class InterpreterError(Exception):
    """Base class for everything the interpreter can reject."""


class UnknownColumnError(InterpreterError):
    pass


class DuplicateColumnError(InterpreterError):
    pass


class SeparatorMissingError(InterpreterError):
    pass


class CellTypeError(InterpreterError):
    pass


class EmptyGroupByError(InterpreterError):
    pass


class DivisionByZeroError(InterpreterError):
    pass


class UnboundVariableError(InterpreterError):
    pass


class NoOpApplicationError(InterpreterError):
    """The call would be a no-op (or shape-degenerate) and is rejected."""


class MissingSpreadKeyError(InterpreterError):
    """A spread group lacks a value for one of the keys."""


class NoSharedColumnsError(InterpreterError):
    pass


class UnknownComponentError(Exception):
    pass


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Base:
    name: str

    def __repr__(self) -> str:
        return self.name


NUM = Base("num")
STR = Base("str")
BOOL = Base("bool")
COLS = Base("cols")
TBL = Base("tbl")
ROW = Base("row")


@dataclass(frozen=True)
class Func:
    params: tuple["TypeExpr", ...]
    ret: "TypeExpr"

    def __post_init__(self):
        if not self.params:
            raise ValueError("function types take at least one parameter")

    def __repr__(self) -> str:
        inner = ", ".join(repr(p) for p in self.params)
        return f"({inner}) -> {self.ret!r}"


@dataclass(frozen=True)
class Product:
    items: tuple["TypeExpr", ...]

    def __repr__(self) -> str:
        return "(" + " * ".join(repr(i) for i in self.items) + ")"


TypeExpr = Union[Base, Func, Product]


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Const:
    value: CellValue


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Lambda:
    params: tuple[tuple[str, TypeExpr], ...]
    body: "Term"


@dataclass(frozen=True)
class ColsLiteral:
    names: tuple[str, ...]


Term = Union[Const, Var, ColumnRef, Apply, Lambda, ColsLiteral]


@dataclass(frozen=True)
class RowContext:
    """Evaluation context for column references and aggregates: a table
    and, when evaluating per-row expressions, the current row index."""

    table: Table
    index: Optional[int] = None


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class TableComponent:
    name: str
    n_tables: int
    value_params: tuple[TypeExpr, ...]

    def hole_types(self) -> tuple[TypeExpr, ...]:
        return (TBL,) * self.n_tables + self.value_params


@dataclass(frozen=True)
class ValueComponent:
    name: str
    params: tuple[TypeExpr, ...]
    ret: TypeExpr
    # Aggregates evaluate against the whole context table (their column
    # argument names a column rather than a per-row value).
    aggregate: bool = False
    # eq/ne compare any two values of one cell type, not just numbers.
    polymorphic: bool = False


@dataclass(frozen=True)
class ComponentRegistry:
    table: tuple[TableComponent, ...]
    value: tuple[ValueComponent, ...]

    def table_component(self, name: str) -> TableComponent:
        for c in self.table:
            if c.name == name:
                return c
        raise UnknownComponentError(name)

    def value_component(self, name: str) -> ValueComponent:
        for c in self.value:
            if c.name == name:
                return c
        raise UnknownComponentError(name)

    def has_table_component(self, name: str) -> bool:
        return any(c.name == name for c in self.table)

    def restrict(
        self,
        table_names: Optional[Sequence[str]] = None,
        value_names: Optional[Sequence[str]] = None,
    ) -> "ComponentRegistry":
        if table_names is None:
            table = self.table
        else:
            table = tuple(self.table_component(n) for n in table_names)
        if value_names is None:
            value = self.value
        else:
            value = tuple(self.value_component(n) for n in value_names)
        return ComponentRegistry(table, value)


_PRED = Func((ROW,), BOOL)
_NUM_EXPR = Func((ROW,), NUM)
_AGG = Func((TBL,), NUM)

_TABLE_COMPONENTS = (
    TableComponent("spread", 1, (STR, STR)),
    TableComponent("gather", 1, (STR, STR, COLS)),
    TableComponent("select", 1, (COLS,)),
    TableComponent("filter", 1, (_PRED,)),
    TableComponent("summarise", 1, (STR, _AGG)),
    TableComponent("group_by", 1, (COLS,)),
    TableComponent("mutate", 1, (STR, _NUM_EXPR)),
    TableComponent("unite", 1, (STR, STR, STR)),
    TableComponent("separate", 1, (STR, STR, STR)),
    TableComponent("inner_join", 2, ()),
)

_VALUE_COMPONENTS = (
    ValueComponent("<", (NUM, NUM), BOOL),
    ValueComponent(">", (NUM, NUM), BOOL),
    ValueComponent("==", (NUM, NUM), BOOL, polymorphic=True),
    ValueComponent("!=", (NUM, NUM), BOOL, polymorphic=True),
    ValueComponent("+", (NUM, NUM), NUM),
    ValueComponent("-", (NUM, NUM), NUM),
    ValueComponent("*", (NUM, NUM), NUM),
    ValueComponent("/", (NUM, NUM), NUM),
    ValueComponent("sum", (NUM,), NUM, aggregate=True),
    ValueComponent("mean", (NUM,), NUM, aggregate=True),
    ValueComponent("min", (NUM,), NUM, aggregate=True),
    ValueComponent("max", (NUM,), NUM, aggregate=True),
    ValueComponent("count", (TBL,), NUM, aggregate=True),
)

_BUILTIN = ComponentRegistry(_TABLE_COMPONENTS, _VALUE_COMPONENTS)

AGGREGATE_NAMES = tuple(c.name for c in _VALUE_COMPONENTS if c.aggregate)
ARITHMETIC_NAMES = ("+", "-", "*", "/")
COMPARISON_NAMES = ("<", ">", "==", "!=")


def builtin_registry() -> ComponentRegistry:
    return _BUILTIN


# ---------------------------------------------------------------------------
# Term evaluation


def eval_term(
    term: Term,
    env: Optional[dict[str, CellValue]] = None,
    row: Optional[RowContext] = None,
):
    """Evaluate a value-level term.  Returns a CellValue for numeric and
    string terms, a bool for predicates, and a tuple of names for column
    set literals."""
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        if env is None or term.name not in env:
            raise UnboundVariableError(term.name)
        return env[term.name]
    if isinstance(term, ColsLiteral):
        return term.names
    if isinstance(term, ColumnRef):
        if row is None or row.index is None:
            raise UnboundVariableError(
                f"column reference {term.name!r} outside a row context"
            )
        try:
            j = row.table.column_index(term.name)
        except KeyError:
            raise UnknownColumnError(term.name) from None
        return row.table.rows[row.index][j]
    if isinstance(term, Apply):
        return _eval_apply(term, env, row)
    if isinstance(term, Lambda):
        raise CellTypeError("a bare lambda is not a value; apply it")
    raise TypeError(f"not a term: {term!r}")


def apply_function(
    term: Term,
    args: Sequence[CellValue],
    row: Optional[RowContext] = None,
):
    """Apply a function-valued term (a Lambda, or a bare body using the
    implicit row variable) to concrete arguments."""
    if isinstance(term, Lambda):
        env = {name: value for (name, _), value in zip(term.params, args)}
        return eval_term(term.body, env, row)
    return eval_term(term, None, row)


def _numeric_column(table: Table, name: str) -> tuple[Fraction, ...]:
    try:
        j = table.column_index(name)
    except KeyError:
        raise UnknownColumnError(name) from None
    if table.schema[j][1] is not ColumnType.NUM:
        raise CellTypeError(f"aggregate over non-numeric column {name!r}")
    return tuple(r[j].value for r in table.rows)


def _eval_apply(term: Apply, env, row):
    comp = _BUILTIN.value_component(term.fn)
    if comp.aggregate:
        if row is None:
            raise UnboundVariableError(f"aggregate {term.fn!r} outside a table context")
        if term.fn == "count":
            if term.args:
                raise CellTypeError("count takes no arguments")
            return Num(Fraction(row.table.n_rows))
        if len(term.args) != 1 or not isinstance(term.args[0], ColumnRef):
            raise CellTypeError(f"{term.fn} expects a single column reference")
        values = _numeric_column(row.table, term.args[0].name)
        if term.fn == "sum":
            return Num(sum(values, Fraction(0)))
        if not values:
            raise CellTypeError(f"{term.fn} of an empty column")
        if term.fn == "mean":
            return Num(sum(values, Fraction(0)) / len(values))
        if term.fn == "min":
            return Num(min(values))
        return Num(max(values))

    args = [eval_term(a, env, row) for a in term.args]
    if term.fn in COMPARISON_NAMES:
        a, b = args
        if not isinstance(a, (Num, Str)) or not isinstance(b, (Num, Str)):
            raise CellTypeError(f"{term.fn} over non-cell values")
        if cell_type(a) is not cell_type(b):
            raise CellTypeError(f"{term.fn} across cell types")
        if term.fn == "==":
            return a == b
        if term.fn == "!=":
            return a != b
        if isinstance(a, Str):
            raise CellTypeError(f"{term.fn} over strings")
        return a.value < b.value if term.fn == "<" else a.value > b.value
    if term.fn in ARITHMETIC_NAMES:
        a, b = args
        if not isinstance(a, Num) or not isinstance(b, Num):
            raise CellTypeError(f"{term.fn} over non-numbers")
        if term.fn == "+":
            return Num(a.value + b.value)
        if term.fn == "-":
            return Num(a.value - b.value)
        if term.fn == "*":
            return Num(a.value * b.value)
        if b.value == 0:
            raise DivisionByZeroError(f"{a.render()} / 0")
        return Num(a.value / b.value)
    raise UnknownComponentError(term.fn)


# ---------------------------------------------------------------------------
# Table component evaluation


def eval_table_component(
    name: str, tables: Sequence[Table], args: Sequence[Term]
) -> Table:
    comp = _BUILTIN.table_component(name)
    if len(tables) != comp.n_tables:
        raise InterpreterError(
            f"{name} takes {comp.n_tables} table(s), got {len(tables)}"
        )
    if len(args) != len(comp.value_params):
        raise InterpreterError(
            f"{name} takes {len(comp.value_params)} value argument(s), "
            f"got {len(args)}"
        )
    return _TABLE_EVAL[name](*tables, *args)


def _as_name(term: Term, what: str) -> str:
    if isinstance(term, Const) and isinstance(term.value, Str):
        return term.value.value
    raise CellTypeError(f"{what} must be a string constant, got {term!r}")


def _as_cols(term: Term) -> tuple[str, ...]:
    if isinstance(term, ColsLiteral):
        if len(set(term.names)) != len(term.names):
            raise DuplicateColumnError(f"repeated column in {term.names}")
        return term.names
    raise CellTypeError(f"expected a column set, got {term!r}")


def _require_columns(t: Table, names: Sequence[str]) -> None:
    for n in names:
        if n not in t.column_names:
            raise UnknownColumnError(n)


def _carry_groups(t: Table, new_names: Sequence[str], comp: str) -> tuple[str, ...]:
    for g in t.group_cols:
        if g not in new_names:
            raise UnknownColumnError(
                f"{comp} would drop grouping column {g!r}"
            )
    return t.group_cols


def _eval_spread(t: Table, key_arg: Term, val_arg: Term) -> Table:
    key = _as_name(key_arg, "spread key column")
    val = _as_name(val_arg, "spread value column")
    if key == val:
        raise DuplicateColumnError("spread key and value columns coincide")
    _require_columns(t, [key, val])
    ki, vi = t.column_index(key), t.column_index(val)
    rest = [j for j in range(t.n_cols) if j not in (ki, vi)]
    rest_names = [t.schema[j][0] for j in rest]
    # Distinct key values in first-occurrence order become column names.
    key_names: list[str] = []
    for r in t.rows:
        rendered = r[ki].render()
        if rendered not in key_names:
            key_names.append(rendered)
    if len(key_names) < 2:
        raise NoOpApplicationError("spread needs at least 2 distinct key values")
    for kn in key_names:
        if kn in rest_names:
            raise DuplicateColumnError(f"spread key value {kn!r} clashes with a column")
    val_type = t.schema[vi][1]
    groups: dict[tuple, dict[str, CellValue]] = {}
    order: list[tuple] = []
    group_rows: dict[tuple, tuple[CellValue, ...]] = {}
    for r in t.rows:
        gk = tuple(r[j] for j in rest)
        if gk not in groups:
            groups[gk] = {}
            order.append(gk)
            group_rows[gk] = gk
        cell_key = r[ki].render()
        if cell_key in groups[gk]:
            raise DuplicateColumnError(
                f"spread key {cell_key!r} appears twice for one row group"
            )
        groups[gk][cell_key] = r[vi]
    schema = tuple((t.schema[j][0], t.schema[j][1]) for j in rest) + tuple(
        (kn, val_type) for kn in key_names
    )
    rows = []
    for gk in order:
        filled = groups[gk]
        cells = list(group_rows[gk])
        for kn in key_names:
            if kn not in filled:
                raise MissingSpreadKeyError(
                    f"row group {gk!r} has no value for key {kn!r}"
                )
            cells.append(filled[kn])
        rows.append(tuple(cells))
    group_cols = _carry_groups(t, [s[0] for s in schema], "spread")
    return Table(schema, tuple(rows), group_cols)


def _eval_gather(t: Table, key_arg: Term, val_arg: Term, cols_arg: Term) -> Table:
    key = _as_name(key_arg, "gather key name")
    val = _as_name(val_arg, "gather value name")
    cols = _as_cols(cols_arg)
    _require_columns(t, cols)
    if len(cols) < 2:
        raise NoOpApplicationError("gather needs at least 2 columns")
    if key == val:
        raise DuplicateColumnError("gather key and value names coincide")
    col_idx = [t.column_index(c) for c in cols]
    col_types = {t.schema[j][1] for j in col_idx}
    if len(col_types) != 1:
        raise CellTypeError("gather over columns of mixed types")
    rest = [j for j in range(t.n_cols) if j not in col_idx]
    # The clash check covers the gathered names too; letting the key or
    # value column take over a gathered column's name silently changes
    # what that name means (and what it groups by) downstream.
    for n in (key, val):
        if n in t.column_names:
            raise DuplicateColumnError(f"gather name {n!r} clashes with a column")
    schema = tuple((t.schema[j][0], t.schema[j][1]) for j in rest) + (
        (key, ColumnType.STR),
        (val, col_types.pop()),
    )
    rows = []
    for r in t.rows:
        base = tuple(r[j] for j in rest)
        for c, j in zip(cols, col_idx):
            rows.append(base + (Str(c), r[j]))
    group_cols = _carry_groups(t, [s[0] for s in schema], "gather")
    return Table(schema, tuple(rows), group_cols)


def _eval_select(t: Table, cols_arg: Term) -> Table:
    cols = _as_cols(cols_arg)
    if not cols:
        raise InterpreterError("select with no columns")
    _require_columns(t, cols)
    if len(cols) >= t.n_cols:
        raise NoOpApplicationError("select must drop at least one column")
    idx = [t.column_index(c) for c in cols]
    schema = tuple(t.schema[j] for j in idx)
    rows = tuple(tuple(r[j] for j in idx) for r in t.rows)
    group_cols = _carry_groups(t, cols, "select")
    return Table(schema, rows, group_cols)


def _eval_filter(t: Table, pred: Term) -> Table:
    kept = []
    for i in range(t.n_rows):
        result = apply_function(pred, (), RowContext(t, i))
        if not isinstance(result, bool):
            raise CellTypeError("filter predicate did not return a boolean")
        if result:
            kept.append(t.rows[i])
    if len(kept) == t.n_rows:
        raise NoOpApplicationError("filter kept every row")
    return Table(t.schema, tuple(kept), t.group_cols)


def _eval_group_by(t: Table, cols_arg: Term) -> Table:
    cols = _as_cols(cols_arg)
    if not cols:
        raise EmptyGroupByError("group_by with no columns")
    _require_columns(t, cols)
    merged = list(t.group_cols) + [c for c in cols if c not in t.group_cols]
    if merged == list(t.group_cols):
        raise NoOpApplicationError("group_by added no grouping column")
    return Table(t.schema, t.rows, tuple(merged))


def _group_order(t: Table) -> list[tuple[tuple[CellValue, ...], list[int]]]:
    """Groups as (key, row indices) in first-occurrence order; one group
    holding everything when the table is ungrouped."""
    if not t.group_cols:
        return [((), list(range(t.n_rows)))]
    idx = [t.column_index(g) for g in t.group_cols]
    order: list[tuple[CellValue, ...]] = []
    members: dict[tuple[CellValue, ...], list[int]] = {}
    for i, r in enumerate(t.rows):
        key = tuple(r[j] for j in idx)
        if key not in members:
            members[key] = []
            order.append(key)
        members[key].append(i)
    return [(key, members[key]) for key in order]


def _eval_summarise(t: Table, name_arg: Term, agg: Term) -> Table:
    name = _as_name(name_arg, "summarise column name")
    if name in t.group_cols:
        raise DuplicateColumnError(f"summarise name {name!r} is a grouping column")
    if t.n_rows == 0:
        # count() would happily produce a row out of nothing, growing
        # the table; every other aggregate rejects the empty column.
        raise InterpreterError("summarise of an empty table")
    group_schema = tuple(
        (g, t.schema[t.column_index(g)][1]) for g in t.group_cols
    )
    schema = group_schema + ((name, ColumnType.NUM),)
    rows = []
    for key, idx in _group_order(t):
        sub = Table(t.schema, tuple(t.rows[i] for i in idx), ())
        value = apply_function(agg, (), RowContext(sub, None))
        if not isinstance(value, Num):
            raise CellTypeError("summarise aggregate did not return a number")
        rows.append(tuple(key) + (value,))
    return Table(schema, tuple(rows), t.group_cols)


def _eval_mutate(t: Table, name_arg: Term, expr: Term) -> Table:
    name = _as_name(name_arg, "mutate column name")
    if name in t.column_names:
        raise DuplicateColumnError(f"mutate name {name!r} already exists")
    schema = t.schema + ((name, ColumnType.NUM),)
    rows = []
    for i in range(t.n_rows):
        value = apply_function(expr, (), RowContext(t, i))
        if not isinstance(value, Num):
            raise CellTypeError("mutate expression did not return a number")
        rows.append(t.rows[i] + (value,))
    return Table(schema, tuple(rows), t.group_cols)


def _eval_unite(t: Table, name_arg: Term, c1_arg: Term, c2_arg: Term) -> Table:
    name = _as_name(name_arg, "unite column name")
    c1 = _as_name(c1_arg, "unite first column")
    c2 = _as_name(c2_arg, "unite second column")
    if c1 == c2:
        raise DuplicateColumnError("unite of a column with itself")
    _require_columns(t, [c1, c2])
    i1, i2 = t.column_index(c1), t.column_index(c2)
    keep = [j for j in range(t.n_cols) if j not in (i1, i2)]
    if name in (t.schema[j][0] for j in keep):
        raise DuplicateColumnError(f"unite name {name!r} clashes with a column")
    pos = min(i1, i2)
    schema_list: list[tuple[str, ColumnType]] = []
    for j in range(t.n_cols):
        if j == pos:
            schema_list.append((name, ColumnType.STR))
        elif j in (i1, i2):
            continue
        else:
            schema_list.append(t.schema[j])
    rows = []
    for r in t.rows:
        united = Str(r[i1].render() + SEPARATOR + r[i2].render())
        cells: list[CellValue] = []
        for j in range(t.n_cols):
            if j == pos:
                cells.append(united)
            elif j in (i1, i2):
                continue
            else:
                cells.append(r[j])
        rows.append(tuple(cells))
    group_cols = _carry_groups(t, [s[0] for s in schema_list], "unite")
    return Table(tuple(schema_list), tuple(rows), group_cols)


def _eval_separate(t: Table, col_arg: Term, n1_arg: Term, n2_arg: Term) -> Table:
    col = _as_name(col_arg, "separate column")
    n1 = _as_name(n1_arg, "separate first name")
    n2 = _as_name(n2_arg, "separate second name")
    _require_columns(t, [col])
    if n1 == n2:
        raise DuplicateColumnError("separate into twice the same name")
    ci = t.column_index(col)
    if t.schema[ci][1] is not ColumnType.STR:
        raise CellTypeError(f"separate over non-text column {col!r}")
    others = [t.schema[j][0] for j in range(t.n_cols) if j != ci]
    for n in (n1, n2):
        if n in others:
            raise DuplicateColumnError(f"separate name {n!r} clashes with a column")
    schema_list = []
    for j in range(t.n_cols):
        if j == ci:
            schema_list.append((n1, ColumnType.STR))
            schema_list.append((n2, ColumnType.STR))
        else:
            schema_list.append(t.schema[j])
    rows = []
    for r in t.rows:
        text = r[ci].value
        if SEPARATOR not in text:
            raise SeparatorMissingError(f"no {SEPARATOR!r} in {text!r}")
        left, right = text.split(SEPARATOR, 1)
        cells = []
        for j in range(t.n_cols):
            if j == ci:
                cells.append(Str(left))
                cells.append(Str(right))
            else:
                cells.append(r[j])
        rows.append(tuple(cells))
    group_cols = _carry_groups(t, [s[0] for s in schema_list], "separate")
    return Table(tuple(schema_list), tuple(rows), group_cols)


def _eval_inner_join(t1: Table, t2: Table) -> Table:
    """Natural join on every shared column name.  Output columns are
    t1's schema followed by t2's non-shared columns; the result is
    ungrouped."""
    shared = [n for n in t1.column_names if n in t2.column_names]
    if not shared:
        raise NoSharedColumnsError("inner_join needs a shared column")
    for n in shared:
        if t1.column_type(n) is not t2.column_type(n):
            raise CellTypeError(f"join column {n!r} has mismatched types")
    left_idx = [t1.column_index(n) for n in shared]
    right_idx = [t2.column_index(n) for n in shared]
    extra = [j for j in range(t2.n_cols) if t2.schema[j][0] not in shared]
    schema = t1.schema + tuple(t2.schema[j] for j in extra)
    rows = []
    for r1 in t1.rows:
        key1 = tuple(r1[j] for j in left_idx)
        for r2 in t2.rows:
            if tuple(r2[j] for j in right_idx) == key1:
                rows.append(r1 + tuple(r2[j] for j in extra))
    return Table(schema, tuple(rows), ())


_TABLE_EVAL = {
    "spread": _eval_spread,
    "gather": _eval_gather,
    "select": _eval_select,
    "filter": _eval_filter,
    "summarise": _eval_summarise,
    "group_by": _eval_group_by,
    "mutate": _eval_mutate,
    "unite": _eval_unite,
    "separate": _eval_separate,
    "inner_join": _eval_inner_join,
}


# ---------------------------------------------------------------------------
# Light type inference for terms (used by the DSL parser and tests)


def infer_type(
    term: Term,
    table: Optional[Table] = None,
    env: Optional[dict[str, TypeExpr]] = None,
) -> TypeExpr:
    if isinstance(term, Const):
        return NUM if isinstance(term.value, Num) else STR
    if isinstance(term, Var):
        if env is None or term.name not in env:
            raise UnboundVariableError(term.name)
        return env[term.name]
    if isinstance(term, ColsLiteral):
        return COLS
    if isinstance(term, ColumnRef):
        if table is None:
            raise UnboundVariableError(term.name)
        try:
            ty = table.column_type(term.name)
        except KeyError:
            raise UnknownColumnError(term.name) from None
        return NUM if ty is ColumnType.NUM else STR
    if isinstance(term, Lambda):
        inner = dict(env or {})
        for name, ty in term.params:
            inner[name] = ty
        ret = infer_type(term.body, table, inner)
        return Func(tuple(ty for _, ty in term.params), ret)
    if isinstance(term, Apply):
        comp = _BUILTIN.value_component(term.fn)
        if comp.aggregate:
            return NUM
        arg_types = [infer_type(a, table, env) for a in term.args]
        if comp.polymorphic:
            if len(set(map(repr, arg_types))) != 1:
                raise CellTypeError(f"{term.fn} across types {arg_types}")
        else:
            for got, want in zip(arg_types, comp.params):
                if repr(got) != repr(want):
                    raise CellTypeError(
                        f"{term.fn} expected {want!r}, got {got!r}"
                    )
        return comp.ret
    raise TypeError(f"not a term: {term!r}")
