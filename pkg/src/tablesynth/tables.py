"""Tables, cell values, CSV loading, equality, and abstraction.

Cells are either exact rational numbers (``Num``) or strings (``Str``).
Numbers compare and render at 7 significant digits, so ``2/3`` equals a
value loaded from the text ``0.6666667``.  Tables are immutable: a
schema (ordered, typed, unique column names), a tuple of rows, and the
ordered grouping columns set by ``group_by``.

The abstraction functions summarize a table as a conjunction of linear
facts about its attributes (row/col counts, and at the stronger level
group/newVals/newCols counts measured against an example's inputs).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, localcontext
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .formulas import (
    OUTPUT,
    PLACEHOLDER,
    AttributeKind,
    Atom,
    AttrVar,
    Formula,
    Fresh,
    LinExpr,
    Owner,
    Rel,
    attr_eq,
    conj,
)

SIGNIFICANT_DIGITS = 7


class MalformedInput(Exception):
    """Raised for CSV input the loader cannot shape into a table."""


class ColumnType(enum.Enum):
    NUM = "num"
    STR = "str"


def canonical_fraction(x: Fraction) -> Fraction:
    """Round to SIGNIFICANT_DIGITS significant decimal digits."""
    if x == 0:
        return Fraction(0)
    with localcontext() as ctx:
        ctx.prec = SIGNIFICANT_DIGITS
        d = Decimal(x.numerator) / Decimal(x.denominator)
    return Fraction(d)


def render_number(x: Fraction) -> str:
    """Canonical text for a number: 7 significant digits, no trailing
    zeros, no exponent (``2/3`` -> ``"0.6666667"``, ``4`` -> ``"4"``)."""
    if x == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = SIGNIFICANT_DIGITS
        d = Decimal(x.numerator) / Decimal(x.denominator)
    text = format(d.normalize(), "f")
    return text


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", _to_fraction(self.value))

    def canonical(self) -> Fraction:
        cached = getattr(self, "_canon", None)
        if cached is None:
            cached = canonical_fraction(self.value)
            object.__setattr__(self, "_canon", cached)
        return cached

    def __eq__(self, other) -> bool:
        if isinstance(other, Num):
            return self.canonical() == other.canonical()
        return NotImplemented

    def __hash__(self) -> int:
        # Cells are hashed and compared millions of times during search
        # (content sets, row bags, memo keys); cache the canonicalization.
        cached = getattr(self, "_hash", None)
        if cached is None:
            cached = hash(("num", self.canonical()))
            object.__setattr__(self, "_hash", cached)
        return cached

    def render(self) -> str:
        cached = getattr(self, "_render", None)
        if cached is None:
            cached = render_number(self.value)
            object.__setattr__(self, "_render", cached)
        return cached


@dataclass(frozen=True)
class Str:
    value: str

    def render(self) -> str:
        return self.value


CellValue = Union[Num, Str]


def _to_fraction(raw) -> Fraction:
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        return Fraction(Decimal(raw))
    if isinstance(raw, Decimal):
        return Fraction(raw)
    raise TypeError(f"cannot make a number from {raw!r}")


def cell_type(v: CellValue) -> ColumnType:
    return ColumnType.NUM if isinstance(v, Num) else ColumnType.STR


@dataclass(frozen=True)
class Table:
    """Immutable table.  ``schema`` pairs column names with types,
    ``rows`` is row-major cell data, ``group_cols`` the ordered grouping
    columns (empty for ungrouped tables)."""

    schema: tuple[tuple[str, ColumnType], ...]
    rows: tuple[tuple[CellValue, ...], ...]
    group_cols: tuple[str, ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.schema]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names: {names}")
        if any(not n for n in names):
            raise ValueError("empty column name")
        for r in self.rows:
            if len(r) != len(self.schema):
                raise ValueError("ragged row")
        for j, (_, ty) in enumerate(self.schema):
            for r in self.rows:
                if cell_type(r[j]) is not ty:
                    raise ValueError(
                        f"cell {r[j]!r} does not match column type {ty}"
                    )
        for g in self.group_cols:
            if g not in names:
                raise ValueError(f"grouping column {g!r} not in schema")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.schema)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.schema)

    def column_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.schema):
            if n == name:
                return i
        raise KeyError(name)

    def column_type(self, name: str) -> ColumnType:
        return self.schema[self.column_index(name)][1]

    def column_values(self, name: str) -> tuple[CellValue, ...]:
        j = self.column_index(name)
        return tuple(r[j] for r in self.rows)

    def group_count(self) -> int:
        """Number of groups: distinct grouping-key tuples, at least 1."""
        cached = getattr(self, "_group_count", None)
        if cached is None:
            if not self.group_cols:
                cached = 1
            else:
                idx = [self.column_index(g) for g in self.group_cols]
                keys = {tuple(r[j] for j in idx) for r in self.rows}
                cached = max(1, len(keys))
            object.__setattr__(self, "_group_count", cached)
        return cached

    def name_set(self) -> frozenset[str]:
        return frozenset(self.column_names)

    def content_set(self) -> frozenset[str]:
        """Column names plus canonically rendered cell values."""
        cached = getattr(self, "_content_set", None)
        if cached is None:
            out = set(self.column_names)
            for r in self.rows:
                for v in r:
                    out.add(v.render())
            cached = frozenset(out)
            object.__setattr__(self, "_content_set", cached)
        return cached

    def sort_key_rows(self) -> tuple:
        return tuple(sorted(tuple(v.render() for v in r) for r in self.rows))

    def __hash__(self) -> int:
        cached = getattr(self, "_hash", None)
        if cached is None:
            cached = hash((self.schema, self.rows, self.group_cols))
            object.__setattr__(self, "_hash", cached)
        return cached


@dataclass(frozen=True)
class Example:
    """One input/output example: named input tables plus the expected
    output."""

    inputs: tuple[tuple[str, Table], ...]
    output: Table

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("an example needs at least one input table")
        names = [n for n, _ in self.inputs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate input names: {names}")

    def input_table(self, name: str) -> Table:
        for n, t in self.inputs:
            if n == name:
                return t
        raise KeyError(name)

    def inputs_name_set(self) -> frozenset[str]:
        out: set[str] = set()
        for _, t in self.inputs:
            out |= t.name_set()
        return frozenset(out)

    def inputs_content_set(self) -> frozenset[str]:
        cached = getattr(self, "_inputs_content", None)
        if cached is None:
            out: set[str] = set()
            for _, t in self.inputs:
                out |= t.content_set()
            cached = frozenset(out)
            object.__setattr__(self, "_inputs_content", cached)
        return cached


def make_table(
    columns: Sequence[tuple[str, Union[ColumnType, str]]],
    rows: Iterable[Sequence],
    group_cols: Sequence[str] = (),
) -> Table:
    """Convenience constructor: wraps plain Python values into cells.
    Column type may be given as ColumnType or the strings 'num'/'str'."""
    schema = tuple(
        (name, ty if isinstance(ty, ColumnType) else ColumnType(ty))
        for name, ty in columns
    )
    packed = []
    for row in rows:
        cells = []
        for (name, ty), raw in zip(schema, row):
            if isinstance(raw, (Num, Str)):
                cells.append(raw)
            elif ty is ColumnType.NUM:
                cells.append(Num(_to_fraction(raw)))
            else:
                cells.append(Str(str(raw)))
        packed.append(tuple(cells))
    return Table(schema, tuple(packed), tuple(group_cols))


def _parse_number(text: str) -> Union[Fraction, None]:
    try:
        d = Decimal(text)
    except InvalidOperation:
        return None
    if not d.is_finite():
        return None
    return Fraction(d)


def load_csv(data: bytes, name_hint: str = "table") -> Table:
    """Parse RFC-4180 CSV bytes (UTF-8, first row is the header).

    A column is numeric iff it has at least one row and every cell in it
    parses as a finite decimal number; otherwise it is text.  In
    particular empty cells and zero-row tables yield text columns.
    Raises MalformedInput for empty input, ragged rows, and duplicate or
    empty header names.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedInput(f"{name_hint}: not valid UTF-8: {e}") from None
    reader = csv.reader(io.StringIO(text))
    records = [row for row in reader]
    if not records:
        raise MalformedInput(f"{name_hint}: no header row")
    header = records[0]
    if any(not h for h in header):
        raise MalformedInput(f"{name_hint}: empty header name in {header}")
    if len(set(header)) != len(header):
        raise MalformedInput(f"{name_hint}: duplicate header names in {header}")
    body = records[1:]
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise MalformedInput(
                f"{name_hint}: row {i + 2} has {len(row)} cells, "
                f"expected {len(header)}"
            )
    columns: list[list[str]] = [[row[j] for row in body] for j in range(len(header))]
    types: list[ColumnType] = []
    parsed: list[list[Union[Fraction, None]]] = []
    for cells in columns:
        nums = [_parse_number(c) for c in cells]
        if cells and all(n is not None for n in nums):
            types.append(ColumnType.NUM)
        else:
            types.append(ColumnType.STR)
        parsed.append(nums)
    schema = tuple(zip(header, types))
    rows = []
    for i, row in enumerate(body):
        cells: list[CellValue] = []
        for j, raw in enumerate(row):
            if types[j] is ColumnType.NUM:
                cells.append(Num(parsed[j][i]))
            else:
                cells.append(Str(raw))
        rows.append(tuple(cells))
    return Table(schema, tuple(rows))


def dump_csv(t: Table) -> str:
    """Inverse of load_csv up to canonical number rendering."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(t.column_names)
    for r in t.rows:
        writer.writerow([v.render() for v in r])
    return buf.getvalue()


def tables_equal(a: Table, b: Table, ordered_rows: bool = False) -> bool:
    """Schema (names, order, types) must match exactly; rows compare as
    a bag by default, as a sequence when ordered_rows is set.  Grouping
    state is presentation metadata and does not affect equality."""
    if a.schema != b.schema:
        return False
    if ordered_rows:
        return a.rows == b.rows
    if a.n_rows != b.n_rows:
        return False
    return _row_bag(a) == _row_bag(b)


def _row_bag(t: Table) -> dict[tuple, int]:
    bag: dict[tuple, int] = {}
    for r in t.rows:
        key = tuple(
            ("n", v.canonical()) if isinstance(v, Num) else ("s", v.value)
            for v in r
        )
        bag[key] = bag.get(key, 0) + 1
    return bag


class SpecLevel(enum.Enum):
    """How much the deduction engine is allowed to know."""

    NONE = "none"
    SPEC1 = "1"
    SPEC2 = "2"


def table_attributes(
    t: Table, reference: Example, spec_level: SpecLevel
) -> dict[AttributeKind, int]:
    """Concrete attribute values of ``t``.  newVals / newCols count the
    content strings / column names of ``t`` that appear in no input of
    the reference example."""
    attrs = {AttributeKind.ROW: t.n_rows, AttributeKind.COL: t.n_cols}
    if spec_level is SpecLevel.SPEC2:
        attrs[AttributeKind.GROUP] = t.group_count()
        # A column name only counts as new when the inputs contain it
        # nowhere, not even as a cell: pivoting a cell up into a header
        # invents no content.  Diffing names against input names instead
        # would both break the invariant below and make the component
        # specs wrongly reject genuine pivots.
        reference_content = reference.inputs_content_set()
        new_cols = t.name_set() - reference_content
        new_vals = t.content_set() - reference_content
        attrs[AttributeKind.NEW_COLS] = len(new_cols)
        attrs[AttributeKind.NEW_VALS] = len(new_vals)
        # Column names are content too, so a new column name is always
        # also a new value.
        assert attrs[AttributeKind.NEW_COLS] <= attrs[AttributeKind.NEW_VALS]
    return attrs


def abstract(
    t: Table,
    reference: Example,
    spec_level: SpecLevel,
    owner: Owner = PLACEHOLDER,
) -> Formula:
    """Conjunction of equalities pinning the owner's attributes to the
    concrete values of ``t``.  At SpecLevel.NONE there is nothing to
    say and the result is TRUE."""
    if spec_level is SpecLevel.NONE:
        return conj(())
    attrs = table_attributes(t, reference, spec_level)
    facts = [attr_eq(owner, kind, value) for kind, value in attrs.items()]
    return conj(facts)


def abstract_output(reference: Example, spec_level: SpecLevel) -> Formula:
    """Abstraction of the expected output.  Row/col and the new-content
    counts are concrete, but the group count of the table the program
    will produce is unknowable from the printed output, so it is only
    constrained to be a positive existential."""
    if spec_level is SpecLevel.NONE:
        return conj(())
    t = reference.output
    facts: list[Formula] = [
        attr_eq(OUTPUT, AttributeKind.ROW, t.n_rows),
        attr_eq(OUTPUT, AttributeKind.COL, t.n_cols),
    ]
    if spec_level is SpecLevel.SPEC2:
        attrs = table_attributes(t, reference, spec_level)
        facts.append(
            attr_eq(OUTPUT, AttributeKind.NEW_COLS, attrs[AttributeKind.NEW_COLS])
        )
        facts.append(
            attr_eq(OUTPUT, AttributeKind.NEW_VALS, attrs[AttributeKind.NEW_VALS])
        )
        k = AttrVar(OUTPUT, Fresh("k"))
        facts.append(Atom(LinExpr.var(k), Rel.GE, LinExpr.constant(1)))
        facts.append(
            Atom(
                LinExpr.var(AttrVar(OUTPUT, AttributeKind.GROUP)),
                Rel.EQ,
                LinExpr.var(k),
            )
        )
    return conj(facts)
