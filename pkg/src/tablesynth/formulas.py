"""Linear integer constraint language used by the deduction engine.

Constraints talk about table *attributes* (row and column counts, group
counts, counts of new values / new column names relative to an example).
A variable is an ``AttrVar``: an attribute of some owner, where the owner
is either a hole in a hypothesis (``HoleId``), a named example input
(``ArgName``), the expected output (``OUTPUT``), or the placeholder used
by ``tables.abstract`` before the caller renames it.

Formulas are positive boolean combinations (no negation) of linear
atoms over these variables, plus ``TableEq`` which asserts two owners
denote the same table and is expanded attribute-wise by the solver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union


class AttributeKind(enum.Enum):
    """Attributes a table abstraction can constrain."""

    ROW = "row"
    COL = "col"
    GROUP = "group"
    NEW_VALS = "newVals"
    NEW_COLS = "newCols"


# Attributes whose value is at least 1 in any concrete table (a table
# always has at least one group: the whole table).
_LOWER_ONE = frozenset({AttributeKind.GROUP})


@dataclass(frozen=True, order=True)
class HoleId:
    """Owner: the hole or node with this id inside a hypothesis."""

    id: int

    def label(self) -> str:
        return f"h{self.id}"


@dataclass(frozen=True, order=True)
class ArgName:
    """Owner: a named input table of the example (``x1``, ``x2``, ...)."""

    name: str

    def label(self) -> str:
        return f"in_{self.name}"


@dataclass(frozen=True, order=True)
class _Output:
    def label(self) -> str:
        return "out"


@dataclass(frozen=True, order=True)
class _Placeholder:
    def label(self) -> str:
        return "x"


OUTPUT = _Output()
PLACEHOLDER = _Placeholder()

Owner = Union[HoleId, ArgName, _Output, _Placeholder]

# Deterministic sort rank per owner class, used for canonical ordering.
_OWNER_RANK = {HoleId: 0, ArgName: 1, _Output: 2, _Placeholder: 3}


@dataclass(frozen=True)
class Fresh:
    """An existentially quantified helper variable, e.g. the unknown
    group count of the expected output."""

    name: str


AttrLike = Union[AttributeKind, Fresh]

_KIND_RANK = {k: i for i, k in enumerate(AttributeKind)}


@dataclass(frozen=True)
class AttrVar:
    owner: Owner
    attr: AttrLike

    def label(self) -> str:
        if isinstance(self.attr, Fresh):
            return f"{self.owner.label()}_{self.attr.name}"
        return f"{self.owner.label()}_{self.attr.value}"

    def sort_key(self):
        owner_key = (_OWNER_RANK[type(self.owner)], self.owner.label())
        if isinstance(self.attr, Fresh):
            attr_key = (1, self.attr.name)
        else:
            attr_key = (0, str(_KIND_RANK[self.attr]))
        return owner_key + attr_key

    def nonneg_lower_bound(self) -> int:
        """Smallest value this variable can take in a concrete table."""
        if isinstance(self.attr, AttributeKind) and self.attr in _LOWER_ONE:
            return 1
        return 0


# A linear expression is a mapping var -> integer coefficient plus an
# integer constant, kept as a plain tuple-of-pairs for hashability.
@dataclass(frozen=True)
class LinExpr:
    terms: tuple[tuple[AttrVar, int], ...]
    const: int = 0

    @staticmethod
    def of(*pairs: tuple[AttrVar, int], const: int = 0) -> "LinExpr":
        return LinExpr(_merge_terms(pairs), const)

    @staticmethod
    def var(v: AttrVar) -> "LinExpr":
        return LinExpr(((v, 1),), 0)

    @staticmethod
    def constant(c: int) -> "LinExpr":
        return LinExpr((), c)

    def __add__(self, other: "LinExpr") -> "LinExpr":
        return LinExpr(
            _merge_terms(self.terms + other.terms), self.const + other.const
        )

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        negated = tuple((v, -c) for v, c in other.terms)
        return LinExpr(_merge_terms(self.terms + negated), self.const - other.const)

    def variables(self) -> Iterable[AttrVar]:
        return (v for v, _ in self.terms)


def _merge_terms(
    pairs: Iterable[tuple[AttrVar, int]]
) -> tuple[tuple[AttrVar, int], ...]:
    acc: dict[AttrVar, int] = {}
    for v, c in pairs:
        acc[v] = acc.get(v, 0) + c
    items = [(v, c) for v, c in acc.items() if c != 0]
    items.sort(key=lambda vc: vc[0].sort_key())
    return tuple(items)


class Rel(enum.Enum):
    LE = "<="
    LT = "<"
    EQ = "="
    GE = ">="
    GT = ">"


@dataclass(frozen=True)
class Atom:
    """``lhs REL rhs`` over linear expressions."""

    lhs: LinExpr
    rel: Rel
    rhs: LinExpr

    # Atoms are shared across thousands of deduction formulas and hashed
    # on every satisfiability-cache probe, so the hash is computed once.
    def __hash__(self) -> int:
        cached = getattr(self, "_hash", None)
        if cached is None:
            cached = hash((self.lhs, self.rel, self.rhs))
            object.__setattr__(self, "_hash", cached)
        return cached

    def normalized(self) -> tuple["Atom", ...]:
        """Rewrite into `expr <= 0` / `expr < 0` form (pairs for =)."""
        diff = self.lhs - self.rhs
        if self.rel is Rel.LE:
            return (Atom(diff, Rel.LE, LinExpr.constant(0)),)
        if self.rel is Rel.LT:
            return (Atom(diff, Rel.LT, LinExpr.constant(0)),)
        if self.rel is Rel.GE:
            flipped = self.rhs - self.lhs
            return (Atom(flipped, Rel.LE, LinExpr.constant(0)),)
        if self.rel is Rel.GT:
            flipped = self.rhs - self.lhs
            return (Atom(flipped, Rel.LT, LinExpr.constant(0)),)
        return (
            Atom(diff, Rel.LE, LinExpr.constant(0)),
            Atom(self.rhs - self.lhs, Rel.LE, LinExpr.constant(0)),
        )


@dataclass(frozen=True)
class TableEq:
    """Both owners denote the same table; expanded attribute-wise."""

    a: Owner
    b: Owner


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]

    def __hash__(self) -> int:
        cached = getattr(self, "_hash", None)
        if cached is None:
            cached = hash(self.items)
            object.__setattr__(self, "_hash", cached)
        return cached


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...]

    def __hash__(self) -> int:
        cached = getattr(self, "_hash", None)
        if cached is None:
            cached = hash(self.items)
            object.__setattr__(self, "_hash", cached)
        return cached


class _True:
    def __repr__(self) -> str:
        return "TRUE"


class _False:
    def __repr__(self) -> str:
        return "FALSE"


TRUE = _True()
FALSE = _False()

Formula = Union[Atom, TableEq, And, Or, _True, _False]


def conj(items: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if f is TRUE:
            continue
        if f is FALSE:
            return FALSE
        if isinstance(f, And):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(items: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if f is FALSE:
            continue
        if f is TRUE:
            return TRUE
        if isinstance(f, Or):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def attr_eq(owner: Owner, attr: AttrLike, value: int) -> Atom:
    return Atom(LinExpr.var(AttrVar(owner, attr)), Rel.EQ, LinExpr.constant(value))


def rename_owner(f: Formula, old: Owner, new: Owner) -> Formula:
    """Replace every occurrence of owner `old` with `new`."""

    def ren_var(v: AttrVar) -> AttrVar:
        return AttrVar(new, v.attr) if v.owner == old else v

    def ren_lin(e: LinExpr) -> LinExpr:
        return LinExpr(
            _merge_terms(tuple((ren_var(v), c) for v, c in e.terms)), e.const
        )

    if f is TRUE or f is FALSE:
        return f
    if isinstance(f, Atom):
        return Atom(ren_lin(f.lhs), f.rel, ren_lin(f.rhs))
    if isinstance(f, TableEq):
        return TableEq(
            new if f.a == old else f.a,
            new if f.b == old else f.b,
        )
    if isinstance(f, And):
        return And(tuple(rename_owner(g, old, new) for g in f.items))
    if isinstance(f, Or):
        return Or(tuple(rename_owner(g, old, new) for g in f.items))
    raise TypeError(f"not a formula: {f!r}")


def formula_variables(f: Formula) -> set[AttrVar]:
    out: set[AttrVar] = set()

    def walk(g: Formula) -> None:
        if g is TRUE or g is FALSE:
            return
        if isinstance(g, Atom):
            out.update(g.lhs.variables())
            out.update(g.rhs.variables())
        elif isinstance(g, TableEq):
            pass
        elif isinstance(g, (And, Or)):
            for item in g.items:
                walk(item)
        else:
            raise TypeError(f"not a formula: {g!r}")

    walk(f)
    return out


def formula_owners(f: Formula) -> set[Owner]:
    owners = {v.owner for v in formula_variables(f)}

    def walk(g: Formula) -> None:
        if isinstance(g, TableEq):
            owners.add(g.a)
            owners.add(g.b)
        elif isinstance(g, (And, Or)):
            for item in g.items:
                walk(item)

    walk(f)
    return owners


def evaluate(f: Formula, assignment: Mapping[AttrVar, Union[int, Fraction]]) -> bool:
    """Evaluate a formula under a total assignment (TableEq unsupported;
    expand it first).  Used by tests as a brute-force model checker."""

    def ev_lin(e: LinExpr) -> Fraction:
        total = Fraction(e.const)
        for v, c in e.terms:
            total += Fraction(assignment[v]) * c
        return total

    if f is TRUE:
        return True
    if f is FALSE:
        return False
    if isinstance(f, Atom):
        l, r = ev_lin(f.lhs), ev_lin(f.rhs)
        if f.rel is Rel.LE:
            return l <= r
        if f.rel is Rel.LT:
            return l < r
        if f.rel is Rel.EQ:
            return l == r
        if f.rel is Rel.GE:
            return l >= r
        return l > r
    if isinstance(f, And):
        return all(evaluate(g, assignment) for g in f.items)
    if isinstance(f, Or):
        return any(evaluate(g, assignment) for g in f.items)
    raise TypeError(f"cannot evaluate {f!r}")


_SMT_REL = {Rel.LE: "<=", Rel.LT: "<", Rel.EQ: "=", Rel.GE: ">=", Rel.GT: ">"}


def _smt_lin(e: LinExpr) -> str:
    parts: list[str] = []
    for v, c in e.terms:
        if c == 1:
            parts.append(v.label())
        elif c < 0:
            parts.append(f"(* (- {-c}) {v.label()})")
        else:
            parts.append(f"(* {c} {v.label()})")
    if e.const != 0 or not parts:
        parts.append(str(e.const) if e.const >= 0 else f"(- {-e.const})")
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def _smt_formula(f: Formula) -> str:
    if f is TRUE:
        return "true"
    if f is FALSE:
        return "false"
    if isinstance(f, Atom):
        return f"({_SMT_REL[f.rel]} {_smt_lin(f.lhs)} {_smt_lin(f.rhs)})"
    if isinstance(f, TableEq):
        raise ValueError("expand TableEq before dumping to SMT-LIB")
    if isinstance(f, And):
        return "(and " + " ".join(_smt_formula(g) for g in f.items) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(_smt_formula(g) for g in f.items) + ")"
    raise TypeError(f"not a formula: {f!r}")


def to_smtlib(f: Formula) -> str:
    """Render as an SMT-LIB 2 script (logic LIA) for offline inspection."""
    variables = sorted(formula_variables(f), key=AttrVar.sort_key)
    lines = ["(set-logic LIA)"]
    for v in variables:
        lines.append(f"(declare-const {v.label()} Int)")
    for v in variables:
        lines.append(f"(assert (>= {v.label()} {v.nonneg_lower_bound()}))")
    lines.append(f"(assert {_smt_formula(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
