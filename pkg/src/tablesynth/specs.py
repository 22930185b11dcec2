"""Per-component attribute specifications.

Each table component carries an over-approximate spec relating the
attributes of its output to the attributes of its table inputs, written
as linear atoms over ports ``out``, ``in1``, ``in2``.  Two strengths
are built in: level 1 talks only about row/col counts, level 2 adds
group counts and the newVals/newCols measures.  Level 2 includes all
level 1 atoms, which ``load_builtin_specs`` checks at construction.

Spec files are TOML: one table per component, keys ``spec1``/``spec2``,
each an array of atom strings like ``"out.row <= in1.row"``.  Loaded
entries replace the builtin spec of that component wholesale at the
levels the file mentions.

inner_join's row bound is genuinely disjunctive (the output row count
lies between the two input row counts, whichever way they are ordered),
which the atom grammar cannot express; the builtin table injects it as
a structured two-case disjunction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python 3.10
    import tomli as _toml

from .components import UnknownComponentError, builtin_registry
from .formulas import (
    And,
    Atom,
    AttributeKind,
    AttrVar,
    Formula,
    LinExpr,
    Or,
    Owner,
    Rel,
    conj,
    disj,
)
from .tables import SpecLevel


class SpecParseError(Exception):
    """Bad spec file: carries a best-effort line/column position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}" if line else message)
        self.line = line
        self.col = col


class UnknownAttributeError(Exception):
    pass


_PORTS = ("out", "in1", "in2")
_ATTRS = {k.value: k for k in AttributeKind}


@dataclass(frozen=True)
class SpecAtom:
    """One parsed atom, kept in port terms so it can be instantiated
    for any concrete hypothesis node."""

    text: str
    lhs: tuple[tuple[str, AttributeKind, int], ...]
    rel: Rel
    rhs: tuple[tuple[str, AttributeKind, int], ...]
    lhs_const: int
    rhs_const: int

    def ports(self) -> set[str]:
        return {p for p, _, _ in self.lhs} | {p for p, _, _ in self.rhs}

    def instantiate(self, owners: dict[str, Owner]) -> Atom:
        def side(terms, const) -> LinExpr:
            e = LinExpr.constant(const)
            for port, attr, coeff in terms:
                e = e + LinExpr.of((AttrVar(owners[port], attr), coeff))
            return e

        return Atom(side(self.lhs, self.lhs_const), self.rel, side(self.rhs, self.rhs_const))


@dataclass(frozen=True)
class SpecDisjunction:
    """A disjunction of atom conjunctions (builtin-only construct)."""

    cases: tuple[tuple[SpecAtom, ...], ...]

    def instantiate(self, owners: dict[str, Owner]) -> Formula:
        return disj(
            conj(a.instantiate(owners) for a in case) for case in self.cases
        )


SpecClause = Union[SpecAtom, SpecDisjunction]


@dataclass(frozen=True)
class ComponentSpec:
    component: str
    level: SpecLevel
    clauses: tuple[SpecClause, ...]
    # Names of fresh existentials with their lower bounds; unused by the
    # builtin tables but kept so custom specs can introduce slack vars.
    fresh: tuple[tuple[str, int], ...] = ()

    def instantiate(self, owners: dict[str, Owner]) -> Formula:
        return conj(c.instantiate(owners) for c in self.clauses)


@dataclass(frozen=True)
class SpecSet:
    level: SpecLevel
    by_component: dict[str, ComponentSpec] = field(default_factory=dict)

    def spec_for(self, component: str) -> Optional[ComponentSpec]:
        return self.by_component.get(component)

    def formula_for(self, component: str, owners: dict[str, Owner]) -> Formula:
        spec = self.spec_for(component)
        if spec is None:
            return conj(())
        # The same (component, owners) pair recurs for every deduction of
        # every completion of a sketch; instantiation is pure, so memoize.
        cache = getattr(self, "_instantiated", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_instantiated", cache)
        key = (component, tuple(sorted(owners.items())))
        hit = cache.get(key)
        if hit is None:
            hit = spec.instantiate(owners)
            cache[key] = hit
        return hit


# != is recognized only to reject it with a sensible message.
_REL_TOKENS = (("<=", Rel.LE), (">=", Rel.GE), ("!=", None), ("==", Rel.EQ),
               ("<", Rel.LT), (">", Rel.GT), ("=", Rel.EQ))

_TERM_RE = re.compile(
    r"\s*(?P<sign>[+-])?\s*(?:(?P<coeff>\d+)\s*\*?\s*)?"
    r"(?:(?P<port>out|in1|in2)\.(?P<attr>[A-Za-z]+)|(?P<const>\d+))\s*"
)


def parse_atom(text: str, line: int = 0) -> SpecAtom:
    """Parse ``port.attr REL linexpr`` (integer coefficients, + and -)."""
    rel = None
    rel_pos = -1
    for token, r in _REL_TOKENS:
        pos = text.find(token)
        if pos >= 0:
            if r is None:
                raise SpecParseError(
                    f"relation {token!r} is not part of the atom grammar",
                    line,
                    pos + 1,
                )
            rel = r
            rel_pos = pos
            rel_token = token
            break
    if rel is None:
        raise SpecParseError(f"no relation in {text!r}", line, 1)

    def parse_side(side_text: str, col_base: int):
        terms: list[tuple[str, AttributeKind, int]] = []
        const = 0
        pos = 0
        first = True
        while pos < len(side_text):
            m = _TERM_RE.match(side_text, pos)
            if not m or m.end() == pos:
                raise SpecParseError(
                    f"cannot parse {side_text[pos:]!r}", line, col_base + pos + 1
                )
            if not first and m.group("sign") is None:
                raise SpecParseError(
                    f"missing +/- before {side_text[m.start():m.end()]!r}",
                    line,
                    col_base + pos + 1,
                )
            sign = -1 if m.group("sign") == "-" else 1
            coeff = int(m.group("coeff")) if m.group("coeff") else 1
            if m.group("const") is not None and m.group("coeff"):
                raise SpecParseError(
                    f"coefficient on a constant in {side_text!r}",
                    line,
                    col_base + pos + 1,
                )
            if m.group("port"):
                attr_name = m.group("attr")
                if attr_name not in _ATTRS:
                    raise UnknownAttributeError(attr_name)
                terms.append((m.group("port"), _ATTRS[attr_name], sign * coeff))
            else:
                const += sign * int(m.group("const"))
            pos = m.end()
            first = False
        if first:
            raise SpecParseError(f"empty expression in {text!r}", line, col_base + 1)
        return tuple(terms), const

    lhs_terms, lhs_const = parse_side(text[:rel_pos], 0)
    rhs_terms, rhs_const = parse_side(
        text[rel_pos + len(rel_token):], rel_pos + len(rel_token)
    )
    return SpecAtom(text.strip(), lhs_terms, rel, rhs_terms, lhs_const, rhs_const)


# ---------------------------------------------------------------------------
# Builtin spec tables

_SPEC1_ATOMS: dict[str, list[str]] = {
    "spread": ["out.row <= in1.row", "out.col >= in1.col"],
    "gather": ["out.row >= in1.row", "out.col <= in1.col"],
    "select": ["out.row = in1.row", "out.col < in1.col"],
    "filter": ["out.row < in1.row", "out.col = in1.col"],
    "summarise": ["out.row <= in1.row", "out.col <= in1.col + 1"],
    "group_by": ["out.row = in1.row", "out.col = in1.col"],
    "mutate": ["out.row = in1.row", "out.col = in1.col + 1"],
    "unite": ["out.row = in1.row", "out.col = in1.col - 1"],
    "separate": ["out.row = in1.row", "out.col = in1.col + 1"],
    "inner_join": [
        "out.row >= 1",
        "out.col >= in1.col",
        "out.col >= in2.col",
        "out.col <= in1.col + in2.col - 1",
    ],
}

# The disjunctive row bound for joins.  The interpreter insists on a
# unique key on at least one side and on a nonempty result, so the
# output can never outgrow both inputs: out.row <= max(r1,r2).  A lower
# bound beyond 1 would be wrong, since nothing forces every key to find
# a partner.
_JOIN_ROW_CASES = (
    ("out.row <= in1.row",),
    ("out.row <= in2.row",),
)

_SPEC2_EXTRA_ATOMS: dict[str, list[str]] = {
    "spread": [
        "out.group = in1.group",
        "out.newVals <= in1.newVals",
        "out.newCols <= in1.newVals",
    ],
    "gather": [
        "out.group = in1.group",
        "out.newVals <= in1.newVals + 2",
        "out.newCols <= in1.newCols + 2",
    ],
    "select": [
        "out.group = in1.group",
        "out.newVals <= in1.newVals",
        "out.newCols <= in1.newCols",
    ],
    # Dropping rows can drop whole groups with them, so the group count
    # only gets an upper bound.
    "filter": [
        "out.group <= in1.group",
        "out.newVals <= in1.newVals",
        "out.newCols = in1.newCols",
    ],
    "summarise": [
        "out.group = in1.group",
        "in1.group = out.row",
        "out.newVals <= in1.newVals + in1.group + 1",
        "out.newCols <= in1.newCols + 1",
    ],
    "group_by": [
        "out.group >= in1.group",
        "out.newVals = in1.newVals",
        "out.newCols = in1.newCols",
    ],
    # Minted column names and cell values are only *new* when the
    # example inputs contain them nowhere, and nothing stops a program
    # from reusing a name or value that is already lying around.  So
    # components that mint content get upper bounds only: the upper
    # bound counts one new name plus one fresh value per row (two per
    # row for separate, which splits each cell in two).  Lower bounds
    # stop at "no new content is ever lost by adding a column".
    "mutate": [
        "out.group = in1.group",
        "out.newCols >= in1.newCols",
        "out.newCols <= in1.newCols + 1",
        "out.newVals >= in1.newVals",
        "out.newVals <= in1.newVals + in1.row + 1",
    ],
    "unite": [
        "out.group = in1.group",
        "out.newVals <= in1.newVals + in1.row + 1",
        "out.newCols <= in1.newCols + 1",
    ],
    "separate": [
        "out.group = in1.group",
        "out.newVals <= in1.newVals + 2*in1.row + 2",
        "out.newCols <= in1.newCols + 2",
    ],
    "inner_join": [
        "out.group = 1",
        "out.newCols <= in1.newCols + in2.newCols",
        "out.newVals <= in1.newVals + in2.newVals",
    ],
}


def _builtin_clauses(component: str, level: SpecLevel) -> tuple[SpecClause, ...]:
    clauses: list[SpecClause] = [parse_atom(a) for a in _SPEC1_ATOMS[component]]
    if component == "inner_join":
        clauses.insert(
            0,
            SpecDisjunction(
                tuple(tuple(parse_atom(a) for a in case) for case in _JOIN_ROW_CASES)
            ),
        )
    if level is SpecLevel.SPEC2:
        clauses.extend(parse_atom(a) for a in _SPEC2_EXTRA_ATOMS[component])
    return tuple(clauses)


def _check_containment(weak: ComponentSpec, strong: ComponentSpec) -> None:
    weak_texts = {c.text for c in weak.clauses if isinstance(c, SpecAtom)}
    strong_texts = {c.text for c in strong.clauses if isinstance(c, SpecAtom)}
    missing = weak_texts - strong_texts
    if missing:
        raise ValueError(
            f"{weak.component}: level-2 spec does not contain level-1 "
            f"atoms {sorted(missing)}"
        )


def load_builtin_specs(level: Union[SpecLevel, None]) -> SpecSet:
    """Builtin spec set at the given strength.  ``None`` (or
    SpecLevel.NONE) gives the trivial set where every component's spec
    is simply true."""
    if level is None:
        level = SpecLevel.NONE
    names = [c.name for c in builtin_registry().table]
    if level is SpecLevel.NONE:
        return SpecSet(SpecLevel.NONE, {})
    specs = {}
    for name in names:
        spec = ComponentSpec(name, level, _builtin_clauses(name, level))
        if level is SpecLevel.SPEC2:
            _check_containment(
                ComponentSpec(name, SpecLevel.SPEC1, _builtin_clauses(name, SpecLevel.SPEC1)),
                spec,
            )
        specs[name] = spec
    return SpecSet(level, specs)


def load_spec_file(data: bytes, level: SpecLevel) -> SpecSet:
    """Parse a TOML spec file and merge it over the builtin set for
    ``level``.  Components present in the file are replaced at the
    levels the file gives; at SpecLevel.NONE the file is ignored."""
    try:
        doc = _toml.loads(data.decode("utf-8"))
    except _toml.TOMLDecodeError as e:
        # tomllib reports positions inside its message only.
        m = re.search(r"line (\d+), column (\d+)", str(e))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (0, 0)
        raise SpecParseError(str(e), line, col) from None
    except UnicodeDecodeError as e:
        raise SpecParseError(f"not UTF-8: {e}") from None

    base = load_builtin_specs(level)
    if level is SpecLevel.NONE:
        return base
    key = "spec1" if level is SpecLevel.SPEC1 else "spec2"
    registry = builtin_registry()
    merged = dict(base.by_component)
    for comp_name, section in doc.items():
        if not registry.has_table_component(comp_name):
            raise UnknownComponentError(comp_name)
        if not isinstance(section, dict):
            raise SpecParseError(f"[{comp_name}] must be a table")
        for k in section:
            if k not in ("spec1", "spec2"):
                raise SpecParseError(f"[{comp_name}] has unknown key {k!r}")
        if key not in section:
            continue
        atoms = section[key]
        if not isinstance(atoms, list) or not all(isinstance(a, str) for a in atoms):
            raise SpecParseError(f"[{comp_name}].{key} must be an array of strings")
        clauses = tuple(parse_atom(a) for a in atoms)
        for clause in clauses:
            for port in clause.ports():
                arity = registry.table_component(comp_name).n_tables
                if port == "in2" and arity < 2:
                    raise SpecParseError(
                        f"[{comp_name}] uses in2 but takes one table"
                    )
        merged[comp_name] = ComponentSpec(comp_name, level, clauses)
    return SpecSet(level, merged)
