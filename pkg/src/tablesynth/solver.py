"""Satisfiability of attribute constraints.

The fragment is small: positive boolean structure over linear atoms
with integer coefficients, plus table-equality literals.  The decision
procedure case-splits the disjunctions, rewrites each table equality by
renaming both owners to one representative, propagates variables pinned
to constants (abstraction facts are almost all of this shape), and
finishes with Fourier-Motzkin elimination over the nonnegative
rationals.

Soundness contract: Unsat is reported only when no assignment of
nonnegative integers satisfies the formula.  The rational relaxation
keeps that direction exact; anything rationally satisfiable, any case
explosion past the cap, and any elimination that grows past the size
guard is reported Sat.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .formulas import (
    And,
    Atom,
    AttrVar,
    FALSE,
    Formula,
    Fresh,
    HoleId,
    Or,
    Owner,
    Rel,
    TableEq,
    TRUE,
)

DEFAULT_CASE_CAP = 4096

# Fourier-Motzkin growth guard: past this many inequalities we stop and
# report Sat, staying inside the soundness contract.
_MAX_INEQUALITIES = 4000


@dataclass
class SatCache:
    """Formula-keyed memo used heavily during sketch completion, where
    most deduction calls repeat the same constraint set."""

    entries: dict = field(default_factory=dict)
    hits: int = 0
    misses: int = 0


def case_count(f: Formula) -> int:
    if f is TRUE:
        return 1
    if f is FALSE:
        return 0
    if isinstance(f, (Atom, TableEq)):
        return 1
    if isinstance(f, And):
        total = 1
        for g in f.items:
            total *= case_count(g)
            if total > 10 * DEFAULT_CASE_CAP:
                return total
        return total
    if isinstance(f, Or):
        return sum(case_count(g) for g in f.items)
    raise TypeError(f"not a formula: {f!r}")


def _cases(f: Formula) -> Iterator[tuple]:
    """Yield DNF cases as tuples of Atom/TableEq literals."""
    if f is TRUE:
        yield ()
        return
    if f is FALSE:
        return
    if isinstance(f, (Atom, TableEq)):
        yield (f,)
        return
    if isinstance(f, Or):
        for g in f.items:
            yield from _cases(g)
        return
    if isinstance(f, And):
        def product(items: tuple) -> Iterator[tuple]:
            if not items:
                yield ()
                return
            for head in _cases(items[0]):
                for tail in product(items[1:]):
                    yield head + tail

        yield from product(f.items)
        return
    raise TypeError(f"not a formula: {f!r}")


# One inequality: sum(coeffs[v] * v) (<= | <) bound.
@dataclass(frozen=True)
class _Ineq:
    coeffs: tuple[tuple[AttrVar, Fraction], ...]
    strict: bool
    bound: Fraction


def _normalize_case(literals: tuple) -> Optional[list[_Ineq]]:
    """Rename table-equal owners to a shared representative and turn
    every atom into <=/< inequalities.  Returns None when the case is
    trivially closed (cannot happen today, reserved)."""
    parent: dict[Owner, Owner] = {}

    def find(o: Owner) -> Owner:
        parent.setdefault(o, o)
        while parent[o] != o:
            parent[o] = parent[parent[o]]
            o = parent[o]
        return o

    def union(a: Owner, b: Owner) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for lit in literals:
        if isinstance(lit, TableEq):
            union(lit.a, lit.b)

    def rep_var(v: AttrVar) -> AttrVar:
        r = find(v.owner)
        return v if r == v.owner else AttrVar(r, v.attr)

    inequalities: list[_Ineq] = []
    seen: set = set()
    for lit in literals:
        if isinstance(lit, TableEq):
            continue
        for atom in lit.normalized():
            coeffs: dict[AttrVar, Fraction] = {}
            for v, c in atom.lhs.terms:
                rv = rep_var(v)
                coeffs[rv] = coeffs.get(rv, Fraction(0)) + c
            bound = Fraction(-atom.lhs.const)
            strict = atom.rel is Rel.LT
            items = tuple(
                sorted(
                    ((v, c) for v, c in coeffs.items() if c != 0),
                    key=lambda vc: vc[0].sort_key(),
                )
            )
            key = (items, strict, bound)
            if key in seen:
                continue
            seen.add(key)
            inequalities.append(_Ineq(items, strict, bound))
    # Nonnegativity (and the group >= 1 floor) for every variable.
    variables = {v for ineq in inequalities for v, _ in ineq.coeffs}
    for v in sorted(variables, key=AttrVar.sort_key):
        lo = v.nonneg_lower_bound()
        inequalities.append(_Ineq(((v, Fraction(-1)),), False, Fraction(-lo)))
    return inequalities


def _propagate_constants(inequalities: list[_Ineq]) -> Optional[list[_Ineq]]:
    """Repeatedly substitute variables whose upper and lower bounds
    pinch to a single point.  Abstraction facts arrive as var = const
    pairs, so this usually collapses most of the system before
    elimination starts.  Returns None on contradiction."""
    work = list(inequalities)
    while True:
        lows: dict[AttrVar, tuple[Fraction, bool]] = {}
        highs: dict[AttrVar, tuple[Fraction, bool]] = {}
        rest: list[_Ineq] = []
        for ineq in work:
            if not ineq.coeffs:
                if ineq.bound < 0 or (ineq.strict and ineq.bound == 0):
                    return None
                continue
            if len(ineq.coeffs) == 1:
                ((v, c),) = ineq.coeffs
                limit = ineq.bound / c
                if c > 0:
                    best = highs.get(v)
                    if best is None or limit < best[0] or (
                        limit == best[0] and ineq.strict
                    ):
                        highs[v] = (limit, ineq.strict)
                else:
                    best = lows.get(v)
                    if best is None or limit > best[0] or (
                        limit == best[0] and ineq.strict
                    ):
                        lows[v] = (limit, ineq.strict)
                continue
            rest.append(ineq)
        pinned: dict[AttrVar, Fraction] = {}
        for v in set(lows) & set(highs):
            lo, lo_strict = lows[v]
            hi, hi_strict = highs[v]
            if lo > hi or (lo == hi and (lo_strict or hi_strict)):
                return None
            if lo == hi:
                pinned[v] = lo
        for v, (limit, strict) in highs.items():
            if v not in pinned:
                rest.append(_Ineq(((v, Fraction(1)),), strict, limit))
        for v, (limit, strict) in lows.items():
            if v not in pinned:
                rest.append(_Ineq(((v, Fraction(-1)),), strict, -limit))
        if not pinned:
            return rest
        substituted: list[_Ineq] = []
        for ineq in rest:
            coeffs = []
            bound = ineq.bound
            for v, c in ineq.coeffs:
                if v in pinned:
                    bound -= c * pinned[v]
                else:
                    coeffs.append((v, c))
            substituted.append(_Ineq(tuple(coeffs), ineq.strict, bound))
        work = substituted


def _order_key(v: AttrVar):
    """Tie-break rank: fresh existentials first, then hypothesis holes
    from the deepest (largest id) upward, then inputs, then the output."""
    fresh_rank = 0 if isinstance(v.attr, Fresh) else 1
    if isinstance(v.owner, HoleId):
        return (fresh_rank, 0, -v.owner.id, v.sort_key())
    return (fresh_rank, 1, 0, v.sort_key())


def _elimination_order(variables: Iterable[AttrVar]) -> list[AttrVar]:
    return sorted(variables, key=_order_key)


def _fourier_motzkin(inequalities: list[_Ineq]) -> bool:
    """True iff the system has a rational solution."""
    work = inequalities
    while True:
        consts = [iq for iq in work if not iq.coeffs]
        for iq in consts:
            if iq.bound < 0 or (iq.strict and iq.bound == 0):
                return False
        work = [iq for iq in work if iq.coeffs]
        if not work:
            return True
        # Eliminate the variable generating the fewest product rows (the
        # classic size heuristic); without it a dozen dense inequalities
        # can balloon past the growth guard and forfeit a refutation.
        counts: dict[AttrVar, list[int]] = {}
        for iq in work:
            for v, c in iq.coeffs:
                entry = counts.get(v)
                if entry is None:
                    counts[v] = entry = [0, 0]
                entry[c > 0] += 1
        best_cost = None
        ties: list[AttrVar] = []
        for v, (n_lo, n_up) in counts.items():
            cost = n_up * n_lo - n_up - n_lo
            if best_cost is None or cost < best_cost:
                best_cost = cost
                ties = [v]
            elif cost == best_cost:
                ties.append(v)
        target = ties[0] if len(ties) == 1 else min(ties, key=_order_key)
        uppers, lowers, rest = [], [], []
        for iq in work:
            coeff = dict(iq.coeffs).get(target)
            if coeff is None:
                rest.append(iq)
            elif coeff > 0:
                uppers.append(iq)
            else:
                lowers.append(iq)
        new: list[_Ineq] = list(rest)
        seen = {(iq.coeffs, iq.strict, iq.bound) for iq in rest}
        for up in uppers:
            cu = dict(up.coeffs)[target]
            for lo in lowers:
                cl = -dict(lo.coeffs)[target]
                # combine: (lo scaled) + (up scaled) eliminates target
                coeffs: dict[AttrVar, Fraction] = {}
                for v, c in up.coeffs:
                    if v != target:
                        coeffs[v] = coeffs.get(v, Fraction(0)) + c / cu
                for v, c in lo.coeffs:
                    if v != target:
                        coeffs[v] = coeffs.get(v, Fraction(0)) + c / cl
                bound = up.bound / cu + lo.bound / cl
                items = tuple(
                    sorted(
                        ((v, c) for v, c in coeffs.items() if c != 0),
                        key=lambda vc: vc[0].sort_key(),
                    )
                )
                strict = up.strict or lo.strict
                key = (items, strict, bound)
                if key in seen:
                    continue
                seen.add(key)
                new.append(_Ineq(items, strict, bound))
                if len(new) > _MAX_INEQUALITIES:
                    return True  # give up, stay sound
        work = new


def is_satisfiable(
    f: Formula,
    case_cap: int = DEFAULT_CASE_CAP,
    cache: Optional[SatCache] = None,
) -> bool:
    """Decide the formula.  True means satisfiable (or undecided within
    budget); False is a proof of nonnegative-integer unsatisfiability."""
    if cache is not None:
        cached = cache.entries.get(f)
        if cached is not None:
            cache.hits += 1
            return cached
        cache.misses += 1
    result = _decide(f, case_cap)
    if cache is not None:
        cache.entries[f] = result
    return result


def _decide(f: Formula, case_cap: int) -> bool:
    if f is TRUE:
        return True
    if f is FALSE:
        return False
    if case_count(f) > case_cap:
        return True  # case blowup is reported satisfiable by contract
    for literals in _cases(f):
        inequalities = _normalize_case(literals)
        if inequalities is None:
            continue
        propagated = _propagate_constants(inequalities)
        if propagated is None:
            continue
        if _fourier_motzkin(propagated):
            return True
    return False
