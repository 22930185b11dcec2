"""Program surface syntax.

A complete program prints as a sequence of assignments, one per
component application in evaluation order::

    df1 = filter(x1, dest == "SEA")
    df2 = group_by(df1, origin)
    df3 = summarise(df2, n = count())
    df4 = mutate(df3, prop = n / sum(n))

``parse_program`` reads the same syntax back (used for round-trips and
by tests).  ``program_to_r`` emits the equivalent tidyr/dplyr script;
it differs only in assignment arrows, ``count()`` becoming ``n()``, and
separate/unite gaining their explicit R argument forms.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Optional

from .components import (
    BOOL,
    COLS,
    STR,
    Apply,
    ColsLiteral,
    ColumnRef,
    Const,
    Func,
    Lambda,
    Term,
    TypeExpr,
    Var,
    builtin_registry,
)
from .hypotheses import (
    ComponentNode,
    InputBinding,
    Node,
    QualifiedHole,
    TermBinding,
    bind_hole,
    refine,
    root_hole,
)
from .tables import Example, Num, Str, render_number

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")

_ARITH_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


class ProgramParseError(Exception):
    pass


def _name_text(name: str) -> str:
    """Column and output names print bare when identifier-shaped."""
    if _IDENT_RE.match(name):
        return name
    return '"' + name.replace('"', '\\"') + '"'


def term_to_text(term: Term, parent_prec: int = 0) -> str:
    if isinstance(term, Const):
        if isinstance(term.value, Num):
            return render_number(term.value.value)
        return '"' + term.value.value.replace('"', '\\"') + '"'
    if isinstance(term, ColumnRef):
        return _name_text(term.name)
    if isinstance(term, Var):
        return term.name
    if isinstance(term, ColsLiteral):
        return ", ".join(_name_text(n) for n in term.names)
    if isinstance(term, Lambda):
        params = ", ".join(n for n, _ in term.params)
        return f"\\{params}. {term_to_text(term.body)}"
    if isinstance(term, Apply):
        if term.fn in _ARITH_PRECEDENCE:
            prec = _ARITH_PRECEDENCE[term.fn]
            a = term_to_text(term.args[0], prec)
            b = term_to_text(term.args[1], prec + 1)
            text = f"{a} {term.fn} {b}"
            if prec < parent_prec:
                return f"({text})"
            return text
        if term.fn in ("<", ">", "==", "!="):
            a = term_to_text(term.args[0], 3)
            b = term_to_text(term.args[1], 3)
            return f"{a} {term.fn} {b}"
        inner = ", ".join(term_to_text(a) for a in term.args)
        return f"{term.fn}({inner})"
    raise TypeError(f"not a term: {term!r}")


def _named_arg(name: str, value_text: str) -> str:
    return f"{_name_text(name)} = {value_text}"


def _component_args(node: ComponentNode, child_texts: list[str]) -> str:
    """Positional argument text per component; named-argument style for
    summarise and mutate, flattened column lists for the rest."""
    comp = node.component
    terms = []
    for c in node.children:
        if isinstance(c, QualifiedHole) and isinstance(c.qualifier, TermBinding):
            terms.append(c.qualifier.term)
    if comp in ("summarise", "mutate"):
        name_term, expr_term = terms
        assert isinstance(name_term, Const)
        return ", ".join(
            child_texts
            + [_named_arg(name_term.value.value, term_to_text(expr_term))]
        )
    rendered = []
    for t in terms:
        if isinstance(t, Const) and isinstance(t.value, Str):
            rendered.append(_name_text(t.value.value))
        else:
            rendered.append(term_to_text(t))
    return ", ".join(child_texts + rendered)


def program_to_dsl(program: Node) -> str:
    """Pretty-print a complete program.  The degenerate zero-component
    program prints as a single pass-through assignment."""
    lines: list[str] = []
    counter = [0]

    def walk(node: Node) -> str:
        if isinstance(node, QualifiedHole) and isinstance(node.qualifier, InputBinding):
            return node.qualifier.arg_name
        if isinstance(node, ComponentNode):
            child_texts = [
                walk(c)
                for c in node.children
                if not (
                    isinstance(c, QualifiedHole)
                    and isinstance(c.qualifier, TermBinding)
                )
            ]
            counter[0] += 1
            df = f"df{counter[0]}"
            lines.append(f"{df} = {node.component}({_component_args(node, child_texts)})")
            return df
        raise ValueError(f"program is not complete at node {node!r}")

    final = walk(program)
    if not lines:
        lines.append(f"df1 = {final}")
    return "\n".join(lines) + "\n"


def program_to_r(program: Node) -> str:
    """Emit the program as an R script over tidyr/dplyr verbs."""
    dsl = program_to_dsl(program)
    out_lines = []
    for line in dsl.strip().split("\n"):
        lhs, rhs = line.split(" = ", 1)
        rhs = rhs.replace("count()", "n()")
        m = re.match(r"separate\((\w+), (\w+), (\w+), (\w+)\)", rhs)
        if m:
            df, col, n1, n2 = m.groups()
            rhs = f'separate({df}, {col}, into = c("{n1}", "{n2}"), sep = "_")'
        m = re.match(r"unite\((\w+), (\w+), (\w+), (\w+)\)", rhs)
        if m:
            df, name, c1, c2 = m.groups()
            rhs = f"unite({df}, {name}, {c1}, {c2}, sep = \"_\")"
        out_lines.append(f"{lhs} <- {rhs}")
    return "\n".join(out_lines) + "\n"


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
    | (?P<op><=|>=|==|!=|[-+*/<>=(),])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ProgramParseError(f"bad token at {text[pos:]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group()))
        pos = m.end()
    return tokens


class _Tokens:
    def __init__(self, items: list[tuple[str, str]]):
        self.items = items
        self.pos = 0

    def peek(self) -> Optional[tuple[str, str]]:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ProgramParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text = self.next()
        if text != value:
            raise ProgramParseError(f"expected {value!r}, got {text!r}")

    def done(self) -> bool:
        return self.pos >= len(self.items)


def _unquote(text: str) -> str:
    return text[1:-1].replace('\\"', '"')


def _parse_expr(toks: _Tokens, min_prec: int = 1) -> Term:
    left = _parse_operand(toks)
    while True:
        tok = toks.peek()
        if tok is None or tok[1] not in _ARITH_PRECEDENCE:
            break
        op = tok[1]
        prec = _ARITH_PRECEDENCE[op]
        if prec < min_prec:
            break
        toks.next()
        right = _parse_expr(toks, prec + 1)
        left = Apply(op, (left, right))
    return left


def _parse_operand(toks: _Tokens) -> Term:
    kind, text = toks.next()
    if text == "(":
        inner = _parse_expr(toks)
        toks.expect(")")
        return inner
    if kind == "number":
        return Const(Num(_num_of(text)))
    if kind == "string":
        return Const(Str(_unquote(text)))
    if kind == "ident":
        nxt = toks.peek()
        if nxt and nxt[1] == "(":
            toks.next()
            args = []
            if toks.peek() and toks.peek()[1] != ")":
                args.append(_parse_expr(toks))
                while toks.peek() and toks.peek()[1] == ",":
                    toks.next()
                    args.append(_parse_expr(toks))
            toks.expect(")")
            return Apply(text, tuple(args))
        return ColumnRef(text)
    raise ProgramParseError(f"unexpected token {text!r}")


def _num_of(text: str):
    from decimal import Decimal

    return Fraction(Decimal(text))


def _parse_comparison(toks: _Tokens) -> Term:
    left = _parse_expr(toks)
    tok = toks.peek()
    if tok and tok[1] in ("<", ">", "==", "!="):
        op = toks.next()[1]
        right = _parse_expr(toks)
        return Apply(op, (left, right))
    return left


def _call_args_raw(toks: _Tokens) -> list[list[tuple[str, str]]]:
    """Split a call's token stream into top-level comma-separated args."""
    toks.expect("(")
    depth = 0
    args: list[list[tuple[str, str]]] = [[]]
    while True:
        tok = toks.next()
        if tok[1] == "(":
            depth += 1
        elif tok[1] == ")":
            if depth == 0:
                break
            depth -= 1
        elif tok[1] == "," and depth == 0:
            args.append([])
            continue
        args[-1].append(tok)
    if args == [[]]:
        return []
    return args


def _name_of_tokens(tokens: list[tuple[str, str]], what: str) -> str:
    if len(tokens) != 1:
        raise ProgramParseError(f"{what}: expected a name, got {tokens}")
    kind, text = tokens[0]
    if kind == "ident":
        return text
    if kind == "string":
        return _unquote(text)
    raise ProgramParseError(f"{what}: expected a name, got {text!r}")


def parse_program(text: str, example: Example) -> Node:
    """Parse assignment lines back into a complete hypothesis bound to
    the example's inputs.  The last assignment is the program root."""
    env: dict[str, Node] = {}
    registry = builtin_registry()
    last: Optional[str] = None
    fragments: dict[str, tuple] = {}

    lines = [ln.strip() for ln in text.strip().split("\n") if ln.strip()]
    if not lines:
        raise ProgramParseError("empty program")

    input_names = [n for n, _ in example.inputs]

    def build(name: str) -> tuple:
        """Returns ('input', arg) or ('call', comp, child specs, terms)."""
        return fragments[name]

    for line in lines:
        if "=" not in line:
            raise ProgramParseError(f"expected an assignment: {line!r}")
        lhs, rhs = line.split("=", 1)
        lhs = lhs.strip()
        rhs = rhs.strip()
        if not re.match(r"df\d+\Z", lhs):
            raise ProgramParseError(f"assignment target must be dfN: {lhs!r}")
        toks = _Tokens(_tokenize(rhs))
        kind, first = toks.next()
        if kind == "ident" and toks.done():
            if first in input_names:
                fragments[lhs] = ("input", first)
            elif first in fragments:
                fragments[lhs] = fragments[first]
            else:
                raise ProgramParseError(f"unknown table reference {first!r}")
            last = lhs
            continue
        if kind != "ident":
            raise ProgramParseError(f"expected a component call: {rhs!r}")
        comp = registry.table_component(first)
        raw_args = _call_args_raw(toks)
        if not toks.done():
            raise ProgramParseError(f"trailing tokens after call: {rhs!r}")
        if len(raw_args) < comp.n_tables:
            raise ProgramParseError(f"{first}: missing table arguments")
        child_refs = []
        for i in range(comp.n_tables):
            ref = _name_of_tokens(raw_args[i], f"{first} table argument")
            if ref not in fragments and ref not in input_names:
                raise ProgramParseError(f"unknown table reference {ref!r}")
            child_refs.append(ref)
        value_tokens = raw_args[comp.n_tables:]
        terms = _parse_value_args(first, comp.value_params, value_tokens)
        fragments[lhs] = ("call", first, tuple(child_refs), tuple(terms))
        last = lhs

    assert last is not None

    # Assemble the hypothesis bottom-up via refine/bind so hole ids are
    # assigned exactly as the search would assign them.
    h = root_hole()

    def instantiate(h: Node, hole_id: int, name: str) -> Node:
        frag = fragments.get(name)
        if frag is None:
            # direct input reference
            table = example.input_table(name)
            return bind_hole(h, hole_id, InputBinding(name, table))
        if frag[0] == "input":
            table = example.input_table(frag[1])
            return bind_hole(h, hole_id, InputBinding(frag[1], table))
        _, comp_name, child_refs, terms = frag
        h = refine(h, hole_id, comp_name, registry)
        node = next(
            n for n in _iter(h) if isinstance(n, ComponentNode) and n.id == hole_id
        )
        tbl_holes = [c.id for c in node.children[: len(child_refs)]]
        value_holes = [c.id for c in node.children[len(child_refs):]]
        for term, vh in zip(terms, value_holes):
            h = bind_hole(h, vh, TermBinding(term))
        for ref, th in zip(child_refs, tbl_holes):
            h = instantiate(h, th, ref)
        return h

    from .hypotheses import iter_nodes as _iter

    return instantiate(h, 0, last)


def _parse_value_args(
    comp_name: str,
    params: tuple[TypeExpr, ...],
    raw: list[list[tuple[str, str]]],
) -> list[Term]:
    terms: list[Term] = []
    if comp_name in ("summarise", "mutate"):
        if len(raw) != 1:
            raise ProgramParseError(f"{comp_name} takes one named argument")
        tokens = raw[0]
        eq_positions = [i for i, t in enumerate(tokens) if t[1] == "="]
        if not eq_positions:
            raise ProgramParseError(f"{comp_name} argument must be name = expr")
        split = eq_positions[0]
        name = _name_of_tokens(tokens[:split], f"{comp_name} name")
        toks = _Tokens(tokens[split + 1:])
        expr = _parse_expr(toks)
        if not toks.done():
            raise ProgramParseError(f"{comp_name}: trailing tokens in expression")
        return [Const(Str(name)), expr]
    if params and params[-1] is COLS:
        head, tail = params[:-1], raw[: len(params) - 1]
        for p, tokens in zip(head, tail):
            terms.append(_parse_single(comp_name, p, tokens))
        col_names = [
            _name_of_tokens(tokens, f"{comp_name} column")
            for tokens in raw[len(head):]
        ]
        if not col_names:
            raise ProgramParseError(f"{comp_name}: empty column list")
        terms.append(ColsLiteral(tuple(col_names)))
        return terms
    if len(raw) != len(params):
        raise ProgramParseError(
            f"{comp_name}: expected {len(params)} value args, got {len(raw)}"
        )
    for p, tokens in zip(params, raw):
        terms.append(_parse_single(comp_name, p, tokens))
    return terms


def _parse_single(comp_name: str, param: TypeExpr, tokens) -> Term:
    if param is STR:
        return Const(Str(_name_of_tokens(tokens, f"{comp_name} name")))
    toks = _Tokens(list(tokens))
    if isinstance(param, Func) and param.ret is BOOL:
        term = _parse_comparison(toks)
    else:
        term = _parse_expr(toks)
    if not toks.done():
        raise ProgramParseError(f"{comp_name}: trailing tokens")
    return term
