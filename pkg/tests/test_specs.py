"""Spec registry: builtin atom tables, TOML loading, level containment."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablesynth.components import UnknownComponentError, builtin_registry
from tablesynth.formulas import (
    TRUE,
    AttributeKind,
    HoleId,
    Rel,
    evaluate,
    formula_variables,
)
from tablesynth.specs import (
    SpecAtom,
    SpecDisjunction,
    SpecParseError,
    UnknownAttributeError,
    load_builtin_specs,
    load_spec_file,
    parse_atom,
)
from tablesynth.tables import SpecLevel

TABLE_COMPONENTS = tuple(c.name for c in builtin_registry().table)


def atom_texts(spec) -> set[str]:
    return {c.text for c in spec.clauses if isinstance(c, SpecAtom)}


# ---------------------------------------------------------------------------
# Builtin content


def test_every_component_has_specs_at_both_levels():
    for level in (SpecLevel.SPEC1, SpecLevel.SPEC2):
        specs = load_builtin_specs(level)
        assert set(specs.by_component) == set(TABLE_COMPONENTS)


def test_filter_spec1_shrinks_rows_keeps_columns():
    spec = load_builtin_specs(SpecLevel.SPEC1).spec_for("filter")
    assert atom_texts(spec) == {"out.row < in1.row", "out.col = in1.col"}


def test_select_spec1_keeps_rows_drops_columns():
    spec = load_builtin_specs(SpecLevel.SPEC1).spec_for("select")
    assert atom_texts(spec) == {"out.row = in1.row", "out.col < in1.col"}


def test_mutate_spec2_forces_new_values():
    spec1 = load_builtin_specs(SpecLevel.SPEC1).spec_for("mutate")
    assert "out.col = in1.col + 1" in atom_texts(spec1)
    spec2 = load_builtin_specs(SpecLevel.SPEC2).spec_for("mutate")
    texts = atom_texts(spec2)
    # Strictly increasing newVals is what separates mutate from select at
    # level 2; the upper bound caps it at one fresh name plus one value
    # per row.
    assert "out.newVals > in1.newVals" in texts
    assert "out.newVals <= in1.newVals + in1.row + 1" in texts


def test_summarise_spec2_ties_groups_to_output_rows():
    spec = load_builtin_specs(SpecLevel.SPEC2).spec_for("summarise")
    texts = atom_texts(spec)
    assert "in1.group = out.row" in texts
    assert "out.group = in1.group" in texts


def test_join_row_bound_is_a_two_case_disjunction():
    for level in (SpecLevel.SPEC1, SpecLevel.SPEC2):
        spec = load_builtin_specs(level).spec_for("inner_join")
        disjunctions = [c for c in spec.clauses if isinstance(c, SpecDisjunction)]
        assert len(disjunctions) == 1
        cases = disjunctions[0].cases
        assert len(cases) == 2
        case_texts = {tuple(a.text for a in case) for case in cases}
        assert case_texts == {
            ("in1.row <= out.row", "out.row <= in2.row"),
            ("in2.row <= out.row", "out.row <= in1.row"),
        }


def test_spec2_contains_spec1_everywhere():
    spec1 = load_builtin_specs(SpecLevel.SPEC1)
    spec2 = load_builtin_specs(SpecLevel.SPEC2)
    for name in TABLE_COMPONENTS:
        weak = atom_texts(spec1.spec_for(name))
        strong = atom_texts(spec2.spec_for(name))
        assert weak <= strong, name
        assert strong - weak, f"{name} gains nothing at level 2"


def test_none_level_is_trivial():
    specs = load_builtin_specs(None)
    assert specs.level is SpecLevel.NONE
    assert specs.by_component == {}
    assert specs.formula_for("filter", {}) is TRUE


def test_formula_instantiation_is_memoized():
    specs = load_builtin_specs(SpecLevel.SPEC1)
    owners = {"out": HoleId(0), "in1": HoleId(1)}
    f = specs.formula_for("filter", owners)
    assert specs.formula_for("filter", owners) is f


# ---------------------------------------------------------------------------
# Atom parsing


def test_parse_atom_splits_sides_and_constant():
    a = parse_atom("out.row <= in1.row + 2")
    assert a.lhs == (("out", AttributeKind.ROW, 1),)
    assert a.rel is Rel.LE
    assert a.rhs == (("in1", AttributeKind.ROW, 1),)
    assert a.lhs_const == 0
    assert a.rhs_const == 2


def test_parse_atom_coefficients_and_subtraction():
    a = parse_atom("2*out.row = in1.col - 1")
    assert a.lhs == (("out", AttributeKind.ROW, 2),)
    assert a.rel is Rel.EQ
    assert a.rhs == (("in1", AttributeKind.COL, 1),)
    assert a.rhs_const == -1


def test_parse_atom_rejects_disequality():
    with pytest.raises(SpecParseError):
        parse_atom("out.row != in1.row")


def test_parse_atom_requires_a_relation():
    with pytest.raises(SpecParseError):
        parse_atom("out.row + in1.row")


def test_parse_atom_rejects_unknown_attribute():
    with pytest.raises(UnknownAttributeError):
        parse_atom("out.bogus = 1")


def test_parse_atom_keeps_source_text():
    assert parse_atom("  out.row = in1.row ").text == "out.row = in1.row"


# ---------------------------------------------------------------------------
# Instantiation semantics


def test_instantiated_filter_spec_checks_counts():
    specs = load_builtin_specs(SpecLevel.SPEC1)
    owners = {"out": HoleId(0), "in1": HoleId(1)}
    f = specs.formula_for("filter", owners)
    row = lambda h: next(
        v for v in formula_variables(f) if v.owner == HoleId(h) and v.attr is AttributeKind.ROW
    )
    col = lambda h: next(
        v for v in formula_variables(f) if v.owner == HoleId(h) and v.attr is AttributeKind.COL
    )
    good = {row(0): 2, row(1): 3, col(0): 4, col(1): 4}
    assert evaluate(f, good)
    same_rows = {**good, row(0): 3}
    assert not evaluate(f, same_rows)
    changed_cols = {**good, col(0): 3}
    assert not evaluate(f, changed_cols)


@settings(max_examples=300, deadline=None)
@given(
    name=st.sampled_from(TABLE_COMPONENTS),
    data=st.data(),
)
def test_spec2_models_are_spec1_models(name, data):
    owners = {"out": HoleId(0), "in1": HoleId(1), "in2": HoleId(2)}
    f1 = load_builtin_specs(SpecLevel.SPEC1).formula_for(name, owners)
    f2 = load_builtin_specs(SpecLevel.SPEC2).formula_for(name, owners)
    vars_ = sorted(formula_variables(f1) | formula_variables(f2), key=lambda v: v.sort_key())
    assignment = {
        v: data.draw(st.integers(min_value=0, max_value=8), label=v.label()) for v in vars_
    }
    if evaluate(f2, assignment):
        assert evaluate(f1, assignment)


# ---------------------------------------------------------------------------
# Spec files


def test_empty_spec_file_means_builtins():
    loaded = load_spec_file(b"", SpecLevel.SPEC1)
    builtin = load_builtin_specs(SpecLevel.SPEC1)
    assert set(loaded.by_component) == set(builtin.by_component)
    for name in TABLE_COMPONENTS:
        assert atom_texts(loaded.spec_for(name)) == atom_texts(builtin.spec_for(name))


def test_spec_file_replaces_one_component():
    data = b'[filter]\nspec1 = ["out.row <= in1.row"]\n'
    loaded = load_spec_file(data, SpecLevel.SPEC1)
    assert atom_texts(loaded.spec_for("filter")) == {"out.row <= in1.row"}
    builtin = load_builtin_specs(SpecLevel.SPEC1)
    assert atom_texts(loaded.spec_for("select")) == atom_texts(builtin.spec_for("select"))


def test_spec_file_keys_are_per_level():
    data = b'[filter]\nspec1 = ["out.row <= in1.row"]\n'
    loaded = load_spec_file(data, SpecLevel.SPEC2)
    builtin = load_builtin_specs(SpecLevel.SPEC2)
    # Only the spec2 key would replace anything at level 2.
    assert atom_texts(loaded.spec_for("filter")) == atom_texts(builtin.spec_for("filter"))


def test_spec_file_ignored_at_level_none():
    data = b'[filter]\nspec1 = ["out.row <= in1.row"]\n'
    loaded = load_spec_file(data, SpecLevel.NONE)
    assert loaded.by_component == {}


def test_spec_file_unknown_component():
    with pytest.raises(UnknownComponentError):
        load_spec_file(b'[nosuch]\nspec1 = ["out.row = 1"]\n', SpecLevel.SPEC1)


def test_spec_file_unknown_key():
    with pytest.raises(SpecParseError):
        load_spec_file(b'[filter]\nspec3 = ["out.row = 1"]\n', SpecLevel.SPEC1)


def test_spec_file_values_must_be_string_arrays():
    with pytest.raises(SpecParseError):
        load_spec_file(b"[filter]\nspec1 = [1]\n", SpecLevel.SPEC1)


def test_spec_file_rejects_in2_on_unary_component():
    with pytest.raises(SpecParseError):
        load_spec_file(b'[filter]\nspec1 = ["out.row <= in2.row"]\n', SpecLevel.SPEC1)


def test_spec_file_bad_toml_reports_position():
    with pytest.raises(SpecParseError) as exc:
        load_spec_file(b"[filter\nspec1 = []\n", SpecLevel.SPEC1)
    assert exc.value.line == 1


def test_spec_file_must_be_utf8():
    with pytest.raises(SpecParseError):
        load_spec_file(b"\xff\xfe[filter]", SpecLevel.SPEC1)
