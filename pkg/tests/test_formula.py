"""AST validation, canonical printing, and structural invariants."""

import math
import random

import pytest

from stlmon import (
    Atom,
    BoolIs,
    CmpOp,
    Compare,
    Constant,
    Deriv,
    EnumEq,
    Eventually,
    Globally,
    Implies,
    Interval,
    Not,
    Rule,
    SignalDecl,
    SignalKind,
    SignalRef,
    Specification,
    UNBOUNDED,
    depth,
    format_number,
    node_count,
    pretty_print,
    validate,
)
from reference import PALETTE, random_formula

SPEED = SignalDecl("speed", SignalKind.REAL)
SURFACE = SignalDecl("surface", SignalKind.ENUM, ("track", "offroad"))
DONE = SignalDecl("finished_lap", SignalKind.BOOL)


def spec_with(formula, decls=(SPEED, SURFACE, DONE), name="r"):
    return Specification(tuple(decls), (Rule(name, formula),))


def speed_lt(c):
    return Atom(Compare(SignalRef("speed"), CmpOp.LT, Constant(c)))


class TestValidate:
    def test_well_formed_spec_has_no_diagnostics(self):
        f = Globally(Interval(0.0, UNBOUNDED), speed_lt(900))
        assert validate(spec_with(f)) == []

    def test_unknown_signal(self):
        f = Atom(Compare(SignalRef("velocity"), CmpOp.LT, Constant(900)))
        diags = validate(spec_with(f))
        assert len(diags) == 1
        assert "unknown signal" in diags[0].message
        assert diags[0].rule == "r"

    def test_interval_hi_below_lo(self):
        f = Eventually(Interval(5.0, 2.0), speed_lt(900))
        diags = validate(spec_with(f))
        assert len(diags) == 1
        assert "interval hi < lo" in diags[0].message
        assert "interval" in diags[0].path

    def test_negative_lo(self):
        f = Globally(Interval(-1.0, 2.0), speed_lt(900))
        assert any("interval lo < 0" in d.message for d in validate(spec_with(f)))

    def test_undeclared_enum_variant(self):
        f = Atom(EnumEq("surface", "grass"))
        diags = validate(spec_with(f))
        assert any("undeclared variant" in d.message for d in diags)

    def test_enum_in_arithmetic(self):
        f = Atom(Compare(SignalRef("surface"), CmpOp.LT, Constant(1)))
        diags = validate(spec_with(f))
        assert any("not real-valued" in d.message for d in diags)

    def test_deriv_of_bool(self):
        f = Atom(Compare(Deriv("finished_lap"), CmpOp.LT, Constant(1)))
        assert any("deriv of non-real" in d.message for d in validate(spec_with(f)))

    def test_bool_predicate_on_real_signal(self):
        f = Atom(BoolIs("speed"))
        assert any("not boolean" in d.message for d in validate(spec_with(f)))

    def test_duplicate_rule_names(self):
        f = speed_lt(1)
        spec = Specification((SPEED,), (Rule("r", f), Rule("r", f)))
        assert any("duplicate rule" in d.message for d in validate(spec))

    def test_duplicate_declaration(self):
        spec = Specification((SPEED, SPEED), ())
        assert any("duplicate signal" in d.message for d in validate(spec))

    def test_deterministic_and_order_stable(self):
        f = Eventually(
            Interval(5.0, 2.0),
            Atom(Compare(SignalRef("nope"), CmpOp.GT, SignalRef("also_nope"))),
        )
        first = validate(spec_with(f))
        second = validate(spec_with(f))
        assert first == second
        assert len(first) == 3  # bad interval + two unknown signals, in tree order
        assert "interval" in first[0].path


class TestPrettyPrint:
    def test_globally_canonical_form(self):
        f = Globally(Interval(0.0, UNBOUNDED), speed_lt(900))
        assert pretty_print(f) == "G[0, inf] (speed < 900)"

    def test_implies_canonical_form(self):
        f = Implies(
            Atom(EnumEq("surface", "track", negated=True)),
            Eventually(Interval(0.0, 60.0), Atom(EnumEq("surface", "track"))),
        )
        assert pretty_print(f) == "(surface != track) -> F[0, 60] (surface == track)"

    def test_negation_canonical_form(self):
        f = Not(Atom(Compare(SignalRef("speed"), CmpOp.GT, Constant(0))))
        assert pretty_print(f) == "!(speed > 0)"

    def test_bare_bool_sugar(self):
        f = Eventually(Interval(0.0, 800.0), Atom(BoolIs("finished_lap")))
        assert pretty_print(f) == "F[0, 800] (finished_lap)"

    def test_bool_false_prints_explicitly(self):
        assert pretty_print(Atom(BoolIs("finished_lap", False))) == "finished_lap == false"

    def test_number_formatting(self):
        assert format_number(900.0) == "900"
        assert format_number(0.2) == "0.2"
        assert format_number(-3.5) == "-3.5"
        assert format_number(1e-07) == "0.0000001"
        assert float(format_number(1e-07)) == 1e-07
        with pytest.raises(ValueError):
            format_number(math.inf)


class TestNodeCounts:
    def test_node_count_is_one_plus_children(self):
        rng = random.Random(7)
        for _ in range(200):
            f = random_formula(rng, max_depth=4)
            assert node_count(f) == 1 + sum(node_count(c) for c in f.children())

    def test_depth_bound_respected(self):
        rng = random.Random(8)
        for _ in range(200):
            f = random_formula(rng, max_depth=4)
            assert depth(f) <= 5  # depth counts nodes, so max_depth+1 levels

    def test_random_formulas_validate_cleanly(self):
        rng = random.Random(9)
        for _ in range(200):
            f = random_formula(rng, max_depth=4)
            assert validate(Specification(PALETTE, (Rule("r", f),))) == []

    def test_structural_equality(self):
        a = Globally(Interval(0.0, UNBOUNDED), speed_lt(900))
        b = Globally(Interval(0.0, UNBOUNDED), speed_lt(900))
        assert a == b
        assert hash(a) == hash(b)
        assert a != Eventually(Interval(0.0, UNBOUNDED), speed_lt(900))
