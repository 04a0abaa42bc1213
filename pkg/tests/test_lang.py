from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from numinv.lang import Constraint, LinExpr, ParseError, parse_program

from conftest import ALL_PROGRAMS, corpus_source


# --- LinExpr -------------------------------------------------------------


def test_linexpr_arithmetic_derived():
    # 2*(x + 3) - (y - 1) = 2x - y + 7, checked by hand
    e = LinExpr.var("x").add(LinExpr.constant(3)).scale(2).sub(
        LinExpr.var("y").sub(LinExpr.constant(1))
    )
    assert dict(e.coeffs) == {"x": 2, "y": -1}
    assert e.const == 7
    assert e.eval({"x": 5, "y": 2}) == 15


@given(
    st.dictionaries(st.sampled_from("abc"), st.integers(-9, 9), max_size=3),
    st.integers(-9, 9),
    st.dictionaries(st.sampled_from("abc"), st.integers(-9, 9), max_size=3),
    st.integers(-9, 9),
    st.integers(-4, 4),
)
def test_linexpr_eval_is_linear(c1, k1, c2, k2, s):
    e1 = LinExpr(tuple(sorted(c1.items())), k1)
    e2 = LinExpr(tuple(sorted(c2.items())), k2)
    store = {v: 3 for v in "abc"}
    assert e1.add(e2).eval(store) == e1.eval(store) + e2.eval(store)
    assert e1.sub(e2).eval(store) == e1.eval(store) - e2.eval(store)
    assert e1.scale(s).eval(store) == s * e1.eval(store)


def test_constraint_make_normalizes_derived():
    # 2x + 3 <= y + 5  normalizes to 2x - y <= 2, checked by hand
    lhs = LinExpr.var("x").scale(2).add(LinExpr.constant(3))
    rhs = LinExpr.var("y").add(LinExpr.constant(5))
    c = Constraint.make(lhs, "<=", rhs)
    assert dict(c.coeffs) == {"x": 2, "y": -1}
    assert c.op == "<="
    assert c.const == 2


def test_constraint_negate_flips_satisfaction():
    c = Constraint.make(LinExpr.var("x"), "<", LinExpr.constant(4))
    n = c.negate()
    for x in range(-2, 8):
        assert c.holds({"x": x}) != n.holds({"x": x})


def test_to_leq_integer_exact():
    # x < 4 over integers is x <= 3
    c = Constraint.make(LinExpr.var("x"), "<", LinExpr.constant(4))
    rows = c.to_leq()
    assert rows == [((("x", 1),), 3)]
    # x == 2 splits into x <= 2 and -x <= -2
    eq = Constraint.make(LinExpr.var("x"), "==", LinExpr.constant(2))
    assert len(eq.to_leq()) == 2
    with pytest.raises(ValueError):
        Constraint.make(LinExpr.var("x"), "!=", LinExpr.constant(2)).to_leq()


# --- parser --------------------------------------------------------------


def test_parse_corpus_programs():
    for name in ALL_PROGRAMS:
        fn = parse_program(corpus_source(name))
        assert fn.name == name.removesuffix(".mil")


def test_parse_rate_limiter_structure():
    fn = parse_program(corpus_source("rate_limiter.mil"))
    assert [d.name for d in fn.decls] == ["x_old", "x"]
    assert len(fn.body) == 1  # single while loop


@pytest.mark.parametrize(
    "src,fragment",
    [
        ("fn f() { x = 1; }", "undeclared"),
        ("fn f() { int x = 0; int y = 0; x = x * y; }", "linear"),
        ("fn f() { break; }", "break"),
        ("fn f() { int x = 0; if (input(0,1) >= 1) { } else { } }", "input"),
        ("fn f() { int x = 0; x = 1; int y = 0; }", "declaration"),
        ("fn f() { int x = 0; while (x != 3) { } }", None),
    ],
)
def test_parse_errors(src, fragment):
    if fragment is None:
        parse_program(src)  # != in guards is legal
        return
    with pytest.raises(ParseError) as exc:
        parse_program(src)
    assert fragment in str(exc.value).lower()


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_program("fn f() {\n  y = 1;\n}")
    assert exc.value.line == 2
