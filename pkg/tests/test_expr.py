import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmarkov.expr import (BinOp, Call, ExprEvalError, ExprSyntaxError, Neg, Num, UnboundIdentifierError, Var,
                          evaluate, evaluate_text, free_variables, parse, to_text)


@pytest.mark.parametrize("src,value", [
    ("1-3*2^2", -11.0),
    ("2^3^2", 512.0),
    ("-2*3", -6.0),
    ("-2^2", 4.0),
    ("8/4/2", 1.0),
    ("10-4-3", 3.0),
    ("(1+2)*3", 9.0),
    ("1.5e1 + .5", 15.5),
    ("sqrt(16)", 4.0),
])
def test_constant_expressions(src, value):
    assert evaluate_text(src) == value


def test_expressions_with_parameters():
    assert evaluate_text("sqrt(1-a^2)/2", {"a": 0.6}) == pytest.approx(0.4, abs=1e-15)
    assert evaluate_text("p/4", {"p": 0.5}) == 0.125
    assert free_variables(parse("sqrt(1-a^2)*p + 3")) == {"a", "p"}


def test_unbound_identifier_names_it():
    with pytest.raises(UnboundIdentifierError) as info:
        evaluate_text("p/4")
    assert info.value.name == "p" and "'p'" in str(info.value)


@pytest.mark.parametrize("src", ["1/0", "sqrt(-1)", "(0-8)^0.5", "10^400"])
def test_evaluation_errors(src):
    with pytest.raises(ExprEvalError):
        evaluate_text(src)


def test_exponent_must_be_constant():
    with pytest.raises(ExprSyntaxError):
        parse("2^a")
    assert evaluate_text("a^2", {"a": 3}) == 9.0


@pytest.mark.parametrize("src,column", [("1+*2", 3), ("(1+2", 5), ("1 2", 3), ("3 $ 4", 3), ("", 1)])
def test_syntax_errors_report_column(src, column):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src)
    assert info.value.pos + 1 == column
    assert f"column {column}" in str(info.value)


names = st.sampled_from(["a", "p", "x1"])
constants = st.floats(min_value=0, max_value=1e6, allow_nan=False).map(Num)


def constant_trees():
    return st.recursive(
        constants,
        lambda sub: st.one_of(st.builds(Neg, sub), st.builds(BinOp, st.sampled_from("+-*/"), sub, sub)),
        max_leaves=4)


def trees():
    leaves = st.one_of(constants, names.map(Var))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            st.builds(Neg, sub),
            st.builds(BinOp, st.sampled_from("+-*/"), sub, sub),
            st.builds(lambda b, e: BinOp("^", b, e), sub, constant_trees()),
            st.builds(lambda a: Call("sqrt", a), sub)),
        max_leaves=12)


@given(trees())
@settings(max_examples=300)
def test_print_parse_round_trip(tree):
    assert parse(to_text(tree)) == tree


def test_printer_uses_minimal_parentheses():
    assert to_text(parse("(1-2)-3")) == "1-2-3"
    assert to_text(parse("1-(2-3)")) == "1-(2-3)"
    assert to_text(parse("(2^3)^2")) == "(2^3)^2"
    assert to_text(parse("-(a*b)")) == "-(a*b)"
    assert to_text(parse("0.25*a")) == "0.25*a"


def test_evaluate_matches_python_arithmetic():
    env = {"a": 0.3, "p": 2.0}
    assert evaluate(parse("a*p - a/p + p^2"), env) == pytest.approx(0.3 * 2 - 0.15 + 4)
    assert math.isclose(evaluate_text("2^-1"), 0.5)
