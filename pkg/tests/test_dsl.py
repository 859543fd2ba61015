import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab import catalog as cat
from finslerlab.dsl import (BINARY, FUNCTIONS, ChartError, ExprSyntaxError, Node, binop, call, chart_from_dict,
                            const, coord, evaluate, load_chart, parse_expr, to_text, validate_chart)
from finslerlab.sampling import SplitMix64, sample_domain


def test_parse_example_tree():
    want = binop("+", binop("^", coord(1), const(2)), call("sin", coord(2)))
    assert parse_expr("x1^2 + sin(x2)") == want


def test_precedence_and_associativity():
    assert parse_expr("2^3^2") == binop("^", const(2), binop("^", const(3), const(2)))
    assert parse_expr("1 - 2 - 3") == binop("-", binop("-", const(1), const(2)), const(3))
    assert evaluate(parse_expr("-2^2"), []) == -4.0
    assert evaluate(parse_expr("2 * pi"), []) == pytest.approx(2 * np.pi)


def test_syntax_error_at_end():
    with pytest.raises(ExprSyntaxError) as exc:
        parse_expr("x1 +")
    assert exc.value.position == 4
    assert "end of input" in str(exc.value)


@pytest.mark.parametrize("text, fragment", [
    ("foo(x1)", "unknown"),
    ("sin(x1, x2)", "sin"),
    ("sqrt()", "expected"),
    ("x3", "dimension"),
    ("(x1", "')'"),
])
def test_errors(text, fragment):
    with pytest.raises((ExprSyntaxError, ChartError)) as exc:
        parse_expr(text, 2)
    assert fragment in str(exc.value)


def test_evaluate_on_arrays():
    e = parse_expr("x1 * exp(x2) / (1 + x1^2)")
    x1, x2 = np.array([0.5, -1.0]), np.array([0.1, 0.2])
    assert np.allclose(evaluate(e, [x1, x2]), x1 * np.exp(x2) / (1 + x1 ** 2))


leaf = st.one_of(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False).map(const),
    st.floats(allow_nan=False, allow_infinity=False).map(const),
    st.integers(1, 3).map(coord),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(BINARY), children, children).map(lambda t: binop(*t)),
        st.tuples(st.sampled_from(FUNCTIONS), children).map(lambda t: call(*t)),
        children.map(lambda c: Node("neg", (c,))),
    )


trees = st.recursive(leaf, _extend, max_leaves=12)


@settings(max_examples=1000, deadline=None)
@given(trees)
def test_print_parse_round_trip(tree):
    text = to_text(tree)
    assert parse_expr(text, 3) == tree
    assert to_text(parse_expr(text, 3)) == text


def test_validate_pass_and_fail():
    ok = cat.euclidean_randers(2, [0.5, 0.0])
    rep = validate_chart(ok, [[0.1, 0.2], [3.0, -1.0]])
    assert rep.passed and rep.max_beta_norm == pytest.approx(0.5)
    doc = {"dimension": 2, "a": ["1", "0", "0", "1"], "b": ["1.2", "0"], "domain": {"type": "ball", "radius": 5}}
    bad = chart_from_dict(doc)
    rep = validate_chart(bad, [[0.0, 0.0]])
    assert not rep.passed
    assert rep.max_beta_norm == pytest.approx(1.2)
    assert rep.offending == [0.0, 0.0]


def test_indefinite_a_rejected():
    doc = {"dimension": 2, "a": ["1", "2", "2", "1"], "b": ["0", "0"], "domain": {"type": "box", "bounds": [[-1, 1], [-1, 1]]}}
    rep = validate_chart(chart_from_dict(doc), [[0.5, 0.5]])
    assert not rep.passed and rep.min_eigenvalue < 0


def test_funk_passes_on_sample_ball():
    ch = cat.funk_ball(2)
    pts = sample_domain(ch.sampling, 2, 100, SplitMix64(3))
    assert validate_chart(ch, pts).passed


@pytest.mark.parametrize("name, params", [
    ("euclidean_randers", {"n": 2}), ("euclidean_randers", {"n": 3, "b": [0.3, 0.2, -0.1]}),
    ("funk_ball", {"n": 2}), ("funk_ball", {"n": 3}),
    ("riemannian_sphere", {"n": 2}), ("riemannian_sphere", {"n": 3}),
    ("parallel_beta_product", {"n": 3}), ("parallel_beta_product", {"n": 4}),
])
def test_catalog_entries_validate_on_their_domain(name, params):
    ch = cat.catalog(name, **params)
    pts = sample_domain(ch.domain, ch.n, 200, SplitMix64(11))
    assert validate_chart(ch, pts).passed


def test_funk_beta_norm_is_radius():
    ch = cat.funk_ball(3)
    pts = sample_domain(ch.domain, 3, 50, SplitMix64(5))
    assert np.allclose(ch.beta_norm(pts), np.linalg.norm(pts, axis=1), rtol=0, atol=1e-10)


def test_catalog_values():
    ch = cat.euclidean_randers(2, [0.5, 0.0])
    y = np.array([0.3, -1.2])
    assert ch.finsler([4.0, 1.0], y) == pytest.approx(np.hypot(*y) + 0.5 * 0.3)
    assert cat.funk_ball(2).finsler([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)


@pytest.mark.parametrize("name, params", [
    ("euclidean_randers", {"n": 2, "b": [1.0, 0.5]}),
    ("parallel_beta_product", {"n": 2}),
    ("parallel_beta_product", {"b": 1.5}),
    ("nope", {}),
    ("funk_ball", {"bogus": 1}),
])
def test_catalog_errors(name, params):
    with pytest.raises(ChartError):
        cat.catalog(name, **params)


def test_asymmetric_a_rejected():
    doc = {"dimension": 2, "a": ["1", "x1", "x2", "1"], "b": ["0", "0"], "domain": {"type": "ball", "radius": 1}}
    with pytest.raises(ChartError, match="symmetric"):
        chart_from_dict(doc)


def test_json_round_trip(tmp_path):
    ch = cat.funk_ball(2)
    p = tmp_path / "funk.json"
    p.write_text(json.dumps(ch.to_dict()))
    back = load_chart(p)
    assert back.a == ch.a and back.b == ch.b and back.domain == ch.domain
    x, y = [0.2, -0.4], [1.0, 0.7]
    assert back.finsler(x, y) == ch.finsler(x, y)


def test_domain_guard_is_hard():
    ch = cat.funk_ball(2)
    from finslerlab.jets import DomainError
    with pytest.raises(DomainError):
        ch.finsler([0.995, 0.0], [1.0, 0.0])
