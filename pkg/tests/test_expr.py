import math
import random

import pytest

from corankone import (
    Chart,
    ScalarExpr,
    ZeroTester,
    cos,
    derive,
    exp,
    log,
    parse_scalar,
    rational,
    simplify,
    sin,
    symbol,
)
from corankone.errors import (
    ChartError,
    ExprError,
    ExprSyntaxError,
    UnknownIdentifierError,
)
from corankone.expr import ONE, ZERO, VerdictKind


@pytest.fixture
def xyz():
    return Chart(("x", "y", "z"))


@pytest.fixture
def t3():
    return Chart(
        ("theta1", "theta2", "theta3"),
        periodic=("theta1", "theta2", "theta3"),
        params=("a", "b"),
    )


def random_expr(rng, chart, depth=3):
    """Random expression tree over a chart, for property tests."""
    names = chart.coords + chart.params
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return symbol(rng.choice(names))
        return rational(rng.randint(-3, 3))
    op = rng.randrange(6)
    a = random_expr(rng, chart, depth - 1)
    b = random_expr(rng, chart, depth - 1)
    if op == 0:
        return a + b
    if op == 1:
        return a - b
    if op == 2:
        return a * b
    if op == 3:
        return a ** rng.randint(0, 3)
    if op == 4:
        return sin(a) if rng.random() < 0.5 else cos(a)
    return exp(a)


class TestParsing:
    def test_coordinate_reference(self, xyz):
        assert parse_scalar("y", xyz) == symbol("y")

    def test_t3_rational_coefficient(self, t3):
        e = parse_scalar("a/(a^2+b^2+1)", t3)
        assert str(e) == "a/(a^2 + b^2 + 1)"
        assert e.evaluate({"a": 1.0, "b": 1.0}) == pytest.approx(1.0 / 3.0)

    def test_log_node(self):
        ch = Chart(("x", "y", "t"), domains={"t": (0.05, 1.0)})
        e = parse_scalar("log(t)", ch)
        assert str(e) == "log(t)"

    def test_syntax_error_has_position(self, xyz):
        with pytest.raises(ExprSyntaxError) as ei:
            parse_scalar("x + * y", xyz)
        assert ei.value.position == 4

    def test_unknown_identifier_named(self, xyz):
        with pytest.raises(UnknownIdentifierError) as ei:
            parse_scalar("x + qq", xyz)
        assert ei.value.name == "qq"

    def test_unbalanced_parens(self, xyz):
        with pytest.raises(ExprSyntaxError):
            parse_scalar("(x + y", xyz)

    def test_integer_exponents_only(self, xyz):
        with pytest.raises(ExprSyntaxError):
            parse_scalar("x^y", xyz)
        with pytest.raises(ExprSyntaxError):
            parse_scalar("x^1.5", xyz)

    def test_negative_and_parenthesized_exponent(self, xyz):
        assert parse_scalar("x^-2", xyz) == parse_scalar("1/x^2", xyz)
        assert parse_scalar("x^(-2)", xyz) == parse_scalar("1/x^2", xyz)

    def test_decimal_literals_exact(self, xyz):
        assert parse_scalar("0.5", xyz) == parse_scalar("1/2", xyz)

    def test_division_by_literal_zero(self, xyz):
        with pytest.raises(ExprError):
            parse_scalar("1/(x - x)", xyz)

    def test_parse_print_parse_fixed_point(self, xyz):
        rng = random.Random(7)
        for _ in range(60):
            e = random_expr(rng, xyz)
            s = str(e)
            again = parse_scalar(s, xyz)
            assert again == e
            assert str(again) == s

    def test_torus_strict_rejects_bare_angle(self):
        strict = Chart(("theta", "x"), periodic=("theta",), torus_strict=True)
        with pytest.raises(ChartError):
            parse_scalar("theta + x", strict)
        # trig dependence stays legal
        parse_scalar("sin(theta)*x", strict)
        with pytest.raises(ChartError):
            parse_scalar("exp(theta)", strict)


class TestDerive:
    def test_constant_directions(self, xyz):
        assert parse_scalar("y", xyz).derive("x").is_structural_zero

    def test_log_derivative(self):
        ch = Chart(("t",), domains={"t": (0.05, 1.0)})
        e = parse_scalar("log(t)", ch)
        assert e.derive("t") == parse_scalar("1/t", ch)

    def test_exp_chain_rule_against_finite_differences(self, xyz):
        e = parse_scalar("exp(-x)", xyz)
        d = e.derive("x")
        assert d == parse_scalar("-1/exp(x)", xyz)
        rng = random.Random(11)
        h = 1e-6
        for _ in range(10):
            x0 = rng.uniform(-1.0, 1.0)
            fd = (e.evaluate({"x": x0 + h}) - e.evaluate({"x": x0 - h})) / (2 * h)
            assert d.evaluate({"x": x0}) == pytest.approx(fd, rel=1e-5)

    def test_linearity_and_leibniz_on_random_trees(self, xyz):
        rng = random.Random(3)
        for _ in range(40):
            a = random_expr(rng, xyz, depth=2)
            b = random_expr(rng, xyz, depth=2)
            c = rng.choice(xyz.coords)
            lin = (a + b).derive(c) - a.derive(c) - b.derive(c)
            assert lin.is_structural_zero
            leib = (a * b).derive(c) - a.derive(c) * b - a * b.derive(c)
            assert leib.is_structural_zero

    def test_chain_rule_through_functions(self, xyz):
        rng = random.Random(5)
        for _ in range(20):
            a = random_expr(rng, xyz, depth=2)
            c = rng.choice(xyz.coords)
            assert (sin(a).derive(c) - cos(a) * a.derive(c)).is_structural_zero
            assert (exp(a).derive(c) - exp(a) * a.derive(c)).is_structural_zero

    def test_mixed_partials_commute(self, xyz):
        rng = random.Random(9)
        for _ in range(30):
            e = random_expr(rng, xyz)
            u, v = rng.choice(xyz.coords), rng.choice(xyz.coords)
            assert (e.derive(u).derive(v) - e.derive(v).derive(u)).is_structural_zero

    def test_chart_validated_when_given(self, xyz):
        with pytest.raises(ChartError):
            derive(symbol("x"), "w", xyz)


class TestSimplify:
    def test_idempotent_on_random_corpus(self, xyz):
        rng = random.Random(21)
        for _ in range(50):
            e = random_expr(rng, xyz)
            s1 = simplify(e)
            assert simplify(s1) == s1
            assert s1 == e

    def test_exp_product_cancellation(self, xyz):
        x = symbol("x")
        assert (exp(x) * exp(-x) - 1).is_structural_zero

    def test_log_of_exp_unwinds(self, xyz):
        x, y = symbol("x"), symbol("y")
        assert log(exp(x + y)) == x + y
        assert log(exp(-(x**2))) == -(x**2)

    def test_trig_parity(self):
        x = symbol("x")
        assert sin(-x) == -sin(x)
        assert cos(-x) == cos(x)

    def test_rational_reduction(self, xyz):
        e = parse_scalar("(x^2 - 1)/(x - 1)", xyz)
        assert e == parse_scalar("x + 1", xyz)

    def test_monomial_content_cancels(self):
        ch = Chart(("t", "x"), domains={"t": (0.05, 1.0)})
        e = parse_scalar("(t^2*x + t)/t", ch)
        assert e == parse_scalar("t*x + 1", ch)

    def test_fraction_field_axioms_random(self, xyz):
        # exercises the gcd-backed normalizer: cleared denominators must
        # cancel exactly against the expanded numerators
        rng = random.Random(37)
        for _ in range(30):
            polys = []
            while len(polys) < 4:
                p = random_expr(rng, xyz, depth=2)
                if not p.is_structural_zero:
                    polys.append(p)
            a, b, c, d = polys
            lhs = (a / b + c / d) * (b * d)
            rhs = a * d + c * b
            assert (lhs - rhs).is_structural_zero
            prod = (a / b) * (b / a)
            assert (prod - 1).is_structural_zero


class TestIsZero:
    def test_exp_inverse_is_symbolically_zero(self, xyz):
        v = ZeroTester(xyz).is_zero(parse_scalar("exp(x)*exp(-x) - 1", xyz))
        assert v.kind is VerdictKind.ZERO

    def test_t3_denominator_is_nonzero_with_witness(self, t3):
        v = ZeroTester(t3, seed=2).is_zero(parse_scalar("a^2+b^2+1", t3))
        assert v.kind is VerdictKind.NONZERO
        assert v.witness is not None and v.value > 0

    def test_pythagorean_identity_probably_zero(self, xyz):
        tester = ZeroTester(xyz, seed=4, trials=20)
        v = tester.is_zero(parse_scalar("sin(x)^2 + cos(x)^2 - 1", xyz))
        assert v.kind is VerdictKind.PROBABLY_ZERO

    def test_unknown_on_unevaluable_domain(self):
        ch = Chart(("x",), domains={"x": (-1.0, -0.1)})
        v = ZeroTester(ch, seed=1).is_zero(parse_scalar("log(x)", ch))
        assert v.kind is VerdictKind.UNKNOWN

    def test_never_symbolic_true_with_witness(self, xyz):
        rng = random.Random(13)
        tester = ZeroTester(xyz, seed=8)
        for _ in range(40):
            e = random_expr(rng, xyz)
            v = tester.is_zero(e)
            if v.failed:
                assert not e.is_structural_zero

    def test_witness_point_actually_evaluates_nonzero(self, xyz):
        v = ZeroTester(xyz, seed=5).is_zero(parse_scalar("x + 2", xyz))
        assert v.failed
        e = parse_scalar("x + 2", xyz)
        assert abs(e.evaluate(v.witness)) > 1e-9


class TestChart:
    def test_duplicate_names_rejected(self):
        with pytest.raises(ChartError):
            Chart(("x", "x"))

    def test_basis_name_collision_rejected(self):
        with pytest.raises(ChartError):
            Chart(("x", "dx"))

    def test_empty_interval_rejected(self):
        with pytest.raises(ChartError):
            Chart(("x",), domains={"x": (1.0, 1.0)})

    def test_sampling_respects_domains(self):
        ch = Chart(("t",), domains={"t": (0.05, 1.0)})
        rng = random.Random(0)
        for _ in range(100):
            env = ch.sample(rng)
            assert 0.05 <= env["t"] <= 1.0

    def test_periodic_default_interval(self):
        ch = Chart(("theta",), periodic=("theta",))
        lo, hi = ch.domain("theta")
        assert lo == 0.0 and hi == pytest.approx(2 * math.pi)

    def test_with_coordinate_and_subchart(self):
        ch = Chart(("x", "y"), params=("a",))
        ext = ch.with_coordinate("t", domain=(0.05, 1.0))
        assert ext.coords == ("x", "y", "t")
        assert ext.domain("t") == (0.05, 1.0)
        sub = ext.subchart(("x", "y"))
        assert sub.coords == ("x", "y") and sub.params == ("a",)


class TestEvaluate:
    def test_pole_raises_singularity(self, xyz):
        from corankone.errors import EvaluationSingularity

        e = parse_scalar("1/x", xyz)
        with pytest.raises(EvaluationSingularity):
            e.evaluate({"x": 0.0})

    def test_function_values(self, xyz):
        e = parse_scalar("exp(x) + sin(y)*cos(z)", xyz)
        got = e.evaluate({"x": 0.3, "y": 0.7, "z": -0.2})
        want = math.exp(0.3) + math.sin(0.7) * math.cos(-0.2)
        assert got == pytest.approx(want)
