import random

import pytest

from corankone import Chart, ZeroTester, parse_scalar, rational, symbol
from corankone.calculus import (
    DiffForm,
    MultiVector,
    basis_form,
    basis_vector,
    interior,
    lie_derivative,
    parse_graded,
    power,
    wedge,
)
from corankone.errors import (
    DegenerateError,
    NotTransversalError,
    PivotUndecidableError,
)
from corankone.poisson import (
    PoissonStructure,
    invert_bivector,
    invert_twoform,
    linear_solve,
)


@pytest.fixture
def xyz():
    return Chart(("x", "y", "z"))


@pytest.fixture
def flat(xyz):
    return PoissonStructure(
        xyz,
        MultiVector(xyz, 2, {("x", "y"): 1}),
        transversal=basis_vector(xyz, "z"),
        tester=ZeroTester(xyz, seed=1),
    )


def t3_structure(seed=5):
    t3 = Chart(
        ("theta1", "theta2", "theta3"),
        periodic=("theta1", "theta2", "theta3"),
        params=("a", "b"),
    )
    Pi = parse_graded(
        "1/(a^2+b^2+1) @theta1^@theta2 + b/(a^2+b^2+1) @theta1^@theta3"
        " - a/(a^2+b^2+1) @theta2^@theta3",
        t3,
        "multivector",
    )
    v = parse_graded("a @theta1 + b @theta2 - @theta3", t3, "multivector")
    return PoissonStructure(t3, Pi, transversal=v, tester=ZeroTester(t3, seed=seed))


def random_bivector(rng, chart):
    import itertools

    coeffs = {}
    for key in itertools.combinations(range(chart.dim), 2):
        if rng.random() < 0.75:
            e = rational(rng.randint(-2, 2))
            for _ in range(rng.randint(0, 2)):
                e = e * symbol(rng.choice(chart.coords))
            coeffs[key] = e
    return MultiVector(chart, 2, coeffs)


class TestJacobi:
    def test_constant_bivector(self, xyz):
        P = PoissonStructure(xyz, MultiVector(xyz, 2, {("x", "y"): 1}))
        assert P.jacobi_verdict().symbolic

    def test_affine_example(self):
        xy = Chart(("x", "y"))
        P = PoissonStructure(xy, MultiVector(xy, 2, {("x", "y"): "y"}))
        assert P.jacobi_verdict().symbolic

    def test_mixed_bivector_both_paths_agree(self, xyz):
        Pi = MultiVector(xyz, 2, {("x", "y"): "z", ("y", "z"): "x"})
        P = PoissonStructure(xyz, Pi, tester=ZeroTester(xyz, seed=2))
        assert P.jacobi_verdict().holds == P.jacobiator_verdict().holds

    def test_non_jacobi_detected_by_both_paths(self, xyz):
        Pi = MultiVector(xyz, 2, {("x", "y"): 1, ("x", "z"): "x"})
        P = PoissonStructure(xyz, Pi, tester=ZeroTester(xyz, seed=3))
        assert P.jacobi_verdict().failed
        assert P.jacobiator_verdict().failed

    def test_dual_path_agreement_random(self, xyz):
        rng = random.Random(17)
        for i in range(25):
            P = PoissonStructure(
                xyz, random_bivector(rng, xyz), tester=ZeroTester(xyz, seed=100 + i)
            )
            assert P.jacobi_verdict().holds == P.jacobiator_verdict().holds

    def test_bracket_factor_against_jacobiator(self, xyz):
        # [Pi,Pi](coefficient on @i^@j^@k) == -2 * Jacobiator(x_i, x_j, x_k)
        from corankone.calculus import schouten

        rng = random.Random(23)
        for _ in range(10):
            Pi = random_bivector(rng, xyz)
            br = schouten(Pi, Pi)
            P = PoissonStructure(xyz, Pi)
            coeff = br.coefficient("x", "y", "z")
            jac = P.jacobiator("x", "y", "z")
            assert (coeff + rational(2) * jac).is_structural_zero


class TestHamiltonian:
    def test_constant_function(self, flat):
        assert flat.hamiltonian_vf(rational(5)).is_structural_zero

    def test_affine_u_x(self):
        xy = Chart(("x", "y"))
        P = PoissonStructure(xy, MultiVector(xy, 2, {("x", "y"): "y"}))
        assert P.hamiltonian_vf("x") == MultiVector(xy, 1, {("y",): "y"})

    def test_standard_u_y_and_volume_preservation(self):
        xy = Chart(("x", "y"))
        P = PoissonStructure(xy, MultiVector(xy, 2, {("x", "y"): 1}))
        u = P.hamiltonian_vf("y")
        assert u == -basis_vector(xy, "x")
        vol = wedge(basis_form(xy, "x"), basis_form(xy, "y"))
        assert lie_derivative(u, vol).is_structural_zero

    def test_pairing_reproduces_bracket(self, xyz):
        rng = random.Random(19)
        for _ in range(10):
            Pi = random_bivector(rng, xyz)
            P = PoissonStructure(xyz, Pi)
            f = symbol(rng.choice(xyz.coords)) * symbol(rng.choice(xyz.coords))
            g = symbol(rng.choice(xyz.coords)) + rational(rng.randint(-2, 2))
            lhs = P.hamiltonian_vf(f)(g)
            assert (lhs - P.bracket(f, g)).is_structural_zero

    def test_leibniz_in_the_hamiltonian_slot(self, xyz):
        rng = random.Random(29)
        Pi = random_bivector(rng, xyz)
        P = PoissonStructure(xyz, Pi)
        for _ in range(10):
            f = symbol(rng.choice(xyz.coords)) * rational(rng.randint(1, 3))
            g = symbol(rng.choice(xyz.coords)) ** 2
            lhs = P.hamiltonian_vf(f * g)
            rhs = f * P.hamiltonian_vf(g) + g * P.hamiltonian_vf(f)
            assert (lhs - rhs).is_structural_zero

    def test_poisson_transversal_normalizes_hamiltonians(self, xyz):
        # [v, u_f] = u_{v(f)} whenever v preserves the bivector
        from corankone.calculus import parse_graded, schouten

        cases = [
            (
                PoissonStructure(
                    xyz,
                    MultiVector(xyz, 2, {("x", "y"): 1}),
                    transversal=parse_graded("@z + y @x", xyz, "multivector"),
                ),
                ("x", "y", "z", "x^2 + y*z"),
            ),
            (t3_structure(), ("theta1", "theta2", "theta3")),
        ]
        for P, functions in cases:
            v = P.transversal
            assert schouten(v, P.bivector).is_structural_zero
            for text in functions:
                f = parse_scalar(text, P.chart)
                lhs = schouten(v, P.hamiltonian_vf(f))
                rhs = P.hamiltonian_vf(v(f))
                assert (lhs - rhs).is_structural_zero, text


class TestCorankEvidence:
    def test_t3_nonvanishing(self):
        P = t3_structure()
        rep = P.corank_evidence()
        assert rep.n == 1
        assert rep.nonvanishing_at_samples
        assert all(
            v.failed or v.holds is False for v in rep.coefficient_verdicts.values()
        ) or any(v.failed for v in rep.coefficient_verdicts.values())

    def test_affine_vanishes_on_axis(self):
        xy = Chart(("x", "y"))
        P = PoissonStructure(
            xy, MultiVector(xy, 2, {("x", "y"): "y"}), corank_n=1
        )
        rep = P.corank_evidence()
        assert rep.top_power == P.bivector
        # generically nonzero, but vanishing exactly on y = 0
        coeff = rep.top_power.coefficient("x", "y")
        assert coeff.subs({"y": rational(0)}).is_structural_zero

    def test_zero_bivector_degenerate(self, xyz):
        P = PoissonStructure(xyz, MultiVector(xyz, 2, {}), corank_n=1)
        rep = P.corank_evidence()
        assert not rep.nonvanishing_at_samples


class TestAdaptedForms:
    def test_flat_case(self, flat):
        alpha, omega = flat.adapted()
        assert alpha == basis_form(flat.chart, "z")
        assert omega == wedge(basis_form(flat.chart, "x"), basis_form(flat.chart, "y"))

    def test_t3_recovers_paper_pair(self):
        P = t3_structure()
        alpha, omega = P.adapted()
        t3 = P.chart
        assert alpha == parse_graded(
            "a/(a^2+b^2+1) dtheta1 + b/(a^2+b^2+1) dtheta2 - 1/(a^2+b^2+1) dtheta3",
            t3,
            "form",
        )
        assert omega == parse_graded(
            "dtheta1^dtheta2 + b dtheta1^dtheta3 - a dtheta2^dtheta3", t3, "form"
        )
        # the defining pairings of the transversal, exactly
        assert interior(P.transversal, alpha).scalar() == rational(1)
        assert interior(P.transversal, omega).is_structural_zero

    def test_postcondition_identity(self, flat):
        alpha, omega = flat.adapted()
        n = flat.corank_n
        lhs = interior(flat.bivector, wedge(alpha, power(omega, n)))
        rhs = rational(n) * wedge(alpha, power(omega, n - 1))
        assert (lhs - rhs).is_structural_zero

    def test_tangent_transversal_rejected(self, xyz):
        P = PoissonStructure(
            xyz,
            MultiVector(xyz, 2, {("x", "y"): 1}),
            transversal=basis_vector(xyz, "x"),
            tester=ZeroTester(xyz, seed=4),
        )
        with pytest.raises(NotTransversalError):
            P.adapted()

    def test_sheared_transversal(self, xyz):
        # v = dz + y dx is Poisson for the flat structure; adapted pair exists
        v = basis_vector(xyz, "z") + MultiVector(xyz, 1, {("x",): "y"})
        P = PoissonStructure(
            xyz,
            MultiVector(xyz, 2, {("x", "y"): 1}),
            transversal=v,
            tester=ZeroTester(xyz, seed=5),
        )
        alpha, omega = P.adapted()
        assert alpha == basis_form(xyz, "z")
        assert omega == parse_graded("dx^dy + y dy^dz", xyz, "form")


class TestInvertTwoform:
    def test_standard_area_form(self):
        xy = Chart(("x", "y"))
        om = wedge(basis_form(xy, "x"), basis_form(xy, "y"))
        assert invert_twoform(om) == MultiVector(xy, 2, {("x", "y"): 1})

    def test_scaled_form(self):
        xy = Chart(("x", "y"))
        om = DiffForm(xy, 2, {("x", "y"): "1 + x^2"})
        assert invert_twoform(om) == MultiVector(xy, 2, {("x", "y"): "1/(1+x^2)"})

    def test_flat_extension_dual(self):
        ch = Chart(("x", "y", "z", "t"), domains={"t": (0.05, 1.0)})
        om = parse_graded("dx^dy + 1/t dt^dz", ch, "form")
        Pi = invert_twoform(om, ZeroTester(ch, seed=6))
        assert Pi == parse_graded("@x^@y - t @z^@t", ch, "multivector")

    def test_round_trip_dimension_2_and_4(self):
        rng = random.Random(31)
        for dim, names in ((2, ("x", "y")), (4, ("x", "y", "z", "w"))):
            ch = Chart(names)
            for i in range(8):
                coeffs = {}
                import itertools

                for key in itertools.combinations(range(dim), 2):
                    coeffs[key] = rational(rng.randint(1, 3)) + symbol(
                        rng.choice(names)
                    ) ** 2
                om = DiffForm(ch, 2, coeffs)
                tester = ZeroTester(ch, seed=200 + i)
                try:
                    Pi = invert_twoform(om, tester)
                except DegenerateError:
                    continue
                back = invert_bivector(Pi, tester)
                assert (back - om).is_structural_zero

    def test_degenerate_rejected(self):
        ch = Chart(("x", "y", "z", "w"))
        om = wedge(basis_form(ch, "x"), basis_form(ch, "y"))  # rank 2 only
        with pytest.raises(DegenerateError):
            invert_twoform(om, ZeroTester(ch, seed=7))


class TestLinearSolve:
    def test_simple_system(self, xyz):
        tester = ZeroTester(xyz, seed=8)
        x = symbol("x")
        rows = [[x + 1, rational(0)], [rational(1), rational(1)]]
        rhs = [x + 1, rational(3)]
        sol = linear_solve(rows, rhs, tester)
        assert sol[0] == rational(1)
        assert sol[1] == rational(2)

    def test_unknown_pivot_aborts(self):
        ch = Chart(("x",))
        tester = ZeroTester(ch, seed=9)
        # sin^2 + cos^2 - 1 is probably-zero: skipped as a pivot; the system
        # then has no usable pivot at all, which surfaces as underdetermined.
        probably_zero = parse_scalar("sin(x)^2 + cos(x)^2 - 1", ch)
        from corankone.errors import LinearSolveError

        with pytest.raises(LinearSolveError):
            linear_solve([[probably_zero]], [rational(1)], tester)
