"""Poisson-structure analysis on a chart.

Pinned conventions (see the test suite):

* Hamiltonian vector fields contract the differential into the first
  slot: ``u_f = Pi(df, .)``, so that ``u_f(g) == {f, g}``;
* ``invert_twoform`` returns the bivector whose coefficient matrix is the
  transposed inverse of the 2-form's coefficient matrix.  This is the
  unique choice under which the adapted identity
  ``interior(Pi, alpha ^ omega**n) == n alpha ^ omega**(n-1)`` and the
  restriction behaviour of the b-extension both hold with no stray signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import expr as ex
from .calculus import (
    DiffForm,
    MultiVector,
    _covector_contract,
    ext_deriv,
    interior,
    is_zero_graded,
    power,
    scalar_form,
    schouten,
    wedge,
)
from .errors import (
    ChartMismatchError,
    DegenerateError,
    DegreeError,
    InternalCheckError,
    LinearSolveError,
    NotCorankOneError,
    NotTransversalError,
    PivotUndecidableError,
)
from .expr import Chart, ScalarExpr, Verdict, ZeroTester


# ---------------------------------------------------------------------------
# exact linear algebra over the expression field


def linear_solve(rows, rhs, tester: ZeroTester):
    """Solve A x = b over the expression field by exact Gaussian elimination.

    Pivots are chosen by zero verdicts: a definitely-nonzero entry is
    eliminated with; entries judged zero are skipped; an entry whose
    verdict is UNKNOWN aborts with a diagnostic rather than guessing.
    Raises LinearSolveError("inconsistent") when no solution exists and
    LinearSolveError("underdetermined") when the solution is not unique.
    """
    m = len(rows)
    rows = [list(r) for r in rows]
    rhs = list(rhs)
    n = len(rows[0]) if m else 0
    pivots = []
    r = 0
    for c in range(n):
        pivot_row = None
        for i in range(r, m):
            v = tester.is_zero(rows[i][c])
            if v.failed:
                pivot_row = i
                break
            if v.kind is ex.VerdictKind.UNKNOWN:
                raise PivotUndecidableError(
                    f"pivot candidate at row {i}, column {c} has an UNKNOWN zero verdict"
                )
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        rhs[r], rhs[pivot_row] = rhs[pivot_row], rhs[r]
        piv = rows[r][c]
        for i in range(m):
            if i == r:
                continue
            factor = rows[i][c] / piv
            if factor.is_structural_zero:
                continue
            rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
            rhs[i] = rhs[i] - factor * rhs[r]
        pivots.append((r, c))
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if not tester.is_zero(rhs[i]).holds:
            raise LinearSolveError("inconsistent")
    if len(pivots) < n:
        raise LinearSolveError("underdetermined")
    x = [ex.ZERO] * n
    for row, col in pivots:
        x[col] = rhs[row] / rows[row][col]
    return x


def _pfaffian(matrix, idx):
    """Pfaffian of the skew submatrix on the index list, by row expansion."""
    if not idx:
        return ex.ONE
    i0 = idx[0]
    total = ex.ZERO
    for jpos in range(1, len(idx)):
        j = idx[jpos]
        entry = matrix[i0][j]
        if entry.is_structural_zero:
            continue
        rest = [k for k in idx if k != i0 and k != j]
        term = entry * _pfaffian(matrix, rest)
        total = total - term if (jpos - 1) % 2 else total + term
    return total


def _skew_inverse(matrix):
    """Inverse of a skew-symmetric matrix via Pfaffian minors.

    (M^-1)_{ij} = (-1)^(i+j) Pf(M without rows/cols i, j) / Pf(M) for i < j;
    this keeps the entries in already-reduced form, unlike adjugate/det.
    Returns (inverse, pfaffian), or (None, pfaffian) when singular.
    """
    n = len(matrix)
    if n % 2:
        return None, ex.ZERO
    pf = _pfaffian(matrix, list(range(n)))
    if pf.is_structural_zero:
        return None, pf
    inv = [[ex.ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            rest = [k for k in range(n) if k != i and k != j]
            val = _pfaffian(matrix, rest) / pf
            if (i + j) % 2:
                val = -val
            inv[i][j] = val
            inv[j][i] = -val
    return inv, pf


# ---------------------------------------------------------------------------
# bivector helpers


def bivector_matrix(Pi: MultiVector):
    """Full antisymmetric coefficient matrix Pi^{ij}."""
    if Pi.degree != 2:
        raise DegreeError("expected a bivector")
    n = Pi.chart.dim
    mat = [[ex.ZERO] * n for _ in range(n)]
    for (i, j), c in Pi.coeffs.items():
        mat[i][j] = c
        mat[j][i] = -c
    return mat


def twoform_matrix(omega: DiffForm):
    if omega.degree != 2:
        raise DegreeError("expected a 2-form")
    n = omega.chart.dim
    mat = [[ex.ZERO] * n for _ in range(n)]
    for (i, j), c in omega.coeffs.items():
        mat[i][j] = c
        mat[j][i] = -c
    return mat


def _matrix_to_bivector(chart: Chart, mat) -> MultiVector:
    coeffs = {}
    for i in range(chart.dim):
        for j in range(i + 1, chart.dim):
            coeffs[(i, j)] = mat[i][j]
    return MultiVector(chart, 2, coeffs)


def _matrix_to_twoform(chart: Chart, mat) -> DiffForm:
    coeffs = {}
    for i in range(chart.dim):
        for j in range(i + 1, chart.dim):
            coeffs[(i, j)] = mat[i][j]
    return DiffForm(chart, 2, coeffs)


def _checked_skew_inverse(matrix, tester: ZeroTester):
    inv, pf = _skew_inverse(matrix)
    if inv is None:
        raise DegenerateError("coefficient matrix is singular (zero Pfaffian)")
    pv = tester.is_zero(pf)
    if pv.holds:
        raise DegenerateError(
            f"Pfaffian vanishes ({pv.kind.value})", witness=pv.witness
        )
    if pv.kind is ex.VerdictKind.UNKNOWN:
        raise DegenerateError("nondegeneracy undecidable on the sampling domain")
    return inv


def invert_twoform(omega: DiffForm, tester: Optional[ZeroTester] = None) -> MultiVector:
    """Bivector dual to a nondegenerate 2-form (transposed matrix inverse)."""
    chart = omega.chart
    if chart.dim % 2:
        raise DegenerateError("2-form inversion needs an even-dimensional chart")
    tester = tester or ZeroTester(chart)
    inv = _checked_skew_inverse(twoform_matrix(omega), tester)
    # transpose of the inverse: Pi^{ij} = (M^{-1})_{ji}
    n = chart.dim
    mat = [[inv[j][i] for j in range(n)] for i in range(n)]
    return _matrix_to_bivector(chart, mat)


def invert_bivector(Pi: MultiVector, tester: Optional[ZeroTester] = None) -> DiffForm:
    """2-form dual to a nondegenerate bivector; inverse of invert_twoform."""
    chart = Pi.chart
    tester = tester or ZeroTester(chart)
    inv = _checked_skew_inverse(bivector_matrix(Pi), tester)
    n = chart.dim
    mat = [[inv[j][i] for j in range(n)] for i in range(n)]
    return _matrix_to_twoform(chart, mat)


# ---------------------------------------------------------------------------
# reports


@dataclass
class CorankReport:
    n: int
    top_power: MultiVector
    coefficient_verdicts: dict
    samples: list
    nonvanishing_at_samples: bool

    @property
    def regular_evidence(self) -> bool:
        return self.nonvanishing_at_samples


@dataclass
class PoissonStructure:
    """A bivector with cached analysis artifacts.

    The adapted pair (alpha, omega) satisfies alpha(v) = 1, iota_v omega = 0,
    alpha annihilates the image of Pi, omega inverts Pi on the leaves, and
    interior(Pi, alpha ^ omega**n) = n alpha ^ omega**(n-1); it is solved
    for on first use when a transversal field is available.
    """

    chart: Chart
    bivector: MultiVector
    corank_n: Optional[int] = None
    transversal: Optional[MultiVector] = None
    alpha: Optional[DiffForm] = None
    omega: Optional[DiffForm] = None
    tester: Optional[ZeroTester] = None

    def __post_init__(self):
        if self.bivector.degree != 2:
            raise DegreeError("a Poisson structure needs a bivector (degree 2)")
        if self.bivector.chart != self.chart:
            raise ChartMismatchError("bivector lives on a different chart")
        if self.tester is None:
            self.tester = ZeroTester(self.chart)
        if self.corank_n is None and self.chart.dim % 2 == 1:
            self.corank_n = (self.chart.dim - 1) // 2
        self._jacobi = None
        self._jacobiator = None
        self._matrix = None

    # -- Jacobi --------------------------------------------------------------

    def jacobi_verdict(self) -> Verdict:
        """[Pi, Pi] == 0, cross-checked against the coordinate Jacobiator."""
        if self._jacobi is None:
            self._jacobi = is_zero_graded(
                schouten(self.bivector, self.bivector), self.tester
            )
            other = self.jacobiator_verdict()
            if self._jacobi.failed and other.holds or self._jacobi.holds and other.failed:
                raise InternalCheckError(
                    "Schouten and Jacobiator disagree on the Jacobi identity"
                )
        return self._jacobi

    def jacobiator_verdict(self) -> Verdict:
        """Brute-force {{f,g},h} + cyclic over all coordinate triples."""
        if self._jacobiator is None:
            verdicts = []
            names = self.chart.coords
            for i in range(len(names)):
                for j in range(i + 1, len(names)):
                    for k in range(j + 1, len(names)):
                        verdicts.append(
                            self.tester.is_zero(
                                self.jacobiator(names[i], names[j], names[k])
                            )
                        )
            self._jacobiator = Verdict.combine(*verdicts)
        return self._jacobiator

    def jacobiator(self, f, g, h) -> ScalarExpr:
        f, g, h = (ex.symbol(x) if isinstance(x, str) else x for x in (f, g, h))
        return (
            self.bracket(self.bracket(f, g), h)
            + self.bracket(self.bracket(g, h), f)
            + self.bracket(self.bracket(h, f), g)
        )

    # -- bracket and Hamiltonian fields ---------------------------------------

    def matrix(self):
        if self._matrix is None:
            self._matrix = bivector_matrix(self.bivector)
        return self._matrix

    def bracket(self, f: ScalarExpr, g: ScalarExpr) -> ScalarExpr:
        out = ex.ZERO
        coords = self.chart.coords
        for (i, j), c in self.bivector.coeffs.items():
            out = out + c * (
                f.derive(coords[i]) * g.derive(coords[j])
                - f.derive(coords[j]) * g.derive(coords[i])
            )
        return out

    def hamiltonian_vf(self, f) -> MultiVector:
        """u_f = Pi(df, .), satisfying u_f(g) = {f, g}."""
        if isinstance(f, str):
            f = ex.parse_scalar(f, self.chart)
        df = ext_deriv(scalar_form(self.chart, f))
        return _covector_contract(df, self.bivector)

    # -- corank evidence -------------------------------------------------------

    def corank_evidence(self, n: Optional[int] = None, samples: int = 10) -> CorankReport:
        n = self.corank_n if n is None else n
        if n is None:
            raise NotCorankOneError("no corank declared and chart dimension is even")
        top = power(self.bivector, n)
        verdicts = {
            idx: self.tester.is_zero(c) for idx, c in top.coeffs.items()
        }
        rng_tester = self.tester.clone(seed=self.tester.seed + 101)
        sample_rows = []
        all_nonzero = True
        for _ in range(samples):
            env = rng_tester.sample()
            vals = {}
            best = 0.0
            for idx, c in top.coeffs.items():
                try:
                    val = c.evaluate(env)
                except ex.EvaluationSingularity:
                    val = float("nan")
                vals[idx] = val
                if val == val:
                    best = max(best, abs(val))
            sample_rows.append((env, vals))
            if best <= 1e-9:
                all_nonzero = False
        return CorankReport(
            n=n,
            top_power=top,
            coefficient_verdicts=verdicts,
            samples=sample_rows,
            nonvanishing_at_samples=all_nonzero,
        )

    # -- adapted defining forms -------------------------------------------------

    def adapted(self):
        """The defining pair (alpha, omega) for the given transversal field."""
        if self.alpha is not None and self.omega is not None:
            return self.alpha, self.omega
        if self.transversal is None:
            raise NotTransversalError("no transversal vector field supplied")
        jac = self.jacobi_verdict()
        if jac.failed:
            raise InternalCheckError("bivector is not Poisson; no adapted forms")
        alpha = self.alpha if self.alpha is not None else self._solve_alpha()
        omega = self.omega if self.omega is not None else self._solve_omega(alpha)
        self._verify_adapted(alpha, omega)
        self.alpha, self.omega = alpha, omega
        return alpha, omega

    def _solve_alpha(self) -> DiffForm:
        chart = self.chart
        dim = chart.dim
        mat = self.matrix()
        v = self.transversal
        rows = []
        rhs = []
        for i in range(dim):
            rows.append([mat[i][j] for j in range(dim)])
            rhs.append(ex.ZERO)
        vrow = [ex.ZERO] * dim
        for (i,), c in v.coeffs.items():
            vrow[i] = c
        rows.append(vrow)
        rhs.append(ex.ONE)
        try:
            sol = linear_solve(rows, rhs, self.tester)
        except LinearSolveError as exc:
            if "inconsistent" in str(exc):
                raise NotTransversalError(
                    "the transversal condition alpha(v) = 1 is unsolvable"
                ) from exc
            raise NotCorankOneError(
                "kernel of Pi does not have the expected dimension"
            ) from exc
        return DiffForm(chart, 1, {(i,): c for i, c in enumerate(sol)})

    def _solve_omega(self, alpha: DiffForm) -> DiffForm:
        chart = self.chart
        dim = chart.dim
        pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
        col = {p: k for k, p in enumerate(pairs)}
        rows = []
        rhs = []
        v = self.transversal
        vcomp = [ex.ZERO] * dim
        for (i,), c in v.coeffs.items():
            vcomp[i] = c
        # iota_v omega = 0
        for j in range(dim):
            row = [ex.ZERO] * len(pairs)
            for (a, b), k in col.items():
                if b == j:
                    row[k] = row[k] + vcomp[a]
                elif a == j:
                    row[k] = row[k] - vcomp[b]
            rows.append(row)
            rhs.append(ex.ZERO)
        # omega(u_a, u_b) = {x_a, x_b}
        fields = [self.hamiltonian_vf(ex.symbol(c)) for c in chart.coords]
        comp = []
        for f in fields:
            vec = [ex.ZERO] * dim
            for (i,), c in f.coeffs.items():
                vec[i] = c
            comp.append(vec)
        mat = self.matrix()
        for a in range(dim):
            for b in range(a + 1, dim):
                row = [ex.ZERO] * len(pairs)
                for (i, j), k in col.items():
                    row[k] = comp[a][i] * comp[b][j] - comp[a][j] * comp[b][i]
                rows.append(row)
                rhs.append(mat[a][b])
        try:
            sol = linear_solve(rows, rhs, self.tester)
        except LinearSolveError as exc:
            raise NotCorankOneError(
                f"defining two-form system has no unique solution ({exc})"
            ) from exc
        return DiffForm(chart, 2, {p: sol[k] for p, k in col.items()})

    def _verify_adapted(self, alpha: DiffForm, omega: DiffForm):
        n = self.corank_n
        v = self.transversal
        checks = []
        if v is not None:
            checks.append(interior(v, alpha).scalar() - ex.ONE)
            checks.extend(interior(v, omega).coeffs.values())
        lhs = interior(self.bivector, wedge(alpha, power(omega, n)))
        rhs = ex.rational(n) * wedge(alpha, power(omega, n - 1))
        diff = lhs - rhs
        verdicts = [self.tester.is_zero(c) for c in checks]
        verdicts.append(is_zero_graded(diff, self.tester))
        combined = Verdict.combine(*verdicts)
        if not combined.holds:
            raise InternalCheckError(
                "adapted pair fails its defining identities "
                f"(verdict {combined.kind.value}, witness {combined.witness})"
            )

    def volume(self) -> DiffForm:
        alpha, omega = self.adapted()
        return wedge(alpha, power(omega, self.corank_n))


def jacobi_check(P: PoissonStructure) -> Verdict:
    return P.jacobi_verdict()


def hamiltonian_vf(P: PoissonStructure, f) -> MultiVector:
    return P.hamiltonian_vf(f)


def corank_evidence(P: PoissonStructure, n: Optional[int] = None) -> CorankReport:
    return P.corank_evidence(n)


def adapted_forms(P: PoissonStructure):
    return P.adapted()
