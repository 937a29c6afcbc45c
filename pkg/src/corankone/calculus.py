"""Graded exterior algebra of differential forms and multivector fields.

Conventions, pinned by unit tests:

* interior product of a decomposable multivector contracts the leftmost
  factor first: ``interior(X ^ Y, eta) = interior(Y, interior(X, eta))``;
  with this choice the adapted triple of a corank-one structure satisfies
  ``interior(Pi, alpha ^ omega**n) == n * alpha ^ omega**(n-1)``;
* wedge powers are plain iterated wedges (no ``1/m!`` normalization);
* ``exterior_divide(eta, alpha, v)`` returns ``(-1)**(k+1) * interior(v, eta)``
  for ``eta`` of degree ``k``, the unique sign making ``eta == result ^ alpha``
  whenever ``eta ^ alpha == 0`` and ``alpha(v) == 1``.
"""

from __future__ import annotations

import re
from typing import Sequence

from . import expr as ex
from .errors import (
    BadTransversalError,
    ChartError,
    ChartMismatchError,
    DegreeError,
    DivisionObstructedError,
)
from .expr import Chart, ScalarExpr, Verdict, ZeroTester


def _coerce_coeff(value, chart: Chart) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, str):
        return ex.parse_scalar(value, chart)
    return ex.rational(value)


def _perm_sign(seq: Sequence[int]) -> int:
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv & 1 else 1


def _merge_sign(left: tuple, right: tuple):
    """Sign and sorted tuple for wedging two increasing index tuples."""
    if set(left) & set(right):
        return 0, ()
    inv = 0
    for j in right:
        inv += sum(1 for i in left if i > j)
    return (-1 if inv & 1 else 1), tuple(sorted(left + right))


class _Graded:
    """Shared behaviour of forms and multivectors (degree-graded coefficients)."""

    __slots__ = ("chart", "degree", "coeffs")

    basis_prefix = "?"

    def __init__(self, chart: Chart, degree: int, coeffs=None):
        if degree < 0:
            raise DegreeError("degree must be nonnegative")
        table = {}
        for key, value in dict(coeffs or {}).items():
            idx = tuple(
                chart.index(k) if isinstance(k, str) else int(k) for k in key
            )
            if len(idx) != degree:
                raise DegreeError(f"index {key!r} has length {len(idx)}, degree is {degree}")
            if len(set(idx)) != len(idx):
                continue
            for i in idx:
                if not 0 <= i < chart.dim:
                    raise ChartError(f"coordinate index {i} outside chart")
            sign = _perm_sign(idx)
            skey = tuple(sorted(idx))
            coeff = _coerce_coeff(value, chart)
            if sign < 0:
                coeff = -coeff
            prev = table.get(skey)
            table[skey] = coeff if prev is None else prev + coeff
        if degree > chart.dim and any(not c.is_structural_zero for c in table.values()):
            raise DegreeError("nonzero element of degree above the chart dimension")
        self.chart = chart
        self.degree = degree
        self.coeffs = {
            k: c for k, c in sorted(table.items()) if not c.is_structural_zero
        }

    # -- structure -----------------------------------------------------------

    @property
    def is_structural_zero(self) -> bool:
        return not self.coeffs

    def terms(self):
        return self.coeffs.items()

    def coefficient(self, *names) -> ScalarExpr:
        idx = tuple(
            self.chart.index(n) if isinstance(n, str) else int(n) for n in names
        )
        return self.coeffs.get(tuple(sorted(idx)), ex.ZERO)

    def scalar(self) -> ScalarExpr:
        if self.degree != 0:
            raise DegreeError("scalar() requires degree 0")
        return self.coeffs.get((), ex.ZERO)

    def __eq__(self, other):
        if type(self) is not type(other) or self.chart != other.chart:
            return False
        if not self.coeffs and not other.coeffs:
            return True  # the zero element, of any stored degree
        return self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        degree = self.degree if self.coeffs else -1
        return hash(
            (type(self).__name__, self.chart, degree, tuple(self.coeffs.items()))
        )

    # -- linear structure ------------------------------------------------------

    def _like(self, degree, coeffs):
        out = object.__new__(type(self))
        out.chart = self.chart
        out.degree = degree
        out.coeffs = {k: c for k, c in sorted(coeffs.items()) if not c.is_structural_zero}
        return out

    def _check_compat(self, other):
        if type(self) is not type(other):
            raise ChartMismatchError(
                f"cannot combine {type(self).__name__} with {type(other).__name__}"
            )
        if self.chart != other.chart:
            raise ChartMismatchError("objects live on different charts")

    def __add__(self, other):
        self._check_compat(other)
        if self.degree != other.degree:
            if self.is_structural_zero:
                return other
            if other.is_structural_zero:
                return self
            raise DegreeError("cannot add elements of different degrees")
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, ex.ZERO) + c
        return self._like(self.degree, out)

    def __neg__(self):
        return self._like(self.degree, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        s = _coerce_coeff(scalar, self.chart)
        return self._like(self.degree, {k: c * s for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    # -- rendering -------------------------------------------------------------

    def _basis_str(self, idx) -> str:
        return "^".join(f"{self.basis_prefix}{self.chart.coords[i]}" for i in idx)

    def __str__(self):
        if not self.coeffs:
            return "0"
        pieces = []
        for idx, coeff in self.coeffs.items():
            cs = str(coeff)
            neg = False
            if len(coeff.num) == 1 and cs.startswith("-"):
                neg = True
                cs = cs[1:]
            elif len(coeff.num) > 1:
                cs = f"({cs})"
            if idx:
                body = self._basis_str(idx) if cs == "1" else f"{cs} {self._basis_str(idx)}"
            else:
                body = cs
            if not pieces:
                pieces.append(f"-{body}" if neg else body)
            else:
                pieces.append(f" - {body}" if neg else f" + {body}")
        return "".join(pieces)

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class DiffForm(_Graded):
    """Differential form with increasing multi-index coefficients."""

    basis_prefix = "d"


class MultiVector(_Graded):
    """Multivector field over the coordinate frame."""

    basis_prefix = "@"

    def __call__(self, f: ScalarExpr) -> ScalarExpr:
        """Apply a vector field to a function (directional derivative)."""
        if self.degree != 1:
            raise DegreeError("only vector fields act on functions")
        out = ex.ZERO
        for (i,), c in self.coeffs.items():
            out = out + c * f.derive(self.chart.coords[i])
        return out


VectorField = MultiVector


def zero_form(chart: Chart, degree: int) -> DiffForm:
    return DiffForm(chart, degree, {})


def zero_multivector(chart: Chart, degree: int) -> MultiVector:
    return MultiVector(chart, degree, {})


def scalar_form(chart: Chart, value) -> DiffForm:
    return DiffForm(chart, 0, {(): value})


def basis_form(chart: Chart, name: str) -> DiffForm:
    return DiffForm(chart, 1, {(name,): 1})


def basis_vector(chart: Chart, name: str) -> MultiVector:
    return MultiVector(chart, 1, {(name,): 1})


def volume_form(chart: Chart) -> DiffForm:
    return DiffForm(chart, chart.dim, {tuple(range(chart.dim)): 1})


# ---------------------------------------------------------------------------
# operations


def wedge(a: _Graded, b: _Graded) -> _Graded:
    """Graded-commutative product; degree adds, overflow collapses to zero."""
    a._check_compat(b)
    out = {}
    for ia, ca in a.coeffs.items():
        for ib, cb in b.coeffs.items():
            sign, key = _merge_sign(ia, ib)
            if sign == 0:
                continue
            c = ca * cb if sign > 0 else -(ca * cb)
            out[key] = out.get(key, ex.ZERO) + c
    return a._like(a.degree + b.degree, out)


def power(a: _Graded, m: int) -> _Graded:
    """m-fold wedge; power(a, 0) is the scalar one of the same kind."""
    if m < 0:
        raise DegreeError("wedge powers require m >= 0")
    out = a._like(0, {(): ex.ONE})
    for _ in range(m):
        out = wedge(out, a)
    return out


def ext_deriv(eta: DiffForm) -> DiffForm:
    if not isinstance(eta, DiffForm):
        raise ChartMismatchError("ext_deriv applies to differential forms")
    chart = eta.chart
    out = {}
    for idx, c in eta.coeffs.items():
        for i, name in enumerate(chart.coords):
            dc = c.derive(name)
            if dc.is_structural_zero:
                continue
            sign, key = _merge_sign((i,), idx)
            if sign == 0:
                continue
            term = dc if sign > 0 else -dc
            out[key] = out.get(key, ex.ZERO) + term
    return eta._like(eta.degree + 1, out)


def _contract_indices(I: tuple, J: tuple):
    """Fold single contractions over I (ascending); None when I is not in J."""
    sign = 1
    cur = list(J)
    for i in I:
        try:
            pos = cur.index(i)
        except ValueError:
            return None
        if pos & 1:
            sign = -sign
        cur.pop(pos)
    return sign, tuple(cur)


def interior(X: MultiVector, eta: DiffForm) -> DiffForm:
    """Interior product; for degree-1 X an antiderivation of degree -1."""
    if not isinstance(X, MultiVector) or not isinstance(eta, DiffForm):
        raise ChartMismatchError("interior(X, eta) takes a multivector and a form")
    if X.chart != eta.chart:
        raise ChartMismatchError("objects live on different charts")
    if X.degree > eta.degree:
        raise DegreeError(
            f"interior degree underflow: {X.degree} into {eta.degree}"
        )
    out = {}
    for I, cx in X.coeffs.items():
        for J, ce in eta.coeffs.items():
            hit = _contract_indices(I, J)
            if hit is None:
                continue
            sign, rest = hit
            term = cx * ce if sign > 0 else -(cx * ce)
            out[rest] = out.get(rest, ex.ZERO) + term
    return eta._like(eta.degree - X.degree, out)


def apply_form(eta: DiffForm, *vectors: MultiVector) -> ScalarExpr:
    """Evaluate a k-form on k vector fields."""
    if len(vectors) != eta.degree:
        raise DegreeError("wrong number of vector arguments")
    cur = eta
    for v in vectors:
        if v.degree != 1:
            raise DegreeError("apply_form takes vector fields")
        cur = interior(v, cur)
    return cur.scalar()


def _covector_contract(theta: DiffForm, Q: MultiVector) -> MultiVector:
    """Contract a 1-form into the first slot of a multivector."""
    if theta.degree != 1:
        raise DegreeError("covector contraction needs a 1-form")
    out = {}
    for (i,), ct in theta.coeffs.items():
        for J, cq in Q.coeffs.items():
            hit = _contract_indices((i,), J)
            if hit is None:
                continue
            sign, rest = hit
            term = ct * cq if sign > 0 else -(ct * cq)
            out[rest] = out.get(rest, ex.ZERO) + term
    return Q._like(Q.degree - 1, out)


def _lie_multivector(v: MultiVector, Q: MultiVector) -> MultiVector:
    """Lie derivative of a multivector along a vector field."""
    chart = v.chart
    out = {}

    def bump(key, value):
        out[key] = out.get(key, ex.ZERO) + value

    for (i,), vc in v.coeffs.items():
        xi = chart.coords[i]
        for J, qc in Q.coeffs.items():
            dq = qc.derive(xi)
            if not dq.is_structural_zero:
                bump(J, vc * dq)
            for slot, j in enumerate(J):
                dv = vc.derive(chart.coords[j])
                if dv.is_structural_zero:
                    continue
                if i != j and i in J:
                    continue
                seq = list(J)
                seq[slot] = i
                if len(set(seq)) != len(seq):
                    continue
                sign = _perm_sign(seq)
                term = qc * dv if sign < 0 else -(qc * dv)
                bump(tuple(sorted(seq)), term)
    return Q._like(Q.degree, out)


def schouten(P: MultiVector, Q: MultiVector) -> MultiVector:
    """Schouten-Nijenhuis bracket, degree p+q-1.

    Graded symmetry [P,Q] = -(-1)^((p-1)(q-1)) [Q,P] and the graded
    Leibniz rule over the wedge hold; on vector fields it is the
    commutator, and [v, f] = v(f) for functions.
    """
    if not isinstance(P, MultiVector) or not isinstance(Q, MultiVector):
        raise ChartMismatchError("schouten takes multivectors")
    if P.chart != Q.chart:
        raise ChartMismatchError("objects live on different charts")
    chart = P.chart
    p, q = P.degree, Q.degree
    if p == 0 and q == 0:
        return zero_multivector(chart, 0)
    if p == 1:
        return _lie_multivector(P, Q)
    if p == 0:
        # [f, Q] = -iota_{df} Q  (first-slot contraction)
        f = P.scalar()
        df = ext_deriv(scalar_form(chart, f))
        return -_covector_contract(df, Q)
    # split the leading factor of each term of P:
    # [A ^ B, Q] = (-1)^((q-1) deg B) [A, Q] ^ B + A ^ [B, Q]
    total = zero_multivector(chart, p + q - 1)
    sign = -1 if ((q - 1) * (p - 1)) & 1 else 1
    for I, c in P.coeffs.items():
        A = MultiVector(chart, 1, {(I[0],): c})
        B = MultiVector(chart, p - 1, {tuple(I[1:]): ex.ONE})
        t1 = wedge(schouten(A, Q), B)
        if sign < 0:
            t1 = -t1
        t2 = wedge(A, schouten(B, Q))
        total = total + t1 + t2
    return total


def lie_derivative(v: MultiVector, target):
    """Lie derivative along a vector field: Cartan formula on forms,
    Schouten bracket on multivectors."""
    if v.degree != 1:
        raise DegreeError("lie_derivative needs a vector field")
    if isinstance(target, DiffForm):
        out = interior(v, ext_deriv(target))
        if target.degree >= 1:
            out = out + ext_deriv(interior(v, target))
        return out
    if isinstance(target, MultiVector):
        return _lie_multivector(v, target)
    raise ChartMismatchError("lie_derivative applies to forms or multivectors")


# ---------------------------------------------------------------------------
# chart maps and pullback


class ChartMap:
    """Map between charts given by one target-coordinate expression each."""

    __slots__ = ("source", "target", "components")

    def __init__(self, source: Chart, target: Chart, components):
        components = tuple(_coerce_coeff(c, source) for c in components)
        if len(components) != target.dim:
            raise ChartError(
                f"map needs {target.dim} components, got {len(components)}"
            )
        allowed = set(source.coords) | set(source.params)
        for c in components:
            bad = c.free_symbols() - allowed
            if bad:
                raise ChartError(f"component uses unknown symbols {sorted(bad)}")
        missing = set(target.params) - set(source.params)
        if missing:
            raise ChartError(
                f"target parameters {sorted(missing)} must be declared on the source chart"
            )
        self.source = source
        self.target = target
        self.components = components

    @classmethod
    def identity(cls, chart: Chart) -> "ChartMap":
        return cls(chart, chart, [ex.symbol(c) for c in chart.coords])

    def __repr__(self):
        comps = ", ".join(str(c) for c in self.components)
        return f"ChartMap({self.target.coords} <- [{comps}])"


def pullback(phi: ChartMap, eta: DiffForm) -> DiffForm:
    """Pullback of a form along a chart map; commutes with ext_deriv."""
    if eta.chart != phi.target:
        raise ChartMismatchError("form does not live on the map's target chart")
    mapping = {
        name: comp for name, comp in zip(phi.target.coords, phi.components)
    }
    dcomps = [
        ext_deriv(scalar_form(phi.source, comp)) for comp in phi.components
    ]
    out = zero_form(phi.source, eta.degree)
    for idx, c in eta.coeffs.items():
        term = scalar_form(phi.source, c.subs(mapping))
        for j in idx:
            term = wedge(term, dcomps[j])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# zero verdicts on graded objects


def is_zero_graded(obj: _Graded, tester: ZeroTester) -> Verdict:
    """Combined verdict over all coefficients (worst case wins)."""
    if obj.is_structural_zero:
        return Verdict.zero()
    verdicts = [tester.is_zero(c) for c in obj.coeffs.values()]
    return Verdict.combine(*verdicts)


def leafwise_equal(eta1: DiffForm, eta2: DiffForm, alpha: DiffForm, tester: ZeroTester) -> Verdict:
    """Whether eta1 - eta2 restricts to zero on every leaf of ker(alpha):
    verdict of (eta1 - eta2) ^ alpha == 0."""
    if eta1.degree != eta2.degree:
        raise DegreeError("leafwise_equal requires equal degrees")
    return is_zero_graded(wedge(eta1 - eta2, alpha), tester)


def default_transversal(alpha: DiffForm, tester: ZeroTester) -> MultiVector:
    """First coordinate direction where alpha has a definitely-nonzero
    coefficient, normalized so that alpha(v) = 1."""
    for (i,), c in alpha.coeffs.items():
        if tester.is_zero(c).failed:
            return MultiVector(alpha.chart, 1, {(i,): ex.ONE / c})
    raise BadTransversalError(
        "no coordinate direction with a definitely nonzero alpha-coefficient"
    )


def exterior_divide(
    eta: DiffForm,
    alpha: DiffForm,
    v: MultiVector | None = None,
    tester: ZeroTester | None = None,
) -> DiffForm:
    """Solve eta = xi ^ alpha for xi, given eta ^ alpha = 0 and alpha(v) = 1.

    The returned representative is xi = (-1)^(k+1) interior(v, eta); the
    identity eta == xi ^ alpha is re-verified before returning.
    """
    if alpha.degree != 1:
        raise DegreeError("alpha must be a 1-form")
    if eta.degree < 1:
        if eta.is_structural_zero:
            raise DegreeError("cannot divide a degree-0 form")
        raise DivisionObstructedError("nonzero scalar is not a multiple of alpha")
    if tester is None:
        tester = ZeroTester(eta.chart)
    if v is None:
        v = default_transversal(alpha, tester)
    pairing = interior(v, alpha).scalar() - ex.ONE
    pv = tester.is_zero(pairing)
    if not pv.holds:
        raise BadTransversalError(f"alpha(v) != 1 (verdict {pv.kind.value})")
    obstruction = wedge(eta, alpha)
    ov = is_zero_graded(obstruction, tester)
    if ov.failed:
        raise DivisionObstructedError(
            "eta ^ alpha does not vanish", witness=ov.witness
        )
    xi = interior(v, eta)
    if eta.degree % 2 == 0:
        xi = -xi
    residual = eta - wedge(xi, alpha)
    rv = is_zero_graded(residual, tester)
    if not rv.holds:
        raise DivisionObstructedError(
            "division residual does not vanish", witness=rv.witness
        )
    return xi


# ---------------------------------------------------------------------------
# parsing of rendered forms (the canonical rendering is parse-stable)

_BASIS_CHAIN_RE = re.compile(r"(?:(?:d|@)[A-Za-z_][A-Za-z0-9_]*)(?:\^(?:d|@)[A-Za-z_][A-Za-z0-9_]*)*$")


def _split_top_level(text: str):
    """Split on top-level ' + ' / ' - ' (outside parentheses)."""
    parts = []
    depth = 0
    cur = []
    sign = 1
    i = 0
    if text.startswith("-"):
        sign = -1
        i = 1
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text[i : i + 3] in (" + ", " - "):
            parts.append((sign, "".join(cur).strip()))
            sign = 1 if text[i + 1] == "+" else -1
            cur = []
            i += 3
            continue
        cur.append(ch)
        i += 1
    parts.append((sign, "".join(cur).strip()))
    return parts


def parse_graded(text: str, chart: Chart, kind: str):
    """Parse the canonical rendering of a form ("x dy^dz + dz") or a
    multivector ("y @x^@y")."""
    cls = DiffForm if kind == "form" else MultiVector
    prefix = "d" if kind == "form" else "@"
    text = text.strip()
    if text == "0":
        return cls(chart, 0, {})
    terms = []
    for sign, body in _split_top_level(text):
        m = _BASIS_CHAIN_RE.search(body)
        names = ()
        coeff_src = body
        if m is not None and (m.start() == 0 or body[m.start() - 1] in " *"):
            chain = body[m.start() :]
            if all(piece.startswith(prefix) for piece in chain.split("^")):
                names = tuple(piece[len(prefix):] for piece in chain.split("^"))
                coeff_src = body[: m.start()].strip().rstrip("*").strip()
        coeff = (
            ex.ONE if not coeff_src else ex.parse_scalar(coeff_src, chart)
        )
        if sign < 0:
            coeff = -coeff
        terms.append((names, coeff))
    degree = len(terms[0][0])
    out = cls(chart, degree, {})
    for names, coeff in terms:
        if len(names) != degree:
            raise DegreeError("mixed degrees in graded expression")
        out = out + cls(chart, degree, {names: coeff})
    return out
