"""Line-oriented problem files: chart, structure, certificates, analyses.

The format is plain text with shell-style quoting (see README for the
full grammar).  Lines are directives inside `section` blocks; expression
arguments are quoted strings in the scalar grammar; forms and fields are
accumulated term by term as  coefficient, then basis coordinate names.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from typing import Optional

from . import expr as ex
from .calculus import DiffForm, MultiVector
from .errors import ChartError, ExprError, ProblemFileError
from .expr import Chart, ZeroTester
from .invariants import ObstructionCertificate, PeriodWitness
from .poisson import PoissonStructure

ANALYSES = (
    "jacobi",
    "corank",
    "adapted",
    "beta",
    "unimodularity",
    "godbillon_vey",
    "mu",
    "sigma",
    "modular",
    "weinstein",
    "transverse_poisson",
    "b_transversality",
    "b_extension",
)

VERDICT_WORDS = ("true", "probably-true", "false", "unknown", "skipped", "error")


@dataclass
class ProblemFile:
    path: str
    chart: Chart
    bivector: MultiVector
    corank: Optional[int] = None
    transversal: Optional[MultiVector] = None
    alpha: Optional[DiffForm] = None
    omega: Optional[DiffForm] = None
    omega_alt: Optional[DiffForm] = None
    first_certificate: Optional[ObstructionCertificate] = None
    second_certificate: Optional[ObstructionCertificate] = None
    period_witness: Optional[PeriodWitness] = None
    analyses: tuple = ()
    seed: int = 0
    trials: int = 32
    tolerance: float = 1e-9
    expects: dict = field(default_factory=dict)

    def structure(self, seed=None, trials=None, tolerance=None) -> PoissonStructure:
        tester = ZeroTester(
            self.chart,
            seed=self.seed if seed is None else seed,
            trials=self.trials if trials is None else trials,
            tol=self.tolerance if tolerance is None else tolerance,
        )
        return PoissonStructure(
            self.chart,
            self.bivector,
            corank_n=self.corank,
            transversal=self.transversal,
            alpha=self.alpha,
            omega=self.omega,
            tester=tester,
        )


class _Loader:
    def __init__(self, path: str, text: str):
        self.path = path
        self.lines = text.splitlines()
        self.section = None
        # chart pieces
        self.coords = None
        self.periodic = []
        self.params = []
        self.domains = {}
        self.torus_strict = False
        self.chart = None
        # structure pieces (term lists, resolved after the chart exists)
        self.terms = {
            "bivector": [],
            "transversal": [],
            "alpha": [],
            "omega": [],
            "omega_alt": [],
        }
        self.corank = None
        # certificates
        self.first_f = None
        self.second_nu_terms = []
        self.period = None
        # analyses / options / expects
        self.analyses = []
        self.seed = 0
        self.trials = 32
        self.tolerance = 1e-9
        self.expects = {}

    def fail(self, message, lineno):
        raise ProblemFileError(message, path=self.path, line=lineno)

    def load(self) -> ProblemFile:
        for lineno, raw in enumerate(self.lines, start=1):
            try:
                tokens = shlex.split(raw, comments=True)
            except ValueError as exc:
                self.fail(f"bad quoting: {exc}", lineno)
            if not tokens:
                continue
            self.dispatch(tokens, lineno)
        return self.finish()

    def dispatch(self, tokens, lineno):
        head, args = tokens[0], tokens[1:]
        if head == "schema":
            if args != ["1"]:
                self.fail(f"unsupported schema {args!r}", lineno)
            return
        if head == "section":
            if len(args) != 1 or args[0] not in (
                "chart",
                "structure",
                "certificates",
                "analyses",
                "options",
                "expects",
            ):
                self.fail(f"unknown section {args!r}", lineno)
            self.section = args[0]
            return
        if self.section is None:
            self.fail(f"directive {head!r} before any section", lineno)
        getattr(self, f"_{self.section}")(head, args, lineno)

    # -- sections -------------------------------------------------------------

    def _chart(self, head, args, lineno):
        if head == "coords":
            if not args:
                self.fail("coords needs at least one name", lineno)
            self.coords = tuple(args)
        elif head == "periodic":
            self.periodic.extend(args)
        elif head == "param":
            if len(args) not in (1, 3):
                self.fail("param NAME [LO HI]", lineno)
            self.params.append(args[0])
            if len(args) == 3:
                self.domains[args[0]] = self._interval(args[1:], lineno)
        elif head == "domain":
            if len(args) != 3:
                self.fail("domain NAME LO HI", lineno)
            self.domains[args[0]] = self._interval(args[1:], lineno)
        elif head == "torus_strict":
            self.torus_strict = True
        else:
            self.fail(f"unknown chart directive {head!r}", lineno)

    def _interval(self, pair, lineno):
        try:
            lo, hi = float(pair[0]), float(pair[1])
        except ValueError:
            self.fail(f"bad interval {pair!r}", lineno)
        return (lo, hi)

    def _structure(self, head, args, lineno):
        if head == "corank":
            if len(args) != 1 or not args[0].isdigit():
                self.fail("corank N", lineno)
            self.corank = int(args[0])
        elif head in self.terms:
            if not args:
                self.fail(f"{head} EXPR [COORD...]", lineno)
            self.terms[head].append((args[0], tuple(args[1:]), lineno))
        else:
            self.fail(f"unknown structure directive {head!r}", lineno)

    def _certificates(self, head, args, lineno):
        if head == "first":
            if len(args) != 1:
                self.fail('first "EXPR"', lineno)
            self.first_f = (args[0], lineno)
        elif head == "second":
            if len(args) != 2:
                self.fail('second "EXPR" COORD', lineno)
            self.second_nu_terms.append((args[0], (args[1],), lineno))
        elif head == "period":
            if len(args) < 3 or len(args) % 2 == 0:
                self.fail("period CYCLE (COORD VALUE)...", lineno)
            locus = {}
            for k in range(1, len(args), 2):
                locus[args[k]] = (args[k + 1], lineno)
            self.period = (args[0], locus, lineno)
        else:
            self.fail(f"unknown certificate directive {head!r}", lineno)

    def _analyses(self, head, args, lineno):
        if args:
            self.fail("one analysis verb per line", lineno)
        if head not in ANALYSES:
            self.fail(f"unknown analysis {head!r}", lineno)
        if head not in self.analyses:
            self.analyses.append(head)

    def _options(self, head, args, lineno):
        if head == "seed" and len(args) == 1:
            self.seed = int(args[0])
        elif head == "trials" and len(args) == 1:
            self.trials = int(args[0])
        elif head == "tolerance" and len(args) == 1:
            self.tolerance = float(args[0])
        else:
            self.fail(f"unknown option {head!r}", lineno)

    def _expects(self, head, args, lineno):
        if head not in ANALYSES or len(args) != 1 or args[0] not in VERDICT_WORDS:
            self.fail("expect lines are: ANALYSIS VERDICT", lineno)
        self.expects[head] = args[0]

    # -- assembly ---------------------------------------------------------------

    def _parse(self, text, lineno):
        try:
            return ex.parse_scalar(text, self.chart)
        except ExprError as exc:
            self.fail(f"bad expression {text!r}: {exc}", lineno)

    def _graded(self, kind, cls, degree):
        out = cls(self.chart, degree, {})
        for text, names, lineno in self.terms[kind]:
            if len(names) != degree:
                self.fail(
                    f"{kind} term needs {degree} coordinate names, got {len(names)}",
                    lineno,
                )
            for n in names:
                if n not in self.chart.coords:
                    self.fail(f"unknown coordinate {n!r} in {kind} term", lineno)
            coeff = self._parse(text, lineno)
            out = out + cls(self.chart, degree, {names: coeff})
        return out

    def finish(self) -> ProblemFile:
        if self.coords is None:
            self.fail("missing chart section with a coords line", 0)
        try:
            self.chart = Chart(
                self.coords,
                periodic=self.periodic,
                params=tuple(self.params),
                domains=self.domains,
                torus_strict=self.torus_strict,
            )
        except ChartError as exc:
            self.fail(str(exc), 0)
        if not self.terms["bivector"]:
            self.fail("structure section needs at least one bivector term", 0)
        bivector = self._graded("bivector", MultiVector, 2)
        transversal = (
            self._graded("transversal", MultiVector, 1)
            if self.terms["transversal"]
            else None
        )
        alpha = self._graded("alpha", DiffForm, 1) if self.terms["alpha"] else None
        omega = self._graded("omega", DiffForm, 2) if self.terms["omega"] else None
        omega_alt = (
            self._graded("omega_alt", DiffForm, 2) if self.terms["omega_alt"] else None
        )
        first_cert = None
        if self.first_f is not None:
            first_cert = ObstructionCertificate(
                "first", f=self._parse(*self.first_f), origin="supplied"
            )
        second_cert = None
        if self.second_nu_terms:
            nu = DiffForm(self.chart, 1, {})
            for text, names, lineno in self.second_nu_terms:
                if names[0] not in self.chart.coords:
                    self.fail(f"unknown coordinate {names[0]!r}", lineno)
                nu = nu + DiffForm(self.chart, 1, {names: self._parse(text, lineno)})
            second_cert = ObstructionCertificate("second", nu=nu, origin="supplied")
        witness = None
        if self.period is not None:
            cycle, locus_raw, lineno = self.period
            if cycle not in self.chart.coords:
                self.fail(f"unknown cycle coordinate {cycle!r}", lineno)
            locus = {}
            for name, (text, at) in locus_raw.items():
                if name not in self.chart.coords:
                    self.fail(f"unknown locus coordinate {name!r}", at)
                locus[name] = self._parse(text, at)
            witness = PeriodWitness(cycle, locus)
        return ProblemFile(
            path=self.path,
            chart=self.chart,
            bivector=bivector,
            corank=self.corank,
            transversal=transversal,
            alpha=alpha,
            omega=omega,
            omega_alt=omega_alt,
            first_certificate=first_cert,
            second_certificate=second_cert,
            period_witness=witness,
            analyses=tuple(self.analyses),
            seed=self.seed,
            trials=self.trials,
            tolerance=self.tolerance,
            expects=dict(self.expects),
        )


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemFileError(f"cannot read file: {exc}", path=path) from exc
    return _Loader(path, text).load()


def loads_problem(text: str, path: str = "<string>") -> ProblemFile:
    return _Loader(path, text).load()
