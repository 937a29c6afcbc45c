"""Bundled example structures used by the test suite and the CLI corpus verb.

Each entry packages a chart, a Poisson structure with its transversal
field, and the expected analysis outcomes.  The non-unimodular entries
are suspensions of expanding circle maps and come with the leafwise
period witness that certifies nonvanishing of the first obstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import expr as ex
from .calculus import DiffForm, MultiVector, parse_graded
from .expr import Chart, ZeroTester
from .invariants import ObstructionCertificate, PeriodWitness
from .poisson import PoissonStructure


@dataclass
class CorpusEntry:
    name: str
    structure: PoissonStructure
    expect_unimodular: Optional[bool] = None
    certificate: Optional[ObstructionCertificate] = None
    witness: Optional[PeriodWitness] = None
    omega_alt: Optional[DiffForm] = None
    nu_alt: Optional[DiffForm] = None
    expected_modular: Optional[MultiVector] = None
    tags: frozenset = field(default_factory=frozenset)

    @property
    def chart(self) -> Chart:
        return self.structure.chart


def _mk(chart, pi_text, v_text=None, seed=0, corank=None):
    Pi = parse_graded(pi_text, chart, "multivector")
    v = parse_graded(v_text, chart, "multivector") if v_text else None
    return PoissonStructure(
        chart,
        Pi,
        corank_n=corank,
        transversal=v,
        tester=ZeroTester(chart, seed=seed),
    )


def flat_entry(seed=0) -> CorpusEntry:
    ch = Chart(("x", "y", "z"))
    P = _mk(ch, "@x^@y", "@z", seed=seed)
    return CorpusEntry(
        name="flat",
        structure=P,
        expect_unimodular=True,
        expected_modular=MultiVector(ch, 1, {}),
        tags=frozenset({"corank1", "closed", "extendable"}),
    )


def sheared_entry(seed=0) -> CorpusEntry:
    # same flat bivector, nontrivial Poisson transversal v = @z + y @x
    ch = Chart(("x", "y", "z"))
    P = _mk(ch, "@x^@y", "@z + y @x", seed=seed)
    return CorpusEntry(
        name="sheared",
        structure=P,
        expect_unimodular=True,
        expected_modular=MultiVector(ch, 1, {}),
        tags=frozenset({"corank1", "closed", "extendable"}),
    )


def t3_entry(seed=0) -> CorpusEntry:
    ch = Chart(
        ("theta1", "theta2", "theta3"),
        periodic=("theta1", "theta2", "theta3"),
        params=("a", "b"),
        domains={"a": (0.3, 0.9), "b": (1.1, 1.9)},
    )
    P = _mk(
        ch,
        "1/(a^2+b^2+1) @theta1^@theta2 + b/(a^2+b^2+1) @theta1^@theta3"
        " - a/(a^2+b^2+1) @theta2^@theta3",
        "a @theta1 + b @theta2 - @theta3",
        seed=seed,
    )
    return CorpusEntry(
        name="t3_example",
        structure=P,
        expect_unimodular=True,
        expected_modular=MultiVector(ch, 1, {}),
        tags=frozenset({"corank1", "closed", "extendable", "torus"}),
    )


def expwall_entry(seed=0) -> CorpusEntry:
    # alpha = e^x dz is the adapted defining one-form: certified closable
    ch = Chart(("x", "y", "z"))
    P = _mk(ch, "@x^@y", "exp(-x) @z", seed=seed)
    cert = ObstructionCertificate("first", f=ex.symbol("x"), origin="known")
    return CorpusEntry(
        name="exp_wall",
        structure=P,
        expect_unimodular=True,
        certificate=cert,
        expected_modular=MultiVector(ch, 1, {("y",): -1}),
        tags=frozenset({"corank1", "open_alpha"}),
    )


def polywall_entry(seed=0) -> CorpusEntry:
    # alpha = e^(x*y) dz: exercises two-variable antidifferentiation
    ch = Chart(("x", "y", "z"))
    P = _mk(ch, "@x^@y", "exp(-x*y) @z", seed=seed)
    cert = ObstructionCertificate(
        "first", f=ex.symbol("x") * ex.symbol("y"), origin="known"
    )
    return CorpusEntry(
        name="poly_wall",
        structure=P,
        expect_unimodular=True,
        certificate=cert,
        tags=frozenset({"corank1", "open_alpha"}),
    )


def suspension_entry(seed=0) -> CorpusEntry:
    # suspension of x -> e^(2 pi) x: leaves x = C e^theta; genuinely
    # non-unimodular, certified by the theta-period at the x = 0 leaf
    ch = Chart(("theta", "x", "y"), periodic=("theta",))
    P = _mk(ch, "@theta^@y + x @x^@y", "@x", seed=seed)
    return CorpusEntry(
        name="suspension",
        structure=P,
        expect_unimodular=False,
        witness=PeriodWitness("theta", {"x": 0}),
        tags=frozenset({"corank1", "nonunimodular", "torus"}),
    )


def suspension2_entry(seed=0) -> CorpusEntry:
    ch = Chart(("theta1", "theta2", "x"), periodic=("theta1", "theta2"))
    P = _mk(ch, "@theta1^@theta2 - 2*x @theta2^@x", "@x", seed=seed)
    return CorpusEntry(
        name="suspension_double",
        structure=P,
        expect_unimodular=False,
        witness=PeriodWitness("theta1", {"x": 0}),
        tags=frozenset({"corank1", "nonunimodular", "torus"}),
    )


def twisted_entry(seed=0) -> CorpusEntry:
    # flat structure with a non-adapted defining two-form omega + alpha ^ xi
    ch = Chart(("x", "y", "z"))
    P = _mk(ch, "@x^@y", "@z", seed=seed)
    omega_alt = parse_graded("dx^dy + x dz^dy", ch, "form")
    nu_alt = parse_graded("-x dy", ch, "form")
    return CorpusEntry(
        name="twisted_omega",
        structure=P,
        expect_unimodular=True,
        omega_alt=omega_alt,
        nu_alt=nu_alt,
        tags=frozenset({"corank1", "closed", "sigma"}),
    )


def affine_entry(seed=0) -> CorpusEntry:
    ch = Chart(("x", "y"))
    P = _mk(ch, "y @x^@y", seed=seed, corank=1)
    return CorpusEntry(
        name="affine",
        structure=P,
        expected_modular=MultiVector(ch, 1, {("x",): 1}),
        tags=frozenset({"bside", "affine"}),
    )


def product_sin_entry(seed=0) -> CorpusEntry:
    # S^1 x N with N flat three-dimensional: Pi = sin(theta) @theta^@z + @x^@y
    ch = Chart(("theta", "x", "y", "z"), periodic=("theta",))
    P = _mk(ch, "sin(theta) @theta^@z + @x^@y", seed=seed, corank=2)
    return CorpusEntry(
        name="product_sin",
        structure=P,
        tags=frozenset({"bside", "product"}),
    )


def product_const_entry(seed=0) -> CorpusEntry:
    ch = Chart(("theta", "x", "y", "z"), periodic=("theta",))
    P = _mk(ch, "@theta^@z + @x^@y", seed=seed, corank=2)
    return CorpusEntry(
        name="product_const",
        structure=P,
        tags=frozenset({"bside", "product"}),
    )


_BUILDERS = (
    flat_entry,
    sheared_entry,
    t3_entry,
    expwall_entry,
    polywall_entry,
    suspension_entry,
    suspension2_entry,
    twisted_entry,
    affine_entry,
    product_sin_entry,
    product_const_entry,
)


def all_entries(seed=0):
    return [build(seed=seed) for build in _BUILDERS]


def corank_one_entries(seed=0):
    return [e for e in all_entries(seed=seed) if "corank1" in e.tags]


def entry(name: str, seed=0) -> CorpusEntry:
    for build in _BUILDERS:
        e = build(seed=seed)
        if e.name == name:
            return e
    raise KeyError(name)
