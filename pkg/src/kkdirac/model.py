"""Field content, quadratic Lagrangian terms, and phase-space model types.

A 5D theory is a set of fields plus quadratic terms.  After reduction (see
:mod:`kkdirac.kaluza`) each mode level becomes a :class:`QuadraticPhaseModel`:
an ordered variable registry together with exact matrices ``(W, N, V)`` such
that the level's Lagrangian density is

    L = 1/2 qdot^T W qdot + qdot^T N q - 1/2 q^T V q

restricted to a finite spatial channel.  Everything downstream (momenta,
constraints, brackets) is linear algebra on these three matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

from .exactla import Mat, Rat

__all__ = [
    "FieldSpec",
    "FieldStrengthSq",
    "MassSq",
    "BFCoupling",
    "TermSpec",
    "TheorySpec5D",
    "VarTag",
    "QuadraticPhaseModel",
    "MomentumMap",
    "legendre_data",
    "direct_sum",
    "builtin_proca5d",
    "builtin_bfproca5d",
    "components",
    "component_parity",
    "component_group",
]

LORENTZ_RANKS = ("scalar", "vector", "antisym2")
PARITIES = ("even", "odd")

_VECTOR_COMPONENTS = ("0", "1", "2", "3", "5")
_ANTISYM2_COMPONENTS = ("01", "02", "03", "12", "13", "23", "05", "15", "25", "35")


@dataclass(frozen=True)
class FieldSpec:
    """One 5D field.

    ``parity`` is the reflection parity (y -> -y) of the components that do
    not carry the compact index; any component carrying index 5 flips it.
    """

    name: str
    lorentz_rank: str
    parity: str

    def __post_init__(self):
        if self.lorentz_rank not in LORENTZ_RANKS:
            raise ValueError(f"unknown lorentz_rank {self.lorentz_rank!r}")
        if self.parity not in PARITIES:
            raise ValueError(f"unknown parity {self.parity!r}")
        if not self.name or not self.name.isidentifier():
            raise ValueError(f"bad field name {self.name!r}")


@dataclass(frozen=True)
class FieldStrengthSq:
    """Abelian field-strength square  coeff * F_MN F^MN  of a vector field."""

    field: str
    coeff: Rat


@dataclass(frozen=True)
class MassSq:
    """Mass term  coeff * m^2 * X_M X^M  of a vector field."""

    field: str
    coeff: Rat


@dataclass(frozen=True)
class BFCoupling:
    """First-order coupling  coeff * B^MN F_MN  of a 2-form to a vector's curl."""

    bfield: str
    afield: str
    coeff: Rat


TermSpec = Union[FieldStrengthSq, MassSq, BFCoupling]


def components(lorentz_rank: str) -> tuple:
    if lorentz_rank == "scalar":
        return ("",)
    if lorentz_rank == "vector":
        return _VECTOR_COMPONENTS
    if lorentz_rank == "antisym2":
        return _ANTISYM2_COMPONENTS
    raise ValueError(f"unknown lorentz_rank {lorentz_rank!r}")


def component_parity(spec: FieldSpec, comp: str) -> str:
    """Reflection parity of one component; the compact index flips it."""
    flip = "5" in comp
    if spec.parity == "even":
        return "odd" if flip else "even"
    return "even" if flip else "odd"


def component_group(lorentz_rank: str, comp: str) -> str:
    """Collapse spatial component indices to a symbolic class (1,2,3 -> i)."""
    if lorentz_rank == "scalar":
        return ""
    subst = {"1": "i", "2": "i", "3": "i"}
    if lorentz_rank == "vector":
        return subst.get(comp, comp)
    a, b = comp[0], comp[1]
    ga, gb = subst.get(a, a), subst.get(b, b)
    if ga == gb == "i" and a != b:
        return "ij"
    return ga + gb


@dataclass(frozen=True)
class TheorySpec5D:
    """A 5D quadratic theory: fields, terms, and parameters (m, R)."""

    fields: tuple
    terms: tuple
    m: Rat
    R: Rat

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "m", Fraction(self.m))
        object.__setattr__(self, "R", Fraction(self.R))
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValueError("duplicate field names")
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        byname = {f.name: f for f in self.fields}
        for t in self.terms:
            if isinstance(t, (FieldStrengthSq, MassSq)):
                f = byname.get(t.field)
                if f is None:
                    raise ValueError(f"term references unknown field {t.field!r}")
                if f.lorentz_rank != "vector":
                    raise ValueError(f"{type(t).__name__} requires a vector field")
            elif isinstance(t, BFCoupling):
                fb, fa = byname.get(t.bfield), byname.get(t.afield)
                if fb is None or fa is None:
                    raise ValueError("BFCoupling references unknown field")
                if fb.lorentz_rank != "antisym2" or fa.lorentz_rank != "vector":
                    raise ValueError("BFCoupling requires (antisym2, vector) fields")
            else:
                raise ValueError(f"unknown term {t!r}")

    def field_by_name(self, name: str) -> FieldSpec:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> dict:
        def term_dict(t):
            if isinstance(t, FieldStrengthSq):
                return {"kind": "field_strength_sq", "field": t.field, "coeff": str(Fraction(t.coeff))}
            if isinstance(t, MassSq):
                return {"kind": "mass_sq", "field": t.field, "coeff": str(Fraction(t.coeff))}
            return {
                "kind": "bf_coupling",
                "bfield": t.bfield,
                "afield": t.afield,
                "coeff": str(Fraction(t.coeff)),
            }

        return {
            "fields": [
                {"name": f.name, "lorentz_rank": f.lorentz_rank, "parity": f.parity}
                for f in self.fields
            ],
            "terms": [term_dict(t) for t in self.terms],
            "m": str(self.m),
            "R": str(self.R),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TheorySpec5D":
        fields = tuple(
            FieldSpec(f["name"], f["lorentz_rank"], f["parity"]) for f in data["fields"]
        )
        terms = []
        for t in data["terms"]:
            kind = t["kind"]
            if kind == "field_strength_sq":
                terms.append(FieldStrengthSq(t["field"], Fraction(t["coeff"])))
            elif kind == "mass_sq":
                terms.append(MassSq(t["field"], Fraction(t["coeff"])))
            elif kind == "bf_coupling":
                terms.append(BFCoupling(t["bfield"], t["afield"], Fraction(t["coeff"])))
            else:
                raise ValueError(f"unknown term kind {kind!r}")
        return cls(fields, tuple(terms), Fraction(data["m"]), Fraction(data["R"]))


@dataclass(frozen=True)
class VarTag:
    """Identity of one configuration variable: level, field, component, slot."""

    level: int
    field: str
    comp: str
    slot: int
    group: str

    @property
    def name(self) -> str:
        comp = f"[{self.comp}]" if self.comp else ""
        return f"{self.field}{comp}@n{self.level}:{self.slot}"


@dataclass(frozen=True)
class QuadraticPhaseModel:
    """Exact quadratic model L = 1/2 qdot^T W qdot + qdot^T N q - 1/2 q^T V q."""

    vars: tuple
    W: Mat
    N: Mat
    V: Mat
    d: int

    def __post_init__(self):
        nq = len(self.vars)
        for name, mat in (("W", self.W), ("N", self.N), ("V", self.V)):
            if mat.shape != (nq, nq):
                raise ValueError(f"{name} must be {nq}x{nq}")
        if not self.W.is_symmetric():
            raise ValueError("W must be symmetric")
        if not self.V.is_symmetric():
            raise ValueError("V must be symmetric")
        if self.d < 1 or any(v.slot >= self.d for v in self.vars):
            raise ValueError("slot out of range for channel dimension")

    @property
    def nq(self) -> int:
        return len(self.vars)

    @property
    def phase_dim_channel(self) -> int:
        return 2 * self.nq

    @property
    def phase_dim_point(self) -> Fraction:
        return Fraction(2 * self.nq, self.d)

    def index(self, field: str, comp: str, slot: int, level=None) -> int:
        for i, v in enumerate(self.vars):
            if v.field == field and v.comp == comp and v.slot == slot:
                if level is None or v.level == level:
                    return i
        raise KeyError((field, comp, slot, level))

    def block(self, field: str, comp: str, level=None) -> list:
        out = [
            i
            for i, v in enumerate(self.vars)
            if v.field == field and v.comp == comp and (level is None or v.level == level)
        ]
        if not out:
            raise KeyError((field, comp, level))
        return out

    def var_names(self) -> list:
        return [v.name for v in self.vars]


class MomentumMap(NamedTuple):
    """Conjugate momenta p = W qdot + N q."""

    W: Mat
    N: Mat


def legendre_data(model: QuadraticPhaseModel) -> MomentumMap:
    """Momentum map of the model: p = W qdot + N q."""
    return MomentumMap(model.W, model.N)


def direct_sum(models: Sequence[QuadraticPhaseModel]) -> QuadraticPhaseModel:
    """Block-diagonal union of models sharing one channel dimension."""
    models = list(models)
    if not models:
        raise ValueError("empty model list")
    d = models[0].d
    if any(m.d != d for m in models):
        raise ValueError("channel dimension mismatch")
    tags = tuple(v for m in models for v in m.vars)
    total = len(tags)

    def embed(pick):
        rows = [[Rat(0)] * total for _ in range(total)]
        off = 0
        for m in models:
            src = pick(m)
            for i in range(m.nq):
                row = rows[off + i]
                srow = src.row(i)
                for j in range(m.nq):
                    row[off + j] = srow[j]
            off += m.nq
        return Mat(rows)

    return QuadraticPhaseModel(
        vars=tags,
        W=embed(lambda m: m.W),
        N=embed(lambda m: m.N),
        V=embed(lambda m: m.V),
        d=d,
    )


def builtin_proca5d(m, R) -> TheorySpec5D:
    """Massive 5D vector: -1/4 F_MN F^MN + (m^2/2) A_M A^M.

    With m = 0 this is the 5D Maxwell limit.
    """
    a = FieldSpec("A", "vector", "even")
    return TheorySpec5D(
        fields=(a,),
        terms=(FieldStrengthSq("A", Fraction(-1, 4)), MassSq("A", Fraction(1, 2))),
        m=Fraction(m),
        R=Fraction(R),
    )


def builtin_bfproca5d(m, R) -> TheorySpec5D:
    """Topologically massive pair: B^MN F_MN - (m^2/4) A_M A^M."""
    b = FieldSpec("B", "antisym2", "even")
    a = FieldSpec("A", "vector", "even")
    return TheorySpec5D(
        fields=(a, b),
        terms=(BFCoupling("B", "A", Fraction(1)), MassSq("A", Fraction(-1, 4))),
        m=Fraction(m),
        R=Fraction(R),
    )
