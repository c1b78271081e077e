"""Constrained-Hamiltonian analysis of quadratic phase-space models.

For a model with Lagrangian L = 1/2 qdot^T W qdot + qdot^T N q - 1/2 q^T V q
every constraint is a linear functional g^T z of the phase vector
z = (q, p) and the canonical Hamiltonian is an exact quadratic form
H = 1/2 z^T Hmat z.  The full algorithm — primary constraints from the
kernel of W, consistency chain, first/second class split, multiplier
solution, bracket-deformation matrix, reducibility bookkeeping, and the
degree-of-freedom count — then runs entirely in rational linear algebra
with no weak equalities left implicit: "weakly zero" always means
"exactly inside the constraint row span".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exactla import Mat, Rat, hstack, inverse, null_space, rank, rref, vstack
from .model import QuadraticPhaseModel

__all__ = [
    "LinearConstraint",
    "ConstraintTower",
    "RawFamily",
    "ChainPass",
    "Classification",
    "Multiplier",
    "ReducibilityRow",
    "LevelAnalysis",
    "DiracReport",
    "UnfixedMultiplierError",
    "omega",
    "primary_constraints",
    "canonical_hamiltonian",
    "consistency_chain",
    "classify",
    "solve_multipliers",
    "dirac_matrix",
    "reducibility_report",
    "dof_count",
    "extended_hamiltonian",
    "analyze_level",
    "analyze_tower",
]

_GENERATION_NAMES = {1: "primary", 2: "secondary", 3: "tertiary"}


class UnfixedMultiplierError(ValueError):
    """Extended Hamiltonian requested while first-class multipliers are free."""


def generation_name(gen: int) -> str:
    return _GENERATION_NAMES.get(gen, f"generation-{gen}")


@dataclass(frozen=True)
class LinearConstraint:
    """One linear constraint g^T z = 0 with its provenance."""

    grad: tuple
    generation: int
    family: str
    member: str
    level: int

    @property
    def label(self) -> str:
        return f"{self.family}(n={self.level})[{self.member}]"

    @property
    def generation_label(self) -> str:
        return generation_name(self.generation)


@dataclass(frozen=True)
class RawFamily:
    """All candidates of one family as generated, before independence pruning."""

    family: str
    level: int
    generation: int
    grads: tuple  # tuple of gradient tuples, in generation order


@dataclass(frozen=True)
class ChainPass:
    """One consistency pass.

    ``multipliers_fixed`` counts the primary-multiplier directions newly
    determined by this pass's consistency equations (the rank gained by the
    primary columns of the bracket matrix).
    """

    generation: int
    candidates: int
    added: int
    pruned_in_span: int
    dropped_trivial: int
    multipliers_fixed: int


@dataclass(frozen=True)
class ConstraintTower:
    constraints: tuple
    omega: Mat
    chain_log: tuple
    raw_families: tuple
    dropped_trivial: tuple  # labels of identically-zero candidates

    @property
    def size(self) -> int:
        return len(self.constraints)

    def gradient_matrix(self) -> Mat:
        return Mat([c.grad for c in self.constraints])

    def bracket_matrix(self) -> Mat:
        g = self.gradient_matrix()
        return g * self.omega * g.T


@dataclass(frozen=True)
class Classification:
    """Second-class selection and first-class combinations of one tower."""

    second_idx: tuple
    first_combos: tuple  # column Mats of tower-coefficient vectors
    C: Mat
    C_second: Mat

    @property
    def n_second(self) -> int:
        return len(self.second_idx)

    @property
    def n_first(self) -> int:
        return len(self.first_combos)


@dataclass(frozen=True)
class Multiplier:
    """Solved multiplier of one second-class constraint, as a linear functional."""

    label: str
    coeffs: tuple  # row over phase space


@dataclass(frozen=True)
class ReducibilityRow:
    level: int
    family: str
    listed: int
    rank: int
    deficiency: int
    listed_per_point: Optional[int]
    rank_per_point: Optional[int]
    deficiency_per_point: Optional[int]


def omega(nq: int) -> Mat:
    """Canonical symplectic form on (q, p): [[0, I], [-I, 0]]."""
    rows = []
    for i in range(nq):
        r = [Rat(0)] * (2 * nq)
        r[nq + i] = Rat(1)
        rows.append(r)
    for i in range(nq):
        r = [Rat(0)] * (2 * nq)
        r[i] = Rat(-1)
        rows.append(r)
    return Mat(rows)


def _first_nonzero(col: Mat) -> int:
    for i in range(col.rows):
        if col[i, 0] != 0:
            return i
    raise ValueError("zero vector")


def primary_constraints(model: QuadraticPhaseModel) -> list:
    """Primaries phi = v^T (p - N q) for each kernel direction v of W."""
    prims = []
    for v in null_space(model.W):
        lead = _first_nonzero(v)
        tag = model.vars[lead]
        gq = [-sum(v[i, 0] * model.N[i, j] for i in range(model.nq)) for j in range(model.nq)]
        gp = [v[i, 0] for i in range(model.nq)]
        prims.append(
            LinearConstraint(
                grad=tuple(gq + gp),
                generation=1,
                family=f"mom[{tag.group}]",
                member=f"{tag.comp}:{tag.slot}",
                level=tag.level,
            )
        )
    if prims:
        g = Mat([c.grad for c in prims])
        if rank(g) != len(prims):
            raise ValueError("degenerate primary constraints")
    return prims


def canonical_hamiltonian(model: QuadraticPhaseModel) -> Mat:
    """Canonical Hamiltonian as an exact quadratic form on (q, p).

    The velocity solve p = W u + N q is restricted to the image of W with
    the rational pseudo-inverse W+ = B (B^T W B)^{-1} B^T, B a column basis
    of W; the complementary directions are exactly the primary constraints.
    """
    nq = model.nq
    _, piv = rref(model.W)
    if piv:
        b = model.W.take_cols(piv)
        m = b.T * model.W * b
        wplus = b * inverse(m) * b.T
    else:
        wplus = Mat.zeros(nq, nq)
    hqq = model.N.T * wplus * model.N + model.V
    hqp = -(model.N.T * wplus)
    hpp = wplus
    h = vstack(hstack(hqq, hqp), hstack(hqp.T, hpp))
    if not h.is_symmetric():
        raise AssertionError("canonical Hamiltonian form must be symmetric")
    return h


def consistency_chain(
    model: QuadraticPhaseModel,
    primaries: Optional[Sequence] = None,
    H: Optional[Mat] = None,
    max_generations: int = 12,
) -> ConstraintTower:
    """Run the consistency algorithm to exhaustion.

    Each pass projects the constraint velocities onto the left-nullspace of
    the current bracket matrix; surviving candidates are either stored (new
    independent constraint), pruned (gradient already in the tower's row
    span — recorded raw for the reducibility report), or dropped as
    identically zero (logged, never stored).  Candidates of a pass that
    stores nothing are consistency verifications, not new constraints, and
    do not enter the raw listings.
    """
    if primaries is None:
        primaries = primary_constraints(model)
    if H is None:
        H = canonical_hamiltonian(model)
    om = omega(model.nq)
    tower = list(primaries)
    n_prim = len(tower)
    chain_log = []
    raw: dict = {}
    for c in tower:
        key = (c.level, c.family, 1)
        raw.setdefault(key, []).append(c.grad)
    dropped = []
    if not tower:
        return ConstraintTower((), om, (), (), ())

    gen = 1
    while True:
        gen += 1
        if gen > max_generations:
            raise RuntimeError("consistency chain failed to terminate")
        g = Mat([c.grad for c in tower])
        c_mat = g * om * g.T
        prim_cols = list(range(n_prim))
        fixed_before = rank(c_mat.take_cols(prim_cols))
        null = null_space(c_mat.T)
        candidates = []
        for u in null:
            parent = tower[_first_nonzero(u)]
            row = (u.T * g) * om * H
            candidates.append((parent, tuple(row.row(0))))
        added = []
        pruned = 0
        trivial = 0
        raw_this_pass = []
        g_current = g
        for parent, grad in candidates:
            fam = f"dot[{parent.family}]"
            if all(x == 0 for x in grad):
                trivial += 1
                dropped.append(f"{fam}(n={parent.level})[{parent.member}]")
                continue
            raw_this_pass.append((parent, fam, grad))
            stacked = vstack(g_current, Mat([list(grad)]))
            if rank(stacked) > g_current.rows:
                added.append(
                    LinearConstraint(
                        grad=grad,
                        generation=gen,
                        family=fam,
                        member=parent.member,
                        level=parent.level,
                    )
                )
                g_current = stacked
            else:
                pruned += 1
        tower.extend(added)
        g_after = Mat([c.grad for c in tower])
        c_after = g_after * om * g_after.T
        fixed_after = rank(c_after.take_cols(prim_cols))
        chain_log.append(
            ChainPass(
                generation=gen,
                candidates=len(candidates),
                added=len(added),
                pruned_in_span=pruned,
                dropped_trivial=trivial,
                multipliers_fixed=fixed_after - fixed_before,
            )
        )
        if added:
            for parent, fam, grad in raw_this_pass:
                key = (parent.level, fam, gen)
                raw.setdefault(key, []).append(grad)
        if not added:
            break

    families = tuple(
        RawFamily(family=fam, level=level, generation=g_, grads=tuple(grads))
        for (level, fam, g_), grads in sorted(raw.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1]))
    )
    return ConstraintTower(
        constraints=tuple(tower),
        omega=om,
        chain_log=tuple(chain_log),
        raw_families=families,
        dropped_trivial=tuple(dropped),
    )


def classify(tower: ConstraintTower) -> Classification:
    """Split the tower into second-class rows and first-class combinations.

    The second-class set S is the lexicographically greedy row basis of the
    bracket matrix C; for an antisymmetric matrix the principal block C[S,S]
    on a row basis is invertible, which the construction verifies.  The
    first-class content is the nullspace of C: tower combinations whose
    bracket with everything vanishes exactly.
    """
    c = tower.bracket_matrix()
    t = tower.size
    sel: list = []
    r_sel = 0
    for i in range(t):
        trial = sel + [i]
        r = rank(c.take_rows(trial))
        if r > r_sel:
            sel.append(i)
            r_sel = r
    c_second = c.take_rows(sel).take_cols(sel)
    if sel:
        inverse(c_second)  # raises SingularError if the theory above fails
    combos = tuple(null_space(c))
    return Classification(second_idx=tuple(sel), first_combos=combos, C=c, C_second=c_second)


def solve_multipliers(tower: ConstraintTower, H: Mat, cls: Classification) -> list:
    """Multipliers of the second-class constraints: Lambda = -C_S^{-1} h_S.

    Each returned multiplier is an exact linear functional of the phase
    vector (a coefficient row), not a number.
    """
    if not cls.second_idx:
        return []
    g = tower.gradient_matrix()
    g_s = g.take_rows(cls.second_idx)
    h_s = g_s * tower.omega * H
    lam = -(inverse(cls.C_second) * h_s)
    out = []
    for row_i, idx in enumerate(cls.second_idx):
        out.append(Multiplier(label=tower.constraints[idx].label, coeffs=tuple(lam.row(row_i))))
    return out


def dirac_matrix(tower: ConstraintTower, cls: Classification) -> Mat:
    """Bracket-deformation matrix D = Omega - Omega G_S^T C_S^{-1} G_S Omega."""
    om = tower.omega
    if not cls.second_idx:
        return om
    g_s = tower.gradient_matrix().take_rows(cls.second_idx)
    return om - om * g_s.T * inverse(cls.C_second) * g_s * om


def _per_point(value: int, d: int) -> Optional[int]:
    return value // d if value % d == 0 else None


def reducibility_report(tower: ConstraintTower, d: int) -> list:
    """Rank/deficiency of each raw family plus per-level first-class unions.

    The union row of a level collects the families entangled by dependency
    relations among the raw candidates together with the families whose
    every member commutes strictly with the whole tower — the level's
    manifestly first-class content before independence reduction.
    """
    rows = []
    for fam in tower.raw_families:
        g = Mat(list(fam.grads))
        r = rank(g)
        rows.append(
            ReducibilityRow(
                level=fam.level,
                family=fam.family,
                listed=len(fam.grads),
                rank=r,
                deficiency=len(fam.grads) - r,
                listed_per_point=_per_point(len(fam.grads), d),
                rank_per_point=_per_point(r, d),
                deficiency_per_point=_per_point(len(fam.grads) - r, d),
            )
        )

    g_tower = tower.gradient_matrix()
    om = tower.omega
    levels = sorted({fam.level for fam in tower.raw_families})
    for level in levels:
        fams = [f for f in tower.raw_families if f.level == level]
        if not fams:
            continue
        # dependency relations among all raw candidates of the level
        all_grads = []
        owners = []
        for f in fams:
            for grad in f.grads:
                all_grads.append(list(grad))
                owners.append(f.family)
        coupled = set()
        for u in null_space(Mat(all_grads).T):
            support = {owners[i] for i in range(u.rows) if u[i, 0] != 0}
            if len(support) >= 1:
                coupled |= support
        strict = set()
        for f in fams:
            g_f = Mat(list(f.grads))
            if (g_f * om * g_tower.T).is_zero():
                strict.add(f.family)
        union_fams = coupled | strict
        if not union_fams:
            continue
        member_grads = []
        for f in fams:
            if f.family in union_fams:
                member_grads.extend(list(g) for g in f.grads)
        g_u = Mat(member_grads)
        r = rank(g_u)
        rows.append(
            ReducibilityRow(
                level=level,
                family="fc-union[" + ",".join(sorted(union_fams)) + "]",
                listed=len(member_grads),
                rank=r,
                deficiency=len(member_grads) - r,
                listed_per_point=_per_point(len(member_grads), d),
                rank_per_point=_per_point(r, d),
                deficiency_per_point=_per_point(len(member_grads) - r, d),
            )
        )
    return rows


def dof_count(phase_per_point, n_first_per_point, n_second_per_point):
    """Field-theory count (phase - 2*first - second) / 2 per spatial point."""
    dof = Fraction(phase_per_point - 2 * n_first_per_point - n_second_per_point, 2)
    diagnosis = None
    if dof.denominator != 1:
        diagnosis = "half-integer degree-of-freedom count: odd constraint imbalance"
    return dof, diagnosis


def extended_hamiltonian(
    tower: ConstraintTower,
    H: Mat,
    multipliers: Sequence,
    cls: Classification,
    gauge: Optional[Sequence] = None,
) -> Mat:
    """H_E = H + sum lambda^a phi_a as an exact quadratic form.

    Second-class multipliers come solved; first-class combinations need a
    gauge choice (a coefficient row per combination).  Passing none while
    first-class content exists raises :class:`UnfixedMultiplierError`.
    """
    g = tower.gradient_matrix()
    n2 = H.rows
    out = H
    sec = {idx: m for idx, m in zip(cls.second_idx, multipliers)}
    if len(sec) != len(multipliers):
        raise ValueError("multiplier/second-class mismatch")
    # lambda(z) phi(z) = 1/2 z^T (g^T l + l^T g) z, so under the 1/2 z^T H z
    # convention the form gains the full symmetrized outer product.
    for idx, mult in sec.items():
        grow = Mat([list(tower.constraints[idx].grad)])
        lrow = Mat([list(mult.coeffs)])
        out = out + grow.T * lrow + lrow.T * grow
    if cls.first_combos:
        if gauge is None:
            raise UnfixedMultiplierError(
                f"{len(cls.first_combos)} first-class multipliers are free; supply a gauge"
            )
        if len(gauge) != len(cls.first_combos):
            raise ValueError("need one gauge row per first-class combination")
        for combo, row in zip(cls.first_combos, gauge):
            grow = combo.T * g
            lrow = Mat([list(row)])
            if lrow.shape != (1, n2):
                raise ValueError("gauge rows must live on phase space")
            out = out + grow.T * lrow + lrow.T * grow
    return out


@dataclass(frozen=True)
class LevelAnalysis:
    """Everything the algorithm produces for one tower level."""

    level: int
    model: QuadraticPhaseModel
    H: Mat
    tower: ConstraintTower
    classification: Classification
    multipliers: tuple
    dirac: Mat
    reducibility: tuple
    counts: dict


def analyze_level(model: QuadraticPhaseModel, level: Optional[int] = None) -> LevelAnalysis:
    if level is None:
        levels = {v.level for v in model.vars}
        if len(levels) != 1:
            raise ValueError("model spans several levels; pass one explicitly")
        level = levels.pop()
    H = canonical_hamiltonian(model)
    tower = consistency_chain(model, H=H)
    cls = classify(tower)
    mults = tuple(solve_multipliers(tower, H, cls))
    dmat = dirac_matrix(tower, cls)
    reds = tuple(reducibility_report(tower, model.d))
    d = model.d
    t = tower.size
    n2 = cls.n_second
    n1 = cls.n_first
    counts = {
        "nq_channel": model.nq,
        "phase_channel": model.phase_dim_channel,
        "phase_point": model.phase_dim_point,
        "constraints_channel": t,
        "constraints_point": Fraction(t, d),
        "primary_point": Fraction(sum(1 for c in tower.constraints if c.generation == 1), d),
        "second_class_channel": n2,
        "second_class_point": Fraction(n2, d),
        "first_class_channel": n1,
        "first_class_point": Fraction(n1, d),
        "max_generation": max((c.generation for c in tower.constraints), default=0),
        "dropped_trivial": len(tower.dropped_trivial),
    }
    dof, diag = dof_count(
        counts["phase_point"], counts["first_class_point"], counts["second_class_point"]
    )
    counts["dof_point"] = dof
    counts["dof_diagnosis"] = diag
    return LevelAnalysis(
        level=level,
        model=model,
        H=H,
        tower=tower,
        classification=cls,
        multipliers=mults,
        dirac=dmat,
        reducibility=reds,
        counts=counts,
    )


@dataclass(frozen=True)
class DiracReport:
    """Aggregated analysis of a whole tower of decoupled levels."""

    n_phase_per_point: Fraction
    first_class: Fraction
    second_class: Fraction
    dof_per_point: Fraction
    dof_diagnosis: Optional[str]
    C: Mat
    multipliers: tuple
    dirac_matrix: Mat
    reducibility: tuple
    dropped_trivial: tuple
    chain_log: tuple
    levels: tuple  # LevelAnalysis per level


def _block_diag(mats: Sequence[Mat]) -> Mat:
    total = sum(m.rows for m in mats)
    rows = [[Rat(0)] * total for _ in range(total)]
    off = 0
    for m in mats:
        for i in range(m.rows):
            row = rows[off + i]
            src = m.row(i)
            for j in range(m.cols):
                row[off + j] = src[j]
        off += m.rows
    return Mat(rows)


def analyze_tower(tower_levels: Sequence[LevelAnalysis]) -> DiracReport:
    """Combine per-level analyses (levels decouple exactly)."""
    las = list(tower_levels)
    if not las:
        raise ValueError("no levels")
    phase = sum(la.counts["phase_point"] for la in las)
    first = sum(la.counts["first_class_point"] for la in las)
    second = sum(la.counts["second_class_point"] for la in las)
    dof, diag = dof_count(phase, first, second)
    return DiracReport(
        n_phase_per_point=phase,
        first_class=first,
        second_class=second,
        dof_per_point=dof,
        dof_diagnosis=diag,
        C=_block_diag([la.classification.C for la in las]),
        multipliers=tuple(m for la in las for m in la.multipliers),
        dirac_matrix=_block_diag([la.dirac for la in las]),
        reducibility=tuple(r for la in las for r in la.reducibility),
        dropped_trivial=tuple(lbl for la in las for lbl in la.tower.dropped_trivial),
        chain_log=tuple(p for la in las for p in la.tower.chain_log),
        levels=tuple(las),
    )
