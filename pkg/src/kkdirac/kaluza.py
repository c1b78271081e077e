"""Circle reduction onto an interval and finite spatial channels.

The compact coordinate lives on a circle of radius R with a reflection
identification, so every field component carries a definite reflection
parity: even components expand in the constant mode plus a cosine tower,
odd components in a sine tower.  With unit-normalized modes every overlap
integral is a Kronecker delta and the y-derivative acts level by level:

    d5 (even basis, level n) = -(n/R) (odd basis, level n)
    d5 (odd basis,  level n) = +(n/R) (even basis, level n)

Those two lines are the only place the compact direction enters; level
decoupling is then exact by construction and is asserted whenever two
factors are paired.

Spatial dependence is handled the same way: a *channel* is a finite
closed orbit of the spatial derivatives, given by commuting antisymmetric
matrices D_i.  The zero channel (constants, dimension 1) has D_i = 0; a
plane-wave channel (cos k.x, sin k.x doublet, dimension 2) has
D_i = k_i [[0, 1], [-1, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactla import Mat, Rat
from .model import (
    BFCoupling,
    FieldStrengthSq,
    MassSq,
    QuadraticPhaseModel,
    TheorySpec5D,
    VarTag,
    component_group,
    component_parity,
    components,
)

__all__ = [
    "SpatialChannel",
    "channel_zero",
    "channel_plane",
    "KKTower",
    "compactify",
    "phase_dim",
    "mass_blocks",
    "lagrangian_value",
]

_J2 = Mat([[0, 1], [-1, 0]])


@dataclass(frozen=True)
class SpatialChannel:
    """Finite orbit of the spatial derivatives: three commuting D_i."""

    dim: int
    D: tuple
    label: str

    def __post_init__(self):
        if len(self.D) != 3:
            raise ValueError("need exactly three derivative matrices")
        for m in self.D:
            if m.shape != (self.dim, self.dim):
                raise ValueError("derivative matrix shape mismatch")
            if not m.is_antisymmetric():
                raise ValueError("derivative matrices must be antisymmetric")
        for i in range(3):
            for j in range(i):
                if self.D[i] * self.D[j] != self.D[j] * self.D[i]:
                    raise ValueError("derivative matrices must commute")

    @property
    def laplacian(self) -> Mat:
        out = Mat.zeros(self.dim, self.dim)
        for m in self.D:
            out = out + m * m
        return out


def channel_zero() -> SpatialChannel:
    """Spatially constant fields: dimension 1, all derivatives zero."""
    z = Mat.zeros(1, 1)
    return SpatialChannel(1, (z, z, z), "zero")


def channel_plane(k1, k2, k3) -> SpatialChannel:
    """Plane-wave doublet (cos k.x, sin k.x) for rational wavevector k."""
    k = (Fraction(k1), Fraction(k2), Fraction(k3))
    if all(x == 0 for x in k):
        raise ValueError("plane channel requires a nonzero wavevector")
    ds = tuple(ki * _J2 for ki in k)
    label = "plane:" + ",".join(str(x) for x in k)
    return SpatialChannel(2, ds, label)


@dataclass(frozen=True)
class KKTower:
    """Per-level phase models of a 5D theory on one spatial channel."""

    spec: TheorySpec5D
    channel: SpatialChannel
    truncation: int
    levels: tuple  # of (n, QuadraticPhaseModel)

    def level(self, n: int) -> QuadraticPhaseModel:
        for m, mod in self.levels:
            if m == n:
                return mod
        raise KeyError(n)


def _d5_coeff(parity: str, n: int, R: Fraction) -> Fraction:
    """Coefficient picked up by d5 on a unit-normalized level-n basis function."""
    w = Fraction(n) / R
    return -w if parity == "even" else w


def _level_vars(spec: TheorySpec5D, channel: SpatialChannel, n: int) -> tuple:
    tags = []
    for f in spec.fields:
        for comp in components(f.lorentz_rank):
            if n == 0 and component_parity(f, comp) == "odd":
                continue
            group = f"{f.name}.{component_group(f.lorentz_rank, comp)}"
            for slot in range(channel.dim):
                tags.append(VarTag(n, f.name, comp, slot, group))
    return tuple(tags)


class _Lin:
    """A d-vector linear expression Sum_j M_j x_{block_j} with a definite parity.

    kind is 'v' (velocity) or 'q' (coordinate); blocks are index lists into
    the level's variable registry.
    """

    def __init__(self, parity: str):
        self.parity = parity
        self.terms = []  # (kind, block, Mat)

    def add(self, kind: str, block, mat: Mat) -> "_Lin":
        if block is not None and not mat.is_zero():
            self.terms.append((kind, list(block), mat))
        return self


class _Accumulator:
    """Collect bilinear contributions into (W, N, V) lists."""

    def __init__(self, nq: int, d: int):
        self.nq = nq
        self.d = d
        self.W = [[Rat(0)] * nq for _ in range(nq)]
        self.N = [[Rat(0)] * nq for _ in range(nq)]
        self.V = [[Rat(0)] * nq for _ in range(nq)]

    def _add_block(self, target, rows, cols, mat: Mat):
        for a, i in enumerate(rows):
            r = target[i]
            for b, j in enumerate(cols):
                r[j] += mat[a, b]

    def vv(self, bl1, bl2, mat: Mat):
        self._add_block(self.W, bl1, bl2, mat)
        self._add_block(self.W, bl2, bl1, mat.T)

    def vq(self, blv, blq, mat: Mat):
        self._add_block(self.N, blv, blq, mat)

    def qq(self, bl1, bl2, mat: Mat):
        self._add_block(self.V, bl1, bl2, -mat)
        self._add_block(self.V, bl2, bl1, -mat.T)

    def product(self, lin1: _Lin, lin2: _Lin, scale: Fraction):
        """Accumulate scale * lin1^T lin2 into the Lagrangian."""
        if lin1.parity != lin2.parity:
            raise AssertionError("mode parity mismatch: levels would not decouple")
        for k1, b1, m1 in lin1.terms:
            for k2, b2, m2 in lin2.terms:
                piece = scale * (m1.T * m2)
                if k1 == "v" and k2 == "v":
                    self.vv(b1, b2, piece)
                elif k1 == "v" and k2 == "q":
                    self.vq(b1, b2, piece)
                elif k1 == "q" and k2 == "v":
                    self.vq(b2, b1, piece.T)
                else:
                    self.qq(b1, b2, piece)


def _field_strength_lins(spec, channel, n, blocks, fname):
    """The ten F_MN component expressions of a vector field at one level.

    Returns dict keyed by ('0i', i), ('ij', i, j), ('05',), ('i5', i).
    Absent components (odd parity at level 0) simply drop out of the
    expressions; an expression with no surviving term is omitted.
    """
    f = spec.field_by_name(fname)
    d = channel.dim
    eye = Mat.eye(d)
    p_mu = component_parity(f, "0")
    p_5 = component_parity(f, "5")
    s_mu = _d5_coeff(p_mu, n, spec.R)

    def blk(comp):
        return blocks.get((fname, comp))

    out = {}
    for i in (1, 2, 3):
        lin = _Lin(p_mu)
        lin.add("v", blk(str(i)), eye)
        if blk("0") is not None:
            lin.add("q", blk("0"), -channel.D[i - 1])
        if lin.terms:
            out[("0i", i)] = lin
    for i in (1, 2, 3):
        for j in range(i + 1, 4):
            lin = _Lin(p_mu)
            if blk(str(j)) is not None:
                lin.add("q", blk(str(j)), channel.D[i - 1])
            if blk(str(i)) is not None:
                lin.add("q", blk(str(i)), -channel.D[j - 1])
            if lin.terms:
                out[("ij", i, j)] = lin
    lin = _Lin(p_5)
    if blk("5") is not None:
        lin.add("v", blk("5"), eye)
    if blk("0") is not None and s_mu:
        lin.add("q", blk("0"), -s_mu * eye)
    if lin.terms:
        out[("05",)] = lin
    for i in (1, 2, 3):
        lin = _Lin(p_5)
        if blk("5") is not None:
            lin.add("q", blk("5"), channel.D[i - 1])
        if blk(str(i)) is not None and s_mu:
            lin.add("q", blk(str(i)), -s_mu * eye)
        if lin.terms:
            out[("i5", i)] = lin
    return out


def _emit_field_strength_sq(acc, spec, channel, n, blocks, term):
    lins = _field_strength_lins(spec, channel, n, blocks, term.field)
    c = Fraction(term.coeff)
    # c * F_MN F^MN: mixed time-space pairs pick up eta^00 = -1
    for key, lin in lins.items():
        kind = key[0]
        sign = -1 if kind in ("0i", "05") else 1
        acc.product(lin, lin, 2 * sign * c)


def _emit_mass_sq(acc, spec, channel, n, blocks, term):
    f = spec.field_by_name(term.field)
    c = Fraction(term.coeff) * spec.m * spec.m
    eye = Mat.eye(channel.dim)
    for comp in components("vector"):
        bl = blocks.get((term.field, comp))
        if bl is None:
            continue
        lin = _Lin(component_parity(f, comp)).add("q", bl, eye)
        sign = -1 if comp == "0" else 1
        acc.product(lin, lin, sign * c)


def _emit_bf_coupling(acc, spec, channel, n, blocks, term):
    lins = _field_strength_lins(spec, channel, n, blocks, term.afield)
    bf = spec.field_by_name(term.bfield)
    c = Fraction(term.coeff)
    eye = Mat.eye(channel.dim)
    pair_of = {
        ("0i", 1): "01", ("0i", 2): "02", ("0i", 3): "03",
        ("ij", 1, 2): "12", ("ij", 1, 3): "13", ("ij", 2, 3): "23",
        ("05",): "05", ("i5", 1): "15", ("i5", 2): "25", ("i5", 3): "35",
    }
    for key, comp in pair_of.items():
        bl = blocks.get((term.bfield, comp))
        lin = lins.get(key)
        if bl is None or lin is None:
            continue
        blin = _Lin(component_parity(bf, comp)).add("q", bl, eye)
        # B^MN F_MN counts each ordered pair twice
        acc.product(blin, lin, 2 * c)


_EMITTERS = {
    FieldStrengthSq: _emit_field_strength_sq,
    MassSq: _emit_mass_sq,
    BFCoupling: _emit_bf_coupling,
}


def _level_model(spec: TheorySpec5D, channel: SpatialChannel, n: int) -> QuadraticPhaseModel:
    tags = _level_vars(spec, channel, n)
    index = {}
    for i, t in enumerate(tags):
        index.setdefault((t.field, t.comp), []).append(i)
    acc = _Accumulator(len(tags), channel.dim)
    for term in spec.terms:
        _EMITTERS[type(term)](acc, spec, channel, n, index, term)
    return QuadraticPhaseModel(
        vars=tags, W=Mat(acc.W), N=Mat(acc.N), V=Mat(acc.V), d=channel.dim
    )


def compactify(spec: TheorySpec5D, levels: int, channel: SpatialChannel) -> KKTower:
    """Reduce a 5D theory to levels 0..levels-1 on one spatial channel."""
    if levels < 1:
        raise ValueError("need at least one level")
    built = tuple((n, _level_model(spec, channel, n)) for n in range(levels))
    return KKTower(spec=spec, channel=channel, truncation=levels, levels=built)


def phase_dim(tower: KKTower) -> int:
    """Phase-space dimension per spatial point (channel count / channel dim)."""
    total = Fraction(0)
    for _, model in tower.levels:
        total += model.phase_dim_point
    if total.denominator != 1:
        raise ValueError("phase dimension not an integer per point")
    return int(total)


def _diag_value(mat: Mat, rows) -> Fraction:
    """The scalar c when the sub-block mat[rows, rows] equals c * identity."""
    sub = mat.take_rows(rows).take_cols(rows)
    c = sub[0, 0]
    if sub != c * Mat.eye(len(rows)):
        raise ValueError("block is not a multiple of the identity")
    return c


def mass_blocks(tower: KKTower) -> list:
    """Exact rest-mass blocks per level for second-order vector fields.

    For a vector field with a field-strength kinetic term the scalar
    (compact-component) block at an excited level reads  m^2  after the
    channel Laplacian is removed, the tower coupling w = n/R is read off
    the velocity-coordinate map, and the 4D vector block is the invariant
    combination (m^2 + w^2) * identity.  First-order sectors carry no
    kinetic normalization and are skipped.
    """
    out = []
    kinetic_fields = [t.field for t in tower.spec.terms if isinstance(t, FieldStrengthSq)]
    for n, model in tower.levels:
        for fname in kinetic_fields:
            lap = tower.channel.laplacian  # negative semidefinite: sum D_i^2
            if n == 0:
                b1 = model.block(fname, "1")
                # transverse curvature on component 1 comes from D_2, D_3
                junk = -(tower.channel.D[1] * tower.channel.D[1]) - (
                    tower.channel.D[2] * tower.channel.D[2]
                )
                vec = _diag_value(junk, list(range(model.d))) - _diag_value(model.V, b1)
                out.append(
                    {"level": n, "field": fname, "vector_mass_sq": vec, "scalar_mass_sq": None}
                )
            else:
                b5 = model.block(fname, "5")
                b0 = model.block(fname, "0")
                scalar = -_diag_value(lap, list(range(model.d))) - _diag_value(model.V, b5)
                w = _diag_value(model.N.take_rows(b5).take_cols(b0), list(range(model.d)))
                out.append(
                    {
                        "level": n,
                        "field": fname,
                        "vector_mass_sq": scalar + w * w,
                        "scalar_mass_sq": scalar,
                    }
                )
    return out


def lagrangian_value(spec: TheorySpec5D, channel: SpatialChannel, n: int, q, qdot) -> Fraction:
    """Evaluate the level-n Lagrangian directly from the field expressions.

    ``q`` and ``qdot`` are flat sequences aligned with the level's variable
    registry (see ``compactify``).  This is a second, independent route to
    the same density used to property-test the (W, N, V) assembly.
    """
    tags = _level_vars(spec, channel, n)
    d = channel.dim
    comp_vec = {}
    comp_dvec = {}
    for i, t in enumerate(tags):
        comp_vec.setdefault((t.field, t.comp), [Fraction(0)] * d)[t.slot] = Fraction(q[i])
        comp_dvec.setdefault((t.field, t.comp), [Fraction(0)] * d)[t.slot] = Fraction(qdot[i])

    def vec(fname, comp):
        return comp_vec.get((fname, comp))

    def dvec(fname, comp):
        return comp_dvec.get((fname, comp))

    def apply(mat, v):
        return [sum(mat[a, b] * v[b] for b in range(d)) for a in range(d)]

    def dot(u, v):
        return sum(a * b for a, b in zip(u, v))

    def add(u, v):
        return [a + b for a, b in zip(u, v)]

    def scale(c, u):
        return [c * x for x in u]

    zero = [Fraction(0)] * d
    total = Fraction(0)
    for term in spec.terms:
        if isinstance(term, (FieldStrengthSq, BFCoupling)):
            fname = term.field if isinstance(term, FieldStrengthSq) else term.afield
            f = spec.field_by_name(fname)
            s_mu = _d5_coeff(component_parity(f, "0"), n, spec.R)
            a0 = vec(fname, "0") or zero
            a5 = vec(fname, "5")
            fs = {}
            for i in (1, 2, 3):
                ai = vec(fname, str(i))
                dai = dvec(fname, str(i))
                fs["0" + str(i)] = (
                    add(dai, scale(-1, apply(channel.D[i - 1], a0))) if ai is not None else None
                )
            for i in (1, 2, 3):
                for j in range(i + 1, 4):
                    ai, aj = vec(fname, str(i)), vec(fname, str(j))
                    if ai is None or aj is None:
                        fs[str(i) + str(j)] = None
                    else:
                        fs[str(i) + str(j)] = add(
                            apply(channel.D[i - 1], aj), scale(-1, apply(channel.D[j - 1], ai))
                        )
            if a5 is not None:
                fs["05"] = add(dvec(fname, "5"), scale(-s_mu, a0))
                for i in (1, 2, 3):
                    ai = vec(fname, str(i)) or zero
                    fs[str(i) + "5"] = add(apply(channel.D[i - 1], a5), scale(-s_mu, ai))
            else:
                fs["05"] = None
                for i in (1, 2, 3):
                    fs[str(i) + "5"] = None
            if isinstance(term, FieldStrengthSq):
                c = Fraction(term.coeff)
                for comp, v in fs.items():
                    if v is None:
                        continue
                    sign = -1 if comp[0] == "0" else 1
                    total += 2 * sign * c * dot(v, v)
            else:
                c = Fraction(term.coeff)
                for comp, v in fs.items():
                    b = vec(term.bfield, comp)
                    if v is None or b is None:
                        continue
                    total += 2 * c * dot(b, v)
        elif isinstance(term, MassSq):
            c = Fraction(term.coeff) * spec.m * spec.m
            for comp in components("vector"):
                v = vec(term.field, comp)
                if v is None:
                    continue
                sign = -1 if comp == "0" else 1
                total += sign * c * dot(v, v)
    return total
