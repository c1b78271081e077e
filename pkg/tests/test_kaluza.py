"""Channel algebra and the per-level reduction, anchored to frozen matrices.

The frozen (W, N, V) entries below were produced by an independent symbolic
derivation (sympy hessians of per-level Lagrangian densities built directly
from the field expressions, cross-validated against an explicit compact-
coordinate integration of the 5D actions for the lowest modes).
"""

import random
from fractions import Fraction as F

import pytest

from kkdirac.exactla import Mat, kron
from kkdirac.kaluza import (
    KKTower,
    channel_plane,
    channel_zero,
    compactify,
    lagrangian_value,
    mass_blocks,
    phase_dim,
)
from kkdirac.model import builtin_bfproca5d, builtin_proca5d

M = F(5, 3)  # m^2 = 25/9
R = F(7, 2)
KVEC = (2, 3, 5)

# nonzero entries of the frozen per-level matrices at m=5/3, R=7/2, k=(2,3,5)
FROZEN = {
    "proca_L0": {
        "W": {(2, 2): '1', (3, 3): '1', (4, 4): '1', (5, 5): '1', (6, 6): '1', (7, 7): '1'},
        "N": {(2, 1): '-2', (3, 0): '2', (4, 1): '-3', (5, 0): '3', (6, 1): '-5', (7, 0): '5'},
        "V": {(0, 0): '-317/9', (1, 1): '-317/9', (2, 2): '281/9', (2, 4): '-6', (2, 6): '-10', (3, 3): '281/9', (3, 5): '-6', (3, 7): '-10', (4, 2): '-6', (4, 4): '236/9', (4, 6): '-15', (5, 3): '-6', (5, 5): '236/9', (5, 7): '-15', (6, 2): '-10', (6, 4): '-15', (6, 6): '92/9', (7, 3): '-10', (7, 5): '-15', (7, 7): '92/9'},
    },
    "proca_L1": {
        "W": {(2, 2): '1', (3, 3): '1', (4, 4): '1', (5, 5): '1', (6, 6): '1', (7, 7): '1', (8, 8): '1', (9, 9): '1'},
        "N": {(2, 1): '-2', (3, 0): '2', (4, 1): '-3', (5, 0): '3', (6, 1): '-5', (7, 0): '5', (8, 0): '2/7', (9, 1): '2/7'},
        "V": {(0, 0): '-15569/441', (1, 1): '-15569/441', (2, 2): '13805/441', (2, 4): '-6', (2, 6): '-10', (2, 9): '4/7', (3, 3): '13805/441', (3, 5): '-6', (3, 7): '-10', (3, 8): '-4/7', (4, 2): '-6', (4, 4): '11600/441', (4, 6): '-15', (4, 9): '6/7', (5, 3): '-6', (5, 5): '11600/441', (5, 7): '-15', (5, 8): '-6/7', (6, 2): '-10', (6, 4): '-15', (6, 6): '4544/441', (6, 9): '10/7', (7, 3): '-10', (7, 5): '-15', (7, 7): '4544/441', (7, 8): '-10/7', (8, 3): '-4/7', (8, 5): '-6/7', (8, 7): '-10/7', (8, 8): '317/9', (9, 2): '4/7', (9, 4): '6/7', (9, 6): '10/7', (9, 9): '317/9'},
    },
    "bf_L0": {
        "W": {},
        "N": {(2, 8): '2', (3, 9): '2', (4, 10): '2', (5, 11): '2', (6, 12): '2', (7, 13): '2'},
        "V": {(0, 0): '-25/18', (0, 9): '-4', (0, 11): '-6', (0, 13): '-10', (1, 1): '-25/18', (1, 8): '4', (1, 10): '6', (1, 12): '10', (2, 2): '25/18', (2, 15): '-6', (2, 17): '-10', (3, 3): '25/18', (3, 14): '6', (3, 16): '10', (4, 4): '25/18', (4, 15): '4', (4, 19): '-10', (5, 5): '25/18', (5, 14): '-4', (5, 18): '10', (6, 6): '25/18', (6, 17): '4', (6, 19): '6', (7, 7): '25/18', (7, 16): '-4', (7, 18): '-6', (8, 1): '4', (9, 0): '-4', (10, 1): '6', (11, 0): '-6', (12, 1): '10', (13, 0): '-10', (14, 3): '6', (14, 5): '-4', (15, 2): '-6', (15, 4): '4', (16, 3): '10', (16, 7): '-4', (17, 2): '-10', (17, 6): '4', (18, 5): '10', (18, 7): '-6', (19, 4): '-10', (19, 6): '6'},
    },
    "bf_L1": {
        "W": {},
        "N": {(2, 10): '2', (3, 11): '2', (4, 12): '2', (5, 13): '2', (6, 14): '2', (7, 15): '2', (8, 22): '2', (9, 23): '2'},
        "V": {(0, 0): '-25/18', (0, 11): '-4', (0, 13): '-6', (0, 15): '-10', (0, 22): '-4/7', (1, 1): '-25/18', (1, 10): '4', (1, 12): '6', (1, 14): '10', (1, 23): '-4/7', (2, 2): '25/18', (2, 17): '-6', (2, 19): '-10', (2, 24): '-4/7', (3, 3): '25/18', (3, 16): '6', (3, 18): '10', (3, 25): '-4/7', (4, 4): '25/18', (4, 17): '4', (4, 21): '-10', (4, 26): '-4/7', (5, 5): '25/18', (5, 16): '-4', (5, 20): '10', (5, 27): '-4/7', (6, 6): '25/18', (6, 19): '4', (6, 21): '6', (6, 28): '-4/7', (7, 7): '25/18', (7, 18): '-4', (7, 20): '-6', (7, 29): '-4/7', (8, 8): '25/18', (8, 25): '4', (8, 27): '6', (8, 29): '10', (9, 9): '25/18', (9, 24): '-4', (9, 26): '-6', (9, 28): '-10', (10, 1): '4', (11, 0): '-4', (12, 1): '6', (13, 0): '-6', (14, 1): '10', (15, 0): '-10', (16, 3): '6', (16, 5): '-4', (17, 2): '-6', (17, 4): '4', (18, 3): '10', (18, 7): '-4', (19, 2): '-10', (19, 6): '4', (20, 5): '10', (20, 7): '-6', (21, 4): '-10', (21, 6): '6', (22, 0): '-4/7', (23, 1): '-4/7', (24, 2): '-4/7', (24, 9): '-4', (25, 3): '-4/7', (25, 8): '4', (26, 4): '-4/7', (26, 9): '-6', (27, 5): '-4/7', (27, 8): '6', (28, 6): '-4/7', (28, 9): '-10', (29, 7): '-4/7', (29, 8): '10'},
    },
}


def as_mat(entries, n):
    rows = [[F(0)] * n for _ in range(n)]
    for (i, j), val in entries.items():
        rows[i][j] = F(val)
    return Mat(rows)


def test_channel_zero():
    ch = channel_zero()
    assert ch.dim == 1
    assert all(d.is_zero() for d in ch.D)


def test_channel_plane_derivative_algebra():
    """Commuting antisymmetric D_i with D_i D_j = -k_i k_j on the doublet."""
    ch = channel_plane(F(1, 2), F(1, 3), F(1, 5))
    assert ch.dim == 2
    assert ch.D[0] * ch.D[1] == F(-1, 6) * Mat.eye(2)
    k2 = F(1, 4) + F(1, 9) + F(1, 25)
    assert ch.laplacian == -k2 * Mat.eye(2)
    for d in ch.D:
        assert d.is_antisymmetric()


def test_channel_plane_rejects_zero_wavevector():
    with pytest.raises(ValueError):
        channel_plane(0, 0, 0)


def test_frozen_level_matrices():
    """Per-level (W, N, V) match the independently derived frozen values."""
    ch = channel_plane(*KVEC)
    proca = compactify(builtin_proca5d(M, R), 2, ch)
    bf = compactify(builtin_bfproca5d(M, R), 2, ch)
    for key, model in (
        ("proca_L0", proca.level(0)),
        ("proca_L1", proca.level(1)),
        ("bf_L0", bf.level(0)),
        ("bf_L1", bf.level(1)),
    ):
        frozen = FROZEN[key]
        for mat_name in ("W", "N", "V"):
            got = getattr(model, mat_name)
            want = as_mat(frozen[mat_name], model.nq)
            assert got == want, f"{key}.{mat_name} mismatch"


def test_level0_variable_registry_drops_odd_components():
    ch = channel_plane(*KVEC)
    bf = compactify(builtin_bfproca5d(M, R), 2, ch)
    l0 = {(v.field, v.comp) for v in bf.level(0).vars}
    assert ("A", "5") not in l0
    assert all(("B", c) not in l0 for c in ("05", "15", "25", "35"))
    l1 = {(v.field, v.comp) for v in bf.level(1).vars}
    assert ("A", "5") in l1 and ("B", "15") in l1
    assert bf.level(0).nq == 20 and bf.level(1).nq == 30


def test_phase_dim_per_point():
    ch = channel_plane(*KVEC)
    for k in (1, 2, 3, 4, 5):
        tower = compactify(builtin_proca5d(M, R), k, ch)
        assert phase_dim(tower) == 10 * k - 2
    for k in (1, 2):
        tower = compactify(builtin_bfproca5d(M, R), k, ch)
        assert phase_dim(tower) == 30 * k - 10
    # channel dimension scales the raw count but not the per-point one
    t_zero = compactify(builtin_proca5d(M, R), 3, channel_zero())
    t_plane = compactify(builtin_proca5d(M, R), 3, ch)
    assert phase_dim(t_zero) == phase_dim(t_plane) == 28
    raw_zero = sum(m.phase_dim_channel for _, m in t_zero.levels)
    raw_plane = sum(m.phase_dim_channel for _, m in t_plane.levels)
    assert raw_plane == 2 * raw_zero


def test_excited_generator_depends_on_level_only_through_w():
    """(n=1, R) and (n=2, 2R) give identical excited blocks."""
    ch = channel_plane(*KVEC)
    t1 = compactify(builtin_proca5d(M, R), 2, ch)
    t2 = compactify(builtin_proca5d(M, 2 * R), 3, ch)
    m1, m2 = t1.level(1), t2.level(2)
    assert m1.W == m2.W and m1.N == m2.N and m1.V == m2.V


def test_excited_generator_reaches_level0_at_w_to_zero():
    """Extrapolating the excited blocks to w = 0 reproduces the level-0 blocks.

    The blocks are quadratic in w, so exact Lagrange interpolation through
    three w samples evaluates the w = 0 limit exactly; the even-component
    sub-blocks must then match the level-0 generator.
    """
    ch = channel_plane(*KVEC)
    spec0 = builtin_proca5d(M, R)
    l0 = compactify(spec0, 1, ch).level(0)
    radii = [F(7, 2), F(5, 1), F(9, 4)]
    samples = [compactify(builtin_proca5d(M, rr), 2, ch).level(1) for rr in radii]
    ws = [1 / rr for rr in radii]
    even = [i for i, v in enumerate(samples[0].vars) if v.comp != "5"]

    def lagrange_at_zero(vals):
        total = F(0)
        for i, (wi, vi) in enumerate(zip(ws, vals)):
            coef = F(1)
            for j, wj in enumerate(ws):
                if j != i:
                    coef *= (0 - wj) / (wi - wj)
            total += coef * vi
        return total

    for name in ("W", "N", "V"):
        want = getattr(l0, name)
        mats = [getattr(s, name).take_rows(even).take_cols(even) for s in samples]
        n = len(even)
        got = Mat(
            [
                [lagrange_at_zero([m[i, j] for m in mats]) for j in range(n)]
                for i in range(n)
            ]
        )
        assert got == want, f"w->0 limit of excited {name} differs from level 0"


def test_second_differences_recover_model_matrices():
    """Unit-vector differences of the direct density evaluation equal W, N, V."""
    cases = [
        (builtin_proca5d(M, R), channel_plane(*KVEC), 0),
        (builtin_proca5d(M, R), channel_plane(*KVEC), 1),
        (builtin_bfproca5d(M, R), channel_plane(*KVEC), 1),
        (builtin_bfproca5d(M, R), channel_zero(), 0),
    ]
    for spec, ch, n in cases:
        model = compactify(spec, n + 1, ch).level(n)
        nq = model.nq
        zero = [F(0)] * nq

        def unit(i):
            v = [F(0)] * nq
            v[i] = F(1)
            return v

        def L(q, v):
            return lagrangian_value(spec, ch, n, q, v)

        for i in range(nq):
            ei = unit(i)
            assert model.V[i, i] == -2 * L(ei, zero)
            assert model.W[i, i] == 2 * L(zero, ei)
            for j in range(i):
                ej = unit(j)
                eij = [a + b for a, b in zip(ei, ej)]
                dV = L(eij, zero) - L(ei, zero) - L(ej, zero)
                assert model.V[i, j] == -dV
                dW = L(zero, eij) - L(zero, ei) - L(zero, ej)
                assert model.W[i, j] == dW
            for j in range(nq):
                ej = unit(j)
                dN = L(ej, ei) - L(ej, zero) - L(zero, ei)
                assert model.N[i, j] == dN


def test_density_reconstruction_at_random_points():
    rng = random.Random(20260814)
    spec = builtin_bfproca5d(M, R)
    ch = channel_plane(*KVEC)
    model = compactify(spec, 2, ch).level(1)
    for _ in range(5):
        q = Mat.column([F(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(model.nq)])
        v = Mat.column([F(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(model.nq)])
        expect = (
            F(1, 2) * (v.T * model.W * v)[0, 0]
            + (v.T * model.N * q)[0, 0]
            - F(1, 2) * (q.T * model.V * q)[0, 0]
        )
        got = lagrangian_value(spec, ch, 1, q.col(0), v.col(0))
        assert got == expect


def test_mass_blocks_proca():
    """Level-n vector mass m^2 + (n/R)^2; compact scalar stays at m^2."""
    for ch in (channel_plane(*KVEC), channel_zero()):
        tower = compactify(builtin_proca5d(M, R), 3, ch)
        rows = mass_blocks(tower)
        assert rows[0] == {
            "level": 0,
            "field": "A",
            "vector_mass_sq": M * M,
            "scalar_mass_sq": None,
        }
        for n in (1, 2):
            w = F(n) / R
            assert rows[n] == {
                "level": n,
                "field": "A",
                "vector_mass_sq": M * M + w * w,
                "scalar_mass_sq": M * M,
            }


def test_mass_blocks_skip_first_order_sector():
    tower = compactify(builtin_bfproca5d(M, R), 2, channel_zero())
    assert mass_blocks(tower) == []


def test_compactify_validates_levels():
    with pytest.raises(ValueError):
        compactify(builtin_proca5d(M, R), 0, channel_zero())
