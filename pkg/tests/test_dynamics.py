"""Exact conservation of the midpoint-stepped constrained flow."""

import csv
import math
import random
from fractions import Fraction as F

import pytest

from kkdirac.dirac import (
    LinearConstraint,
    ConstraintTower,
    analyze_level,
    canonical_hamiltonian,
    classify,
    consistency_chain,
    dirac_matrix,
    extended_hamiltonian,
    omega,
    solve_multipliers,
)
from kkdirac.dynamics import (
    CayleyResonanceError,
    FlowSpec,
    evolve,
    project_to_surface,
    step_matrix,
)
from kkdirac.exactla import Mat
from kkdirac.kaluza import channel_plane, compactify
from kkdirac.model import builtin_proca5d, direct_sum

M = F(5, 3)
R = F(7, 2)


def proca_k2_setup():
    """Combined two-level Proca system: tower, Dirac matrix, extended H."""
    tower_levels = compactify(builtin_proca5d(M, R), 2, channel_plane(2, 3, 5))
    model = direct_sum([m for _, m in tower_levels.levels])
    h = canonical_hamiltonian(model)
    tw = consistency_chain(model, H=h)
    cls = classify(tw)
    mults = solve_multipliers(tw, h, cls)
    he = extended_hamiltonian(tw, h, mults, cls)
    return model, tw, cls, he


def rand_column(n, rng):
    return Mat.column([F(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(n)])


def test_project_to_surface():
    model, tw, _, _ = proca_k2_setup()
    g = tw.gradient_matrix()
    rng = random.Random(11)
    z = rand_column(2 * model.nq, rng)
    zp = project_to_surface(z, tw)
    assert (g * zp).is_zero()
    assert project_to_surface(zp, tw) == zp
    # a pure gradient projects to zero when it is the only constraint
    one = ConstraintTower(
        constraints=(tw.constraints[0],),
        omega=tw.omega,
        chain_log=(),
        raw_families=(),
        dropped_trivial=(),
    )
    gcol = Mat.column(list(tw.constraints[0].grad))
    assert project_to_surface(gcol, one).is_zero()


def test_step_matrix_resonance():
    d = Mat([[0, 1], [-1, 0]])
    h = Mat([[1, 0], [0, -1]])
    with pytest.raises(CayleyResonanceError, match="halve dt"):
        step_matrix(d, h, F(2))


def test_oscillator_near_period():
    """D = Omega, unit H: one period comes back near (not exactly to) start."""
    flow = FlowSpec(D=omega(1), H=Mat.eye(2), z0=Mat.column([1, 0]), dt=F(1, 10), steps=63)
    m = step_matrix(flow.D, flow.H, flow.dt)
    z = flow.z0
    for _ in range(flow.steps):
        z = m * z
    dist = math.hypot(float(z[0, 0]) - 1.0, float(z[1, 0]))
    assert 0 < dist < 0.05
    summary = evolve(flow)
    assert summary.certified and summary.reversible
    assert summary.energy_drift == 0
    assert summary.constraint_drift == 0  # no tower: nothing to drift


def test_proca_two_level_flow_conserves_everything():
    model, tw, cls, he = proca_k2_setup()
    d = dirac_matrix(tw, cls)
    rng = random.Random(20260814)
    z0 = rand_column(2 * model.nq, rng)
    flow = FlowSpec(D=d, H=he, z0=z0, dt=F(1, 100), steps=10_000, tower=tw)
    assert (tw.gradient_matrix() * flow.z0).is_zero()
    summary = evolve(flow, explicit_cap=12)
    assert summary.certified
    assert summary.explicit_steps == 12
    assert summary.steps == 10_000
    assert summary.constraint_drift == 0
    assert summary.energy_drift == 0
    assert summary.reversible


def test_uncertified_flow_walks_full_horizon():
    """A tower the step matrix does not respect forces explicit stepping
    and reports the real, nonzero drift."""
    grad = (F(1), F(0))
    fake = ConstraintTower(
        constraints=(
            LinearConstraint(grad=grad, generation=1, family="mom[x]", member="x:0", level=0),
        ),
        omega=omega(1),
        chain_log=(),
        raw_families=(),
        dropped_trivial=(),
    )
    flow = FlowSpec(
        D=omega(1), H=Mat.eye(2), z0=Mat.column([3, 1]), dt=F(1, 4), steps=5, tower=fake
    )
    assert flow.z0 == Mat.column([0, 1])  # projected
    summary = evolve(flow, explicit_cap=2)
    assert not summary.certified
    assert summary.explicit_steps == 5
    assert summary.constraint_drift > 0
    assert summary.energy_drift == 0


def test_csv_export(tmp_path):
    path = tmp_path / "traj.csv"
    flow = FlowSpec(D=omega(1), H=Mat.eye(2), z0=Mat.column([1, 0]), dt=F(1, 10), steps=7)
    evolve(flow, csv_path=str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "constraint_max", "energy"]
    assert len(rows) == 9  # header + initial state + 7 steps
    energies = {row[2] for row in rows[1:]}
    assert energies == {"0.5"}
    assert [row[0] for row in rows[1:]] == [str(i) for i in range(8)]


def test_flowspec_validation():
    with pytest.raises(ValueError):
        FlowSpec(D=Mat.eye(2), H=Mat.eye(2), z0=Mat.column([1, 0]), dt=F(1), steps=1)
    with pytest.raises(ValueError):
        FlowSpec(D=omega(1), H=omega(1), z0=Mat.column([1, 0]), dt=F(1), steps=1)
    with pytest.raises(ValueError):
        FlowSpec(D=omega(1), H=Mat.eye(2), z0=Mat.column([1, 0]), dt=F(0), steps=1)
    with pytest.raises(ValueError):
        FlowSpec(D=omega(1), H=Mat.eye(2), z0=Mat.column([1, 0]), dt=F(1), steps=0)


def test_level_analysis_flow_matches_combined():
    """Per-level Dirac flow certificates also hold level by level."""
    for la in (
        analyze_level(compactify(builtin_proca5d(M, R), 1, channel_plane(2, 3, 5)).level(0)),
    ):
        he = extended_hamiltonian(la.tower, la.H, la.multipliers, la.classification)
        flow = FlowSpec(
            D=la.dirac,
            H=he,
            z0=Mat.column([F(1)] * (2 * la.model.nq)),
            dt=F(1, 100),
            steps=50,
            tower=la.tower,
        )
        summary = evolve(flow, explicit_cap=8)
        assert summary.certified and summary.constraint_drift == 0 == summary.energy_drift
