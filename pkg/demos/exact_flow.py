"""Exact conservation of the constrained flow, proven rather than sampled.

The midpoint step of a linear flow is one rational matrix; checking that
it fixes the constraint rows, preserves the energy form, and inverts
under dt -> -dt certifies zero drift for any horizon.

Run: python3 demos/exact_flow.py
"""

from fractions import Fraction as F

from kkdirac import (
    FlowSpec,
    Mat,
    builtin_proca5d,
    canonical_hamiltonian,
    channel_plane,
    classify,
    compactify,
    consistency_chain,
    dirac_matrix,
    direct_sum,
    evolve,
    extended_hamiltonian,
    solve_multipliers,
)

tower_levels = compactify(builtin_proca5d(F(5, 3), F(7, 2)), 2, channel_plane(2, 3, 5))
model = direct_sum([m for _, m in tower_levels.levels])
h = canonical_hamiltonian(model)
tower = consistency_chain(model, H=h)
cls = classify(tower)
he = extended_hamiltonian(tower, h, solve_multipliers(tower, h, cls), cls)

z0 = Mat.column([F(1, i + 1) for i in range(2 * model.nq)])
flow = FlowSpec(
    D=dirac_matrix(tower, cls), H=he, z0=z0, dt=F(1, 100), steps=10_000, tower=tower
)

summary = evolve(flow)
print(f"steps requested:      {summary.steps}")
print(f"states materialized:  {summary.explicit_steps}")
print(f"certified:            {summary.certified}")
print(f"constraint drift:     {summary.constraint_drift}")
print(f"energy drift:         {summary.energy_drift}")
print(f"reversible:           {summary.reversible}")
print(f"energy (exact):       {summary.initial_energy}")
