"""Scenario runner: orchestrates reduction -> constraint analysis -> flow checks.

``kkdirac analyze`` runs the full pipeline for one scenario (theory, mass,
radius, level count, spatial channel), compares the computed counts against
the built-in closed-form tables (overridable per scenario file), and emits
a deterministic report: identical scenarios produce byte-identical output.

Exit codes: 0 all checks pass, 1 at least one check fails, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .dirac import (
    analyze_level,
    analyze_tower,
    classify,
    canonical_hamiltonian,
    consistency_chain,
    dirac_matrix,
    extended_hamiltonian,
    solve_multipliers,
)
from .dynamics import FlowSpec, evolve
from .exactla import Mat
from .kaluza import SpatialChannel, channel_plane, channel_zero, compactify
from .model import TheorySpec5D, builtin_bfproca5d, builtin_proca5d, direct_sum

__all__ = ["Scenario", "ScenarioError", "expected_counts", "run", "main"]

THEORIES = ("proca5d", "bfproca5d", "maxwell5d")

_CHECK_NAMES = (
    "phase",
    "second",
    "first",
    "dof",
    "level0_first",
    "level0_second",
    "excited_first",
    "excited_second",
)

_SCENARIO_KEYS = ("theory", "m", "R", "radius", "levels", "channel", "samples", "evolve")


class ScenarioError(ValueError):
    """Malformed or semantically invalid scenario input."""


@dataclass
class Scenario:
    theory: str
    levels: int
    m: Fraction
    R: Fraction
    channel: str = "zero"
    samples: int = 0
    evolve: Optional[dict] = None  # {"steps": int, "dt": Fraction}
    expect: dict = field(default_factory=dict)


def expected_counts(theory: str, k: int) -> dict:
    """Closed-form per-point count table for the built-in massive theories.

    All entries are totals over a k-level tower except the explicitly
    per-level excited entries.
    """
    if k < 1:
        raise ScenarioError("need at least one level")
    if theory == "proca5d":
        return {"phase": 10 * k - 2, "second": 2 * k, "first": 0, "dof": 4 * k - 1}
    if theory == "bfproca5d":
        return {
            "level0_first": 5,
            "level0_second": 8,
            "excited_first": 8,
            "excited_second": 10,
            "dof": 2 * k - 1,
        }
    raise ScenarioError(f"no built-in check table for theory '{theory}'")


def _parse_rat(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"bad rational for {what}: '{text}'") from exc


def _parse_channel(text: str) -> SpatialChannel:
    if text == "zero":
        return channel_zero()
    if text.startswith("plane:"):
        parts = text[len("plane:"):].split(",")
        if len(parts) != 3:
            raise ScenarioError(f"channel needs three wavevector entries: '{text}'")
        kvec = [_parse_rat(p.strip(), "wavevector entry") for p in parts]
        try:
            return channel_plane(*kvec)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
    raise ScenarioError(f"unknown channel '{text}' (use 'zero' or 'plane:<k1>,<k2>,<k3>')")


def _parse_evolve(text: str) -> dict:
    fields = {}
    for part in text.split(","):
        if "=" not in part:
            raise ScenarioError(f"evolve entries are key=value, got '{part}'")
        key, val = part.split("=", 1)
        fields[key.strip()] = val.strip()
    if set(fields) != {"steps", "dt"}:
        raise ScenarioError("evolve needs exactly steps=<n>,dt=<p/q>")
    try:
        steps = int(fields["steps"])
    except ValueError as exc:
        raise ScenarioError(f"bad step count '{fields['steps']}'") from exc
    if steps < 1:
        raise ScenarioError("evolve needs at least one step")
    dt = _parse_rat(fields["dt"], "dt")
    if dt == 0:
        raise ScenarioError("dt must be nonzero")
    return {"steps": steps, "dt": dt}


def parse_scenario_file(path: str) -> dict:
    """key = value lines; '#' comments; unknown keys rejected with the line number."""
    raw: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ScenarioError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in stripped.split("=", 1))
            if key.startswith("expect."):
                name = key[len("expect."):]
                if name not in _CHECK_NAMES:
                    raise ScenarioError(
                        f"{path}:{lineno}: unknown check '{name}' "
                        f"(known: {', '.join(_CHECK_NAMES)})"
                    )
            elif key not in _SCENARIO_KEYS:
                raise ScenarioError(f"{path}:{lineno}: unknown key '{key}'")
            if key in raw:
                raise ScenarioError(f"{path}:{lineno}: duplicate key '{key}'")
            raw[key] = val
    return raw


def _build_scenario(raw: dict) -> Scenario:
    theory = raw.get("theory")
    if theory not in THEORIES:
        raise ScenarioError(f"theory must be one of {', '.join(THEORIES)}; got '{theory}'")
    if "levels" not in raw:
        raise ScenarioError("missing level count")
    try:
        levels = int(raw["levels"])
    except ValueError as exc:
        raise ScenarioError(f"bad level count '{raw['levels']}'") from exc
    if levels < 1:
        raise ScenarioError("need at least one level")
    if "R" in raw and "radius" in raw:
        raise ScenarioError("give the radius once (R or radius)")
    m = _parse_rat(raw.get("m", "0"), "m")
    r = _parse_rat(raw.get("R", raw.get("radius", "1")), "radius")
    if r <= 0:
        raise ScenarioError("radius must be positive")
    if theory == "maxwell5d":
        if m != 0:
            raise ScenarioError("maxwell5d forces m = 0")
    elif m == 0:
        raise ScenarioError(f"degenerate mass m = 0 for {theory}; use maxwell5d for the massless limit")
    elif m < 0:
        raise ScenarioError("mass must be nonnegative")
    channel = raw.get("channel", "zero")
    _parse_channel(channel)  # validate eagerly
    try:
        samples = int(raw.get("samples", "0"))
    except ValueError as exc:
        raise ScenarioError(f"bad sample count '{raw['samples']}'") from exc
    if samples < 0:
        raise ScenarioError("sample count must be nonnegative")
    evolve_spec = _parse_evolve(raw["evolve"]) if "evolve" in raw else None
    expect = {}
    for key, val in raw.items():
        if key.startswith("expect."):
            expect[key[len("expect."):]] = _parse_rat(val, key)
    return Scenario(
        theory=theory,
        levels=levels,
        m=m,
        R=r,
        channel=channel,
        samples=samples,
        evolve=evolve_spec,
        expect=expect,
    )


def _theory_spec(scenario: Scenario, m: Fraction, r: Fraction) -> TheorySpec5D:
    if scenario.theory == "bfproca5d":
        return builtin_bfproca5d(m, r)
    return builtin_proca5d(m, r)  # maxwell5d is the m = 0 member


def _json_val(v):
    if isinstance(v, bool) or isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if v is None:
        return None
    return str(v)


def _level_payload(la) -> dict:
    return {
        "level": la.level,
        "counts": {k: _json_val(v) for k, v in la.counts.items()},
        "constraints": [
            {
                "label": c.label,
                "family": c.family,
                "member": c.member,
                "generation": c.generation,
                "generation_name": c.generation_label,
                "grad": [_json_val(x) for x in c.grad],
            }
            for c in la.tower.constraints
        ],
        "classification": {
            "second_class": [la.tower.constraints[i].label for i in la.classification.second_idx],
            "first_class_combos": [
                [_json_val(u[i, 0]) for i in range(u.rows)]
                for u in la.classification.first_combos
            ],
        },
        "multipliers": [
            {"label": m.label, "coeffs": [_json_val(x) for x in m.coeffs]}
            for m in la.multipliers
        ],
        "reducibility": [
            {
                "level": r.level,
                "family": r.family,
                "listed": r.listed,
                "rank": r.rank,
                "deficiency": r.deficiency,
                "listed_per_point": r.listed_per_point,
                "rank_per_point": r.rank_per_point,
                "deficiency_per_point": r.deficiency_per_point,
            }
            for r in la.reducibility
        ],
        "dropped_trivial": list(la.tower.dropped_trivial),
    }


def _count_signature(analyses, report):
    sig = [dict(la.counts) for la in analyses]
    sig.append(
        (report.n_phase_per_point, report.first_class, report.second_class, report.dof_per_point)
    )
    return sig


def _analyses_for(scenario: Scenario, m: Fraction, r: Fraction, jobs: int = 1):
    spec = _theory_spec(scenario, m, r)
    channel = _parse_channel(scenario.channel)
    tower = compactify(spec, scenario.levels, channel)
    models = [model for _, model in tower.levels]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            analyses = list(pool.map(analyze_level, models))
    else:
        analyses = [analyze_level(model) for model in models]
    return channel, analyses


def _run_evolve(scenario: Scenario, analyses) -> dict:
    model = direct_sum([la.model for la in analyses])
    h = canonical_hamiltonian(model)
    tower = consistency_chain(model, H=h)
    cls = classify(tower)
    mults = solve_multipliers(tower, h, cls)
    gauge = [tuple([Fraction(0)] * (2 * model.nq)) for _ in cls.first_combos] or None
    he = extended_hamiltonian(tower, h, mults, cls, gauge=gauge)
    dmat = dirac_matrix(tower, cls)
    z0 = Mat.column([Fraction(1, i + 1) for i in range(2 * model.nq)])
    flow = FlowSpec(
        D=dmat, H=he, z0=z0, dt=scenario.evolve["dt"], steps=scenario.evolve["steps"], tower=tower
    )
    summary = evolve(flow)
    return {
        "steps": summary.steps,
        "explicit_steps": summary.explicit_steps,
        "constraint_drift": _json_val(summary.constraint_drift),
        "energy_drift": _json_val(summary.energy_drift),
        "initial_energy": _json_val(summary.initial_energy),
        "reversible": summary.reversible,
        "certified": summary.certified,
    }


def _assemble_checks(scenario: Scenario, analyses, report, stable: bool, channel_dim: int):
    checks = []

    def computed_for(name: str):
        if name == "phase":
            return report.n_phase_per_point
        if name == "second":
            return report.second_class
        if name == "first":
            return report.first_class
        if name == "dof":
            return report.dof_per_point
        if name == "level0_first":
            return analyses[0].counts["first_class_point"]
        if name == "level0_second":
            return analyses[0].counts["second_class_point"]
        raise KeyError(name)

    try:
        table = dict(expected_counts(scenario.theory, scenario.levels))
    except ScenarioError:
        table = {}
    table.update(scenario.expect)
    for name in ("phase", "second", "first", "dof", "level0_first", "level0_second"):
        if name not in table:
            continue
        computed = computed_for(name)
        checks.append(
            {
                "name": name,
                "expected": _json_val(Fraction(table[name])),
                "computed": _json_val(computed),
                "pass": Fraction(table[name]) == computed,
            }
        )
    for name, key in (("excited_first", "first_class_point"), ("excited_second", "second_class_point")):
        if name not in table:
            continue
        for la in analyses[1:]:
            computed = la.counts[key]
            checks.append(
                {
                    "name": f"{name}[n={la.level}]",
                    "expected": _json_val(Fraction(table[name])),
                    "computed": _json_val(computed),
                    "pass": Fraction(table[name]) == computed,
                }
            )
    checks.append(
        {
            "name": "stability",
            "expected": "identical counts across samples",
            "computed": "identical" if stable else "varies",
            "pass": stable,
        }
    )
    ratios = set()
    for la in analyses:
        for channel_key, point_key in (
            ("constraints_channel", "constraints_point"),
            ("second_class_channel", "second_class_point"),
            ("first_class_channel", "first_class_point"),
            ("phase_channel", "phase_point"),
        ):
            point = la.counts[point_key]
            if point:
                ratios.add(Fraction(la.counts[channel_key]) / point)
    multiplicity_ok = ratios <= {Fraction(channel_dim)}
    checks.append(
        {
            "name": "channel_multiplicity",
            "expected": channel_dim,
            "computed": _json_val(ratios.pop()) if len(ratios) == 1 else "inconsistent",
            "pass": multiplicity_ok,
        }
    )
    return checks


def run(scenario: Scenario, jobs: int = 1):
    """Execute the pipeline; return (report dict, all checks passed)."""
    channel, analyses = _analyses_for(scenario, scenario.m, scenario.R, jobs=jobs)
    report = analyze_tower(analyses)
    base_sig = _count_signature(analyses, report)

    samples = [{"m": scenario.m, "R": scenario.R}]
    stable = True
    for i in range(1, scenario.samples + 1):
        m_i = scenario.m * (1 + Fraction(i, 10))
        r_i = scenario.R * (1 + Fraction(i, 7))
        samples.append({"m": m_i, "R": r_i})
        _, sampled = _analyses_for(scenario, m_i, r_i)
        if _count_signature(sampled, analyze_tower(sampled)) != base_sig:
            stable = False

    checks = _assemble_checks(scenario, analyses, report, stable, channel.dim)
    dynamics = _run_evolve(scenario, analyses) if scenario.evolve else None

    doc = {
        "scenario": {
            "theory": scenario.theory,
            "levels": scenario.levels,
            "m": _json_val(scenario.m),
            "R": _json_val(scenario.R),
            "channel": channel.label,
            "samples": [{k: _json_val(v) for k, v in s.items()} for s in samples],
            "evolve": None
            if scenario.evolve is None
            else {"steps": scenario.evolve["steps"], "dt": _json_val(scenario.evolve["dt"])},
        },
        "per_level": [_level_payload(la) for la in analyses],
        "totals": {
            "phase_per_point": _json_val(report.n_phase_per_point),
            "first_class": _json_val(report.first_class),
            "second_class": _json_val(report.second_class),
            "dof_per_point": _json_val(report.dof_per_point),
            "dof_diagnosis": report.dof_diagnosis,
            "dropped_trivial": list(report.dropped_trivial),
        },
        "checks": checks,
        "dynamics": dynamics,
    }
    ok = all(c["pass"] for c in checks)
    return doc, ok


def render_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def render_text(doc: dict) -> str:
    lines = []
    sc = doc["scenario"]
    lines.append(
        f"scenario: theory={sc['theory']} levels={sc['levels']} "
        f"channel={sc['channel']} m={sc['m']} R={sc['R']}"
    )
    for lvl in doc["per_level"]:
        c = lvl["counts"]
        lines.append(
            f"level {lvl['level']}: phase/pt={c['phase_point']} "
            f"constraints/pt={c['constraints_point']} "
            f"second/pt={c['second_class_point']} first/pt={c['first_class_point']} "
            f"dof/pt={c['dof_point']} generations={c['max_generation']}"
        )
        fams: dict = {}
        for cn in lvl["constraints"]:
            fams[cn["family"]] = fams.get(cn["family"], 0) + 1
        lines.append("  families: " + ", ".join(f"{k} x{v}" for k, v in fams.items()))
        for r in lvl["reducibility"]:
            lines.append(
                f"  reducibility {r['family']}: listed={r['listed']} rank={r['rank']} "
                f"deficiency={r['deficiency']} "
                f"(/pt {r['listed_per_point']}/{r['rank_per_point']}/{r['deficiency_per_point']})"
            )
        if lvl["dropped_trivial"]:
            lines.append("  dropped: " + ", ".join(lvl["dropped_trivial"]))
    t = doc["totals"]
    lines.append(
        f"totals: phase/pt={t['phase_per_point']} second={t['second_class']} "
        f"first={t['first_class']} dof/pt={t['dof_per_point']}"
    )
    lines.append("checks:")
    for chk in doc["checks"]:
        verdict = "PASS" if chk["pass"] else "FAIL"
        lines.append(
            f"  {verdict} {chk['name']}: expected={chk['expected']} computed={chk['computed']}"
        )
    dyn = doc["dynamics"]
    if dyn is not None:
        lines.append(
            f"dynamics: steps={dyn['steps']} explicit={dyn['explicit_steps']} "
            f"constraint_drift={dyn['constraint_drift']} energy_drift={dyn['energy_drift']} "
            f"reversible={'yes' if dyn['reversible'] else 'no'} "
            f"certified={'yes' if dyn['certified'] else 'no'}"
        )
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kkdirac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", help="run the reduction/constraint pipeline for one scenario")
    p.add_argument("--scenario", help="scenario file (key = value lines; flags override)")
    p.add_argument("--theory", choices=THEORIES)
    p.add_argument("--levels", type=int, help="number of tower levels k")
    p.add_argument("--m", help="mass as p/q")
    p.add_argument("--radius", help="compactification radius as p/q")
    p.add_argument("--channel", help="'zero' or 'plane:<k1>,<k2>,<k3>'")
    p.add_argument("--samples", type=int, help="extra parameter samples for the stability check")
    p.add_argument("--evolve", help="steps=<n>,dt=<p/q>: midpoint-step the combined flow")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-level analysis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = parse_scenario_file(args.scenario) if args.scenario else {}
        for key, attr in (
            ("theory", "theory"),
            ("levels", "levels"),
            ("m", "m"),
            ("radius", "radius"),
            ("channel", "channel"),
            ("samples", "samples"),
            ("evolve", "evolve"),
        ):
            val = getattr(args, attr)
            if val is not None:
                if key == "radius":
                    raw.pop("R", None)
                raw[key] = str(val)
        if args.jobs < 1:
            raise ScenarioError("jobs must be at least 1")
        scenario = _build_scenario(raw)
        doc, ok = run(scenario, jobs=args.jobs)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render_json(doc) if args.format == "json" else render_text(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
