"""Scenario-driven command line front end.

    frontier <kind> --scenario file.json [--out dir] [--quiet]
    frontier validate --scenario file.json

Every run writes ``manifest.json`` listing the emitted files with their
SHA-256 digests.  Exit status: 0 on success, 2 for an invalid scenario,
3 when a computation fails; errors are reported as JSON on stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import FrontierError, ScenarioError

KINDS = ("effort", "wave", "evolve", "eradicate", "constrained", "verify", "slice")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_VERTS = {"type": "array", "items": _POINT, "minItems": 3}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


REACTION = {"oneOf": [
    _obj({"kind": {"const": "cubic"}, "a": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
         ["kind", "a"]),
    _obj({"kind": {"const": "sampled"}, "knots": {"type": "array", "items": _POINT, "minItems": 4}},
         ["kind", "knots"]),
]}
DOMAIN = {"oneOf": [
    _obj({"kind": {"const": "disc"}, "radius": _POS}, ["kind", "radius"]),
    _obj({"kind": {"const": "ellipse"}, "a": _POS, "b": _POS}, ["kind", "a", "b"]),
    _obj({"kind": {"const": "polygon"}, "vertices": _VERTS}, ["kind", "vertices"]),
]}
_N = {"type": "integer", "minimum": 16, "maximum": 65536}
INITIAL = {"oneOf": [
    _obj({"kind": {"const": "circle"}, "radius": _POS, "center": _POINT, "n": _N}, ["kind", "radius"]),
    _obj({"kind": {"const": "ellipse"}, "a": _POS, "b": _POS, "n": _N}, ["kind", "a", "b"]),
    _obj({"kind": {"const": "polygon"}, "vertices": _VERTS, "h0": _POS}, ["kind", "vertices"]),
]}
SPEED = {"oneOf": [
    _obj({"kind": {"const": "constant"}, "value": _NUM}, ["kind", "value"]),
    _obj({"kind": {"const": "saturated"}}, ["kind"]),
]}
NUMERICS = _obj({
    "dt": _POS, "T": _POS, "n_grid": {"type": "integer", "minimum": 2, "maximum": 2001},
    "beta": _NUM, "beta_max": _NUM, "L": _POS, "h": _POS, "n_frames": {"type": "integer", "minimum": 1, "maximum": 500},
    "n_markers": {"type": "integer", "minimum": 2, "maximum": 1024},
})
WEIGHTS = _obj({"kappa1": {"type": "number", "minimum": 0}, "kappa2": {"type": "number", "minimum": 0}})

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "kind"],
    "properties": {
        "schema_version": {"const": 1},
        "kind": {"enum": list(KINDS)},
        "name": {"type": "string"},
        "reaction": REACTION,
        "domain": DOMAIN,
        "initial": INITIAL,
        "speed": SPEED,
        "strategy": {"enum": ["saturated", "plan", "sweep", "dido"]},
        "budget": _POS,
        "weights": WEIGHTS,
        "numerics": NUMERICS,
        "output_dir": {"type": "string"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["effort", "wave"]}}}, "then": {"required": ["reaction"]}},
        {"if": {"properties": {"kind": {"const": "evolve"}}}, "then": {"required": ["initial", "speed"]}},
        {"if": {"properties": {"kind": {"const": "eradicate"}}}, "then": {"required": ["initial", "budget"]}},
        {"if": {"properties": {"kind": {"const": "constrained"}}}, "then": {"required": ["domain", "budget"]}},
        {"if": {"properties": {"kind": {"const": "verify"}}}, "then": {"required": ["budget"]}},
        {"if": {"properties": {"kind": {"const": "slice"}}}, "then": {"required": ["domain"]}},
    ],
}


_RANGE = ("exclusiveMinimum", "minimum", "maximum", "exclusiveMaximum", "minItems", "maxItems")


def _resolve(err: jsonschema.ValidationError) -> jsonschema.ValidationError:
    """Descend into a failed oneOf, choosing the branch whose ``kind`` matched."""
    while err.validator == "oneOf" and err.context:
        kind_fail = [e for e in err.context if list(e.relative_path) == ["kind"] and e.validator == "const"]
        branches = {e.relative_schema_path[0] for e in kind_fail}
        matched = [e for e in err.context if e.relative_schema_path[0] not in branches]
        if not matched:
            # no branch accepted the kind: report it as a bad enumerated value
            kind_fail[0].message = f"{err.instance.get('kind')!r} is not one of " + ", ".join(
                repr(e.validator_value) for e in kind_fail)
            kind_fail[0].validator = "enum"
            return kind_fail[0]
        err = matched[0]
    return err


def _field_of(err: jsonschema.ValidationError) -> str:
    path = list(err.absolute_path)
    if err.validator == "required":
        path.append(err.message.split("'")[1])
    elif err.validator == "additionalProperties":
        extra = err.message.split("'")
        if len(extra) > 1:
            path.append(extra[1])
    return ".".join(str(p) for p in path) or "<root>"


def validate(scenario: dict) -> dict:
    """Full schema and range check; raises ScenarioError naming the offending field."""
    if not isinstance(scenario, dict):
        raise ScenarioError("scenario must be a JSON object", "<root>")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(scenario), key=lambda e: (len(list(e.absolute_path)), e.message))
    if errors:
        e = _resolve(errors[0])
        field = _field_of(e)
        if e.validator in _RANGE:
            label = "range violation"
        elif e.validator in ("enum", "const"):
            label = "enumerated-value error"
        else:
            label = "schema error"
        raise ScenarioError(f"{label} at field {field!r}: {e.message}", field)
    if scenario["kind"] == "verify" and not ({"initial", "domain"} & set(scenario)):
        raise ScenarioError("verify needs an initial set or an island domain", "initial")
    return scenario


def load(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", "scenario") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}", "scenario") from exc
    return validate(data)


# -- artifact writing ----------------------------------------------------------


class Outputs:
    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p

    def json(self, name: str, data: dict):
        self.path(name).write_text(json.dumps(_plain(data), indent=2, sort_keys=True) + "\n")

    def add(self, paths):
        self.files.extend(Path(p) for p in paths)

    def manifest(self):
        entries = {}
        for p in sorted(set(self.files)):
            entries[p.relative_to(self.root).as_posix()] = hashlib.sha256(p.read_bytes()).hexdigest()
        (self.root / "manifest.json").write_text(
            json.dumps({"frontier_version": __version__, "files": entries}, indent=2, sort_keys=True) + "\n")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        return None if not np.isfinite(x) else float(f"{float(x):.12g}")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _initial(spec: dict):
    from .curves import FrontCurve

    kind = spec["kind"]
    if kind == "circle":
        return FrontCurve.circle(spec["radius"], spec.get("n", 1024), tuple(spec.get("center", (0.0, 0.0))))
    if kind == "ellipse":
        return FrontCurve.ellipse(spec["a"], spec["b"], spec.get("n", 1024))
    return FrontCurve.polygon(np.asarray(spec["vertices"], dtype=float), spec.get("h0"))


# -- scenario kinds -------------------------------------------------------------


def run_effort(sc: dict, out: Outputs) -> dict:
    from .effort import effort_function
    from .reaction import validate_reaction

    rt = validate_reaction(sc["reaction"])
    num = sc.get("numerics", {})
    grid = np.linspace(rt.beta_star, num.get("beta_max", 0.8), num.get("n_grid", 20))
    table = effort_function(rt, grid)
    table.to_csv(out.path("effort_table.csv"))
    report = {"beta_star": rt.beta_star, "beta_star_star": rt.beta_star_star, "n_grid": len(grid),
              "all_attained": bool(table.attained.all()), "violations": table.violations()}
    out.json("report.json", report)
    return report


def run_wave(sc: dict, out: Outputs) -> dict:
    from .phase import optimal_path, path_cost, reconstruct_control, reconstruct_profile
    from .reaction import validate_reaction
    from .wave import front_speed, profile_initial, realized_cost, simulate

    rt = validate_reaction(sc["reaction"])
    num = sc.get("numerics", {})
    beta = num.get("beta", 0.0)
    path = optimal_path(rt, beta)
    prof = reconstruct_profile(path, u_ref=rt.u_star)
    ctl = reconstruct_control(path, rt, beta).with_profile(prof)
    fld = simulate(rt, ctl.alpha_of, L=num.get("L", 30.0), h=num.get("h", 0.1), T=num.get("T", 30.0),
                   initial=profile_initial(prof))
    fld.to_csv(out.path("wave.csv"))
    report = {"target_speed": beta, "effort": path_cost(path, rt, beta), "front_speed": front_speed(fld),
              "realized_cost": realized_cost(fld)}
    out.json("report.json", report)
    return report


def _frames(traj, out: Outputs, n: int):
    out.add(traj.svg_frames(out.root / "frames", n))


def run_evolve(sc: dict, out: Outputs) -> dict:
    from .curves import SpeedField, area_balance_residual, evolve
    from .domain import Domain
    from .effort import EffortTable

    curve = _initial(sc["initial"])
    V = Domain.from_spec(sc["domain"]) if "domain" in sc else None
    num = sc.get("numerics", {})
    sp = sc["speed"]
    if sp["kind"] == "constant":
        def speed(t, c):
            return SpeedField.constant(c, sp["value"])
    else:
        if "budget" not in sc:
            raise ScenarioError("a saturated speed needs a budget", "budget")
        M = sc["budget"]

        def speed(t, c):
            return SpeedField(np.full(len(c), M / c.length() - 1.0))
    traj = evolve(curve, speed, num.get("dt", 1e-3), num.get("T", 1.0), V=V, E=EffortTable.basic_table(),
                  basic=True)
    traj.to_csv(out.path("trajectory.csv"))
    _frames(traj, out, num.get("n_frames", 6))
    report = {"t_final": traj.times[-1], "eradicated": traj.eradicated,
              "area_balance_residual": area_balance_residual(traj) if len(traj.times) >= 3 else None}
    out.json("report.json", report)
    return report


def run_eradicate(sc: dict, out: Outputs) -> dict:
    from .eradication import feasible, plan_convex

    curve = _initial(sc["initial"])
    M = sc["budget"]
    num = sc.get("numerics", {})
    plan = plan_convex(curve, M, dt=num.get("dt"))
    plan.to_csv(out.path("trajectory.csv"))
    _frames(plan.trajectory, out, num.get("n_frames", 6))
    report = {"T": plan.T, "budget": M, "feasible": feasible(curve, M),
              "saturation_error": plan.saturation_error(), "balance_residual": plan.balance_residual(),
              "radius_spread": plan.radius_spread()}
    out.json("report.json", report)
    return report


def run_constrained(sc: dict, out: Outputs) -> dict:
    from .constrained import cut_invariants, erad_verdict, sweep_strategy
    from .domain import Domain

    V = Domain.from_spec(sc["domain"])
    M = sc["budget"]
    inv = cut_invariants(V)
    inv.to_csv(out.path("invariants.csv"))
    v = erad_verdict(V, M, inv.kappa, inv.K)
    out.path("verdict.json").write_text(v.to_json() + "\n")
    sw = sweep_strategy(V, M)
    sw.to_csv(out.path("sweep.csv"))
    _frames(sw.trajectory, out, sc.get("numerics", {}).get("n_frames", 6))
    report = {"kappa": inv.kappa, "lambda_max": inv.lambda_max, "K": inv.K.value, "K_exact": inv.K.exact,
              "K_direction": inv.K.direction, "critical_lambda": inv.critical_lambda(M), "verdict": v.verdict,
              "sweep": {"stalled": sw.stalled, "T": sw.T, "lambda_star": sw.lambda_star,
                        "min_fraction": sw.min_fraction}}
    out.json("report.json", report)
    return report


def run_verify(sc: dict, out: Outputs) -> dict:
    M = sc["budget"]
    strategy = sc.get("strategy")
    num = sc.get("numerics", {})
    if "domain" in sc:
        from .constrained import check_dido_optimality, dido_sweep, sweep_strategy
        from .domain import Domain

        V = Domain.from_spec(sc["domain"])
        traj = sweep_strategy(V, M).trajectory if strategy == "sweep" else dido_sweep(V, M)
        rep = check_dido_optimality(traj, V, M)
        out.path("dido.json").write_text(rep.to_json() + "\n")
        return json.loads(rep.to_json())
    from .curves import SpeedField, evolve
    from .effort import EffortTable
    from .eradication import plan_convex
    from .optimality import CostWeights, verify

    E = EffortTable.basic_table()
    w = sc.get("weights", {})
    weights = CostWeights(w.get("kappa1", 0.0), w.get("kappa2", 1.0), M=M)
    curve = _initial(sc["initial"])
    if strategy == "plan":
        traj = plan_convex(curve, M, dt=num.get("dt")).trajectory
    else:
        traj = evolve(curve, lambda t, c: SpeedField(np.full(len(c), M / c.length() - 1.0)), num.get("dt", 2e-3),
                      num.get("T", 10.0), E=E, basic=True)
    rep, adj, res = verify(traj, E, weights, num.get("n_markers", 32))
    out.path("optimality.json").write_text(rep.to_json() + "\n")
    adj.to_csv(out.path("markers.csv"), res)
    return json.loads(rep.to_json())


def run_slice(sc: dict, out: Outputs) -> dict:
    from scipy.integrate import quad

    from .constrained import (big_K, dido_sweep, isosceles_slicing, kappa_lambda, slicing_cost,
                              sweep_strategy)
    from .domain import Domain
    from .errors import NotIsosceles

    V = Domain.from_spec(sc["domain"])
    strategy = sc.get("strategy", "dido")
    if strategy == "sweep":
        # the slicing family does not depend on the budget; any M above K(V) traces it
        traj, family = sweep_strategy(V, 2.0 * big_K(V).value + 1.0).trajectory, "straight"
    elif V.kind in ("disc", "ellipse"):
        traj, family = dido_sweep(V, 2.0 * big_K(V).value + 1.0), "perpendicular arcs"
    else:
        try:
            traj, family = isosceles_slicing(V), "sectors and axis"
        except NotIsosceles:
            traj, family = sweep_strategy(V, 2.0 * big_K(V).value + 1.0).trajectory, "straight"
    cost = slicing_cost(traj)
    lower = V.area * quad(lambda l: kappa_lambda(V, l), 0.0, 1.0, points=[0.5], limit=200)[0]
    with open(out.path("slicing.csv"), "w") as fh:
        fh.write("area,relative_boundary\n")
        for a, p in zip(traj.area, traj.perimeter):
            fh.write(f"{a:.10g},{p:.10g}\n")
    report = {"family": family, "cost": cost, "kappa_lower_bound": lower}
    out.json("slice.json", report)
    return report


RUNNERS = {"effort": run_effort, "wave": run_wave, "evolve": run_evolve, "eradicate": run_eradicate,
           "constrained": run_constrained, "verify": run_verify, "slice": run_slice}


def _fail(code: int, exc: Exception) -> int:
    err = {"error": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "field", None):
        err["field"] = exc.field
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="frontier", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KINDS + ("validate",):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        sc = load(args.scenario)
        if args.command == "validate":
            if not args.quiet:
                print("OK")
            return 0
        if sc["kind"] != args.command:
            raise ScenarioError(f"scenario kind {sc['kind']!r} does not match subcommand {args.command!r}", "kind")
    except ScenarioError as exc:
        return _fail(2, exc)

    out = Outputs(args.out or Path(sc.get("output_dir", "out")))
    try:
        report = RUNNERS[sc["kind"]](sc, out)
    except ScenarioError as exc:
        return _fail(2, exc)
    except (FrontierError, ValueError) as exc:
        return _fail(3, exc)
    out.manifest()
    if not args.quiet:
        print(json.dumps(_plain(report), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
