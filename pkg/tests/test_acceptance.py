"""One test per acceptance criterion; each prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` and read the "acceptance
criteria" section of the summary.
"""
import json
from pathlib import Path

import numpy as np

from frontier import phase as ph
from frontier import wave as wv
from frontier.cli import main
from frontier.constrained import (
    big_K,
    check_dido_optimality,
    dido_sweep,
    erad_verdict,
    kappa,
    sweep_strategy,
)
from frontier.curves import FrontCurve, SpeedField, area_balance_residual, curvature, evolve
from frontier.domain import Domain
from frontier.effort import EffortTable, effort_function
from frontier.eradication import plan_convex
from frontier.optimality import CostWeights, adjoint_solve, cc_dispersion, seed_markers, verify
from frontier.reaction import min_speed, validate_reaction

SCEN = Path(__file__).resolve().parents[1] / "scenarios"
BASIC = EffortTable.basic_table()


def test_01_wave_speed(accept):
    # For f = u(1-u)(u-a) the heteroclinic U' = k U(1-U) with k = 1/sqrt2 gives
    # U'' = k^2 U(1-U)(1-2U); matching -beta U' - f yields beta = -(1-2a)/sqrt2.
    errs = {a: abs(min_speed(validate_reaction({"kind": "cubic", "a": a})) + (1 - 2 * a) / np.sqrt(2))
            for a in (0.2, 0.3, 0.4)}
    worst = max(errs.values())
    accept(1, "minimal speed matches -(1-2a)/sqrt2", worst <= 1e-4, f"max error {worst:.2e}")


def test_02_symmetric_cubic(accept):
    b = validate_reaction({"kind": "cubic", "a": 0.5}).beta_star
    accept(2, "a = 0.5 is stationary", abs(b) <= 1e-6, f"|beta*| = {abs(b):.2e}")


def test_03_effort_structure(accept):
    rt = validate_reaction({"kind": "cubic", "a": 0.3})
    tab = effort_function(rt, np.linspace(rt.beta_star, 0.8, 20))
    bad = tab.violations()
    accept(3, "effort table invariants on [beta*, 0.8]", not bad, "; ".join(bad))


def test_04_cost_chain(accept, cubic03, branches0, path0):
    line = ph.path_cost(path0, cubic03)
    prof = ph.reconstruct_profile(path0, u_ref=cubic03.u_star)
    xspace = ph.reconstruct_control(path0, cubic03).with_profile(prof).total_cost()
    # area form: the jump path has an exact cost, the curl integral gives the difference
    jp, exact = ph.jump_path(cubic03, 0.0, path0.A[0], branches0)
    stokes = exact + ph.stokes_area_difference(path0, jp, cubic03)
    rel = max(abs(xspace - line), abs(stokes - line)) / line
    accept(4, "line, x-space and area forms of the cost agree", rel <= 1e-4, f"max rel {rel:.2e}")


def test_05_random_paths_cost_more(accept, cubic03, branches0, path0, rng):
    best = ph.path_cost(path0, cubic03)
    costs = []
    while len(costs) < 100:
        u0 = rng.uniform(0.05, 0.37)
        knots = np.sort(rng.uniform(0, 1, 3))
        amps = rng.uniform(0, 3, 4)
        got = ph.controlled_path(cubic03, 0.0, u0, lambda u: amps[np.searchsorted(knots, u)], branches0)
        if got is not None:
            costs.append(ph.path_cost(got[0], cubic03))
    margin = min(costs) - best
    accept(5, "optimal path beats 100 random admissible paths", margin >= -1e-9, f"min margin {margin:.3e}")


def test_06_pde_holds_front(accept, cubic03, path0):
    prof = ph.reconstruct_profile(path0, u_ref=cubic03.u_star)
    ctl = ph.reconstruct_control(path0, cubic03).with_profile(prof)
    T = 30.0
    fld = wv.simulate(cubic03, ctl.alpha_of, L=30, h=0.1, T=T, initial=wv.profile_initial(prof))
    # drift measured against the distance the uncontrolled front covers in the same time
    drift = abs(fld.front[-1] - fld.front[0]) / (abs(cubic03.beta_star) * T)
    cost = abs(wv.realized_cost(fld) / ph.path_cost(path0, cubic03) - 1)
    accept(6, "controlled PDE front is stationary at cost E(0)", drift <= 0.02 and cost <= 0.05,
           f"drift {drift:.2%}, cost error {cost:.2%}")


def test_07_disc_eradication(accept):
    plan = plan_convex(FrontCurve.circle(1.0, 1024), 4 * np.pi, dt=1e-3)
    T0 = 2 * np.log(2) - 1
    rel = abs(plan.T / T0 - 1)
    res = area_balance_residual(plan.trajectory)
    accept(7, "unit disc with M = 4 pi clears at 2 ln2 - 1", rel <= 1e-2 and res <= 1e-2,
           f"T = {plan.T:.5f}, rel {rel:.2e}, balance {res:.2e}")


def test_08_plan_structure(accept):
    shapes = {"ellipse": FrontCurve.ellipse(2.0, 1.0, 1024),
              "rectangle": FrontCurve.polygon(np.array([[-1, -0.5], [1, -0.5], [1, 0.5], [-1, 0.5]]), 0.01)}
    notes, ok = [], True
    for name, c in shapes.items():
        p = plan_convex(c, 12.0)
        convex = all(np.all(curvature(k) >= -1e-3) for k in p.trajectory.curves[:-1:10])
        faster = plan_convex(c, 14.0).T < p.T
        good = (p.saturation_error() <= 1e-2 and p.radius_spread() <= 1e-2 and p.curvature_gap() >= -1e-6
                and convex and faster)
        ok &= good
        notes.append(f"{name}: sat {p.saturation_error():.1e}, radii {p.radius_spread():.1e}")
    accept(8, "budgeted plans saturate with equal maximal-curvature arcs", ok, ", ".join(notes))


def test_09_exact_invariants(accept):
    tri = Domain.equilateral(1.0)
    disc = Domain.from_spec({"kind": "disc", "radius": 1.0})
    K = big_K(tri).value
    k_tri = kappa(tri)[0]
    target = np.sqrt(3 * np.sqrt(3) / (4 * np.pi))
    disc_ok = abs(kappa(disc)[0] - 2) <= 1e-6 and abs(big_K(disc).value - 2) <= 1e-6
    others = [Domain.rectangle(1.0, 1.0), Domain.rectangle(2.0, 1.0), Domain.from_spec(
        {"kind": "ellipse", "a": 2.0, "b": 1.0}), tri, disc]
    ordered = all(kappa(V)[0] <= big_K(V).value + 1e-12 for V in others)
    ok = abs(K - np.sqrt(3) / 2) <= 1e-6 and abs(k_tri - target) <= 1e-3 and disc_ok and ordered
    accept(9, "K and kappa on the triangle and the disc", ok,
           f"K = {K:.8f}, kappa(triangle) = {k_tri:.6f} vs {target:.6f}, disc ok {disc_ok}, kappa <= K {ordered}")


def test_10_verdicts_and_sweeps(accept):
    disc = Domain.from_spec({"kind": "disc", "radius": 1.0})
    tri = Domain.equilateral(1.0)
    got = [erad_verdict(disc, 2.1).verdict, erad_verdict(disc, 1.9).verdict,
           erad_verdict(tri, 0.9).verdict, erad_verdict(tri, 0.7).verdict]
    want = ["Eradicable", "NotEradicable", "Eradicable", "Indeterminate"]
    ok_sweeps = sweep_strategy(disc, 2.1).trajectory.eradicated and sweep_strategy(tri, 0.9).trajectory.eradicated
    stall = sweep_strategy(disc, 1.9)
    ok = got == want and ok_sweeps and stall.stalled and stall.min_fraction > 0.5
    accept(10, "verdicts, successful sweeps and stall below kappa", ok,
           f"{got}, stalled at area fraction {stall.min_fraction:.3f}")


def test_11_dido_verifier(accept):
    ell = Domain.from_spec({"kind": "ellipse", "a": 2.0, "b": 1.0})
    tri = Domain.equilateral(1.0)
    good = check_dido_optimality(dido_sweep(ell, 3.0), ell)
    bad = check_dido_optimality(sweep_strategy(tri, 1.0, direction=-np.pi / 2).trajectory, tri, 1.0)
    ok = good.verdict == "Optimal" and good.a2_max <= 1e-2 and good.opc_max <= 1e-2 and bad.verdict == "Violated:opc"
    accept(11, "perpendicular arcs pass, straight chords fail", ok,
           f"ellipse a2 {good.a2_max:.1e} opc {good.opc_max:.1e}; triangle {bad.verdict}")


def test_12_adjoint_suite(accept):
    M = 4 * np.pi
    c = FrontCurve.circle(1.0, 256)
    sat = evolve(c, lambda t, k: SpeedField(np.full(len(k), M / k.length() - 1)), 0.002, 1.0,
                 E=BASIC, basic=True, markers=c.points[::32])
    w = CostWeights(0.0, 1.0, M=M)
    rep, adj, _ = verify(sat, BASIC, w)
    # basic effort, kappa1 = 0: Y solves Y' = -omega Y, i.e. 2/(2 - R) on the shrinking disc
    R = np.sqrt(np.interp(adj.times, sat.times, sat.area) / np.pi)
    m = R > 0.2
    aey = np.max(np.abs(adj.Y[m] / (2 / (2 - R[m]))[:, None] - 1))
    split = evolve(c, lambda t, k: SpeedField(np.full(len(k), -1.0 if t < 0.193 else 2 * M / k.length() - 1)),
                   0.002, 2.0, E=BASIC, basic=True, markers=c.points[::32])
    r_bad = verify(split, BASIC, w)[0].max_pmp_residual
    plan = plan_convex(FrontCurve.ellipse(2.0, 1.0, 1024), 12.0)
    cc = cc_dispersion(adjoint_solve(seed_markers(plan.trajectory, 48), BASIC, CostWeights(0.0, 1.0, M=12.0)))
    ok = (rep.shadow_price_error <= 1e-3 and aey <= 1e-2 and cc <= 0.02
          and rep.max_pmp_residual <= 1e-2 and r_bad > 0.1)
    accept(12, "shadow prices, adjoint closed form, CC and PMP residuals", ok,
           f"shadow {rep.shadow_price_error:.1e}, closed form {aey:.1e}, cc {cc:.1e}, "
           f"pmp {rep.max_pmp_residual:.1e} vs {r_bad:.3g}")


def test_13_cli_determinism(accept, tmp_path):
    runs = []
    for i in range(2):
        out = tmp_path / str(i)
        for kind in ("effort", "eradicate", "constrained"):
            assert main([kind, "--scenario", str(SCEN / f"{kind}.json"), "--out", str(out / kind), "--quiet"]) == 0
        runs.append({p.relative_to(out).as_posix(): p.read_bytes()
                     for p in sorted(out.rglob("*")) if p.suffix in (".csv", ".json")})
    same = runs[0] == runs[1] and len(runs[0]) >= 9
    man = json.loads((tmp_path / "0" / "eradicate" / "manifest.json").read_text())
    accept(13, "repeated CLI runs are byte-identical", same, f"{len(runs[0])} files, {len(man['files'])} in manifest")
