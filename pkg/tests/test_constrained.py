import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from shapely.geometry import Point

from frontier.constrained import (
    big_K,
    check_dido_optimality,
    cut_invariants,
    dido_sweep,
    erad_verdict,
    isosceles_plan,
    isosceles_slicing,
    kappa,
    kappa_lambda,
    kappa_witness,
    slicing_cost,
    sweep_strategy,
)
from frontier.curves import FrontCurve, Trajectory
from frontier.domain import Domain
from frontier.errors import NotIsosceles, NotNested, UnsupportedShape

TRI = Domain.equilateral(1.0)
DISC = Domain.from_spec({"kind": "disc", "radius": 1.0})
ELL = Domain.from_spec({"kind": "ellipse", "a": 2.0, "b": 1.0})
SQUARE = Domain.rectangle(1.0, 1.0)
L_SHAPE = Domain.from_spec({"kind": "polygon", "vertices": [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]})


def test_disc_caps_match_orthogonal_circle_formula():
    # cap cut by a circle orthogonal to the unit circle, parametrised by the half-angle psi
    for psi in (0.3, 0.8, 1.2):
        rho = np.tan(psi)
        area = psi + 0.5 * rho**2 * (np.pi - 2 * psi) - rho
        length = rho * (np.pi - 2 * psi)
        assert kappa_lambda(DISC, area / np.pi) == pytest.approx(length, rel=1e-9)


def test_ellipse_cap_area_against_shapely():
    length, w = kappa_witness(ELL, 0.2)
    disc = Point(w["center"], 0).buffer(w["radius"], quad_segs=4096)
    assert ELL.shape.intersection(disc).area / ELL.area == pytest.approx(0.2, abs=1e-5)
    assert length < 2.0


def test_kappa_values():
    assert kappa_lambda(TRI, 0.5) == pytest.approx(np.sqrt(np.pi * np.sqrt(3) / 12), rel=1e-9)
    assert kappa_witness(TRI, 0.5)[1]["radius"] == pytest.approx(np.sqrt(3 * np.sqrt(3) / (4 * np.pi)), rel=1e-9)
    assert kappa_lambda(DISC, 0.5) == pytest.approx(2.0)
    assert kappa(DISC)[0] == pytest.approx(2.0)
    # square: quarter-circle corner cut sqrt(pi lam) until it reaches the unit chord
    assert kappa_lambda(SQUARE, 0.2) == pytest.approx(np.sqrt(np.pi * 0.2), rel=1e-9)
    assert kappa(SQUARE)[0] == pytest.approx(1.0, rel=1e-9)
    assert kappa(ELL)[0] == pytest.approx(2.0, rel=1e-9)
    for V in (TRI, DISC, SQUARE):
        assert kappa_lambda(V, 0.0) == kappa_lambda(V, 1.0) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.99), st.sampled_from(["tri", "disc", "square", "ell"]))
def test_complement_symmetry(lam, name):
    V = {"tri": TRI, "disc": DISC, "square": SQUARE, "ell": ELL}[name]
    assert kappa_lambda(V, lam) == pytest.approx(kappa_lambda(V, 1 - lam), rel=1e-9, abs=1e-12)


def test_big_K():
    k = big_K(TRI)
    assert k.value == pytest.approx(np.sqrt(3) / 2, rel=1e-9) and k.exact
    assert big_K(DISC).value == 2.0 and big_K(DISC).exact
    r = big_K(Domain.rectangle(2.0, 1.0))
    assert r.value == pytest.approx(1.0, rel=1e-9) and not r.exact
    for V in (TRI, DISC, SQUARE, ELL):
        assert kappa(V)[0] <= big_K(V).value + 1e-12


def test_nonconvex_is_flagged():
    with pytest.raises(UnsupportedShape) as exc:
        kappa_lambda(L_SHAPE, 0.3)
    assert exc.value.upper_bound > 0


def test_invariants_csv_and_critical_level(tmp_path):
    inv = cut_invariants(DISC)
    inv.to_csv(tmp_path / "k.csv")
    rows = (tmp_path / "k.csv").read_text().splitlines()
    assert rows[0] == "lambda,kappa_lambda" and len(rows) == 102
    lam = inv.critical_lambda(1.9)
    assert 0.5 < lam < 1 and kappa_lambda(DISC, lam) == pytest.approx(1.9, abs=1e-3)
    assert inv.critical_lambda(2.5) is None


def test_verdicts():
    assert erad_verdict(DISC, 2.1).verdict == "Eradicable"
    assert erad_verdict(DISC, 1.9).verdict == "NotEradicable"
    assert erad_verdict(TRI, 0.9).verdict == "Eradicable"
    v = erad_verdict(TRI, 0.7)
    assert v.verdict == "Indeterminate"
    assert set(json.loads(v.to_json())) == {"kappa", "K", "M", "verdict"}


def _sweep_oracle(M):
    # slices perpendicular to the base of the unit equilateral triangle: l = sqrt(2 sqrt3 A) up to half area
    half = np.sqrt(3) / 8
    return 2 * quad(lambda a: 1 / (M - np.sqrt(2 * np.sqrt(3) * a)), 0, half)[0]


def test_sweep_triangle_matches_quadrature():
    r = sweep_strategy(TRI, 1.0)
    assert not r.stalled
    assert r.T == pytest.approx(_sweep_oracle(1.0), rel=1e-4)
    assert r.trajectory.eradicated
    assert np.all(np.diff(r.area) <= 0)
    r100 = sweep_strategy(TRI, 100.0)
    assert r100.T == pytest.approx(TRI.area / 100, rel=0.05)


def test_sweep_disc_stalls():
    r = sweep_strategy(DISC, 1.9)
    assert r.stalled and r.T is None
    # the slice of length 1.9 sits at distance 0.312 from the centre
    s = np.sqrt(1 - 0.95**2)
    lam = 1 - (np.arccos(s) - s * np.sqrt(1 - s * s)) / np.pi
    assert r.lambda_star == pytest.approx(lam, abs=1e-3)
    assert r.min_fraction >= r.lambda_star - 0.02
    assert erad_verdict(DISC, 1.9).verdict == "NotEradicable"


def test_sweep_csv(tmp_path):
    r = sweep_strategy(TRI, 2.0)
    r.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("t,area,ell,effort\n")


def test_dido_sweep_is_optimal():
    tr = dido_sweep(ELL, 3.0)
    rep = check_dido_optimality(tr, ELL)
    assert rep.verdict == "Optimal", rep
    assert tr.eradicated
    tr.check_nested(1e-5)  # polygonised boundary sag is ~2e-6


def test_straight_sweep_violates_opc():
    r = sweep_strategy(TRI, 1.0, direction=-np.pi / 2)
    assert check_dido_optimality(r.trajectory, TRI, 1.0).verdict == "Violated:opc"


def test_unsaturated_effort_violates_a2():
    tr = dido_sweep(ELL, 3.0)
    assert check_dido_optimality(tr, ELL, 3.5).verdict == "Violated:a2"


def test_isosceles_plan():
    p = isosceles_plan(TRI, 1.0)
    # closed-form switch radius and times for the unit equilateral triangle
    beta, b = np.pi / 3, 0.5
    k = np.sqrt(3) - beta
    rho1 = np.expm1(k * b) / k
    t1 = -rho1 - np.log(1 - beta * rho1) / beta
    assert p.rho1 == pytest.approx(rho1) and p.t1 == pytest.approx(t1)
    assert p.T == pytest.approx(0.8702837507, rel=1e-9)
    assert p.symmetry_error() <= 1e-6
    assert p.perpendicularity_error() <= 1e-2
    tr = p.trajectory
    mid = int(np.argmin(np.abs(tr.times - p.t_star)))
    assert tr.area[mid] == pytest.approx(TRI.area / 2, rel=1e-6)
    assert tr.perimeter[mid] == pytest.approx(np.sqrt(3) / 2, rel=1e-9)
    assert tr.eradicated and p.T < sweep_strategy(TRI, 1.0).T


def test_isosceles_plan_saturates_area_rate():
    # integrate dA/dt = l - M independently from the recorded perimeters
    p = isosceles_plan(TRI, 1.0, n_frames=2000)
    tr = p.trajectory
    t, A, ell = tr.times[:-1], tr.area[:-1], tr.perimeter[:-1]
    pred = A[0] + np.concatenate([[0], np.cumsum(0.5 * (ell[1:] + ell[:-1] - 2) * np.diff(t))])
    assert np.max(np.abs(pred - A)) < 2e-4


def test_isosceles_rejects_other_triangles():
    with pytest.raises(NotIsosceles):
        isosceles_plan(Domain.from_spec({"kind": "polygon", "vertices": [[0, 0], [3, 0], [1, 2]]}), 1.0)
    with pytest.raises(NotIsosceles):
        isosceles_plan(SQUARE, 1.0)
    tall = Domain.from_spec({"kind": "polygon", "vertices": [[2, 1], [4, 1], [3, 4]]})
    p = isosceles_plan(tall, 2.0)
    assert p.symmetry_error() <= 1e-6 and p.perpendicularity_error() <= 1e-2


def test_slicing_costs():
    lower = DISC.area * quad(lambda l: kappa_lambda(DISC, l), 0, 1)[0]
    assert slicing_cost(dido_sweep(DISC, 2.5)) == pytest.approx(lower, rel=1e-3)
    assert slicing_cost(sweep_strategy(DISC, 2.5).trajectory) > lower
    tri_lower = TRI.area * quad(lambda l: kappa_lambda(TRI, l), 0, 1, points=[0.5])[0]
    dido = slicing_cost(isosceles_slicing(TRI))
    straight = slicing_cost(sweep_strategy(TRI, 1.0).trajectory)
    assert tri_lower <= dido < straight


def test_slicing_rejects_regrowth():
    with pytest.raises(NotNested):
        slicing_cost(isosceles_plan(TRI, 1.0).trajectory)
    a, b = FrontCurve.circle(0.5), FrontCurve.circle(0.6)
    tr = Trajectory([0.0, 1.0], [a, b], [None, None], [0.0, 0.0])
    with pytest.raises(NotNested):
        slicing_cost(tr)
