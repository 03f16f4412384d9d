import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontier.errors import MultipleInteriorZeros, NegativeRadicand, NotBistable
from frontier.reaction import manifold_gap, min_speed, pstar, validate_reaction


def closed_form_speed(a):
    # U = 1/(1+exp(-x/sqrt2)) solves U'' + beta U' + f(U) = 0 for f = u(1-u)(u-a)
    # with U' = U(1-U)/sqrt2, which forces beta = -(1-2a)/sqrt2
    return -(1.0 - 2.0 * a) / np.sqrt(2.0)


def test_cubic_zero_and_slope():
    rt = validate_reaction({"kind": "cubic", "a": 0.3})
    assert rt.u_star == pytest.approx(0.3, abs=1e-12)
    assert float(rt.df(rt.u_star)) == pytest.approx(0.21, abs=1e-12)
    assert rt.beta_star_star == pytest.approx(2 * np.sqrt(0.21), abs=1e-12)


def test_logistic_is_rejected():
    with pytest.raises(NotBistable):
        validate_reaction(lambda u: u * (1 - u), lambda u: 1 - 2 * u)


def test_wrong_end_slopes():
    with pytest.raises(NotBistable):
        validate_reaction(lambda u: -u * (1 - u), lambda u: -1 + 2 * u)


def test_multiple_zeros():
    f = lambda u: u * (1 - u) * (u - 0.2) * (u - 0.4) * (u - 0.6)  # noqa: E731
    df = lambda u: np.gradient(f(np.array([u - 1e-6, u + 1e-6])), 2e-6)[0]  # noqa: E731
    with pytest.raises((MultipleInteriorZeros, NotBistable)):
        validate_reaction(f, df)


def test_sampled_reaction_matches_cubic():
    u = np.linspace(0, 1, 41)
    knots = np.column_stack([u, u * (1 - u) * (u - 0.3)])
    rt = validate_reaction({"kind": "sampled", "knots": knots.tolist()})
    assert rt.u_star == pytest.approx(0.3, abs=1e-8)


def test_pstar_values():
    rt = validate_reaction({"kind": "cubic", "a": 0.3})
    assert pstar(rt, 0.3) == 0.0
    assert pstar(rt, 1.0) == 0.0
    assert pstar(rt, 0.7) == pytest.approx(np.sqrt(0.7 * 0.084), abs=1e-14)
    with pytest.raises(NegativeRadicand):
        pstar(rt, 0.1)


@pytest.mark.parametrize("a", [0.2, 0.3, 0.4])
def test_min_speed_closed_form(a):
    rt = validate_reaction({"kind": "cubic", "a": a})
    assert min_speed(rt) == pytest.approx(closed_form_speed(a), abs=1e-8)
    assert abs(manifold_gap(rt, rt.beta_star)) <= 1e-8


def test_symmetric_cubic_is_stationary():
    assert abs(min_speed(validate_reaction({"kind": "cubic", "a": 0.5}))) <= 1e-9


def test_speed_increases_with_a():
    s = [min_speed(validate_reaction({"kind": "cubic", "a": a})) for a in (0.2, 0.3, 0.4)]
    assert s[0] < s[1] < s[2]


@settings(max_examples=8, deadline=None)
@given(st.floats(0.15, 0.85))
def test_gap_sign_brackets_speed(a):
    rt = validate_reaction({"kind": "cubic", "a": a})
    b = rt.beta_star
    assert manifold_gap(rt, b - 0.05) > 0 > manifold_gap(rt, b + 0.05)
