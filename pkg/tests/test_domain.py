import numpy as np
import pytest

from frontier.domain import Domain
from frontier.errors import ScenarioError


def test_basic_measures():
    t = Domain.equilateral()
    assert t.area == pytest.approx(np.sqrt(3) / 4)
    assert t.perimeter == pytest.approx(3.0)
    assert t.diameter == pytest.approx(1.0)
    assert t.is_convex
    e = Domain("ellipse", a=2.0, b=1.0)
    # Ramanujan's second approximation is accurate to ~1e-5 here
    h = (1 / 3) ** 2
    ram = np.pi * 3 * (1 + 3 * h / (10 + np.sqrt(4 - 3 * h)))
    assert e.perimeter == pytest.approx(ram, rel=1e-6)
    assert Domain("disc", radius=2.0).area == pytest.approx(4 * np.pi)


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "disc", "radius": -1.0},
        {"kind": "ellipse", "a": 1.0, "b": 2.0},
        {"kind": "polygon", "vertices": [[0, 0], [0, 1], [1, 0]]},  # clockwise
        {"kind": "polygon", "vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]},  # bow tie
        {"kind": "hexagon"},
    ],
)
def test_invalid_domains(spec):
    with pytest.raises(ScenarioError):
        Domain.from_spec(spec)


def test_spec_round_trip():
    for d in (Domain.rectangle(2, 1), Domain("disc", radius=1.5), Domain("ellipse", a=2, b=1)):
        assert Domain.from_spec(d.to_spec()).area == pytest.approx(d.area)


def test_boundary_arc_and_projection():
    d = Domain("disc", radius=1.0)
    s = d.boundary_param([[-1.0, 0.0], [1.0, 0.0]])
    arc = d.boundary_between(s[0], s[1])
    assert np.allclose(arc[0], [-1, 0]) and np.allclose(arc[-1], [1, 0])
    assert np.all(arc[1:-1, 1] < 0)  # counterclockwise from (-1,0) runs through the lower half
    assert np.allclose(d.project([[0.0, 2.0]]), [[0.0, 1.0]])
    sq = Domain.rectangle(1, 1)
    assert np.allclose(sq.project([[0.5, 0.1]]), [[0.5, 0.0]])
