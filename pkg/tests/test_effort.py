import csv

import numpy as np
import pytest
from sklearn.base import clone

from frontier.effort import EffortEstimator, EffortTable, chebyshev_grid, effort_at, effort_function
from frontier.errors import ComputeError


def test_single_entry_at_min_speed(cubic03):
    tab = effort_function(cubic03, [cubic03.beta_star])
    assert tab.values.tolist() == [0.0]
    assert tab(cubic03.beta_star - 1.0) == 0.0


def test_below_min_speed_grid_rejected(cubic03):
    with pytest.raises(ComputeError):
        effort_function(cubic03, [cubic03.beta_star - 0.1, 0.0])


def test_basic_table():
    tab = EffortTable.basic_table()
    assert tab(-1.0) == 0.0 and tab(-3.0) == 0.0
    assert tab(0.0) == 1.0
    assert tab.derivative(-1.0) == 1.0  # right derivative at the kink
    assert tab.derivative(-1.0, side="left") == 0.0
    assert tab.violations() == []


def test_monotone_and_nonnegative(cubic03):
    tab = effort_function(cubic03, np.linspace(cubic03.beta_star, 0.8, 8))
    assert np.all(np.diff(tab.values) > 0)
    assert tab.values[0] == 0.0
    assert np.all(tab.attained)


def test_split_profiles_flagged(cubic03):
    e, attained = effort_at(cubic03, 1.5)
    assert not attained and e > effort_at(cubic03, 0.8)[0]


def test_violations_detect_concavity():
    b = np.array([0.0, 1.0, 2.0, 3.0])
    tab = EffortTable(b, np.array([0.0, 2.0, 3.0, 3.5]), np.ones(4, bool), 0.0)
    assert "effort is not convex on the grid" in tab.violations()
    with pytest.raises(ComputeError):
        tab.check()
    tab = EffortTable(b, np.array([0.0, 1.0, 3.0, 6.0]), np.ones(4, bool), 0.0)
    bad = tab.violations()
    assert any("E'(beta)" in m for m in bad)
    assert any("beta E(1)" in m for m in bad)


def test_interpolation_and_extrapolation():
    b = np.array([-1.0, 0.0, 1.0])
    tab = EffortTable(b, np.array([0.0, 1.0, 2.5]), np.ones(3, bool), -1.0)
    assert tab(0.5) == pytest.approx(1.75)
    assert tab(2.0) == pytest.approx(4.0)
    assert tab.derivative(0.0) == pytest.approx(1.5)
    assert tab.derivative(0.0, side="left") == pytest.approx(1.0)


def test_chebyshev_grid():
    g = chebyshev_grid(-1.0, 3.0, 64)
    assert g[0] == -1.0 and g[-1] == pytest.approx(3.0) and np.all(np.diff(g) > 0)


def test_csv(tmp_path):
    out = tmp_path / "e.csv"
    EffortTable.basic_table([-2.0, 0.0, 1.0]).to_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows == [["beta", "effort", "attained_flag"], ["-2", "0", "1"], ["0", "1", "1"], ["1", "2", "1"]]


def test_estimator_api():
    est = EffortEstimator()
    assert est.get_params() == {"n_grid": 64, "reaction": None, "span": 4.0}
    est.fit()
    np.testing.assert_allclose(est.predict([[-2.0], [0.0], [1.5]]), [0.0, 1.0, 2.5])
    c = clone(est).set_params(reaction={"kind": "cubic", "a": 0.3})
    c.fit(np.array([[-0.28284271247], [0.0], [0.2]]))
    assert c.predict([0.0])[0] == pytest.approx(0.44620757, abs=1e-6)
    assert c.beta_star_ == pytest.approx(-0.2 * np.sqrt(2) , abs=1e-8)
