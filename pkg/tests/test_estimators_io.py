import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fraclap import FracProblem, FractionalPoissonSolver, assemble_load, PenalizedHUMControl, make_setup
from fraclap.io import format_value, read_csv, trajectory_rows, write_csv, write_json


# -- estimators ----------------------------------------------------------------

def test_params_round_trip():
    est = FractionalPoissonSolver(s=0.3, L=2.0, n_nodes=17, method="cg")
    assert est.get_params() == {"s": 0.3, "L": 2.0, "n_nodes": 17, "method": "cg"}
    twin = clone(est).set_params(s=0.7)
    assert twin.s == 0.7 and est.s == 0.3
    assert "eps" in PenalizedHUMControl().get_params()


def test_not_fitted():
    with pytest.raises(NotFittedError):
        FractionalPoissonSolver().predict([0.0])
    with pytest.raises(NotFittedError):
        PenalizedHUMControl().controlled_trajectory()


def test_fit_with_callable_and_nodal_source():
    est = FractionalPoissonSolver(s=0.6, n_nodes=9)
    a = est.fit(lambda x: 1 + x**2).coef_.copy()
    p = FracProblem(0.6, 1.0, 9)
    b = est.fit(assemble_load(p, lambda x: 1 + x**2)).coef_
    np.testing.assert_allclose(a, b, rtol=1e-14)
    with pytest.raises(ValueError):
        est.errors()
    with pytest.raises(ValueError):
        est.fit(np.ones(4))


def test_predict_accepts_column_vector():
    est = FractionalPoissonSolver(n_nodes=9).fit()
    X = np.linspace(-1.2, 1.2, 7)
    np.testing.assert_array_equal(est.predict(X[:, None]), est.predict(X))
    assert est.predict([-1.2])[0] == 0.0


@pytest.mark.parametrize("kw", [{"s": 0}, {"n_nodes": 2.5}, {"method": "lu"}, {"L": -1.0}])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        FractionalPoissonSolver(**kw).fit()


def test_hum_estimator_accepts_callable_datum():
    est = PenalizedHUMControl(s=0.7, n_nodes=8, n_steps=6, eps=0.1).fit(lambda x: 1 - x**2)
    setup = make_setup(0.7, 8, M=6, eps=0.1, z0=lambda x: 1 - x**2)
    np.testing.assert_array_equal(est.setup_.z0, setup.z0)


# -- io ------------------------------------------------------------------------

@given(st.floats(allow_nan=False))
def test_float_format_round_trips(x):
    assert float(format_value(x)) == x


def test_format_special_values():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(np.int64(3)) == "3"
    assert format_value(math.nan) == "nan"
    assert format_value(np.float32(0.5)) == "0.5"


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("a", "b"), [{"a": 1, "b": 0.1}, {"a": 2}])
    assert path.read_bytes() == b"a,b\n1,0.1\n2,\n"
    assert read_csv(path) == [{"a": "1", "b": "0.1"}, {"a": "2", "b": ""}]


def test_trajectory_rows_include_boundary():
    setup = make_setup(0.5, 3, M=2, eps=1.0)
    traj = setup.system.solve_forward(setup.z0)
    rows = list(trajectory_rows(traj, setup.problem))
    assert len(rows) == 3 * 5
    assert rows[0] == {"t": 0.0, "x": -1.0, "value": 0.0}
    assert rows[2]["value"] == setup.z0[1]


def test_json_is_sorted_and_plain(tmp_path):
    path = write_json(tmp_path / "m.json", {"b": np.arange(2), "a": np.float64(1.5)})
    assert json.loads(path.read_text()) == {"a": 1.5, "b": [0, 1]}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')
