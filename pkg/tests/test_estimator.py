import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from edgcontrol.estimator import EDGOptimalControl
from edgcontrol.mms import builtin_paper_case, zero_data
from edgcontrol.study import RunConfig, run_single


def test_params_round_trip():
    est = EDGOptimalControl(k=2, n=4, stab="local")
    params = est.get_params()
    assert params["k"] == 2 and params["n"] == 4 and params["route"] == "condensed"
    twin = clone(est)
    assert twin.get_params() == params
    assert twin.set_params(n=6).n == 6


def test_fit_predict_and_errors(sine_exact):
    est = EDGOptimalControl(k=1, n=8).fit(sine_exact)
    summary = run_single(RunConfig(k=1), 8)
    errs = est.errors()
    assert errs["y"] == pytest.approx(summary["e_y"], rel=1e-12)
    assert est.cost() == pytest.approx(summary["J"], rel=1e-12)
    pts = np.array([[0.5, 0.5], [0.25, 0.75]])
    np.testing.assert_allclose(est.predict(pts), sine_exact.y(pts), atol=0.05)
    fields = est.predict_fields(pts)
    assert fields["q"].shape == (2, 2)
    np.testing.assert_allclose(fields["u"], fields["z"] / est.gamma_)


def test_routes_agree(sine_exact):
    a = EDGOptimalControl(k=2, n=3).fit(sine_exact)
    b = EDGOptimalControl(k=2, n=3, route="monolithic").fit(sine_exact)
    np.testing.assert_allclose(a.solution_.z, b.solution_.z, rtol=1e-10, atol=1e-12)


def test_zero_problem_data():
    est = EDGOptimalControl(n=4).fit(zero_data(2.0))
    assert est.gamma_ == 2.0
    assert np.all(est.predict([[0.3, 0.3]]) == 0)
    with pytest.raises(ValueError):
        est.errors()


def test_not_fitted():
    with pytest.raises(NotFittedError):
        EDGOptimalControl().predict([[0.5, 0.5]])


@pytest.mark.parametrize("params", [{"k": 5}, {"n": 0}, {"gamma": -1.0}, {"stab": "x"},
                                    {"route": "iterative"}])
def test_invalid_params(params):
    with pytest.raises(ValueError):
        EDGOptimalControl(**params).fit(builtin_paper_case())


def test_invalid_inputs(sine_exact):
    with pytest.raises(TypeError):
        EDGOptimalControl().fit("sine")
    with pytest.raises(ValueError):
        EDGOptimalControl(gamma=2.0).fit(sine_exact)
    est = EDGOptimalControl(n=2).fit(sine_exact)
    with pytest.raises(ValueError):
        est.predict(np.zeros((2, 3)))
