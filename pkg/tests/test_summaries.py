import warnings

import numpy as np
import pytest

from netcox import datasets
from netcox.cox import Constant, CoxModel, simulate_poisson
from netcox.covariance import IsotropicCovariance, PoweredExponential
from netcox.exceptions import GridMismatch, ValidationError
from netcox.network import make_grid
from netcox.rng import stream
from netcox.summaries import (
    empirical_FGJ,
    envelope_pipeline,
    erl_order,
    global_envelope_test,
    plot_envelope,
)


def test_fgj_at_zero():
    net = datasets.dendrite()
    x = simulate_poisson(Constant(0.1), net, stream(0))
    f = empirical_FGJ(x, "geodesic", np.array([0.0, 5.0]), make_grid(net, 1.0))
    assert f.F[0] == 0.0 and f.G[0] == 0.0 and f.J[0] == 1.0


def test_poisson_empty_space_equals_nearest_neighbour():
    # for Poisson, E(1 - G) = E(1 - F); J itself is a ratio and biased upwards
    net = datasets.dendrite()
    r = np.array([2.0, 6.0, 12.0])
    grid = make_grid(net, 1.0)
    F, G = [], []
    for i in range(400):
        f = empirical_FGJ(simulate_poisson(Constant(0.1), net, stream(1, i)), "geodesic", r, grid)
        F.append(f.F)
        G.append(f.G)
    F, G = np.array(F), np.array(G)
    se = np.sqrt((F.var(0) + G.var(0)) / len(F))
    assert np.all(np.abs(F.mean(0) - G.mean(0)) < 4 * se)


def test_f_increases_to_one():
    net = datasets.theta()
    x = simulate_poisson(Constant(5.0), net, stream(2))
    f = empirical_FGJ(x, "resistance", np.linspace(0, 2, 41))
    assert np.all(np.diff(f.F) >= 0) and f.F[-1] == 1.0
    assert np.all(np.isnan(f.J[f.F >= 1 - 1e-9]))


def test_erl_extremes():
    rng = np.random.default_rng(0)
    sims = rng.normal(size=(199, 30))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert global_envelope_test(np.zeros(30), sims).p_value == 1.0
        res = global_envelope_test(np.full(30, 9.0), sims)
    assert res.p_value == pytest.approx(1 / 200)
    assert np.all(res.lower <= res.upper)


def test_erl_order_breaks_ties_lexicographically():
    curves = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 5.0], [3.0, 1.0]])
    order, vec = erl_order(curves)
    # curve 2 holds the pointwise maximum twice, curve 0 the minimum twice
    assert list(order[:2]) == [0, 2]


def test_envelope_input_checks():
    with pytest.raises(ValidationError):
        global_envelope_test(np.zeros(3), np.zeros((50, 3)))
    with pytest.raises(GridMismatch):
        global_envelope_test(np.zeros(3), np.zeros((199, 4)))
    with pytest.warns(UserWarning):
        global_envelope_test(np.zeros(3), np.random.default_rng(0).normal(size=(99, 3)))


def test_pipeline_is_deterministic(tmp_path):
    net = datasets.dendrite()
    cov = IsotropicCovariance(1.0, PoweredExponential(20.0), "resistance")
    model = CoxModel("lgcp", Constant(0.1), cov)
    x = simulate_poisson(Constant(0.1), net, stream(3))
    a = envelope_pipeline(model, x, 99, seed=4, grid_spacing=2.0)
    b = envelope_pipeline(model, x, 99, seed=4, grid_spacing=2.0)
    assert a.p_value == b.p_value
    np.testing.assert_array_equal(a.sims, b.sims)
    assert 0 < a.p_value <= 1
    plot_envelope(a, tmp_path / "a.svg")
    plot_envelope(b, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
