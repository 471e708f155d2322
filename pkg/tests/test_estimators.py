import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from netcox import datasets
from netcox.cox import Constant, simulate_poisson
from netcox.estimators import (
    IntensityEstimator,
    KFunctionEstimator,
    MinContrastCoxEstimator,
    PCFEstimator,
)
from netcox.exceptions import EmptyPattern, ValidationError
from netcox.inference import SummaryCurve, build_model
from netcox.rng import stream


@pytest.fixture(scope="module")
def pattern():
    return simulate_poisson(Constant(0.2), datasets.dendrite(), stream(0))


def test_params_and_clone():
    est = MinContrastCoxEstimator(kind="icp", a2=80.0, fixed={"tau": 2.0})
    p = est.get_params()
    assert p["kind"] == "icp" and p["a2"] == 80.0
    c = clone(est).set_params(a2=60.0)
    assert c.a2 == 60.0 and est.a2 == 80.0


def test_intensity_estimator(pattern):
    est = IntensityEstimator().fit(pattern)
    assert est.predict([0, 3])[0] == pytest.approx(pattern.n / 736)
    by = IntensityEstimator(by_mark=True).fit(pattern)
    assert set(by.intensity_.rates) == {"main", "side"}


def test_pcf_estimator(pattern):
    est = PCFEstimator(metric="geodesic", a2=60.0)
    with pytest.raises(NotFittedError):
        est.predict([1.0])
    est.fit(pattern)
    assert est.curve_.t[-1] == 60.0 and est.bandwidth_ > 0
    np.testing.assert_allclose(est.predict(est.curve_.t), est.curve_.values)
    np.testing.assert_allclose(est.transform(pattern), est.curve_.values)


def test_k_estimator(pattern):
    est = KFunctionEstimator(metric="geodesic", t=np.linspace(0, 40, 41)).fit(pattern)
    assert est.curve_.values[0] == 0.0 and np.all(np.diff(est.curve_.values) >= 0)


def test_min_contrast_on_curve():
    t = np.linspace(0, 50, 257)
    m = build_model("lgcp", "exponential", {"sigma2": 0.9, "rate": 0.07})
    est = MinContrastCoxEstimator(a2=50.0).fit(SummaryCurve(t, m.pcf(t), "pcf"))
    assert est.params_["rate"] == pytest.approx(0.07, rel=1e-4)
    np.testing.assert_allclose(est.predict(t), m.pcf(t), rtol=1e-4)
    assert est.score() <= 0


def test_min_contrast_on_pattern(pattern):
    est = MinContrastCoxEstimator(a2=50.0, metric="geodesic").fit(pattern)
    assert est.model_.kind == "lgcp" and est.pcf_.t[-1] == 50.0


def test_input_validation():
    with pytest.raises(ValidationError):
        IntensityEstimator().fit(np.zeros((3, 2)))
    with pytest.raises(ValidationError):
        PCFEstimator(metric="euclid").fit(simulate_poisson(Constant(0.2), datasets.theta(), stream(1)))
    with pytest.raises(ValidationError):
        PCFEstimator(t=[0.0, 2.0, 1.0]).fit(simulate_poisson(Constant(5.0), datasets.theta(), stream(1)))
