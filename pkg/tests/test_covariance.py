import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from netcox import datasets
from netcox.covariance import (
    BernsteinMixture,
    Dagum,
    Degenerate,
    Gamma,
    GeneralizedCauchy,
    GeneralizedInverseGaussian,
    InverseGamma,
    IsotropicCovariance,
    Matern,
    PoweredExponential,
    cov_matrix,
    family_from_dict,
    psd_factor,
    require_valid,
    validate_for_network,
)
from netcox.exceptions import InvalidParameters, NotPositiveSemidefinite, ValidationError
from netcox.metrics import make_metric
from netcox.network import build_network, make_grid

from oracles import random_loop, random_network

FAMILIES = [
    PoweredExponential(2.0), PoweredExponential(1.5, 0.6), Matern(1.0, 0.3), Matern(2.0, 0.5),
    GeneralizedCauchy(1.0, 0.7, 2.0), Dagum(1.0, 0.5, 0.4),
    BernsteinMixture(Gamma(2.0, 3.0)), BernsteinMixture(InverseGamma(2.0, 1.0)),
    BernsteinMixture(GeneralizedInverseGaussian(1.0, 2.0, -0.5)), BernsteinMixture(Degenerate(0.7)),
]


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
def test_unit_at_zero_and_decreasing(fam):
    t = np.linspace(0, 20, 401)
    r = fam.r0(t)
    assert r[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(r) <= 1e-12)
    assert np.all(r > 0)


@pytest.mark.parametrize("law, density", [
    (Gamma(2.0, 3.0), stats.gamma(2.0, scale=1 / 3.0).pdf),
    (InverseGamma(2.5, 1.5), stats.invgamma(2.5, scale=1.5).pdf),
    (GeneralizedInverseGaussian(1.0, 2.0, 0.7),
     lambda s: stats.geninvgauss(0.7, np.sqrt(2.0)).pdf(s / np.sqrt(2.0)) / np.sqrt(2.0)),
])
def test_laplace_transform_by_quadrature(law, density):
    for t in (0.1, 1.0, 4.0):
        ref, _ = integrate.quad(lambda s: np.exp(-s * t) * density(s), 0, np.inf, limit=200)
        assert float(law.laplace(t)) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("law", [Gamma(2.0, 3.0), InverseGamma(5.0, 5.0),
                                 GeneralizedInverseGaussian(1.0, 2.0, 0.7)])
def test_sampler_mean(law):
    x = law.sample(np.random.default_rng(0), 200_000)
    sd = np.std(x) / np.sqrt(x.size)
    assert abs(x.mean() - law.mean()) < 4 * sd


def test_inverse_gamma_mean_convention():
    # scale phi: mean phi / (tau - 1)
    assert InverseGamma(5.0, 5.0).mean() == pytest.approx(1.25)


def test_matern_half_is_exponential():
    t = np.linspace(0, 10, 50)
    np.testing.assert_allclose(Matern(2.0, 0.5).r0(t), np.exp(-t / 2.0), rtol=1e-12)


def test_parameter_checks():
    with pytest.raises(InvalidParameters):
        PoweredExponential(-1.0)
    with pytest.raises(InvalidParameters):
        PoweredExponential(1.0, 1.5)
    with pytest.raises(InvalidParameters):
        Matern(1.0, 0.8)
    with pytest.raises(InvalidParameters):
        family_from_dict("nope", {})


def test_roundtrip_dicts():
    for fam in FAMILIES:
        cov = IsotropicCovariance(2.0, fam, "resistance")
        back = IsotropicCovariance.from_dict(cov.to_dict())
        t = np.linspace(0, 5, 11)
        np.testing.assert_allclose(back.c(t), cov.c(t))
    assert family_from_dict("exponential", {"rate": 4.0}).phi == 0.25


def _one_sum():
    xy = [[0, 0], [1, 0], [0.5, 1], [2, 0], [1.5, 1], [1, -1]]
    return build_network(xy, [[0, 1], [1, 2], [2, 0], [1, 3], [3, 4], [4, 1], [1, 5]])


def test_geodesic_validity_by_topology():
    geo = IsotropicCovariance(1.0, PoweredExponential(1.0), "geodesic")
    assert not validate_for_network(geo, datasets.theta())
    with pytest.raises(ValidationError):
        require_valid(geo, datasets.theta())
    rng = np.random.default_rng(0)
    for net in (datasets.dendrite(), random_loop(rng), _one_sum()):
        assert validate_for_network(geo, net)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), idx=st.integers(0, len(FAMILIES) - 1))
def test_resistance_covariance_is_psd(seed, idx):
    rng = np.random.default_rng(seed)
    net = random_network(rng, max_vertices=8, max_segments=14)
    cov = IsotropicCovariance(1.0, FAMILIES[idx], "resistance")
    grid = make_grid(net, net.total_length / 40)
    C = cov_matrix(cov, grid.segments, grid.offsets, make_metric(net, "resistance"))
    lam = np.linalg.eigvalsh(C)
    assert lam[0] >= -1e-8 * lam[-1]


def test_psd_factor_rejects_indefinite():
    with pytest.raises(NotPositiveSemidefinite):
        psd_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
    f = psd_factor(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(f.L @ f.L.T, [[2, 1], [1, 2]])
