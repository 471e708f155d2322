"""Isotropic correlation families and covariance matrices on networks.

Every family here is completely monotone over its admissible parameter
range, so composing it with the resistance metric always gives a valid
covariance.  Composition with the geodesic metric is only guaranteed when
the network is a 1-sum of trees and loops; :func:`validate_for_network`
enforces that.

Bernstein mixtures ``r0(t) = E exp(-S t)`` are evaluated through the closed
form Laplace transform of the mixing law ``S ~ F``, and ``F`` can be sampled
for the mixture simulator.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import special, stats

from .exceptions import InvalidParameters, NotPositiveSemidefinite, ValidationError
from .network import LinearNetwork, is_one_sum_of_trees_and_loops
from .special import log_kv

#: eigenvalues below ``-PSD_REL_TOL * lambda_max`` mean the pairing is invalid
PSD_REL_TOL = 1e-8


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise InvalidParameters(f"{name} must be positive and finite, got {value!r}")


def _in_unit(name, value, upper=1.0):
    if not (np.isfinite(value) and 0 < value <= upper):
        raise InvalidParameters(f"{name} must lie in (0, {upper:g}], got {value!r}")


def _t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise InvalidParameters("distances must be non-negative")
    return t


# -- Bernstein mixing laws ---------------------------------------------------

class BernsteinCDF:
    """Mixing law ``F`` of a rate ``S >= 0``; ``laplace(t) = E exp(-S t)``."""

    name = ""

    def laplace(self, t):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"F": self.name, **asdict(self)}


@dataclass(frozen=True)
class Gamma(BernsteinCDF):
    """Gamma law with shape ``tau`` and rate ``phi``."""

    tau: float
    phi: float
    name = "gamma"

    def __post_init__(self):
        _positive("tau", self.tau)
        _positive("phi", self.phi)

    def laplace(self, t):
        t = _t(t)
        return np.exp(-self.tau * np.log1p(t / self.phi))

    def sample(self, rng, size=None):
        return rng.gamma(self.tau, 1.0 / self.phi, size)

    def mean(self):
        return self.tau / self.phi


@dataclass(frozen=True)
class InverseGamma(BernsteinCDF):
    """Inverse gamma law with shape ``tau`` and scale ``phi``."""

    tau: float
    phi: float
    name = "inverse_gamma"

    def __post_init__(self):
        _positive("tau", self.tau)
        _positive("phi", self.phi)

    def laplace(self, t):
        t = _t(t)
        out = np.ones(t.shape)
        pos = t > 0
        tp = t[pos] * self.phi
        out[pos] = np.exp(np.log(2.0) + 0.5 * self.tau * np.log(tp)
                          + log_kv(self.tau, 2.0 * np.sqrt(tp)) - special.gammaln(self.tau))
        return out[()] if out.ndim == 0 else out

    def sample(self, rng, size=None):
        return self.phi / rng.gamma(self.tau, 1.0, size)

    def mean(self):
        return self.phi / (self.tau - 1.0) if self.tau > 1 else np.inf


@dataclass(frozen=True)
class GeneralizedInverseGaussian(BernsteinCDF):
    """GIG law with density proportional to ``s^(lam-1) exp(-(psi s + chi / s) / 2)``."""

    psi: float
    chi: float
    lam: float
    name = "gig"

    def __post_init__(self):
        _positive("psi", self.psi)
        _positive("chi", self.chi)
        if not np.isfinite(self.lam):
            raise InvalidParameters("lam must be finite")

    def laplace(self, t):
        t = _t(t)
        lk0 = log_kv(self.lam, np.sqrt(self.psi * self.chi))
        z = np.sqrt((2.0 * t + self.psi) * self.chi)
        return np.exp(-0.5 * self.lam * np.log1p(2.0 * t / self.psi) + log_kv(self.lam, z) - lk0)

    def sample(self, rng, size=None):
        omega = np.sqrt(self.psi * self.chi)
        x = stats.geninvgauss.rvs(self.lam, omega, size=size, random_state=rng)
        return np.sqrt(self.chi / self.psi) * x

    def mean(self):
        omega = np.sqrt(self.psi * self.chi)
        return float(np.sqrt(self.chi / self.psi)
                     * np.exp(log_kv(self.lam + 1, omega) - log_kv(self.lam, omega)))


@dataclass(frozen=True)
class Degenerate(BernsteinCDF):
    """Point mass at ``s``."""

    s: float
    name = "degenerate"

    def __post_init__(self):
        _positive("s", self.s)

    def laplace(self, t):
        return np.exp(-self.s * _t(t))

    def sample(self, rng, size=None):
        return np.full(size, self.s) if size is not None else self.s

    def mean(self):
        return self.s


_MIXING = {"gamma": Gamma, "inverse_gamma": InverseGamma, "gig": GeneralizedInverseGaussian,
           "degenerate": Degenerate}


def mixing_from_dict(d: dict) -> BernsteinCDF:
    d = dict(d)
    name = d.pop("F", None)
    if name not in _MIXING:
        raise InvalidParameters(f"unknown mixing law {name!r}; choose from {sorted(_MIXING)}")
    try:
        return _MIXING[name](**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise InvalidParameters(f"bad parameters for {name}: {exc}") from exc


# -- correlation families ----------------------------------------------------

class CorrelationFamily:
    """Isotropic correlation ``r0(t)`` with ``r0(0) = 1``."""

    name = ""

    def r0(self, t):
        raise NotImplementedError

    def exponential_rate(self) -> float | None:
        """Rate ``s`` when ``r0(t) = exp(-s t)``, else ``None``."""
        return None

    def to_dict(self) -> dict:
        return {"family": self.name, "params": asdict(self)}


@dataclass(frozen=True)
class PoweredExponential(CorrelationFamily):
    """``exp(-t^alpha / phi)`` with ``alpha`` in (0, 1]."""

    phi: float
    alpha: float = 1.0
    name = "exponential"

    def __post_init__(self):
        _positive("phi", self.phi)
        _in_unit("alpha", self.alpha)

    def r0(self, t):
        return np.exp(-_t(t) ** self.alpha / self.phi)

    def exponential_rate(self):
        return 1.0 / self.phi if self.alpha == 1.0 else None


@dataclass(frozen=True)
class Matern(CorrelationFamily):
    """Matérn correlation with smoothness ``alpha`` in (0, 1/2]."""

    phi: float
    alpha: float
    name = "matern"

    def __post_init__(self):
        _positive("phi", self.phi)
        _in_unit("alpha", self.alpha, 0.5)

    def r0(self, t):
        t = _t(t)
        x = np.sqrt(2.0 * self.alpha) * t / self.phi
        out = np.ones(x.shape)
        pos = x > 0
        a = self.alpha
        xp = x[pos]
        out[pos] = np.exp((1.0 - a) * np.log(2.0) - special.gammaln(a)
                          + a * np.log(xp) + log_kv(a, xp))
        out = np.minimum(out, 1.0)
        return out[()] if out.ndim == 0 else out

    def exponential_rate(self):
        return 1.0 / self.phi if self.alpha == 0.5 else None


@dataclass(frozen=True)
class GeneralizedCauchy(CorrelationFamily):
    """``(1 + (t/phi)^alpha)^(-tau/alpha)`` with ``alpha`` in (0, 1]."""

    phi: float
    alpha: float
    tau: float
    name = "gencauchy"

    def __post_init__(self):
        _positive("phi", self.phi)
        _in_unit("alpha", self.alpha)
        _positive("tau", self.tau)

    def r0(self, t):
        return np.exp(-(self.tau / self.alpha) * np.log1p((_t(t) / self.phi) ** self.alpha))


@dataclass(frozen=True)
class Dagum(CorrelationFamily):
    """``1 - (x^tau / (1 + x^tau))^(alpha/tau)``, ``x = t/phi``."""

    phi: float
    tau: float
    alpha: float
    name = "dagum"

    def __post_init__(self):
        _positive("phi", self.phi)
        _in_unit("tau", self.tau)
        _in_unit("alpha", self.alpha)

    def r0(self, t):
        x = _t(t) / self.phi
        with np.errstate(divide="ignore"):
            inv = x ** (-self.tau)
        # written via log1p/expm1 so the tail keeps full relative precision
        return -np.expm1(-(self.alpha / self.tau) * np.log1p(inv))


@dataclass(frozen=True)
class BernsteinMixture(CorrelationFamily):
    """``r0(t) = E exp(-S t)`` with ``S ~ F``."""

    F: BernsteinCDF
    name = "bernstein"

    def __post_init__(self):
        if not isinstance(self.F, BernsteinCDF):
            raise InvalidParameters("F must be a BernsteinCDF")

    def r0(self, t):
        return self.F.laplace(t)

    def exponential_rate(self):
        return self.F.s if isinstance(self.F, Degenerate) else None

    def to_dict(self):
        return {"family": self.name, "params": self.F.to_dict()}


_FAMILIES = {"exponential": PoweredExponential, "powered_exponential": PoweredExponential,
             "matern": Matern, "gencauchy": GeneralizedCauchy, "dagum": Dagum}


def family_from_dict(name: str, params: dict) -> CorrelationFamily:
    """Build a family from its JSON name and parameter mapping.

    ``exponential`` accepts ``phi`` or ``rate = 1/phi`` and an optional
    ``alpha``; ``bernstein`` takes ``{"F": law, ...law parameters}``.
    """
    params = dict(params or {})
    if name == "bernstein":
        return BernsteinMixture(mixing_from_dict(params))
    if name not in _FAMILIES:
        raise InvalidParameters(f"unknown family {name!r}")
    if name in ("exponential", "powered_exponential") and "rate" in params:
        rate = float(params.pop("rate"))
        _positive("rate", rate)
        params["phi"] = 1.0 / rate
    try:
        return _FAMILIES[name](**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise InvalidParameters(f"bad parameters for {name}: {exc}") from exc


def eval_r0(family: CorrelationFamily, t):
    return family.r0(t)


# -- covariance --------------------------------------------------------------

@dataclass(frozen=True)
class IsotropicCovariance:
    """``c(u, v) = sigma2 * r0(d(u, v))`` for a chosen metric."""

    sigma2: float
    family: CorrelationFamily
    metric: str = "resistance"

    def __post_init__(self):
        _positive("sigma2", self.sigma2)
        if self.metric not in ("geodesic", "resistance"):
            raise InvalidParameters(f"unknown metric {self.metric!r}")

    def c(self, t):
        return self.sigma2 * self.family.r0(t)

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, **self.family.to_dict(), "metric": self.metric}

    @classmethod
    def from_dict(cls, d: dict) -> "IsotropicCovariance":
        try:
            fam = family_from_dict(d["family"], d.get("params", {}))
            return cls(float(d.get("sigma2", 1.0)), fam, d.get("metric", "resistance"))
        except KeyError as exc:
            raise InvalidParameters(f"covariance description lacks {exc}") from exc


@dataclass(frozen=True)
class Validity:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_for_network(cov: IsotropicCovariance, net: LinearNetwork) -> Validity:
    """Check that ``cov`` is a valid covariance on ``net`` under its metric."""
    if cov.metric == "resistance":
        return Validity(True, "completely monotone correlation of the resistance metric")
    if is_one_sum_of_trees_and_loops(net):
        return Validity(True, "network is a 1-sum of trees and loops")
    return Validity(False, "geodesic metric on a network with three distinct paths "
                           "between two points; use the resistance metric")


def require_valid(cov: IsotropicCovariance, net: LinearNetwork) -> None:
    v = validate_for_network(cov, net)
    if not v:
        raise ValidationError(v.reason)


def cov_matrix(cov: IsotropicCovariance, seg, off, engine) -> np.ndarray:
    """Covariance matrix ``sigma2 * r0(d(p_i, p_j))`` for points ``(seg, off)``."""
    d = engine.pairwise(seg, off)
    C = cov.c(d)
    return 0.5 * (C + C.T)


@dataclass
class PSDFactor:
    """``C ~= L L^T`` with ``L = E sqrt(Lambda)`` from a clipped eigendecomposition."""

    L: np.ndarray
    min_eigenvalue: float
    max_eigenvalue: float = field(default=0.0)


def psd_factor(C: np.ndarray) -> PSDFactor:
    lam, E = np.linalg.eigh(C)
    lmax = float(lam[-1]) if lam.size else 0.0
    lmin = float(lam[0]) if lam.size else 0.0
    if lmin < -PSD_REL_TOL * max(lmax, 0.0):
        raise NotPositiveSemidefinite(
            f"covariance matrix has eigenvalue {lmin:.3g} below -{PSD_REL_TOL:g} * {lmax:.3g}")
    return PSDFactor(E * np.sqrt(np.clip(lam, 0.0, None)), lmin, lmax)
