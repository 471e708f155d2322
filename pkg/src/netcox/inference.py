"""Nonparametric second-order estimation and minimum-contrast fitting.

The pair correlation and K-function estimators weight each ordered pair
``(u, v)`` by ``w(u, d(u, v)) / (rho(u) rho(v))``, where ``w`` is the
level-set geometry weight of the metric.  With this weight, the expected
estimator equals the kernel-smoothed pair correlation for every distance
below the network radius, whatever the shape of the network.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .covariance import IsotropicCovariance, family_from_dict
from .cox import Constant, CoxModel, PiecewiseConstant, PointPattern, pcf_closed_form
from .exceptions import (
    BandwidthNonpositive,
    EmptyPattern,
    GridMismatch,
    InvalidParameters,
    NetcoxError,
    OptimizerFailed,
    ValidationError,
)
from .metrics import make_metric, network_radius

#: default number of steps on the estimation grid [0, a2]
N_STEPS = 512


@dataclass
class SummaryCurve:
    """Summary function sampled on an increasing grid."""

    t: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.shape != self.values.shape:
            raise ValidationError("abscissa and values differ in shape")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValidationError("abscissa must be strictly increasing")


# -- intensity ---------------------------------------------------------------

def estimate_intensity(pattern: PointPattern, by_mark: bool = False):
    """Points per unit length, overall or per segment mark class."""
    net = pattern.net
    if not by_mark:
        return Constant(pattern.n / net.total_length)
    marks = net.segment_marks()
    rates = {}
    for m in sorted(set(marks.tolist())):
        on = marks == m
        count = int(np.isin(pattern.segments, np.flatnonzero(on)).sum())
        rates[m] = count / float(net.lengths[on].sum())
    return PiecewiseConstant(rates)


# -- pair enumeration ----------------------------------------------------------

@dataclass
class PairTable:
    """Ordered pairs within ``rmax``, sorted by distance.

    ``value`` holds ``w(u, d) / (rho(u) rho(v))`` for each pair.
    """

    d: np.ndarray
    value: np.ndarray
    total_length: float
    rmax: float


def pair_table(pattern: PointPattern, metric, rmax: float, intensity=None) -> PairTable:
    """Enumerate ordered pairs with ``d(u, v) <= rmax`` and their weights.

    Candidate partners of each point are restricted to the segments that
    can lie within ``rmax`` of it.
    """
    net = pattern.net
    eng = make_metric(net, metric)
    intensity = intensity if intensity is not None else estimate_intensity(pattern)
    rho = np.asarray(intensity.at(net, pattern.segments), dtype=float)
    if pattern.n and np.any(rho <= 0):
        raise ValidationError("intensity must be positive at every data point")
    i, k, d, w = eng.pairs(pattern.segments, pattern.offsets, rmax)
    v = w / (rho[i] * rho[k])
    o = np.argsort(d, kind="stable")
    d, v = d[o], v[o]
    return PairTable(d, v, net.total_length, float(rmax))


def _epanechnikov(x, b):
    u = x / b
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u) / b, 0.0)


def pcf_from_pairs(table: PairTable, t, bandwidth: float) -> np.ndarray:
    if not bandwidth > 0:
        raise BandwidthNonpositive("bandwidth must be positive")
    t = np.asarray(t, dtype=float)
    lo = np.searchsorted(table.d, t - bandwidth, side="left")
    hi = np.searchsorted(table.d, t + bandwidth, side="right")
    out = np.empty(t.shape)
    for k in range(t.size):
        sl = slice(lo[k], hi[k])
        out[k] = np.dot(_epanechnikov(t[k] - table.d[sl], bandwidth), table.value[sl])
    return out / table.total_length


def k_from_pairs(table: PairTable, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(table.value)])
    return csum[np.searchsorted(table.d, t, side="right")] / table.total_length


# -- defaults ------------------------------------------------------------------

def radius(net, metric="resistance") -> float:
    """Cached network radius ``inf_u sup_v d(u, v)`` for ``metric``."""
    eng = make_metric(net, metric)
    if not hasattr(eng, "_radius"):
        eng._radius = network_radius(eng, net.total_length / 1000.0)
    return eng._radius


def default_bandwidth(rho_hat: float, R: float) -> float:
    """``0.15 / sqrt(rho_hat)`` capped at a tenth of the network radius."""
    if not rho_hat > 0:
        raise EmptyPattern("bandwidth rule needs a positive intensity")
    return float(min(0.15 / np.sqrt(rho_hat), 0.1 * R))


def default_grid(a2: float, n_steps: int = N_STEPS) -> np.ndarray:
    return np.linspace(0.0, a2, n_steps + 1)


def _mean_intensity(pattern, intensity):
    if intensity is None:
        return pattern.n / pattern.net.total_length
    r = intensity.segment_rates(pattern.net)
    return float(np.dot(r, pattern.net.lengths) / pattern.net.total_length)


# -- estimators ----------------------------------------------------------------

def estimate_pcf(pattern: PointPattern, metric="resistance", bandwidth=None, t=None,
                 intensity=None, a2=None) -> SummaryCurve:
    """Kernel estimate of the pair correlation function.

    Parameters
    ----------
    pattern : PointPattern
    metric : {"resistance", "geodesic"}
    bandwidth : float, optional
        Epanechnikov half-width; defaults to :func:`default_bandwidth`.
    t : array-like, optional
        Evaluation grid; defaults to 512 equal steps on ``[0, a2]`` with
        ``a2`` the network radius unless given.
    intensity : Constant or PiecewiseConstant, optional
        Intensity used in the pair weights; estimated from the pattern when
        omitted.
    """
    if pattern.n == 0:
        raise EmptyPattern("cannot estimate a pair correlation from an empty pattern")
    net = pattern.net
    R = radius(net, metric)
    if bandwidth is None:
        bandwidth = default_bandwidth(_mean_intensity(pattern, intensity), R)
    if not bandwidth > 0:
        raise BandwidthNonpositive("bandwidth must be positive")
    if t is None:
        t = default_grid(R if a2 is None else a2)
    t = np.asarray(t, dtype=float)
    table = pair_table(pattern, metric, float(t.max()) + bandwidth, intensity)
    g = pcf_from_pairs(table, t, bandwidth)
    meta = {"metric": metric, "bandwidth": float(bandwidth), "reliable_from": 0.5 * bandwidth,
            "radius": R, "weights": "level-set"}
    return SummaryCurve(t, g, "pcf", meta)


def estimate_K(pattern: PointPattern, metric="resistance", t=None, intensity=None, a2=None) -> SummaryCurve:
    """Geometry-weighted K-function estimate."""
    if pattern.n == 0:
        raise EmptyPattern("cannot estimate K from an empty pattern")
    net = pattern.net
    if t is None:
        t = default_grid(radius(net, metric) if a2 is None else a2)
    t = np.asarray(t, dtype=float)
    table = pair_table(pattern, metric, float(t.max()), intensity)
    return SummaryCurve(t, k_from_pairs(table, t), "K", {"metric": metric, "weights": "level-set"})


# -- contrast ----------------------------------------------------------------------

@dataclass(frozen=True)
class ContrastConfig:
    """Integration range and exponents of the contrast ``int |g^q - g_hat^q|^p``."""

    a1: float = 0.0
    a2: float = 50.0
    p: float = 2.0
    q: float = 1.0
    max_evals: int = 500
    n_starts: int = 8

    def __post_init__(self):
        if not (0 <= self.a1 < self.a2):
            raise InvalidParameters("need 0 <= a1 < a2")
        if not (self.p > 0 and self.q > 0):
            raise InvalidParameters("p and q must be positive")


def contrast_distance(g_model: SummaryCurve, g_hat: SummaryCurve, cfg: ContrastConfig) -> float:
    """Trapezoidal ``int_{a1}^{a2} |g_model^q - g_hat^q|^p dt`` on the shared grid."""
    if g_model.t.shape != g_hat.t.shape or not np.array_equal(g_model.t, g_hat.t):
        raise GridMismatch("curves are sampled on different grids")
    t = g_model.t
    sel = (t >= cfg.a1 - 1e-12 * max(1.0, cfg.a2)) & (t <= cfg.a2 * (1 + 1e-12))
    if sel.sum() < 2:
        raise GridMismatch("fewer than two grid points in [a1, a2]")
    diff = np.abs(np.power(g_model.values[sel], cfg.q) - np.power(g_hat.values[sel], cfg.q)) ** cfg.p
    return float(np.trapezoid(diff, t[sel]))


# -- model parameterisation for fitting ------------------------------------------

# bounds used by the fitting transforms: (lower, upper); upper None = unbounded
_PARAM_BOUNDS = {
    "sigma2": (0.0, None), "rate": (0.0, None), "phi": (0.0, None), "tau": (0.0, None),
    "psi": (0.0, None), "chi": (0.0, None), "s": (0.0, None),
}
_UNIT_PARAMS = {"alpha": 1.0}


def _family_param_names(family: str, mixing: str | None):
    if family == "exponential":
        return ["rate"]
    if family == "powered_exponential":
        return ["phi", "alpha"]
    if family == "matern":
        return ["phi", "alpha"]
    if family == "gencauchy":
        return ["phi", "alpha", "tau"]
    if family == "dagum":
        return ["phi", "tau", "alpha"]
    if family == "bernstein":
        return {"gamma": ["tau", "phi"], "inverse_gamma": ["tau", "phi"],
                "gig": ["psi", "chi", "lam"], "degenerate": ["s"]}[mixing]
    raise InvalidParameters(f"unknown family {family!r}")


def build_model(kind: str, family: str, params: dict, h: int = 1, intensity=None,
                metric: str = "resistance", mixing: str | None = None) -> CoxModel:
    """Cox model from flat parameters (``sigma2`` plus family parameters)."""
    fp = {k: params[k] for k in _family_param_names(family, mixing)}
    if family == "bernstein":
        fam = family_from_dict("bernstein", {"F": mixing, **fp})
    else:
        fam = family_from_dict("powered_exponential" if family == "powered_exponential" else family, fp)
    sigma2 = 1.0 if kind == "pcpp" else float(params["sigma2"])
    cov = IsotropicCovariance(sigma2, fam, metric)
    return CoxModel(kind, intensity if intensity is not None else Constant(1.0), cov, int(h))


def _default_start(name: str, a2: float, mixing: str | None):
    if name == "sigma2":
        return 1.0
    if name == "rate":
        return 10.0 / a2
    if name == "alpha":
        return 0.5
    if name == "lam":
        return 0.5
    if name == "tau":
        return 2.0
    if name == "phi":
        # rate-type scale for the mixing laws, length scale otherwise
        return 10.0 / a2 if mixing == "inverse_gamma" else a2 / 10.0
    if name in ("psi", "chi"):
        return 1.0
    if name == "s":
        return 10.0 / a2
    return 1.0


def _to_free(name, x):
    if name in _UNIT_PARAMS:
        u = _UNIT_PARAMS[name]
        y = min(max(x / u, 1e-12), 1 - 1e-12)
        return float(np.log(y / (1 - y)))
    if name == "lam":
        return float(x)
    return float(np.log(x))


def _from_free(name, th):
    if name in _UNIT_PARAMS:
        return _UNIT_PARAMS[name] / (1.0 + np.exp(-th))
    if name == "lam":
        return float(th)
    return float(np.exp(th))


@dataclass
class FitResult:
    """Outcome of a minimum-contrast fit."""

    model: CoxModel
    params: dict
    D: float
    converged: bool
    h: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "params": self.params, "D": self.D,
                "converged": self.converged, "h": self.h, "diagnostics": self.diagnostics}


def _converged(res) -> bool:
    # on non-identifiable ridges (e.g. sigma2 -> inf for icp) the simplex keeps
    # drifting in parameter space while D is flat; count that as converged
    if res.success:
        return True
    f = res.final_simplex[1]
    return bool(np.all(np.isfinite(f)) and np.ptp(f) <= 1e-10 * (1.0 + abs(res.fun)))


def _fit_fixed_h(g_hat, kind, family, mixing, cfg, free, fixed, h, start, rng, metric):
    t = g_hat.t
    names = list(free)

    def unpack(theta):
        p = dict(fixed)
        for n, th in zip(names, theta):
            p[n] = _from_free(n, th)
        return p

    def objective(theta):
        try:
            p = unpack(theta)
            m = build_model(kind, family, p, h, metric=metric, mixing=mixing)
            g = pcf_closed_form(m, t)
        except (NetcoxError, ValueError, FloatingPointError, OverflowError):
            return np.inf
        if not np.all(np.isfinite(g)):
            return np.inf
        return contrast_distance(SummaryCurve(t, g, "pcf"), g_hat, cfg)

    x0 = np.array([_to_free(n, start[n]) for n in names])
    best = None
    converged_any = False
    runs = []
    for k in range(cfg.n_starts):
        xs = x0 if k == 0 else x0 + rng.normal(0.0, 1.0, x0.size)
        with np.errstate(all="ignore"):
            res = optimize.minimize(objective, xs, method="Nelder-Mead",
                                    options={"maxfev": cfg.max_evals, "xatol": 1e-9, "fatol": 1e-14,
                                             "adaptive": x0.size > 2})
        ok = _converged(res)
        runs.append({"D": float(res.fun), "success": ok, "nfev": int(res.nfev)})
        converged_any |= ok
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise OptimizerFailed("no start produced a finite contrast")
    # polish from the best point with a fresh simplex
    with np.errstate(all="ignore"):
        pol = optimize.minimize(objective, best.x, method="Nelder-Mead",
                                options={"maxfev": cfg.max_evals, "xatol": 1e-10, "fatol": 1e-15,
                                         "adaptive": x0.size > 2})
    if pol.fun <= best.fun:
        best = pol
        converged_any |= _converged(pol)
    return unpack(best.x), float(best.fun), converged_any, runs


def fit_min_contrast(g_hat: SummaryCurve, kind: str, family: str = "exponential",
                     cfg: ContrastConfig | None = None, free=None, fixed=None, h=None, h_max: int = 5,
                     seed: int = 0, start=None, mixing: str | None = None,
                     metric: str = "resistance", intensity=None) -> FitResult:
    """Fit a Cox model by minimising the pcf contrast.

    Parameters
    ----------
    g_hat : SummaryCurve
        Nonparametric pair correlation on its grid.
    kind : {"lgcp", "icp", "pcpp"}
    family : str
        Correlation family (``exponential`` is parameterised by its rate).
    free, fixed : optional
        Names of parameters to fit and a mapping of values held fixed; by
        default every parameter of the model is free.
    h : int, optional
        Number of fields for icp/pcpp; scanned over ``1..h_max`` when omitted.
    mixing : str, optional
        Mixing law name when ``family="bernstein"``.
    """
    cfg = cfg or ContrastConfig()
    fixed = dict(fixed or {})
    all_names = ([] if kind == "pcpp" else ["sigma2"]) + _family_param_names(family, mixing)
    free = [n for n in (free if free is not None else all_names) if n not in fixed]
    unknown = set(free) - set(all_names)
    if unknown:
        raise InvalidParameters(f"unknown parameters {sorted(unknown)}")
    missing = set(all_names) - set(free) - set(fixed)
    if missing:
        raise InvalidParameters(f"parameters neither free nor fixed: {sorted(missing)}")
    start = {n: (start or {}).get(n, _default_start(n, cfg.a2, mixing)) for n in free}
    if kind == "lgcp":
        hs = [1]
    elif h is not None:
        hs = [int(h)]
    else:
        hs = list(range(1, h_max + 1))
    best = None
    for hh in hs:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(hh,)))
        if not free:
            p = dict(fixed)
            m = build_model(kind, family, p, hh, metric=metric, mixing=mixing)
            D = contrast_distance(SummaryCurve(g_hat.t, pcf_closed_form(m, g_hat.t), "pcf"), g_hat, cfg)
            cand = (p, D, True, [])
        else:
            cand = _fit_fixed_h(g_hat, kind, family, mixing, cfg, free, fixed, hh, start, rng, metric)
        if best is None or cand[1] < best[1][1]:
            best = (hh, cand)
    hh, (params, D, conv, runs) = best
    if not conv:
        raise OptimizerFailed("no optimizer start converged")
    model = build_model(kind, family, params, hh, intensity=intensity, metric=metric, mixing=mixing)
    params = {k: float(v) for k, v in params.items()}
    return FitResult(model, params, D, conv, hh,
                     {"starts": runs, "free": free, "fixed": fixed, "a1": cfg.a1, "a2": cfg.a2,
                      "p": cfg.p, "q": cfg.q})


def fit_pattern(pattern: PointPattern, kind: str, family: str = "exponential",
                cfg: ContrastConfig | None = None, metric: str = "resistance", bandwidth=None,
                by_mark: bool = False, **kwargs) -> tuple[FitResult, SummaryCurve]:
    """Estimate intensity and pcf from ``pattern`` and fit ``kind`` to them."""
    cfg = cfg or ContrastConfig()
    if pattern.n < 2:
        raise OptimizerFailed("minimum contrast needs at least two points",
                              cause=EmptyPattern("pattern has fewer than two points"))
    intensity = estimate_intensity(pattern, by_mark)
    g_hat = estimate_pcf(pattern, metric, bandwidth, default_grid(cfg.a2), intensity)
    res = fit_min_contrast(g_hat, kind, family, cfg, metric=metric, intensity=intensity, **kwargs)
    return res, g_hat
