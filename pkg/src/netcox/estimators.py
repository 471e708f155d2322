"""Estimator classes with the scikit-learn ``fit`` / ``predict`` protocol.

``fit`` takes a :class:`~netcox.cox.PointPattern`; hyper-parameters are
constructor arguments, so ``get_params`` / ``set_params`` and ``clone``
work as usual.  Fitted state lives in attributes with a trailing
underscore.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid, check_metric, check_pattern
from .cox import pcf_closed_form
from .inference import (
    ContrastConfig,
    SummaryCurve,
    default_grid,
    estimate_intensity,
    estimate_K,
    estimate_pcf,
    fit_min_contrast,
    fit_pattern,
    radius,
)


class IntensityEstimator(BaseEstimator):
    """Points per unit length, optionally per segment mark class."""

    def __init__(self, by_mark: bool = False):
        self.by_mark = by_mark

    def fit(self, X, y=None):
        X = check_pattern(X, 0)
        self.intensity_ = estimate_intensity(X, self.by_mark)
        self.network_ = X.net
        return self

    def predict(self, segments):
        """Fitted intensity on the given segments."""
        check_is_fitted(self, "intensity_")
        return self.intensity_.at(self.network_, segments)


class _CurveEstimator(BaseEstimator):
    def predict(self, t):
        """Linear interpolation of the fitted curve at ``t``."""
        check_is_fitted(self, "curve_")
        return np.interp(np.asarray(t, dtype=float), self.curve_.t, self.curve_.values)

    def transform(self, X):
        """Curve values of a new pattern on the fitted grid."""
        check_is_fitted(self, "curve_")
        return self._estimate(check_pattern(X), self.curve_.t).values


class PCFEstimator(_CurveEstimator):
    """Kernel pair correlation estimator.

    Parameters
    ----------
    metric : {"resistance", "geodesic"}
    bandwidth : float, optional
        Epanechnikov half-width; by default ``0.15 / sqrt(rho_hat)`` capped
        at a tenth of the network radius.
    a2 : float, optional
        Upper end of the default grid (network radius when omitted).
    t : array-like, optional
        Explicit evaluation grid; overrides ``a2``.
    intensity : optional
        Known intensity model; estimated from each pattern when omitted.
    """

    def __init__(self, metric="resistance", bandwidth=None, a2=None, t=None, intensity=None):
        self.metric = metric
        self.bandwidth = bandwidth
        self.a2 = a2
        self.t = t
        self.intensity = intensity

    def _estimate(self, X, t):
        return estimate_pcf(X, self.metric, self.bandwidth, t, self.intensity)

    def fit(self, X, y=None):
        X = check_pattern(X)
        check_metric(self.metric)
        t = check_grid(self.t) if self.t is not None else default_grid(
            self.a2 if self.a2 is not None else radius(X.net, self.metric))
        self.curve_ = self._estimate(X, t)
        self.bandwidth_ = self.curve_.meta["bandwidth"]
        return self


class KFunctionEstimator(_CurveEstimator):
    """Geometry-weighted K-function estimator."""

    def __init__(self, metric="resistance", a2=None, t=None, intensity=None):
        self.metric = metric
        self.a2 = a2
        self.t = t
        self.intensity = intensity

    def _estimate(self, X, t):
        return estimate_K(X, self.metric, t, self.intensity)

    def fit(self, X, y=None):
        X = check_pattern(X)
        check_metric(self.metric)
        t = check_grid(self.t) if self.t is not None else default_grid(
            self.a2 if self.a2 is not None else radius(X.net, self.metric))
        self.curve_ = self._estimate(X, t)
        return self


class MinContrastCoxEstimator(BaseEstimator):
    """Fit a Cox model to a pattern by minimum contrast on the pcf.

    Parameters
    ----------
    kind : {"lgcp", "icp", "pcpp"}
    family : str
        Correlation family; ``"bernstein"`` needs ``mixing``.
    a1, a2, p, q : float
        Contrast range and exponents.
    fixed : dict, optional
        Parameters held at given values.
    h : int, optional
        Number of fields for icp/pcpp; scanned over ``1..h_max`` if omitted.
    by_mark : bool
        Estimate a separate intensity for each segment mark class.
    """

    def __init__(self, kind="lgcp", family="exponential", mixing=None, metric="resistance",
                 a1=0.0, a2=50.0, p=2.0, q=1.0, bandwidth=None, fixed=None, h=None, h_max=5,
                 n_starts=8, max_evals=500, by_mark=False, seed=0):
        self.kind = kind
        self.family = family
        self.mixing = mixing
        self.metric = metric
        self.a1 = a1
        self.a2 = a2
        self.p = p
        self.q = q
        self.bandwidth = bandwidth
        self.fixed = fixed
        self.h = h
        self.h_max = h_max
        self.n_starts = n_starts
        self.max_evals = max_evals
        self.by_mark = by_mark
        self.seed = seed

    def _config(self):
        return ContrastConfig(self.a1, self.a2, self.p, self.q, self.max_evals, self.n_starts)

    def fit(self, X, y=None):
        """Fit to a pattern, or to a precomputed pcf curve passed as ``X``."""
        check_metric(self.metric)
        cfg = self._config()
        if isinstance(X, SummaryCurve):
            g_hat = X
            res = fit_min_contrast(g_hat, self.kind, self.family, cfg, fixed=self.fixed, h=self.h,
                                   h_max=self.h_max, seed=self.seed, mixing=self.mixing,
                                   metric=self.metric)
        else:
            res, g_hat = fit_pattern(check_pattern(X), self.kind, self.family, cfg, self.metric,
                                     self.bandwidth, self.by_mark, fixed=self.fixed, h=self.h,
                                     h_max=self.h_max, seed=self.seed, mixing=self.mixing)
        self.result_, self.pcf_ = res, g_hat
        self.model_, self.params_, self.contrast_ = res.model, res.params, res.D
        return self

    def predict(self, t):
        """Fitted model pair correlation at ``t``."""
        check_is_fitted(self, "model_")
        return pcf_closed_form(self.model_, np.asarray(t, dtype=float))

    def score(self, X=None, y=None):
        """Negative contrast at the optimum (larger is better)."""
        check_is_fitted(self, "model_")
        return -self.contrast_
