"""Input checks shared by the estimator classes."""
from __future__ import annotations

import numpy as np

from .cox import PointPattern
from .exceptions import EmptyPattern, ValidationError
from .network import LinearNetwork


def check_pattern(X, min_points: int = 1) -> PointPattern:
    """Return ``X`` if it is a point pattern with at least ``min_points`` points."""
    if not isinstance(X, PointPattern):
        raise ValidationError(f"expected a PointPattern, got {type(X).__name__}")
    if X.n < min_points:
        raise EmptyPattern(f"pattern has {X.n} points; at least {min_points} needed")
    return X


def check_network(net) -> LinearNetwork:
    if not isinstance(net, LinearNetwork):
        raise ValidationError(f"expected a LinearNetwork, got {type(net).__name__}")
    return net


def check_metric(metric: str) -> str:
    if metric not in ("geodesic", "resistance"):
        raise ValidationError(f"metric must be 'geodesic' or 'resistance', got {metric!r}")
    return metric


def check_grid(t) -> np.ndarray:
    t = np.asarray(t, dtype=float).ravel()
    if t.size == 0 or np.any(~np.isfinite(t)) or np.any(t < 0):
        raise ValidationError("evaluation grid must be finite, non-negative and non-empty")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("evaluation grid must be strictly increasing")
    return t
