"""Empty-space, nearest-neighbour and J functions, and global envelope tests.

``F(r)`` is the length-weighted fraction of the network (represented by
grid nodes) within distance ``r`` of the pattern, ``G(r)`` the fraction of
data points whose nearest neighbour is within ``r``, and
``J = (1 - G) / (1 - F)``.  For inhomogeneous patterns each data point ``x``
counts through an independent thinning with retention probability
``rho_min / rho(x)``, which turns the indicators into products; with a
constant intensity these reduce to the plain fractions.

The envelope test concatenates ``F``, ``G`` and ``J`` into one long curve
and orders the data and simulated curves by extreme rank length.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .cox import CoxModel, CoxSimulator, PointPattern
from .exceptions import EmptyPattern, GridMismatch, ValidationError
from .metrics import make_metric
from .network import NetworkGrid, make_grid
from .rng import stream

#: J is left undefined where F is this close to one
F_CEILING = 1.0 - 1e-9
N_R = 128
N_PILOT = 39


@dataclass
class FGJCurves:
    r: np.ndarray
    F: np.ndarray
    G: np.ndarray
    J: np.ndarray

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.F, self.G, self.J])


def _node_lengths(grid: NetworkGrid) -> np.ndarray:
    # half of each adjacent grid interval belongs to a node
    seg, _, length, node = grid.cells()
    w = np.zeros(len(grid))
    np.add.at(w, node, length)
    return w


def _survival(dist, logq, r):
    """``mean_u prod_{x : d(u,x) <= r} q(x)`` with ``log q`` given per column."""
    order = np.argsort(dist, axis=1, kind="stable")
    ds = np.take_along_axis(dist, order, axis=1)
    cl = np.cumsum(logq[order], axis=1)
    cl = np.concatenate([np.zeros((ds.shape[0], 1)), cl], axis=1)
    out = np.empty((ds.shape[0], r.size))
    for i in range(ds.shape[0]):
        out[i] = np.exp(cl[i, np.searchsorted(ds[i], r, side="right")])
    return out


def empirical_FGJ(pattern: PointPattern, metric="resistance", r=None, eval_grid: NetworkGrid | None = None,
                  intensity=None, grid_spacing: float | None = None) -> FGJCurves:
    """Network F, G and J functions on the grid ``r``.

    Parameters
    ----------
    pattern : PointPattern
    metric : {"resistance", "geodesic"}
    r : array-like
        Increasing distances starting at 0.
    eval_grid : NetworkGrid, optional
        Locations that represent the network for ``F``; defaults to a grid
        with ``grid_spacing`` (a hundredth of the total length when omitted).
    intensity : optional
        Intensity model for the thinning weights; constant when omitted.
    """
    if pattern.n < 2:
        raise EmptyPattern("G needs at least two points")
    net = pattern.net
    eng = make_metric(net, metric)
    r = np.asarray(r, dtype=float)
    if eval_grid is None:
        eval_grid = make_grid(net, grid_spacing or net.total_length / 100.0)
    if intensity is None:
        q = np.zeros(pattern.n)
    else:
        rho = np.asarray(intensity.at(net, pattern.segments), dtype=float)
        q = 1.0 - rho.min() / rho
    with np.errstate(divide="ignore"):
        logq = np.log(q)
    w = _node_lengths(eval_grid)
    d_eval = eng.cross(eval_grid.segments, eval_grid.offsets, pattern.segments, pattern.offsets)
    F = 1.0 - np.dot(w, _survival(d_eval, logq, r)) / w.sum()
    d_data = eng.pairwise(pattern.segments, pattern.offsets)
    np.fill_diagonal(d_data, np.inf)
    G = 1.0 - _survival(d_data, logq, r).mean(axis=0)
    F = np.clip(F, 0.0, 1.0)
    G = np.clip(G, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        J = np.where(F < F_CEILING, (1.0 - G) / (1.0 - F), np.nan)
    return FGJCurves(r, F, G, J)


# -- global envelope test ----------------------------------------------------------

@dataclass
class EnvelopeResult:
    data: np.ndarray
    sims: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    p_value: float
    measure: str = "erl"
    r: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"p_value": self.p_value, "measure": self.measure, "n_sims": int(self.sims.shape[0]),
                "data": self.data, "lower": self.lower, "upper": self.upper,
                "r": self.r, **self.meta}


def erl_order(curves: np.ndarray) -> np.ndarray:
    """Curve indices from most extreme to most central.

    Pointwise two-sided ranks are sorted per curve; the sorted vectors are
    compared lexicographically (smaller is more extreme) and ties go to the
    lower curve index.
    """
    n = curves.shape[0]
    rk = rankdata(curves, method="average", axis=0)
    two = np.minimum(rk, n + 1 - rk)
    vec = np.sort(two, axis=1)
    keys = [np.arange(n)] + [vec[:, j] for j in range(vec.shape[1] - 1, -1, -1)]
    return np.lexsort(keys), vec


def global_envelope_test(data, sims, level: float = 0.95) -> EnvelopeResult:
    """Extreme rank length envelope test of ``data`` against ``sims``."""
    data = np.asarray(data, dtype=float)
    sims = np.asarray(sims, dtype=float)
    if sims.ndim != 2 or sims.shape[1] != data.size:
        raise GridMismatch("simulated curves and data curve have different grids")
    s = sims.shape[0]
    if s < 99:
        raise ValidationError("the envelope test needs at least 99 simulations")
    if s < 999:
        warnings.warn("fewer than 999 simulations; p-values are coarse", stacklevel=2)
    curves = np.vstack([data, sims])
    order, vec = erl_order(curves)
    # sims at least as extreme as the data, ties included
    more = 0
    for j in range(1, s + 1):
        a, b = vec[j], vec[0]
        diff = np.flatnonzero(a != b)
        if diff.size == 0 or a[diff[0]] < b[diff[0]]:
            more += 1
    p = (1 + more) / (s + 1)
    k = math.ceil(level * (s + 1) - 1e-9)
    central = order[::-1][:k]
    lower = curves[central].min(axis=0)
    upper = curves[central].max(axis=0)
    return EnvelopeResult(data, sims, lower, upper, float(p))


def _fgj_matrix(curves: list[FGJCurves]) -> tuple[np.ndarray, np.ndarray]:
    M = np.vstack([c.concatenated() for c in curves])
    keep = np.all(np.isfinite(M), axis=0)
    return M[:, keep], keep


def r_grid_from_pilot(sim: CoxSimulator, metric, seed, eval_grid, intensity, n_pilot=N_PILOT,
                      n_r=N_R, level=0.9) -> np.ndarray:
    """``n_r`` distances from 0 to where the mean simulated ``F`` reaches ``level``."""
    net = sim.grid.net
    eng = make_metric(net, metric)
    rmax = max(eng.eccentricity(int(s), float(o)) for s, o in
               zip(eval_grid.segments[:net.n_vertices], eval_grid.offsets[:net.n_vertices]))
    fine = np.linspace(0.0, rmax, 1025)
    Fs = []
    for i in range(n_pilot):
        x = sim.simulate(stream(seed, 0, i))
        if x.n < 2:
            continue
        Fs.append(empirical_FGJ(x, metric, fine, eval_grid, intensity).F)
    if not Fs:
        raise EmptyPattern("pilot simulations produced no usable patterns")
    meanF = np.mean(Fs, axis=0)
    k = int(np.searchsorted(meanF, level))
    rstar = fine[min(k, fine.size - 1)]
    if rstar <= 0:
        rstar = fine[1]
    return np.linspace(0.0, rstar, n_r)


def envelope_pipeline(model: CoxModel, pattern: PointPattern, s: int = 999, seed: int = 0,
                      metric="resistance", grid_spacing: float | None = None, r=None,
                      level: float = 0.95, eval_grid: NetworkGrid | None = None,
                      simulator: CoxSimulator | None = None) -> EnvelopeResult:
    """Global envelope test of ``pattern`` against simulations of ``model``.

    Simulation ``i`` uses the stream ``(seed, 1, i)``; the pilot run that
    fixes the distance grid uses ``(seed, 0, i)``.  Simulated patterns with
    fewer than two points are redrawn from ``(seed, 2, i, attempt)``.
    """
    net = pattern.net
    if grid_spacing is None:
        grid_spacing = net.total_length / 1000.0
    sim = simulator or CoxSimulator(model, make_grid(net, grid_spacing))
    eval_grid = eval_grid or sim.grid
    intensity = model.intensity
    if r is None:
        r = r_grid_from_pilot(sim, metric, seed, eval_grid, intensity)
    data = empirical_FGJ(pattern, metric, r, eval_grid, intensity)
    curves = [data]
    for i in range(s):
        x = sim.simulate(stream(seed, 1, i))
        attempt = 0
        while x.n < 2:
            x = sim.simulate(stream(seed, 2, i, attempt))
            attempt += 1
            if attempt > 100:
                raise EmptyPattern("model rarely produces two or more points")
        curves.append(empirical_FGJ(x, metric, r, eval_grid, intensity))
    M, keep = _fgj_matrix(curves)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = global_envelope_test(M[0], M[1:], level)
    res.r = np.asarray(r)
    res.meta = {"columns_kept": int(keep.sum()), "columns_total": int(keep.size), "seed": seed,
                "metric": metric, "level": level}
    return res


def plot_envelope(result: EnvelopeResult, path) -> None:
    """Static SVG of the concatenated data curve and its envelope."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "netcox"
    x = np.arange(result.data.size)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.fill_between(x, result.lower, result.upper, color="0.8", label=f"{result.meta.get('level', 0.95):.0%} global envelope")
    ax.plot(x, result.data, color="k", lw=1, label="data")
    ax.set_xlabel("index in concatenated F, G, J")
    ax.set_ylabel("value")
    ax.set_title(f"extreme rank length test, p = {result.p_value:.3f}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
