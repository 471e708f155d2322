"""Simulation of zero-mean Gaussian processes on network grids.

Three simulators are provided:

``simulate_grid_eig``
    any valid covariance on any network; factorises the grid covariance
    matrix by a clipped eigendecomposition.
``simulate_tree_markov``
    exponential covariance on a tree; walks the tree from a root and draws
    each grid node from its parent with an Ornstein-Uhlenbeck step.  Cost is
    linear in the grid size.
``simulate_bernstein_mixture``
    completely monotone covariance on a tree, approximated by averaging
    ``n`` independent exponential processes whose rates are drawn from the
    Bernstein mixing law.

All simulators accept ``n_samples`` to draw independent replicates at once;
values then have shape ``(n_samples, n_grid)``.  Values off the grid are
obtained from :meth:`GPSample.at`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import BernsteinCDF, IsotropicCovariance, cov_matrix, psd_factor, require_valid
from .exceptions import InvalidParameters, NotATree
from .metrics import make_metric
from .network import NetworkGrid, children_generations, classify_topology
from .rng import as_generator


@dataclass
class GPSample:
    """Grid values of one or more simulated fields."""

    grid: NetworkGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)
    rates: np.ndarray | None = None

    def at(self, segments, offsets) -> np.ndarray:
        """Nearest-grid-node values at arbitrary points (midpoint ties averaged)."""
        return self.grid.extend(self.values, segments, offsets)


def _draw_shape(n_samples):
    return () if n_samples is None else (int(n_samples),)


class EigenSampler:
    """Cached factor ``E sqrt(Lambda)`` of a grid covariance matrix."""

    def __init__(self, cov: IsotropicCovariance, grid: NetworkGrid):
        require_valid(cov, grid.net)
        engine = make_metric(grid.net, cov.metric)
        C = cov_matrix(cov, grid.segments, grid.offsets, engine)
        self.cov = cov
        self.grid = grid
        self.factor = psd_factor(C)

    def sample(self, rng, n_samples=None) -> GPSample:
        rng = as_generator(rng)
        n = len(self.grid)
        z = rng.standard_normal(_draw_shape(n_samples) + (n,))
        values = z @ self.factor.L.T
        return GPSample(self.grid, values, {"algorithm": "eig", **self.cov.to_dict()})


def simulate_grid_eig(cov: IsotropicCovariance, grid: NetworkGrid, rng, n_samples=None) -> GPSample:
    """Simulate ``cov`` on ``grid`` through the eigendecomposition of its matrix."""
    return EigenSampler(cov, grid).sample(rng, n_samples)


@dataclass(frozen=True)
class TreeMarkovPlan:
    """Topological order of grid nodes on a tree.

    ``node[k]`` is drawn from ``parent[k]`` at distance ``step[k]``; the
    first entry is the root and has parent ``-1``.
    """

    origin: int
    node: np.ndarray
    parent: np.ndarray
    step: np.ndarray
    generations: tuple


def tree_markov_plan(grid: NetworkGrid, origin: int = 0) -> TreeMarkovPlan:
    net = grid.net
    gens = children_generations(net, origin)
    node = [origin]
    parent = [-1]
    step = [0.0]
    done = np.zeros(net.n_vertices, dtype=bool)
    done[origin] = True
    for gen in gens[:-1]:
        for v in gen:
            for j in net.adjacency[v]:
                a, b = int(net.seg_a[j]), int(net.seg_b[j])
                w = b if a == v else a
                if done[w]:
                    continue
                nodes = grid.segment_nodes[j]
                if a != v:
                    nodes = nodes[::-1]
                h = float(net.lengths[j]) / (len(grid.segment_nodes[j]) - 1)
                for prev, cur in zip(nodes[:-1].tolist(), nodes[1:].tolist()):
                    node.append(cur)
                    parent.append(prev)
                    step.append(h)
                done[w] = True
    node = np.asarray(node, dtype=np.int64)
    if node.size != len(grid) or np.unique(node).size != node.size:
        raise NotATree("grid nodes are not covered exactly once by the tree walk")
    return TreeMarkovPlan(origin, node, np.asarray(parent, dtype=np.int64),
                          np.asarray(step), tuple(tuple(g) for g in gens))


def _markov_walk(plan: TreeMarkovPlan, sigma2: float, rate, z: np.ndarray) -> np.ndarray:
    """Run the Ornstein-Uhlenbeck recursion; ``z`` is ``(R, n)`` in plan order."""
    R, n = z.shape
    rate = np.broadcast_to(np.asarray(rate, dtype=float), (R,))
    out = np.empty((R, n))
    sd = np.sqrt(sigma2)
    out[:, plan.node[0]] = sd * z[:, 0]
    # per-step coefficients; shape (n - 1, R)
    decay = np.exp(-np.outer(plan.step[1:], rate))
    innov = sd * np.sqrt(-np.expm1(-2.0 * np.outer(plan.step[1:], rate)))
    for k in range(1, n):
        out[:, plan.node[k]] = decay[k - 1] * out[:, plan.parent[k]] + innov[k - 1] * z[:, k]
    return out


def _check_tree(net):
    if classify_topology(net) != "tree":
        raise NotATree("Markov simulation needs a tree network")


def simulate_tree_markov(net, sigma2: float, s: float, grid: NetworkGrid, rng,
                         n_samples=None, origin: int = 0, plan: TreeMarkovPlan | None = None) -> GPSample:
    """Exponential-covariance field ``sigma2 * exp(-s d)`` on a tree grid."""
    _check_tree(net)
    if not (sigma2 > 0 and s > 0):
        raise InvalidParameters("sigma2 and s must be positive")
    rng = as_generator(rng)
    plan = plan or tree_markov_plan(grid, origin)
    R = 1 if n_samples is None else int(n_samples)
    z = rng.standard_normal((R, len(grid)))
    values = _markov_walk(plan, sigma2, s, z)
    if n_samples is None:
        values = values[0]
    return GPSample(grid, values, {"algorithm": "tree", "sigma2": sigma2, "rate": s,
                                   "origin": plan.origin})


def simulate_bernstein_mixture(net, sigma2: float, F: BernsteinCDF, n: int, grid: NetworkGrid, rng,
                               n_samples=None, origin: int = 0,
                               plan: TreeMarkovPlan | None = None) -> GPSample:
    """Average of ``n`` exponential fields with rates drawn from ``F``.

    The rates are drawn first, then each field in turn; the output is
    ``sum_i Y_i / sqrt(n)``.  Realised rates are kept in ``rates``.
    """
    _check_tree(net)
    if n < 1:
        raise InvalidParameters("mixture size n must be at least 1")
    if not sigma2 > 0:
        raise InvalidParameters("sigma2 must be positive")
    rng = as_generator(rng)
    plan = plan or tree_markov_plan(grid, origin)
    R = 1 if n_samples is None else int(n_samples)
    S = np.asarray(F.sample(rng, (R, n)), dtype=float).reshape(R, n)
    total = np.zeros((R, len(grid)))
    for i in range(n):
        z = rng.standard_normal((R, len(grid)))
        total += _markov_walk(plan, sigma2, S[:, i], z)
    values = total / np.sqrt(n)
    if n_samples is None:
        values, S = values[0], S[0]
    return GPSample(grid, values, {"algorithm": "mixture", "sigma2": sigma2, "n": n,
                                   **F.to_dict()}, rates=S)


def mixture_conditional_covariance(sigma2: float, rates, t) -> np.ndarray:
    """Covariance given the realised rates: ``sigma2 * mean_i exp(-S_i t)``."""
    rates = np.asarray(rates, dtype=float)
    t = np.asarray(t, dtype=float)
    return sigma2 * np.exp(-np.multiply.outer(t, rates)).mean(axis=-1)


def simulate_gp(cov: IsotropicCovariance, grid: NetworkGrid, rng, n_samples=None,
                algorithm: str = "auto", n_mix: int = 200) -> GPSample:
    """Dispatch to a simulator.

    ``auto`` uses the Markov walk for exponential covariances on trees and
    the eigendecomposition otherwise.
    """
    net = grid.net
    rate = cov.family.exponential_rate()
    is_tree = classify_topology(net) == "tree"
    if algorithm == "auto":
        algorithm = "tree" if (is_tree and rate is not None) else "eig"
    if algorithm == "eig":
        return simulate_grid_eig(cov, grid, rng, n_samples)
    if algorithm == "tree":
        if rate is None:
            raise InvalidParameters("the Markov walk needs an exponential correlation")
        return simulate_tree_markov(net, cov.sigma2, rate, grid, rng, n_samples)
    if algorithm == "mixture":
        F = getattr(cov.family, "F", None)
        if F is None:
            raise InvalidParameters("the mixture simulator needs a Bernstein family")
        return simulate_bernstein_mixture(net, cov.sigma2, F, n_mix, grid, rng, n_samples)
    raise InvalidParameters(f"unknown algorithm {algorithm!r}")
