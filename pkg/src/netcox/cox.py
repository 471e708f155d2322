"""Point patterns, intensity models and Cox processes on networks.

Three Cox models are built from zero-mean Gaussian fields ``Y``:

* log Gaussian (``lgcp``): ``Lambda = rho * exp(Y - sigma2 / 2)``;
* interrupted (``icp``): a Poisson process of intensity
  ``rho * (1 + sigma2)^(h/2)`` thinned independently with retention
  probability ``exp(-sum_i Y_i^2 / 2)`` for ``h`` independent fields.  This
  is the retention whose pair correlation is :func:`pcf_closed_form`; with
  ``exp(-sum_i Y_i^2)`` the pair correlation would be that of variance
  ``2 sigma2``;
* permanental (``pcpp``): ``Lambda = rho * sum_i Y_i^2 / h`` with unit
  variance fields.

Random intensities are held piecewise constant on the half-interval cells
around grid nodes, which is the nearest-node extension of the grid field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import IsotropicCovariance
from .exceptions import InvalidModel, InvalidParameters, ValidationError
from .gp_sim import EigenSampler, simulate_bernstein_mixture, tree_markov_plan, _markov_walk
from .network import LinearNetwork, NetworkGrid, classify_topology
from .rng import as_generator


# -- intensities ---------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """Homogeneous intensity ``rho``."""

    rho: float

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho >= 0):
            raise InvalidParameters(f"intensity must be finite and non-negative, got {self.rho!r}")

    def segment_rates(self, net: LinearNetwork) -> np.ndarray:
        return np.full(net.n_segments, float(self.rho))

    def at(self, net: LinearNetwork, segments) -> np.ndarray:
        return np.full(np.shape(segments), float(self.rho))

    def to_dict(self) -> dict:
        return {"type": "constant", "rho": self.rho}


@dataclass(frozen=True)
class PiecewiseConstant:
    """One rate per segment mark class (e.g. ``{"main": 0.119, "side": 0.184}``)."""

    rates: dict

    def __post_init__(self):
        for k, v in self.rates.items():
            if not (np.isfinite(v) and v >= 0):
                raise InvalidParameters(f"rate for {k!r} must be finite and non-negative")

    def segment_rates(self, net: LinearNetwork) -> np.ndarray:
        marks = net.segment_marks()
        missing = set(marks.tolist()) - set(self.rates)
        if missing:
            raise InvalidParameters(f"no rate for segment marks {sorted(missing)}")
        return np.array([float(self.rates[m]) for m in marks])

    def at(self, net: LinearNetwork, segments) -> np.ndarray:
        return self.segment_rates(net)[np.asarray(segments, dtype=np.int64)]

    def to_dict(self) -> dict:
        return {"type": "piecewise", "rates": dict(self.rates)}


def intensity_from_dict(d: dict):
    kind = d.get("type", "constant")
    if kind == "constant":
        return Constant(float(d["rho"]))
    if kind == "piecewise":
        return PiecewiseConstant({str(k): float(v) for k, v in d["rates"].items()})
    raise InvalidParameters(f"unknown intensity type {kind!r}")


# -- point patterns --------------------------------------------------------------

class PointPattern:
    """Simple point pattern on a network, addressed by ``(segment, offset)``.

    Points at a vertex are stored in the vertex's canonical form so that
    duplicates are detected across incident segments.
    """

    def __init__(self, net: LinearNetwork, segments, offsets, marks=None):
        seg, off = net.check_points(segments, offsets)
        vert = net.vertex_of(seg, off)
        for k in np.flatnonzero(vert >= 0):
            p = net.vertex_point(int(vert[k]))
            seg[k], off[k] = p.segment, p.offset
        if seg.size > 1:
            key = np.stack([seg.astype(float), off], axis=1)
            if np.unique(key, axis=0).shape[0] != seg.size:
                raise ValidationError("point pattern contains duplicate points")
        self.net = net
        #: size of the unthinned pattern, set by the interrupted-model simulator
        self.dominating_count = None
        self.segments = seg
        self.offsets = off
        self.marks = None if marks is None else np.asarray(marks, dtype=object)
        if self.marks is not None and self.marks.shape != seg.shape:
            raise ValidationError("one mark per point is required")

    def __len__(self):
        return int(self.segments.size)

    @property
    def n(self) -> int:
        return len(self)

    def xy(self) -> np.ndarray:
        return self.net.xy(self.segments, self.offsets)

    def __repr__(self):
        return f"PointPattern(n={self.n}, network={self.net!r})"


def simulate_poisson(intensity, net: LinearNetwork, rng) -> PointPattern:
    """Poisson process with a segment-wise constant intensity."""
    rng = as_generator(rng)
    rates = intensity.segment_rates(net)
    counts = rng.poisson(rates * net.lengths)
    seg = np.repeat(np.arange(net.n_segments), counts)
    off = rng.uniform(0.0, 1.0, seg.size) * net.lengths[seg]
    return PointPattern(net, seg, off)


def _poisson_on_cells(net, cell_seg, cell_start, cell_len, rates, rng) -> PointPattern:
    counts = rng.poisson(rates * cell_len)
    k = np.repeat(np.arange(cell_seg.size), counts)
    off = cell_start[k] + rng.uniform(0.0, 1.0, k.size) * cell_len[k]
    return PointPattern(net, cell_seg[k], off)


# -- Cox models ----------------------------------------------------------------

_KINDS = ("lgcp", "icp", "pcpp")


@dataclass(frozen=True)
class CoxModel:
    """Cox process ``Lambda = rho * Lambda0`` with ``E Lambda0 = 1``."""

    kind: str
    intensity: object
    cov: IsotropicCovariance
    h: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidModel(f"unknown model kind {self.kind!r}; choose from {_KINDS}")
        if int(self.h) != self.h or self.h < 1:
            raise InvalidModel("h must be a positive integer")
        if self.kind == "pcpp" and self.cov.sigma2 != 1.0:
            raise InvalidModel("the permanental model needs unit variance fields (sigma2 = 1)")

    @property
    def n_fields(self) -> int:
        return 1 if self.kind == "lgcp" else int(self.h)

    def pcf(self, t):
        return pcf_closed_form(self, t)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "intensity": self.intensity.to_dict(), "cov": self.cov.to_dict()}
        if self.kind != "lgcp":
            d["h"] = int(self.h)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoxModel":
        try:
            return cls(str(d["kind"]), intensity_from_dict(d["intensity"]),
                       IsotropicCovariance.from_dict(d["cov"]), int(d.get("h", 1)))
        except KeyError as exc:
            raise InvalidModel(f"model description lacks {exc}") from exc


def pcf_closed_form(model: CoxModel, t):
    """Pair correlation ``g0(t)`` of the model."""
    r = model.cov.family.r0(t)
    s2 = model.cov.sigma2
    if model.kind == "lgcp":
        return np.exp(s2 * r)
    if model.kind == "icp":
        a = (1.0 + s2) ** 2
        return (a / (a - (s2 * r) ** 2)) ** (model.h / 2.0)
    return 1.0 + r * r / (model.h / 2.0)


def mean_selection_prob(sigma2: float, h: int = 1) -> float:
    """``(1 + 2 sigma2)^(-h/2)``, the mean of ``exp(-sum_i Y_i^2)``.

    This is the tabulated selection probability that accompanies
    :func:`cluster_index`.  The simulator thins with ``exp(-sum_i Y_i^2 / 2)``
    so that its patterns have the pair correlation :func:`pcf_closed_form`;
    its realised retention mean is ``mean_selection_prob(sigma2 / 2, h)``.
    """
    return float((1.0 + 2.0 * sigma2) ** (-h / 2.0))


def cluster_index(kind: str, sigma2: float = 1.0, h: int = 1) -> float:
    """``g0(0) - 1`` for each model kind."""
    if kind == "lgcp":
        return float(math.expm1(sigma2))
    if kind == "icp":
        return float(math.exp(h * math.log1p(sigma2) - 0.5 * h * math.log1p(2.0 * sigma2)) - 1.0)
    if kind == "pcpp":
        return 2.0 / h
    raise InvalidModel(f"unknown model kind {kind!r}")


def lgcp_nth_intensity(rho_values, cov: IsotropicCovariance, distances) -> float:
    """``prod rho(u_i) * exp(sum_{i<j} c(u_i, u_j))`` for the log Gaussian model.

    ``distances`` is the pairwise distance matrix of the ``n`` points.
    """
    rho = np.asarray(rho_values, dtype=float).ravel()
    D = np.asarray(distances, dtype=float).reshape(rho.size, rho.size)
    iu = np.triu_indices(rho.size, 1)
    return float(np.prod(rho) * np.exp(np.sum(cov.c(D[iu]))))


class CoxSimulator:
    """Repeated simulation of a Cox model on a fixed grid.

    The Gaussian-field sampler is prepared once: the Markov walk is used for
    exponential covariances on trees, the Bernstein mixture with ``n_mix``
    components when ``algorithm="mixture"``, and the eigendecomposition
    otherwise.
    """

    def __init__(self, model: CoxModel, grid: NetworkGrid, algorithm: str = "auto", n_mix: int = 200):
        self.model = model
        self.grid = grid
        net = grid.net
        cov = model.cov
        rate = cov.family.exponential_rate()
        is_tree = classify_topology(net) == "tree"
        if algorithm == "auto":
            algorithm = "tree" if (is_tree and rate is not None) else "eig"
        self.algorithm = algorithm
        self.n_mix = int(n_mix)
        if algorithm == "eig":
            self._eig = EigenSampler(cov, grid)
        elif algorithm in ("tree", "mixture"):
            if not is_tree:
                raise InvalidModel(f"algorithm {algorithm!r} needs a tree network")
            if algorithm == "tree" and rate is None:
                raise InvalidModel("the Markov walk needs an exponential correlation")
            if algorithm == "mixture" and getattr(cov.family, "F", None) is None:
                raise InvalidModel("the mixture simulator needs a Bernstein family")
            self._plan = tree_markov_plan(grid)
            self._rate = rate
        else:
            raise InvalidModel(f"unknown algorithm {algorithm!r}")
        self._cells = grid.cells()
        self._cell_rho = model.intensity.segment_rates(net)[self._cells[0]]

    def fields(self, rng, count: int) -> np.ndarray:
        """``count`` independent grid fields, shape ``(count, n_grid)``."""
        rng = as_generator(rng)
        cov = self.model.cov
        if self.algorithm == "eig":
            return self._eig.sample(rng, count).values.reshape(count, -1)
        if self.algorithm == "tree":
            z = rng.standard_normal((count, len(self.grid)))
            return _markov_walk(self._plan, cov.sigma2, self._rate, z)
        return simulate_bernstein_mixture(self.grid.net, cov.sigma2, cov.family.F, self.n_mix,
                                          self.grid, rng, count, plan=self._plan).values

    def simulate(self, rng, n_samples: int | None = None):
        """One pattern, or a list of ``n_samples`` patterns."""
        rng = as_generator(rng)
        R = 1 if n_samples is None else int(n_samples)
        m = self.model
        nf = m.n_fields
        Y = self.fields(rng, R * nf).reshape(R, nf, -1)
        cseg, cstart, clen, cnode = self._cells
        net = self.grid.net
        out = []
        for r in range(R):
            if m.kind == "lgcp":
                lam = self._cell_rho * np.exp(Y[r, 0, cnode] - 0.5 * m.cov.sigma2)
                out.append(_poisson_on_cells(net, cseg, cstart, clen, lam, rng))
            elif m.kind == "pcpp":
                lam = self._cell_rho * np.mean(Y[r][:, cnode] ** 2, axis=0)
                out.append(_poisson_on_cells(net, cseg, cstart, clen, lam, rng))
            else:
                dom = self._cell_rho * (1.0 + m.cov.sigma2) ** (m.h / 2.0)
                z = _poisson_on_cells(net, cseg, cstart, clen, dom, rng)
                ysq = np.sum(self.grid.extend(Y[r], z.segments, z.offsets) ** 2, axis=0)
                keep = rng.uniform(size=z.n) < np.exp(-0.5 * ysq)
                p = PointPattern(net, z.segments[keep], z.offsets[keep])
                p.dominating_count = z.n
                out.append(p)
        return out[0] if n_samples is None else out


def simulate_cox(model: CoxModel, net: LinearNetwork, grid: NetworkGrid, rng, n_samples=None,
                 algorithm: str = "auto"):
    """Simulate ``model`` with random intensities held on ``grid`` cells."""
    if grid.net is not net:
        raise ValidationError("grid was built on a different network")
    return CoxSimulator(model, grid, algorithm).simulate(rng, n_samples)
