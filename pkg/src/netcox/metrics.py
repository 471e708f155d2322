"""Geodesic and resistance metrics on linear networks.

Both metrics share one engine interface:

* ``distance_to_vertices(seg, off)`` gives distances from points to every
  vertex;
* ``cross`` and ``pairwise`` build distance matrices;
* ``pieces(seg, off)`` describes the distance profile from one point as a
  set of monotone linear or quadratic pieces, each living on one segment.
  The pieces drive the level-set weights used by second-order estimators
  and the candidate-segment pruning.

The resistance metric is the variogram of a Gaussian field built from
Brownian bridges hung on the segments of a grounded electrical network.
On each segment, the distance from a fixed point is a concave quadratic in
the arc length with closed-form coefficients assembled from the inverse of
the grounded conductance matrix.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.sparse import coo_matrix, csc_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import splu

from .exceptions import (
    RadiusBeyondNetwork,
    SingularMatrix,
    UndefinedAtKink,
    ValidationError,
)
from .network import LinearNetwork, NetPoint, make_grid

#: above this many vertices the grounded conductance matrix is inverted
#: through a sparse LU factorisation
SPARSE_VERTEX_LIMIT = 2000

_ROW_CHUNK = 256


def _as_arrays(seg, off):
    return (np.atleast_1d(np.asarray(seg, dtype=np.int64)),
            np.atleast_1d(np.asarray(off, dtype=float)))


class _MetricEngine:
    """Shared machinery; subclasses supply distances and profile pieces."""

    kind = ""

    def __init__(self, net: LinearNetwork):
        self.net = net

    # -- distance matrices ------------------------------------------------
    def cross(self, seg1, off1, seg2, off2) -> np.ndarray:
        """Distances between two point sets, shape ``(n1, n2)``."""
        s1, o1 = _as_arrays(seg1, off1)
        s2, o2 = _as_arrays(seg2, off2)
        out = np.empty((s1.size, s2.size))
        for lo in range(0, s1.size, _ROW_CHUNK):
            sl = slice(lo, lo + _ROW_CHUNK)
            out[sl] = self._cross_block(s1[sl], o1[sl], s2, o2)
        return out

    def pairwise(self, seg, off) -> np.ndarray:
        """Symmetric distance matrix with an exact zero diagonal."""
        d = self.cross(seg, off, seg, off)
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        return d

    def distance(self, u: NetPoint, v: NetPoint) -> float:
        return float(self.cross([u.segment], [u.offset], [v.segment], [v.offset])[0, 0])

    # -- level sets -------------------------------------------------------
    def monotone_pieces(self, seg: int, off: float):
        """Monotone distance pieces from one point.

        Returns a dict of arrays ``seg, tlo, thi, A, B, C, rlo, rhi``; on
        piece ``k`` the distance is ``A t^2 + B t + C`` for offsets ``t`` in
        ``[tlo, thi]`` of segment ``seg`` and sweeps ``[rlo, rhi]``
        monotonically.
        """
        ps, tlo, thi, A, B, C = self._raw_pieces(int(seg), float(off))
        # split at the turning point of each quadratic
        with np.errstate(divide="ignore", invalid="ignore"):
            tv = np.where(A != 0.0, -B / (2.0 * A), np.nan)
        inside = (tv > tlo) & (tv < thi)
        if np.any(inside):
            k = np.flatnonzero(inside)
            ps = np.concatenate([ps, ps[k]])
            new_lo = tv[k]
            tlo = np.concatenate([tlo, new_lo])
            thi = np.concatenate([thi, thi[k]])
            thi[k] = new_lo
            A = np.concatenate([A, A[k]])
            B = np.concatenate([B, B[k]])
            C = np.concatenate([C, C[k]])
        keep = thi > tlo
        ps, tlo, thi, A, B, C = ps[keep], tlo[keep], thi[keep], A[keep], B[keep], C[keep]
        q0 = (A * tlo + B) * tlo + C
        q1 = (A * thi + B) * thi + C
        rlo = np.maximum(np.minimum(q0, q1), 0.0)
        rhi = np.maximum(q0, q1)
        return {"seg": ps, "tlo": tlo, "thi": thi, "A": A, "B": B, "C": C,
                "rlo": rlo, "rhi": rhi}

    def eccentricity(self, seg: int, off: float) -> float:
        """``sup_v d(u, v)`` for ``u = (seg, off)``."""
        return float(self.monotone_pieces(seg, off)["rhi"].max())

    def level_set_weights(self, seg: int, off: float, r) -> np.ndarray:
        """``1 / sum_{d(u,v)=r} 1/J(u,v)`` for each radius in ``r``.

        Zero is returned where the level set is empty.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p = self.monotone_pieces(seg, off)
        live = p["rlo"] < r.max() if r.size else np.zeros(0, bool)
        p = {k: v[live] for k, v in p.items()}
        total = self._inverse_jacobian_sum(p, r, 0.0)
        empty = total <= 0.0
        if np.any(empty):
            # radii that fall in a rounding gap between adjacent pieces
            eps = 1e-9 * (1.0 + r[empty])
            total[empty] = self._inverse_jacobian_sum(p, r[empty], eps)
        with np.errstate(divide="ignore"):
            return np.where(total > 0.0, 1.0 / total, 0.0)

    def _inverse_jacobian_sum(self, p, r, eps):
        eps = np.broadcast_to(np.asarray(eps, dtype=float), r.shape)
        if r.size == 0 or p["rlo"].size == 0:
            return np.zeros(r.shape)
        rr = r[:, None]
        ee = eps[:, None]
        hit = (p["rlo"][None, :] - ee < rr) & (rr <= p["rhi"][None, :] + ee)
        disc = p["B"] ** 2 - 4.0 * p["A"] * (p["C"] - rr)
        with np.errstate(divide="ignore"):
            inv_j = 1.0 / np.sqrt(np.maximum(disc, 1e-300))
        return np.where(hit, inv_j, 0.0).sum(axis=1)

    def pair_weights(self, seg, off, dist: np.ndarray, rmax: float) -> np.ndarray:
        """Weights ``w(u_i, d_ik)`` for all pairs with ``0 < d_ik <= rmax``.

        Entries for other pairs, including the diagonal, are zero.
        """
        s, o = _as_arrays(seg, off)
        n = s.size
        W = np.zeros((n, n))
        for i in range(n):
            row = dist[i]
            k = np.flatnonzero((row <= rmax) & (np.arange(n) != i))
            if k.size:
                W[i, k] = self.level_set_weights(s[i], o[i], row[k])
        return W

    def pairs(self, seg, off, rmax: float):
        """All ordered pairs ``(i, k)``, ``i != k``, with ``d_ik <= rmax``.

        Returns ``(i, k, d, w)`` where ``w = w(u_i, d_ik)``.  Candidate
        partners of each point are restricted to segments that can lie
        within ``rmax`` of it.
        """
        s, o = _as_arrays(seg, off)
        net = self.net
        order = np.argsort(s, kind="stable")
        bounds = np.searchsorted(s[order], np.arange(net.n_segments + 1))
        I, K, Dd, W = [], [], [], []
        for i in range(s.size):
            dv = self.distance_to_vertices(s[i:i + 1], o[i:i + 1])[0]
            near = np.minimum(dv[net.seg_a], dv[net.seg_b]) <= rmax
            near[s[i]] = True
            cand = np.concatenate([order[bounds[j]:bounds[j + 1]] for j in np.flatnonzero(near)])
            cand = cand[cand != i]
            if cand.size == 0:
                continue
            d = self.cross(s[i:i + 1], o[i:i + 1], s[cand], o[cand])[0]
            keep = d <= rmax
            if not np.any(keep):
                continue
            I.append(np.full(int(keep.sum()), i))
            K.append(cand[keep])
            Dd.append(d[keep])
            W.append(self.level_set_weights(s[i], o[i], d[keep]))
        if not I:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z, z
        return np.concatenate(I), np.concatenate(K), np.concatenate(Dd), np.concatenate(W)

    def pairs_within(self, u: NetPoint, r: float) -> np.ndarray:
        """Segments that can hold points within distance ``r`` of ``u``.

        Distance along a segment is concave in the offset, so its minimum
        sits at an endpoint; a segment qualifies when an endpoint lies within
        ``r`` or when it carries ``u``.
        """
        if r < 0:
            raise ValidationError("search radius must be non-negative")
        s, o = self.net.check_points([u.segment], [u.offset])
        dv = self.distance_to_vertices(s, o)[0]
        near = np.minimum(dv[self.net.seg_a], dv[self.net.seg_b]) <= r
        near[s[0]] = True
        return np.flatnonzero(near)


class GeodesicMetric(_MetricEngine):
    """Shortest-path distance."""

    kind = "geodesic"

    def __init__(self, net: LinearNetwork):
        super().__init__(net)
        a = np.minimum(net.seg_a, net.seg_b)
        b = np.maximum(net.seg_a, net.seg_b)
        # the sparse constructor sums duplicates, so keep the shortest parallel
        order = np.lexsort((net.lengths, b, a))
        first = np.ones(order.size, dtype=bool)
        first[1:] = (a[order][1:] != a[order][:-1]) | (b[order][1:] != b[order][:-1])
        sel = order[first]
        n = net.n_vertices
        graph = coo_matrix((net.lengths[sel], (a[sel], b[sel])), shape=(n, n)).tocsr()
        self.vertex_distance = dijkstra(graph, directed=False)

    def distance_to_vertices(self, seg, off) -> np.ndarray:
        s, o = _as_arrays(seg, off)
        net = self.net
        D = self.vertex_distance
        l = net.lengths[s]
        return np.minimum(o[:, None] + D[net.seg_a[s]], (l - o)[:, None] + D[net.seg_b[s]])

    def _cross_block(self, s1, o1, s2, o2):
        net = self.net
        dv = self.distance_to_vertices(s1, o1)
        l2 = net.lengths[s2]
        d = np.minimum(dv[:, net.seg_a[s2]] + o2[None, :],
                       dv[:, net.seg_b[s2]] + (l2 - o2)[None, :])
        same = s1[:, None] == s2[None, :]
        direct = np.abs(o1[:, None] - o2[None, :])
        return np.where(same, np.minimum(d, direct), d)

    def _raw_pieces(self, j, s):
        net = self.net
        dv = self.distance_to_vertices([j], [s])[0]
        l = net.lengths
        da, db = dv[net.seg_a], dv[net.seg_b]
        # a tent on every other segment: rising from a up to the split point,
        # then falling towards b
        split = np.clip((db + l - da) / 2.0, 0.0, l)
        m = net.n_segments
        others = np.arange(m) != j
        idx = np.flatnonzero(others)
        ps = [idx, idx]
        tlo = [np.zeros(idx.size), split[idx]]
        thi = [split[idx], l[idx]]
        B = [np.ones(idx.size), -np.ones(idx.size)]
        C = [da[idx], db[idx] + l[idx]]
        # the segment carrying u: two tents meeting at u
        lj = float(l[j])
        left = float(np.clip((s - da[j]) / 2.0, 0.0, s))
        right = float(np.clip((s + db[j] + lj) / 2.0, s, lj))
        ps.append(np.full(4, j))
        tlo.append(np.array([0.0, left, s, right]))
        thi.append(np.array([left, s, right, lj]))
        B.append(np.array([1.0, -1.0, 1.0, -1.0]))
        C.append(np.array([da[j], s, -s, db[j] + lj]))
        B = np.concatenate(B)
        return (np.concatenate(ps), np.concatenate(tlo), np.concatenate(thi),
                np.zeros(B.size), B, np.concatenate(C))

    def _piece_ranges(self, s, o):
        """Distance ranges ``(rlo, rhi)`` of all monotone pieces, one row per point."""
        net = self.net
        l = net.lengths
        dv = self.distance_to_vertices(s, o)
        da, db = dv[:, net.seg_a], dv[:, net.seg_b]
        split = np.clip((db + l - da) / 2.0, 0.0, l)
        lo = np.concatenate([da, db], axis=1)
        hi = np.concatenate([da + split, db + l - split], axis=1)
        rows = np.arange(s.size)
        m = net.n_segments
        # the tents on a point's own segment are replaced by four pieces below
        lo[rows, s] = hi[rows, s] = np.inf
        lo[rows, m + s] = hi[rows, m + s] = np.inf
        lj = l[s]
        daj, dbj = da[rows, s], db[rows, s]
        left = np.clip((o - daj) / 2.0, 0.0, o)
        right = np.clip((o + dbj + lj) / 2.0, o, lj)
        zero = np.zeros(s.size)
        own_lo = np.column_stack([daj, zero, zero, dbj])
        own_hi = np.column_stack([daj + left, o - left, right - o, dbj + lj - right])
        return np.concatenate([lo, own_lo], axis=1), np.concatenate([hi, own_hi], axis=1)

    def pairs(self, seg, off, rmax: float, block: int = 256):
        # all pairs at once: level-set sizes by a merged sort of piece
        # endpoints and query distances, row by row
        s, o = _as_arrays(seg, off)
        n = s.size
        I, K, Dd, W = [], [], [], []
        for b0 in range(0, n, block):
            rows = np.arange(b0, min(n, b0 + block))
            d = self._cross_block(s[rows], o[rows], s, o)
            d[np.arange(rows.size), rows] = np.inf
            qi, qk = np.nonzero(d <= rmax)
            if qi.size == 0:
                continue
            qd = d[qi, qk]
            lo, hi = self._piece_ranges(s[rows], o[rows])
            P = lo.shape[1]
            prow = np.repeat(np.arange(rows.size), P)
            vals = np.concatenate([qd, lo.ravel(), hi.ravel()])
            row = np.concatenate([qi, prow, prow])
            # queries sort before equal-valued piece ends: rlo < r <= rhi
            typ = np.concatenate([np.zeros(qd.size, np.int8), np.ones(2 * prow.size, np.int8)])
            inc = np.concatenate([np.zeros(qd.size), np.ones(prow.size), -np.ones(prow.size)])
            order = np.lexsort((typ, vals, row))
            csum = np.cumsum(inc[order])
            count = np.empty(vals.size)
            count[order] = csum
            count = count[:qd.size]
            w = np.zeros(qd.size)
            ok = count > 0.5
            w[ok] = 1.0 / np.rint(count[ok])
            for k in np.flatnonzero(~ok):
                i = rows[qi[k]]
                w[k] = self.level_set_weights(s[i], o[i], [qd[k]])[0]
            I.append(rows[qi])
            K.append(qk)
            Dd.append(qd)
            W.append(w)
        if not I:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z, z
        return np.concatenate(I), np.concatenate(K), np.concatenate(Dd), np.concatenate(W)

    def level_set_weights(self, seg, off, r):
        # unit Jacobian: the weight is one over the level-set cardinality
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p = self.monotone_pieces(seg, off)
        lo = np.sort(p["rlo"])
        hi = np.sort(p["rhi"])
        count = (np.searchsorted(lo, r, side="left")
                 - np.searchsorted(hi, r, side="left")).astype(float)
        empty = count <= 0
        if np.any(empty):
            count[empty] = self._inverse_jacobian_sum(p, r[empty], 1e-9 * (1.0 + r[empty]))
        with np.errstate(divide="ignore"):
            return np.where(count > 0, 1.0 / count, 0.0)


class ResistanceStructure(_MetricEngine):
    """Resistance metric from a grounded conductance matrix.

    Attributes
    ----------
    origin : int
        Grounded vertex.
    delta_matrix : ndarray or sparse matrix
        Conductance matrix with ``+1`` added at the origin.
    sigma : ndarray
        Its inverse, the covariance of the field at the vertices.
    per_segment : ndarray
        ``A_i = d_V(a_i, b_i) / l_i^2 - 1 / l_i``; zero on bridges, negative
        on segments that lie on a cycle.
    """

    kind = "resistance"

    def __init__(self, net: LinearNetwork, origin: int = 0):
        super().__init__(net)
        n = net.n_vertices
        if not 0 <= origin < n:
            raise ValidationError("origin must be a vertex index")
        self.origin = int(origin)
        g = 1.0 / net.lengths
        a, b = net.seg_a, net.seg_b
        rows = np.concatenate([a, b, a, b, [origin]])
        cols = np.concatenate([b, a, a, b, [origin]])
        vals = np.concatenate([-g, -g, g, g, [1.0]])
        delta = coo_matrix((vals, (rows, cols)), shape=(n, n))
        if n > SPARSE_VERTEX_LIMIT:
            delta = csc_matrix(delta)
            try:
                lu = splu(delta)
            except RuntimeError as exc:
                raise SingularMatrix(str(exc)) from exc
            sigma = np.empty((n, n))
            for lo in range(0, n, 256):
                cols_ = min(256, n - lo)
                rhs = np.zeros((n, cols_))
                rhs[lo + np.arange(cols_), np.arange(cols_)] = 1.0
                sigma[:, lo:lo + cols_] = lu.solve(rhs)
        else:
            delta = delta.toarray()
            try:
                sigma = linalg.cho_solve(linalg.cho_factor(delta), np.eye(n))
            except linalg.LinAlgError as exc:
                raise SingularMatrix(str(exc)) from exc
        sigma = 0.5 * (sigma + sigma.T)
        if not np.all(np.isfinite(sigma)):
            raise SingularMatrix("conductance matrix inversion produced non-finite values")
        self.delta_matrix = delta
        self.sigma = sigma
        dab = self.vertex_resistance(a, b)
        l = net.lengths
        A = dab / l**2 - 1.0 / l
        # bridges carry the whole current: A_i vanishes up to rounding
        A[np.abs(A) <= 1e-12 / l] = 0.0
        self.per_segment = np.minimum(A, 0.0)

    def vertex_resistance(self, u, v):
        """``d_V(u, v) = Sigma_uu + Sigma_vv - 2 Sigma_uv`` for vertex arrays."""
        S = self.sigma
        u = np.asarray(u)
        v = np.asarray(v)
        return np.maximum(S[u, u] + S[v, v] - 2.0 * S[u, v], 0.0)

    def coefficients(self, seg_u, s, seg_v):
        """``(A_i, B_ij(s), C_ij(s))`` for ``u = (j, s)`` and target segment ``i``.

        For ``i != j`` the distance to ``(i, t)`` equals
        ``A_i t^2 + B_ij(s) t + C_ij(s)``.  Arguments broadcast.
        """
        net = self.net
        S = self.sigma
        seg_u = np.asarray(seg_u, dtype=np.int64)
        seg_v = np.asarray(seg_v, dtype=np.int64)
        s = np.asarray(s, dtype=float)
        lj, aj, bj = net.lengths[seg_u], net.seg_a[seg_u], net.seg_b[seg_u]
        li, ai, bi = net.lengths[seg_v], net.seg_a[seg_v], net.seg_b[seg_v]
        wa = (lj - s) / lj
        wb = s / lj
        c_a = wa * S[aj, ai] + wb * S[bj, ai]
        c_b = wa * S[aj, bi] + wb * S[bj, bi]
        A = self.per_segment[seg_v]
        B = 1.0 - (2.0 / li) * (S[ai, ai] - S[ai, bi] - c_a + c_b)
        quad_u = (wa * wa * S[aj, aj] + 2.0 * wa * wb * S[aj, bj] + wb * wb * S[bj, bj]
                  + s * (lj - s) / lj)
        C = quad_u + S[ai, ai] - 2.0 * c_a
        return np.broadcast_arrays(A, B, C)

    def distance_to_vertices(self, seg, off) -> np.ndarray:
        s, o = _as_arrays(seg, off)
        net = self.net
        S = self.sigma
        l, a, b = net.lengths[s], net.seg_a[s], net.seg_b[s]
        wa = ((l - o) / l)[:, None]
        wb = (o / l)[:, None]
        quad_u = (wa[:, 0] ** 2 * S[a, a] + 2 * wa[:, 0] * wb[:, 0] * S[a, b]
                  + wb[:, 0] ** 2 * S[b, b] + o * (l - o) / l)
        d = quad_u[:, None] + np.diag(S)[None, :] - 2.0 * (wa * S[a] + wb * S[b])
        return np.maximum(d, 0.0)

    def _cross_block(self, s1, o1, s2, o2):
        A, B, C = self.coefficients(s1[:, None], o1[:, None], s2[None, :])
        t = o2[None, :]
        d = (A * t + B) * t + C
        same = s1[:, None] == s2[None, :]
        if np.any(same):
            diff = t - o1[:, None]
            d_same = A * diff * diff + np.abs(diff)
            d = np.where(same, d_same, d)
        return np.maximum(d, 0.0)

    def derivative(self, u: NetPoint, v: NetPoint) -> float:
        """Rate of change of ``d(u, v)`` as ``v`` moves along its segment."""
        su, ou = self.net.check_points([u.segment], [u.offset])
        sv, ov = self.net.check_points([v.segment], [v.offset])
        j, s, i, t = int(su[0]), float(ou[0]), int(sv[0]), float(ov[0])
        A = float(self.per_segment[i])
        if i == j:
            if t == s:
                raise UndefinedAtKink("distance has a kink where the two points coincide")
            return 2.0 * A * (t - s) + (1.0 if t > s else -1.0)
        _, B, _ = self.coefficients(j, s, i)
        return 2.0 * A * t + float(B)

    def _raw_pieces(self, j, s):
        net = self.net
        m = net.n_segments
        idx = np.flatnonzero(np.arange(m) != j)
        A, B, C = self.coefficients(np.full(idx.size, j), np.full(idx.size, s), idx)
        Aj = float(self.per_segment[j])
        lj = float(net.lengths[j])
        # own segment: A (t-s)^2 + |t-s| written as a quadratic in t
        own_B = np.array([-1.0 - 2.0 * Aj * s, 1.0 - 2.0 * Aj * s])
        own_C = np.array([Aj * s * s + s, Aj * s * s - s])
        return (np.concatenate([idx, [j, j]]),
                np.concatenate([np.zeros(idx.size), [0.0, s]]),
                np.concatenate([net.lengths[idx], [s, lj]]),
                np.concatenate([A, [Aj, Aj]]),
                np.concatenate([B, own_B]),
                np.concatenate([C, own_C]))


# -- public functional interface ------------------------------------------

def make_metric(net: LinearNetwork, kind: str = "resistance", origin: int = 0) -> _MetricEngine:
    """Cached metric engine for ``net``."""
    if isinstance(kind, _MetricEngine):
        return kind
    key = (kind, origin if kind == "resistance" else None)
    eng = net._engines.get(key)
    if eng is None:
        if kind == "geodesic":
            eng = GeodesicMetric(net)
        elif kind == "resistance":
            eng = ResistanceStructure(net, origin)
        else:
            raise ValidationError(f"unknown metric {kind!r}; use 'geodesic' or 'resistance'")
        net._engines[key] = eng
    return eng


def build_resistance(net: LinearNetwork, origin: int = 0) -> ResistanceStructure:
    """Assemble and invert the grounded conductance matrix."""
    return ResistanceStructure(net, origin)


def geodesic_distance(net: LinearNetwork, u: NetPoint, v: NetPoint) -> float:
    u, v = net.canonical(u), net.canonical(v)
    return make_metric(net, "geodesic").distance(u, v)


def resistance_distance(rs: ResistanceStructure, u: NetPoint, v: NetPoint) -> float:
    u, v = rs.net.canonical(u), rs.net.canonical(v)
    return rs.distance(u, v)


def resistance_derivative(rs: ResistanceStructure, u: NetPoint, v: NetPoint) -> float:
    return rs.derivative(u, v)


def weight_w(net: LinearNetwork, metric, u: NetPoint, r: float) -> float:
    """Geometry weight ``1 / sum_{v : d(u,v) = r} 1/J(u, v)``."""
    if not r > 0:
        raise ValidationError("radius must be positive")
    eng = make_metric(net, metric)
    u = net.canonical(u)
    w = float(eng.level_set_weights(u.segment, u.offset, [r])[0])
    if w == 0.0:
        raise RadiusBeyondNetwork(f"no point lies at distance {r} from {u}")
    return w


def pairs_within(metric: _MetricEngine, u: NetPoint, r: float) -> np.ndarray:
    return metric.pairs_within(u, r)


def network_radius(metric: _MetricEngine, spacing: float | None = None) -> float:
    """``inf_u sup_v d(u, v)`` with the infimum taken over grid nodes.

    The supremum is exact for each candidate; the grid infimum is an upper
    bound that tightens with ``spacing``.
    """
    net = metric.net
    if spacing is None:
        spacing = float(net.lengths.min()) / 4.0
    grid = make_grid(net, spacing)
    return float(min(metric.eccentricity(s, o)
                     for s, o in zip(grid.segments.tolist(), grid.offsets.tolist())))
