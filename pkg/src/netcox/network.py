"""Linear networks: construction, validation, point parametrisation and grids.

A network is a finite union of straight line segments that meet only at
shared endpoints.  Points on the network are addressed by ``(segment,
offset)`` where ``offset`` is the arc length measured from the segment's
first endpoint ``a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    DisconnectedNetwork,
    NotATree,
    OffsetOutOfRange,
    SegmentOverlap,
    ValidationError,
    ZeroLengthSegment,
)

#: offsets within this fraction of a segment length snap to the endpoint
SNAP_REL = 1e-12


@dataclass(frozen=True)
class NetPoint:
    """A location on a network given as (segment index, arc-length offset)."""

    segment: int
    offset: float


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


class LinearNetwork:
    """Validated, immutable linear network.

    Use :func:`build_network` to construct one from raw vertex and segment
    lists; the constructor itself performs no validation.
    """

    def __init__(self, vertices, seg_a, seg_b, lengths, explicit=None, marks=None):
        self.vertices = _frozen(vertices, float).reshape(-1, 2)
        self.seg_a = _frozen(seg_a, np.int64)
        self.seg_b = _frozen(seg_b, np.int64)
        self.lengths = _frozen(lengths, float)
        m = len(self.lengths)
        self.explicit = _frozen(np.zeros(m, bool) if explicit is None else explicit, bool)
        self.marks = None if marks is None else tuple(str(x) for x in marks)
        self.total_length = float(math.fsum(self.lengths.tolist()))
        adj: list[list[int]] = [[] for _ in range(len(self.vertices))]
        for i, (a, b) in enumerate(zip(self.seg_a.tolist(), self.seg_b.tolist())):
            adj[a].append(i)
            if b != a:
                adj[b].append(i)
        self.adjacency = tuple(tuple(x) for x in adj)
        # lazily built metric engines, keyed by (kind, origin)
        self._engines: dict = {}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_segments(self) -> int:
        return len(self.lengths)

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(deg, self.seg_a, 1)
        np.add.at(deg, self.seg_b, 1)
        return deg

    def segment_marks(self) -> np.ndarray:
        if self.marks is None:
            return np.array([""] * self.n_segments, dtype=object)
        return np.array(self.marks, dtype=object)

    def __repr__(self):
        return (f"LinearNetwork(n_vertices={self.n_vertices}, "
                f"n_segments={self.n_segments}, total_length={self.total_length:.6g})")

    # -- points -----------------------------------------------------------
    def canonical(self, point: NetPoint) -> NetPoint:
        seg, off = self.check_points([point.segment], [point.offset])
        return NetPoint(int(seg[0]), float(off[0]))

    def check_points(self, segments, offsets):
        """Validate and canonicalise arrays of points.

        Offsets within ``1e-12 * l`` of an endpoint are snapped onto it.
        Returns ``(segments, offsets)`` as new arrays.
        """
        seg = np.asarray(segments, dtype=np.int64).ravel()
        off = np.asarray(offsets, dtype=float).ravel().copy()
        if seg.shape != off.shape:
            raise ValidationError("segments and offsets differ in length")
        if seg.size == 0:
            return seg, off
        if seg.min() < 0 or seg.max() >= self.n_segments:
            raise ValidationError("segment index out of range")
        lens = self.lengths[seg]
        tol = SNAP_REL * lens
        if np.any(~np.isfinite(off)) or np.any(off < -tol) or np.any(off > lens + tol):
            bad = int(np.flatnonzero(~((off >= -tol) & (off <= lens + tol)))[0])
            raise OffsetOutOfRange(
                f"offset {off[bad]!r} outside [0, {lens[bad]!r}] on segment {seg[bad]}")
        off[off <= tol] = 0.0
        hi = off >= lens - tol
        off[hi] = lens[hi]
        return seg, off

    def vertex_of(self, segments, offsets) -> np.ndarray:
        """Vertex index for endpoint locations, ``-1`` for interior points."""
        seg = np.asarray(segments, dtype=np.int64)
        off = np.asarray(offsets, dtype=float)
        out = np.full(seg.shape, -1, dtype=np.int64)
        at_a = off == 0.0
        at_b = off == self.lengths[seg]
        out[at_a] = self.seg_a[seg[at_a]]
        out[at_b] = self.seg_b[seg[at_b]]
        return out

    def vertex_point(self, v: int) -> NetPoint:
        segs = self.adjacency[v]
        if not segs:
            raise ValidationError(f"vertex {v} has no incident segment")
        s = segs[0]
        return NetPoint(s, 0.0 if self.seg_a[s] == v else float(self.lengths[s]))

    def xy(self, segments, offsets) -> np.ndarray:
        """Planar coordinates of network points (interpolated along chords)."""
        seg = np.asarray(segments, dtype=np.int64)
        frac = np.asarray(offsets, dtype=float) / self.lengths[seg]
        pa = self.vertices[self.seg_a[seg]]
        pb = self.vertices[self.seg_b[seg]]
        return pa + frac[..., None] * (pb - pa)

    def snap(self, xy):
        """Project planar points onto the nearest segment.

        Returns ``(segments, offsets, snap_distance)``.
        """
        p = np.asarray(xy, dtype=float).reshape(-1, 2)
        pa = self.vertices[self.seg_a]
        d = self.vertices[self.seg_b] - pa
        dd = np.einsum("ij,ij->i", d, d)
        dd = np.where(dd > 0, dd, 1.0)
        rel = p[:, None, :] - pa[None, :, :]
        u = np.clip(np.einsum("ijk,jk->ij", rel, d) / dd, 0.0, 1.0)
        proj = pa[None] + u[..., None] * d[None]
        dist = np.linalg.norm(p[:, None, :] - proj, axis=2)
        best = np.argmin(dist, axis=1)
        rows = np.arange(len(p))
        seg = best
        off = u[rows, best] * self.lengths[best]
        seg, off = self.check_points(seg, off)
        return seg, off, dist[rows, best]

    def to_dict(self) -> dict:
        segs = []
        for a, b, l, e in zip(self.seg_a.tolist(), self.seg_b.tolist(),
                              self.lengths.tolist(), self.explicit.tolist()):
            segs.append([a, b, l] if e else [a, b])
        out = {"vertices": self.vertices.tolist(), "segments": segs}
        if self.marks is not None:
            out["marks"] = list(self.marks)
        return out


def _point_segment_distance(p, a, b):
    """Distance from points ``p`` (n,2) to segments ``a``-``b`` (n,2 each)."""
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.einsum("ij,ij->i", p - a, d) / np.where(dd > 0, dd, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * d), axis=1)


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def _check_overlaps(vertices, seg_a, seg_b, straight, tol):
    idx = np.flatnonzero(straight)
    if idx.size < 2:
        return
    A = vertices[seg_a[idx]]
    B = vertices[seg_b[idx]]
    ia, ib = seg_a[idx], seg_b[idx]
    for k in range(idx.size - 1):
        j = np.arange(k + 1, idx.size)
        a1 = np.broadcast_to(A[k], (j.size, 2))
        b1 = np.broadcast_to(B[k], (j.size, 2))
        a2, b2 = A[j], B[j]
        shared_aa = ia[k] == ia[j]
        shared_ab = ia[k] == ib[j]
        shared_ba = ib[k] == ia[j]
        shared_bb = ib[k] == ib[j]
        n_shared = (shared_aa | shared_ab).astype(int) + (shared_ba | shared_bb).astype(int)
        if np.any(n_shared == 2):
            bad = idx[j[np.flatnonzero(n_shared == 2)[0]]]
            raise SegmentOverlap(f"segments {idx[k]} and {bad} coincide")
        # distances of each endpoint not shared with the other segment
        d_a2 = _point_segment_distance(a2, a1, b1)
        d_b2 = _point_segment_distance(b2, a1, b1)
        d_a1 = _point_segment_distance(a1, a2, b2)
        d_b1 = _point_segment_distance(b1, a2, b2)
        a2_shared = shared_aa | shared_ba
        b2_shared = shared_ab | shared_bb
        a1_shared = shared_aa | shared_ab
        b1_shared = shared_ba | shared_bb
        touch = ((~a2_shared & (d_a2 <= tol)) | (~b2_shared & (d_b2 <= tol))
                 | (~a1_shared & (d_a1 <= tol)) | (~b1_shared & (d_b1 <= tol)))
        # proper crossings of disjoint segments
        o1 = _cross(a1, b1, a2)
        o2 = _cross(a1, b1, b2)
        o3 = _cross(a2, b2, a1)
        o4 = _cross(a2, b2, b1)
        cross = (n_shared == 0) & (o1 * o2 < 0) & (o3 * o4 < 0)
        bad = touch | cross
        if np.any(bad):
            other = idx[j[np.flatnonzero(bad)[0]]]
            raise SegmentOverlap(f"segments {idx[k]} and {other} intersect away from a shared endpoint")


def build_network(vertices, segments, tolerance: float | None = None, marks=None) -> LinearNetwork:
    """Build and validate a linear network.

    Parameters
    ----------
    vertices : array-like, shape (V, 2)
        Planar vertex coordinates.
    segments : sequence
        Rows ``[a, b]`` or ``[a, b, length]``.  Without an explicit length
        the Euclidean distance between the endpoints is used.  Segments with
        an explicit length stand for curved streets and are exempt from the
        geometric overlap check.
    tolerance : float, optional
        Overlap tolerance; defaults to ``1e-9`` times the bounding-box
        diagonal.
    marks : sequence of str, optional
        One label per segment (e.g. ``"main"``/``"side"``).
    """
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    rows = [list(s) for s in segments]
    if not rows:
        raise ValidationError("a network needs at least one segment")
    seg_a = np.empty(len(rows), dtype=np.int64)
    seg_b = np.empty(len(rows), dtype=np.int64)
    lengths = np.empty(len(rows))
    explicit = np.zeros(len(rows), dtype=bool)
    for i, r in enumerate(rows):
        if len(r) not in (2, 3):
            raise ValidationError(f"segment {i}: expected [a, b] or [a, b, length]")
        a, b = int(r[0]), int(r[1])
        if not (0 <= a < len(V) and 0 <= b < len(V)):
            raise ValidationError(f"segment {i}: vertex index out of range")
        if a == b:
            raise ZeroLengthSegment(f"segment {i} starts and ends at vertex {a}")
        seg_a[i], seg_b[i] = a, b
        if len(r) == 3:
            lengths[i] = float(r[2])
            explicit[i] = True
        else:
            lengths[i] = float(np.hypot(*(V[b] - V[a])))
    bad = ~np.isfinite(lengths) | (lengths <= 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ZeroLengthSegment(f"segment {i} has non-positive length {lengths[i]!r}")
    if marks is not None and len(marks) != len(rows):
        raise ValidationError("marks must have one entry per segment")

    n = len(V)
    graph = coo_matrix((np.ones(len(rows)), (seg_a, seg_b)), shape=(n, n))
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp != 1:
        raise DisconnectedNetwork(f"network has {n_comp} connected components")

    if tolerance is None:
        diag = float(np.hypot(*(V.max(axis=0) - V.min(axis=0))))
        tolerance = 1e-9 * diag
    _check_overlaps(V, seg_a, seg_b, ~explicit, tolerance)
    return LinearNetwork(V, seg_a, seg_b, lengths, explicit, marks)


def split_segment(net: LinearNetwork, segment: int, offset: float) -> LinearNetwork:
    """Insert a vertex at ``offset`` along ``segment``.

    The segment keeps its index and now ends at the new vertex; the remainder
    is appended as segment ``net.n_segments``.  Use :func:`map_after_split`
    to carry points across.
    """
    if not 0 <= segment < net.n_segments:
        raise ValidationError("segment index out of range")
    l = float(net.lengths[segment])
    if not 0.0 < offset < l:
        raise OffsetOutOfRange(f"split offset must lie strictly inside (0, {l})")
    new_v = net.n_vertices
    xy = net.xy(np.array([segment]), np.array([offset]))[0]
    vertices = np.vstack([net.vertices, xy])
    seg_a = np.append(net.seg_a, new_v)
    seg_b = np.append(net.seg_b, net.seg_b[segment])
    seg_b[segment] = new_v
    lengths = np.append(net.lengths, l - offset)
    lengths[segment] = offset
    explicit = np.append(net.explicit, net.explicit[segment])
    marks = None if net.marks is None else list(net.marks) + [net.marks[segment]]
    return LinearNetwork(vertices, seg_a, seg_b, lengths, explicit, marks)


def map_after_split(segments, offsets, segment: int, offset: float, new_segment: int):
    """Re-express points after ``split_segment(net, segment, offset)``."""
    seg = np.array(segments, dtype=np.int64, copy=True)
    off = np.array(offsets, dtype=float, copy=True)
    move = (seg == segment) & (off > offset)
    seg[move] = new_segment
    off[move] = off[move] - offset
    return seg, off


class NetworkGrid:
    """Vertex-inclusive discretisation of a network.

    Node ``v < n_vertices`` is vertex ``v``; interior nodes follow, segment by
    segment, at offsets ``i * l_j / n_j`` for ``i = 1 .. n_j - 1``.
    """

    def __init__(self, net: LinearNetwork, n_per_segment, spacing: float):
        self.net = net
        self.spacing = float(spacing)
        self.n_per_segment = _frozen(n_per_segment, np.int64)
        V = net.n_vertices
        seg = []
        off = []
        for v in range(V):
            p = net.vertex_point(v)
            seg.append(p.segment)
            off.append(p.offset)
        nodes = []
        nxt = V
        for j, nj in enumerate(self.n_per_segment.tolist()):
            l = float(net.lengths[j])
            inner = list(range(nxt, nxt + nj - 1))
            for i in range(1, nj):
                seg.append(j)
                off.append(i * l / nj)
            nxt += nj - 1
            nodes.append(np.array([net.seg_a[j], *inner, net.seg_b[j]], dtype=np.int64))
        self.segments = _frozen(seg, np.int64)
        self.offsets = _frozen(off, float)
        vert = np.full(len(seg), -1, dtype=np.int64)
        vert[:V] = np.arange(V)
        self.vertex = _frozen(vert, np.int64)
        self.segment_nodes = tuple(nodes)

    def __len__(self):
        return len(self.segments)

    @property
    def points(self) -> list[NetPoint]:
        return [NetPoint(int(s), float(o)) for s, o in zip(self.segments, self.offsets)]

    def nearest_nodes(self, segments, offsets):
        """Nearest grid node(s) along the segment.

        Returns ``(i, j, w)`` so that a grid field ``y`` is extended as
        ``w * y[i] + (1 - w) * y[j]``; ``w`` is 0.5 exactly at cell midpoints.
        """
        seg = np.asarray(segments, dtype=np.int64)
        off = np.asarray(offsets, dtype=float)
        n = self.n_per_segment[seg]
        pos = off * n / self.net.lengths[seg]
        lo = np.minimum(np.floor(pos).astype(np.int64), n - 1)
        frac = pos - lo
        i_lo = np.empty(seg.shape, dtype=np.int64)
        i_hi = np.empty(seg.shape, dtype=np.int64)
        for k in np.unique(seg):
            sel = seg == k
            nodes = self.segment_nodes[k]
            i_lo[sel] = nodes[lo[sel]]
            i_hi[sel] = nodes[lo[sel] + 1]
        w = np.where(frac < 0.5, 1.0, np.where(frac > 0.5, 0.0, 0.5))
        return i_lo, i_hi, w

    def extend(self, values, segments, offsets):
        """Nearest-node extension of grid values to arbitrary points.

        ``values`` may carry leading replicate axes; the last axis indexes
        grid nodes.
        """
        i, j, w = self.nearest_nodes(segments, offsets)
        values = np.asarray(values)
        return w * values[..., i] + (1.0 - w) * values[..., j]

    def cells(self):
        """Half-interval cells on which the nearest-node extension is constant.

        Returns arrays ``(segment, start, length, node)``.
        """
        seg, start, length, node = [], [], [], []
        for j, nodes in enumerate(self.segment_nodes):
            nj = len(nodes) - 1
            h = float(self.net.lengths[j]) / nj
            k = np.arange(nj)
            s = k * h
            seg.append(np.full(2 * nj, j))
            start.append(np.concatenate([s, s + h / 2]))
            length.append(np.full(2 * nj, h / 2))
            node.append(np.concatenate([nodes[:-1], nodes[1:]]))
        return (np.concatenate(seg), np.concatenate(start),
                np.concatenate(length), np.concatenate(node))


def _segment_counts(lengths, spacing):
    return np.maximum(1, np.ceil(lengths / spacing - 1e-9)).astype(np.int64)


def make_grid(net: LinearNetwork, spacing: float) -> NetworkGrid:
    """Grid with ``n_j = max(1, ceil(l_j / spacing))`` intervals per segment."""
    if not spacing > 0:
        raise ValidationError("grid spacing must be positive")
    return NetworkGrid(net, _segment_counts(net.lengths, spacing), spacing)


def grid_size(net: LinearNetwork, spacing: float) -> int:
    n = _segment_counts(net.lengths, spacing)
    return int(net.n_vertices + (n - 1).sum())


def grid_spacing_for_size(net: LinearNetwork, size: int) -> float:
    """Spacing for which :func:`make_grid` yields exactly ``size`` points."""
    if size < net.n_vertices:
        raise ValidationError("a grid cannot have fewer points than vertices")
    hi = float(net.lengths.max()) * 2
    if grid_size(net, hi) == size:
        return hi
    lo = hi
    while grid_size(net, lo) < size:
        lo /= 2
    # invariant: size(lo) >= size > size(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if grid_size(net, mid) >= size:
            lo = mid
        else:
            hi = mid
    if grid_size(net, lo) != size:
        raise ValidationError(f"no spacing yields exactly {size} grid points")
    return lo


def classify_topology(net: LinearNetwork) -> str:
    """``"tree"``, ``"loop"`` or ``"general"``."""
    if net.n_segments == net.n_vertices - 1:
        return "tree"
    if np.all(net.degree() == 2):
        return "loop"
    return "general"


def _blocks(net: LinearNetwork) -> list[list[int]]:
    """Biconnected components as lists of segment ids (iterative Tarjan)."""
    n = net.n_vertices
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e, (a, b) in enumerate(zip(net.seg_a.tolist(), net.seg_b.tolist())):
        nbrs[a].append((b, e))
        nbrs[b].append((a, e))
    disc = [-1] * n
    low = [0] * n
    blocks = []
    edge_stack: list[int] = []
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(nbrs[root]))]
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for w, e in it:
                if e == pe:
                    continue
                if disc[w] == -1:
                    edge_stack.append(e)
                    disc[w] = low[w] = t
                    t += 1
                    stack.append((w, e, iter(nbrs[w])))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    edge_stack.append(e)
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                u = stack[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] >= disc[u]:
                    block = []
                    while True:
                        e = edge_stack.pop()
                        block.append(e)
                        if e == pe:
                            break
                    blocks.append(block)
    return blocks


def is_one_sum_of_trees_and_loops(net: LinearNetwork) -> bool:
    """True when every biconnected block is a single segment or a cycle."""
    for block in _blocks(net):
        verts = set(net.seg_a[block].tolist()) | set(net.seg_b[block].tolist())
        if len(block) > len(verts):
            return False
    return True


def children_generations(net: LinearNetwork, origin: int) -> list[list[int]]:
    """Breadth-first generations of vertices from ``origin`` on a tree."""
    if classify_topology(net) != "tree":
        raise NotATree("generations are only defined on trees")
    if not 0 <= origin < net.n_vertices:
        raise ValidationError("origin must be a vertex index")
    seen = np.zeros(net.n_vertices, dtype=bool)
    seen[origin] = True
    gens = [[origin]]
    while True:
        nxt = set()
        for u in gens[-1]:
            for s in net.adjacency[u]:
                w = int(net.seg_b[s] if net.seg_a[s] == u else net.seg_a[s])
                if not seen[w]:
                    nxt.add(w)
        if not nxt:
            break
        for w in nxt:
            seen[w] = True
        gens.append(sorted(nxt))
    return gens

