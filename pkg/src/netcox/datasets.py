"""Synthetic networks and patterns used in examples and tests.

``dendrite``
    a tree shaped like a neuron dendrite: a straight main branch of length
    344 with seven side branches (three of them forked) of total length
    392; segments are marked ``"main"`` or ``"side"``.
``street_grid``
    a 13 x 26 street lattice with block length 49 (|L| = 31213).
``theta``
    the smallest network with three distinct paths between two points.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from .network import LinearNetwork, build_network

MAIN_SEGMENT = 43.0
N_MAIN = 8
SIDE_TOTAL = 56.0


def dendrite() -> LinearNetwork:
    verts = [(MAIN_SEGMENT * k, 0.0) for k in range(N_MAIN + 1)]
    segs, marks = [], []
    for k in range(N_MAIN):
        segs.append([k, k + 1])
        marks.append("main")

    def add(p):
        verts.append(p)
        return len(verts) - 1

    for k in range(1, N_MAIN):
        up = 1.0 if k % 2 else -1.0
        ang = up * np.pi / 3
        base = np.array(verts[k])
        d = np.array([np.cos(ang), np.sin(ang)])
        if k % 2:
            # straight branch in two pieces
            m = add(tuple(base + d * SIDE_TOTAL / 2))
            e = add(tuple(base + d * SIDE_TOTAL))
            segs += [[k, m], [m, e]]
            marks += ["side", "side"]
        else:
            # stem of 24 splitting into two twigs of 16
            j = add(tuple(base + d * 24.0))
            segs.append([k, j])
            marks.append("side")
            for turn in (-np.pi / 6, np.pi / 6):
                a2 = ang + turn
                tip = add(tuple(np.array(verts[j]) + 16.0 * np.array([np.cos(a2), np.sin(a2)])))
                segs.append([j, tip])
                marks.append("side")
    return build_network(np.array(verts), segs, marks=marks)


def street_grid(nx: int = 26, ny: int = 13, block: float = 49.0) -> LinearNetwork:
    xs, ys = np.meshgrid(np.arange(nx) * block, np.arange(ny) * block)
    verts = np.column_stack([xs.ravel(), ys.ravel()])
    segs = []
    for r in range(ny):
        for c in range(nx):
            v = r * nx + c
            if c + 1 < nx:
                segs.append([v, v + 1])
            if r + 1 < ny:
                segs.append([v, v + nx])
    return build_network(verts, segs)


def theta() -> LinearNetwork:
    return build_network([[0, 0], [2, 0], [1, 1], [1, -1]],
                         [[0, 1], [0, 2], [2, 1], [0, 3], [3, 1]])


def data_path(name: str):
    """Path of a bundled data file."""
    return resources.files("netcox") / "data" / name


def dendrite_pattern():
    """Fixed pattern of 113 points on :func:`dendrite` (41 main, 72 side)."""
    from .io import read_pattern

    return read_pattern(data_path("dendrite_points.csv"), dendrite())


def street_pattern():
    """Fixed pattern of 116 points on :func:`street_grid`."""
    from .io import read_pattern

    return read_pattern(data_path("street_points.csv"), street_grid())
