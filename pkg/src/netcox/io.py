"""File formats: network JSON, point CSV, curve CSV and deterministic JSON."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .cox import PointPattern
from .exceptions import InputOutputError, NetcoxError, ParseError
from .network import LinearNetwork, build_network


def _open(path, mode="r"):
    try:
        return open(path, mode, newline="" if "b" not in mode else None, encoding=None if "b" in mode else "utf-8")
    except OSError as exc:
        raise InputOutputError(f"cannot open {path}: {exc.strerror}") from exc


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with _open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, NaN as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    with _open(path, "w") as fh:
        fh.write(dumps(obj))


def read_json(path) -> dict:
    with _open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from exc


def network_from_dict(d: dict) -> LinearNetwork:
    if not isinstance(d, dict) or "vertices" not in d or "segments" not in d:
        raise ParseError("network JSON needs 'vertices' and 'segments'")
    return build_network(d["vertices"], d["segments"], d.get("tolerance"), d.get("marks"))


def read_network(path) -> LinearNetwork:
    return network_from_dict(read_json(path))


def write_network(path, net: LinearNetwork) -> None:
    write_json(path, net.to_dict())


def _rows(path):
    with _open(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty", line=1) from None
        header = [h.strip().lower() for h in header]
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            rows.append((reader.line_num, row))
    return header, rows


def _float(cell, line, name):
    try:
        x = float(cell)
    except ValueError:
        raise ParseError(f"column {name!r}: cannot parse {cell!r} as a number", line=line) from None
    if not math.isfinite(x):
        raise ParseError(f"column {name!r}: non-finite value {cell!r}", line=line)
    return x


def read_pattern(path, net: LinearNetwork, max_snap: float | None = None) -> PointPattern:
    """Read a point CSV with ``segment,offset`` or ``x,y`` columns.

    Planar ``x,y`` points are projected onto the nearest segment; with
    ``max_snap`` set, points further than that from the network are
    rejected.  An optional ``mark`` column is carried along.
    """
    header, rows = _rows(path)
    if {"segment", "offset"} <= set(header):
        cols = ("segment", "offset")
    elif {"x", "y"} <= set(header):
        cols = ("x", "y")
    else:
        raise ParseError("point CSV needs columns 'segment,offset' or 'x,y'", line=1)
    i0, i1 = header.index(cols[0]), header.index(cols[1])
    im = header.index("mark") if "mark" in header else None
    a, b, marks, lines = [], [], [], []
    for line, row in rows:
        need = max(i0, i1, -1 if im is None else im) + 1
        if len(row) < need:
            raise ParseError(f"expected {need} fields, found {len(row)}", line=line)
        a.append(_float(row[i0], line, cols[0]))
        b.append(_float(row[i1], line, cols[1]))
        if im is not None:
            marks.append(row[im].strip())
        lines.append(line)
    marks = marks if im is not None else None
    if cols[0] == "segment":
        for x, line in zip(a, lines):
            if x != int(x) or not 0 <= x < net.n_segments:
                raise ParseError(f"segment index {x!r} out of range", line=line)
        seg = np.array(a, dtype=np.int64)
        off = np.array(b)
        for k in range(seg.size):
            try:
                net.check_points(seg[k:k + 1], off[k:k + 1])
            except NetcoxError as exc:
                raise ParseError(str(exc), line=lines[k]) from exc
    else:
        xy = np.column_stack([a, b]) if a else np.zeros((0, 2))
        seg, off, dist = net.snap(xy) if a else (np.zeros(0, np.int64), np.zeros(0), np.zeros(0))
        if max_snap is not None and np.any(dist > max_snap):
            k = int(np.flatnonzero(dist > max_snap)[0])
            raise ParseError(f"point lies {dist[k]:.6g} from the network", line=lines[k])
    try:
        return PointPattern(net, seg, off, marks)
    except NetcoxError as exc:
        raise ParseError(str(exc)) from exc


def write_pattern(path, pattern: PointPattern, extra: dict | None = None) -> None:
    """Write ``segment,offset`` rows (plus optional extra columns of equal length)."""
    extra = extra or {}
    with _open(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "offset", *extra])
        cols = [np.asarray(v) for v in extra.values()]
        for k in range(pattern.n):
            w.writerow([int(pattern.segments[k]), repr(float(pattern.offsets[k])),
                        *[c[k] for c in cols]])


def write_table(path, header, rows) -> None:
    with _open(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def write_curve(path, t, values, header=("t", "value")) -> None:
    write_table(path, header, zip(np.asarray(t, float), np.asarray(values, float)))


def read_pairs(path):
    """CSV with ``seg1,off1,seg2,off2`` rows."""
    header, rows = _rows(path)
    need = ["seg1", "off1", "seg2", "off2"]
    if not set(need) <= set(header):
        raise ParseError("pairs CSV needs columns seg1,off1,seg2,off2", line=1)
    idx = [header.index(n) for n in need]
    out = []
    for line, row in rows:
        if len(row) < max(idx) + 1:
            raise ParseError(f"expected {max(idx) + 1} fields, found {len(row)}", line=line)
        vals = [_float(row[i], line, n) for i, n in zip(idx, need)]
        out.append(vals)
    return np.array(out).reshape(-1, 4)


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputOutputError(f"cannot create {p}: {exc.strerror}") from exc
    return p
