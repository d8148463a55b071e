"""CSV readers/writers for graphs, panels and result tables.

Readers raise :class:`InputError` carrying the 1-based line number of the
offending row.
"""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

from .graph import GraphError, WeightGraph, from_edge_list


class InputError(ValueError):
    pass


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row]


def _int(s, path, lineno):
    try:
        return int(s)
    except ValueError:
        raise InputError(f"{path}:{lineno}: expected an integer, got {s!r}") from None


def _float(s, path, lineno):
    try:
        v = float(s)
    except ValueError:
        raise InputError(f"{path}:{lineno}: expected a number, got {s!r}") from None
    if not np.isfinite(v):
        raise InputError(f"{path}:{lineno}: non-finite value {s!r}")
    return v


def read_edge_list(path, n: int | None = None) -> WeightGraph:
    """Read ``src,dst`` rows; ``n`` defaults to ``max id + 1``."""
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise InputError(f"{path}: empty file") from None
    if [h.lower() for h in header] != ["src", "dst"]:
        raise InputError(f"{path}:{lineno}: expected header 'src,dst', got {','.join(header)!r}")
    edges, lines = [], []
    for lineno, row in rows:
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        edges.append((_int(row[0], path, lineno), _int(row[1], path, lineno)))
        lines.append(lineno)
    if n is None:
        n = max((max(e) for e in edges), default=-1) + 1
    for (a, b), lineno in zip(edges, lines):
        if a == b:
            raise InputError(f"{path}:{lineno}: self-loop at vertex {a}")
        if not (0 <= a < n and 0 <= b < n):
            raise InputError(f"{path}:{lineno}: vertex id outside [0, {n})")
    try:
        return from_edge_list(edges, n)
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_edge_list(g: WeightGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"])
        w.writerows(g.edges().tolist())


def read_panel(path) -> np.ndarray:
    """Read a ``T x n`` panel in wide or long (``region,time,value``) layout.

    Wide: header names the regions, column order gives region ids 0..n-1,
    each following row is one time.  Long: regions are integer ids, times
    are ordered by first appearance, and every (region, time) cell must be
    present exactly once.
    """
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise InputError(f"{path}: empty file") from None
    if [h.lower() for h in header] == ["region", "time", "value"]:
        return _read_long(path, rows)
    n = len(header)
    data = []
    for lineno, row in rows:
        if len(row) != n:
            raise InputError(f"{path}:{lineno}: expected {n} fields, got {len(row)}")
        data.append([_float(c, path, lineno) for c in row])
    if not data:
        raise InputError(f"{path}: no data rows")
    return np.array(data)


def _read_long(path, rows) -> np.ndarray:
    cells = {}
    times = {}
    for lineno, row in rows:
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        r = _int(row[0], path, lineno)
        if r < 0:
            raise InputError(f"{path}:{lineno}: negative region id {r}")
        t = times.setdefault(row[1], len(times))
        if (t, r) in cells:
            raise InputError(f"{path}:{lineno}: duplicate cell region={r} time={row[1]!r}")
        cells[(t, r)] = _float(row[2], path, lineno)
    if not cells:
        raise InputError(f"{path}: no data rows")
    n = max(r for _, r in cells) + 1
    T = len(times)
    if len(cells) != n * T:
        raise InputError(f"{path}: long panel is incomplete ({len(cells)} of {T}x{n} cells)")
    y = np.empty((T, n))
    for (t, r), v in cells.items():
        y[t, r] = v
    return y


def write_panel(y: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"region_{i}" for i in range(y.shape[1])])
        for row in y:
            w.writerow([repr(float(v)) for v in row])


def read_matrix(path) -> np.ndarray:
    """Plain numeric CSV without header."""
    data = [[_float(c, path, lineno) for c in row] for lineno, row in _rows(path)]
    if not data or len({len(r) for r in data}) != 1:
        raise InputError(f"{path}: matrix rows are empty or ragged")
    return np.array(data)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fmt(v) -> str:
    """Shortest round-trip float text; blank for ``None``."""
    if v is None:
        return ""
    return repr(float(v))
