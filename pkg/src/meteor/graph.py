"""Finite graphs and mass-redistribution rules.

Graphs are stored in compressed sparse row form (``indptr``/``indices``)
with sorted neighbor lists, which is the layout the simulation kernels
consume directly.  A :class:`RedistributionMatrix` carries one weight per
directed adjacency slot, aligned with ``graph.indices``.

JSON schema for custom graphs (see :func:`load_graph_json`)::

    {
      "vertices": 4,                       # vertex count k >= 2
      "edges": [[0, 1], [1, 2], [2, 3]],   # undirected, 0-based, no loops
      "rows": [[0, 1, 0, 0], ...]          # optional k x k row-stochastic matrix
    }

When ``rows`` is present the edge list may be omitted; edges are then
derived from the support (``x ~ y`` iff ``p_xy + p_yx > 0``).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSizeError, ValidationError

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple connected graph on vertices ``0..vertex_count-1``."""

    vertex_count: int
    indptr: np.ndarray
    indices: np.ndarray
    kind: str = "custom"
    params: tuple = ()
    _diameter: int | None = field(default=None, repr=False)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as ``(u, v)`` with ``u < v``."""
        out = []
        for u in range(self.vertex_count):
            for v in self.neighbors(u):
                if u < v:
                    out.append((u, int(v)))
        return out

    def adjacent(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Directed slot arrays ``(src, dst)``, one entry per CSR slot."""
        src = np.repeat(np.arange(self.vertex_count), self.degrees)
        return src, self.indices

    def bfs_distances(self, source: int = 0) -> np.ndarray:
        dist = np.full(self.vertex_count, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(int(v))
        return dist

    def is_connected(self) -> bool:
        return bool((self.bfs_distances(0) >= 0).all())

    def diameter(self) -> int:
        if self._diameter is not None:
            return self._diameter
        if self.vertex_count > 5000:
            raise InvalidSizeError("diameter of a large custom graph is not computed")
        return int(max(self.bfs_distances(s).max() for s in range(self.vertex_count)))

    def coords(self, v: int) -> tuple[int, ...]:
        """Torus coordinates of ``v`` (least significant coordinate first)."""
        if self.kind != "torus":
            raise ValidationError("coordinates are defined for tori only")
        n, d = self.params
        out = []
        for _ in range(d):
            out.append(v % n)
            v //= n
        return tuple(out)

    def index(self, coords: Sequence[int]) -> int:
        if self.kind != "torus":
            raise ValidationError("coordinates are defined for tori only")
        n, _ = self.params
        v = 0
        for c in reversed(coords):
            v = v * n + (c % n)
        return v

    def __repr__(self) -> str:
        return f"Graph(kind={self.kind!r}, params={self.params}, vertices={self.vertex_count})"


def _from_neighbor_lists(nbrs: list[Iterable[int]], kind: str, params: tuple,
                         diameter: int | None = None) -> Graph:
    k = len(nbrs)
    lists = [sorted(set(int(x) for x in row)) for row in nbrs]
    indptr = np.zeros(k + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(row) for row in lists])
    indices = np.fromiter((x for row in lists for x in row), dtype=np.int64, count=int(indptr[-1]))
    return Graph(k, indptr, indices, kind, params, diameter)


def build_cycle(k: int) -> Graph:
    """Cycle on ``k`` vertices; ``k == 2`` is the single-edge graph."""
    if k < 2:
        raise InvalidSizeError(f"cycle needs k >= 2, got {k}")
    nbrs = [{(j - 1) % k, (j + 1) % k} for j in range(k)]
    return _from_neighbor_lists(nbrs, "cycle", (k,), k // 2)


def build_torus(n: int, d: int) -> Graph:
    """Product of ``d`` copies of the ``n``-cycle, ``n**d`` vertices."""
    if n < 3:
        raise InvalidSizeError(f"torus needs n >= 3, got {n}")
    if d < 1:
        raise InvalidSizeError(f"torus needs d >= 1, got {d}")
    k = n ** d
    idx = np.arange(k)
    cols = []
    for axis in range(d):
        stride = n ** axis
        c = (idx // stride) % n
        cols.append(idx + (((c + 1) % n) - c) * stride)
        cols.append(idx + (((c - 1) % n) - c) * stride)
    nb = np.sort(np.stack(cols, axis=1), axis=1)
    indptr = np.arange(0, k * 2 * d + 1, 2 * d, dtype=np.int64)
    return Graph(k, indptr, nb.ravel().astype(np.int64), "torus", (n, d), d * (n // 2))


def build_complete(k: int) -> Graph:
    if k < 2:
        raise InvalidSizeError(f"complete graph needs k >= 2, got {k}")
    full = np.arange(k)
    indices = np.concatenate([np.delete(full, v) for v in range(k)]).astype(np.int64)
    indptr = np.arange(0, k * (k - 1) + 1, k - 1, dtype=np.int64)
    return Graph(k, indptr, indices, "complete", (k,), 1)


def build_graph(k: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Custom graph from an undirected edge list; must be simple and connected."""
    if k < 2:
        raise InvalidSizeError(f"graph needs at least 2 vertices, got {k}")
    nbrs: list[set[int]] = [set() for _ in range(k)]
    for e in edges:
        u, v = (int(x) for x in e)
        if not (0 <= u < k and 0 <= v < k):
            raise ValidationError(f"edge ({u}, {v}) out of range for {k} vertices")
        if u == v:
            raise ValidationError(f"loop at vertex {u}")
        if v in nbrs[u]:
            raise ValidationError(f"multiple edge ({u}, {v})")
        nbrs[u].add(v)
        nbrs[v].add(u)
    g = _from_neighbor_lists(nbrs, "custom", (k,))
    if not g.is_connected():
        raise ValidationError("graph is not connected")
    return g


def parse_graph_spec(spec: str) -> Graph:
    """``cycle:K``, ``torus:N:D`` or ``complete:K``."""
    parts = spec.split(":")
    try:
        kind, nums = parts[0], [int(x) for x in parts[1:]]
    except ValueError:
        raise ValidationError(f"bad graph spec {spec!r}") from None
    if kind == "cycle" and len(nums) == 1:
        return build_cycle(nums[0])
    if kind == "torus" and len(nums) == 2:
        return build_torus(*nums)
    if kind == "complete" and len(nums) == 1:
        return build_complete(nums[0])
    raise ValidationError(f"bad graph spec {spec!r}; expected cycle:K, torus:N:D or complete:K")


@dataclass(frozen=True, eq=False)
class RedistributionMatrix:
    """Row-stochastic redistribution rule; ``weights`` is aligned with ``graph.indices``."""

    graph: Graph
    weights: np.ndarray
    uniform: bool = False

    def __post_init__(self):
        self.weights.setflags(write=False)

    def row(self, v: int) -> dict[int, float]:
        g = self.graph
        sl = slice(g.indptr[v], g.indptr[v + 1])
        return {int(x): float(w) for x, w in zip(g.indices[sl], self.weights[sl]) if w != 0.0}

    def dense(self) -> np.ndarray:
        g = self.graph
        out = np.zeros((g.vertex_count, g.vertex_count))
        src, dst = g.edge_arrays()
        out[src, dst] = self.weights
        return out

    def cumulative(self) -> np.ndarray:
        """Per-row cumulative weights, used to sample destinations."""
        g = self.graph
        cum = np.empty_like(self.weights)
        for v in range(g.vertex_count):
            a, b = g.indptr[v], g.indptr[v + 1]
            cum[a:b] = np.cumsum(self.weights[a:b])
            cum[b - 1] = 1.0
        return cum


def uniform_redistribution(g: Graph) -> RedistributionMatrix:
    w = np.repeat(1.0 / g.degrees, g.degrees)
    return RedistributionMatrix(g, w.astype(np.float64), uniform=True)


def custom_redistribution(g: Graph, rows) -> RedistributionMatrix:
    """Validate a dense ``k x k`` row-stochastic matrix against ``g``."""
    p = np.asarray(rows, dtype=np.float64)
    k = g.vertex_count
    if p.shape != (k, k):
        raise ValidationError(f"rows must have shape ({k}, {k}), got {p.shape}")
    for v in range(k):
        r = p[v]
        if (r < 0).any():
            raise ValidationError(f"row {v}: negative entry")
        if r[v] != 0.0:
            raise ValidationError(f"row {v}: nonzero diagonal")
        if abs(r.sum() - 1.0) > ROW_SUM_TOL:
            raise ValidationError(f"row {v}: sums to {r.sum()!r}, not 1")
        off = np.flatnonzero(r)
        nb = g.neighbors(v)
        if not np.isin(off, nb).all():
            raise ValidationError(f"row {v}: mass sent to a non-neighbor")
    for u, v in g.edges():
        if p[u, v] + p[v, u] <= 0.0:
            raise ValidationError(f"row {u}: edge ({u}, {v}) carries no mass either way")
    src, dst = g.edge_arrays()
    return RedistributionMatrix(g, p[src, dst].copy())


def graph_from_matrix(rows) -> tuple[Graph, RedistributionMatrix]:
    """Graph implied by a row-stochastic matrix (edge iff ``p_xy + p_yx > 0``)."""
    p = np.asarray(rows, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError("rows must be a square matrix")
    sym = (p + p.T) > 0
    np.fill_diagonal(sym, False)
    edges = [(u, v) for u, v in zip(*np.nonzero(np.triu(sym)))]
    g = build_graph(p.shape[0], edges)
    return g, custom_redistribution(g, p)


def load_graph_json(source) -> tuple[Graph, RedistributionMatrix]:
    """Load a custom graph (and optional rows) from a path, JSON text or dict."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        doc = json.loads(Path(source).read_text())
    else:
        doc = json.loads(source)
    if "vertices" not in doc:
        raise ValidationError("graph document needs 'vertices'")
    k = int(doc["vertices"])
    rows = doc.get("rows")
    if "edges" in doc:
        g = build_graph(k, doc["edges"])
        P = custom_redistribution(g, rows) if rows is not None else uniform_redistribution(g)
        return g, P
    if rows is None:
        raise ValidationError("graph document needs 'edges' or 'rows'")
    g, P = graph_from_matrix(rows)
    if g.vertex_count != k:
        raise ValidationError("'vertices' disagrees with the shape of 'rows'")
    return g, P


def dump_graph_json(g: Graph, P: RedistributionMatrix | None = None) -> str:
    doc: dict = {"vertices": g.vertex_count, "edges": [list(e) for e in g.edges()]}
    if P is not None and not P.uniform:
        doc["rows"] = P.dense().tolist()
    return json.dumps(doc)
