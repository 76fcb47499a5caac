"""Replication plumbing and stationary snapshot runs."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from ..engine import MassState, init_state, simulate, stationary_sample
from ..events import EventStream, split_seed
from ..graph import Graph, RedistributionMatrix


def replicate(fn: Callable, seed: int, reps: int, workers: int = 1, **kwargs) -> list:
    """``[fn(split_seed(seed, i), i, **kwargs) for i in range(reps)]``, optionally in worker processes.

    Results come back in replication order, so reducers see the same
    sequence whatever the worker count.
    """
    seeds = [split_seed(seed, i) for i in range(reps)]
    if workers <= 1 or reps <= 1:
        return [fn(s, i, **kwargs) for i, s in enumerate(seeds)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, s, i, **kwargs) for i, s in enumerate(seeds)]
        return [f.result() for f in futs]


def snapshot_run(g: Graph, P: RedistributionMatrix, seed: int, burn_in_events: int,
                 n_events: int, stride: int, observe: Callable[[MassState], Sequence[float]],
                 total: float | None = None) -> np.ndarray:
    """Observables of one stationary trajectory, one row per ``stride`` events after burn-in."""
    stream = EventStream(g.vertex_count, seed)
    st = stationary_sample(g, P, stream, burn_in_events, state=init_state(g, total=total))
    st.n_events = 0
    res = simulate(st, g, P, stream, n_events=int(n_events), stride=int(stride), observe=observe,
                   inplace=True)
    return res.trajectory[:, 3:]


def shifted(g: Graph, steps: int, axis: int = 0) -> np.ndarray:
    """Index map ``x -> x + steps * e_axis`` on a cycle or torus."""
    k = g.vertex_count
    idx = np.arange(k)
    if g.kind == "cycle":
        return (idx + steps) % k
    n, d = g.params
    stride = n ** axis
    c = (idx // stride) % n
    return idx + (((c + steps) % n) - c) * stride


def box_indices(g: Graph, sides: Sequence[int], corner: Sequence[int] | None = None) -> np.ndarray:
    """Vertices of an axis-aligned box on a torus (or interval on a cycle)."""
    if g.kind == "cycle":
        start = 0 if corner is None else corner[0]
        return (start + np.arange(sides[0])) % g.vertex_count
    n, d = g.params
    corner = [0] * d if corner is None else list(corner)
    grids = np.meshgrid(*[(corner[a] + np.arange(sides[a])) % n for a in range(d)], indexing="ij")
    idx = np.zeros(grids[0].shape, dtype=np.int64)
    for a in range(d):
        idx += grids[a] * n ** a
    return np.sort(idx.ravel())


def translates(g: Graph, region: np.ndarray) -> np.ndarray:
    """Row ``s`` holds the region shifted by the ``s``-th vertex vector of a cycle or torus."""
    region = np.asarray(region, dtype=np.int64)
    k = g.vertex_count
    if g.kind == "cycle":
        return (region[None, :] + np.arange(k)[:, None]) % k
    n, d = g.params
    out = np.zeros((k, len(region)), dtype=np.int64)
    shifts = np.arange(k)
    for a in range(d):
        c = (region // n ** a) % n
        s = (shifts // n ** a) % n
        out += ((c[None, :] + s[:, None]) % n) * n ** a
    return out


def boundary_size(g: Graph, region: np.ndarray) -> int:
    inside = np.zeros(g.vertex_count, dtype=bool)
    inside[region] = True
    src, dst = g.edge_arrays()
    return int((inside[src] != inside[dst]).sum()) // 2
