"""Event-driven simulation of the meteor mass process.

A hit at vertex ``v`` empties ``v`` and sends ``p_vx`` of its former mass
to each ``x``.  The state records, per vertex, the time of the last hit
(``NEVER`` before the first one).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from .errors import BudgetError, ValidationError
from .events import EventStream
from .graph import Graph, RedistributionMatrix

NEVER = -math.inf
RENORMALIZE_EVERY = 10**6
DENSE_LIMIT = 2000


@dataclass
class MassState:
    masses: np.ndarray
    last_hit: np.ndarray
    clock: float = 0.0
    n_events: int = 0

    def copy(self) -> "MassState":
        return MassState(self.masses.copy(), self.last_hit.copy(), self.clock, self.n_events)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def all_hit(self) -> bool:
        return bool(np.isfinite(self.last_hit).all())


@dataclass
class SimResult:
    final_state: MassState
    event_log: tuple[np.ndarray, np.ndarray] | None = None
    trajectory: np.ndarray | None = None
    observable_names: tuple[str, ...] = ()

    def write_csv(self, path) -> None:
        """Trajectory as CSV: ``event,time,vertex,<observables>``."""
        if self.trajectory is None:
            raise ValidationError("no trajectory was recorded")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["event", "time", "vertex", *self.observable_names])
            for row in self.trajectory:
                w.writerow([int(row[0]), repr(float(row[1])), int(row[2]), *(repr(float(x)) for x in row[3:])])


def init_state(g: Graph, masses: Sequence[float] | None = None, total: float | None = None) -> MassState:
    """Initial state at clock 0 with no vertex hit yet.

    ``masses`` defaults to the uniform vector; ``total`` rescales it.
    """
    k = g.vertex_count
    if masses is None:
        m = np.full(k, 1.0 if total is None else total / k)
    else:
        m = np.array(masses, dtype=np.float64)
        if m.shape != (k,):
            raise ValidationError(f"expected {k} masses, got shape {m.shape}")
        if (m < 0).any() or not np.isfinite(m).all():
            raise ValidationError("masses must be finite and nonnegative")
        if total is not None:
            m *= total / m.sum()
    return MassState(m, np.full(k, NEVER), 0.0, 0)


def apply_hit(state: MassState, v: int, P: RedistributionMatrix) -> MassState:
    """One hit at ``v`` at the current clock; returns a new state."""
    out = state.copy()
    g = P.graph
    kernels.apply_events(out.masses, out.last_hit, np.array([state.clock]),
                         np.array([v], dtype=np.int64), g.indptr, g.indices, P.weights)
    out.n_events += 1
    return out


def _check_pairs(g: Graph, masses: np.ndarray, zero_pairs_before: int | None) -> int:
    src, dst = g.edge_arrays()
    empty = (masses[src] + masses[dst]) == 0.0
    n = int(empty.sum()) // 2
    if zero_pairs_before is not None and n > zero_pairs_before:
        raise AssertionError(f"adjacent zero-mass pairs increased {zero_pairs_before} -> {n}")
    return n


def simulate(state: MassState, g: Graph, P: RedistributionMatrix, stream: EventStream, *,
             n_events: int | None = None, until: float | None = None,
             observe: Callable[[MassState], Sequence[float]] | None = None,
             observable_names: Sequence[str] = (), stride: int | None = None,
             record_events: bool = False, check: bool = False,
             renormalize: bool = False, inplace: bool = False) -> SimResult:
    """Apply hits from ``stream`` in order, for ``n_events`` events or until time ``until``.

    ``observe`` is sampled every ``stride`` events (default ``|V|``).
    With ``check`` the count of adjacent pairs holding zero total mass is
    asserted nonincreasing at every sampling point.
    """
    if (n_events is None) == (until is None):
        raise ValidationError("give exactly one of n_events or until")
    if P.graph is not g and P.graph.vertex_count != g.vertex_count:
        raise ValidationError("matrix and graph dimensions differ")
    st = state if inplace else state.copy()
    stride = int(stride or g.vertex_count)
    total0 = st.total
    log_t: list[np.ndarray] = []
    log_v: list[np.ndarray] = []
    rows: list[list[float]] = []
    zero_pairs = _check_pairs(g, st.masses, None) if check else None
    last_v = -1

    def step(times, verts):
        nonlocal zero_pairs, last_v
        if len(verts) == 0:
            return
        before = st.n_events
        kernels.apply_events(st.masses, st.last_hit, times, verts, g.indptr, g.indices, P.weights)
        st.n_events += len(verts)
        st.clock = float(times[-1])
        last_v = int(verts[-1])
        if record_events:
            log_t.append(times.copy())
            log_v.append(verts.copy())
        if renormalize and before // RENORMALIZE_EVERY != st.n_events // RENORMALIZE_EVERY:
            st.masses *= total0 / st.masses.sum()
        if check:
            zero_pairs = _check_pairs(g, st.masses, zero_pairs)

    done = 0
    while True:
        if n_events is not None:
            m = min(stride - (st.n_events % stride), n_events - done)
            if m <= 0:
                break
            times, verts = stream.take(m)
        else:
            m = stride - (st.n_events % stride)
            times, verts = stream.take_until(until, limit=m)
            if len(verts) == 0:
                break
        step(times, verts)
        done += len(verts)
        if observe is not None and st.n_events % stride == 0:
            rows.append([st.n_events, st.clock, last_v, *observe(st)])
    if until is not None:
        st.clock = max(st.clock, float(until))
    log = (np.concatenate(log_t), np.concatenate(log_v)) if record_events and log_t else (
        (np.empty(0), np.empty(0, dtype=np.int64)) if record_events else None)
    traj = np.array(rows, dtype=np.float64) if observe is not None else None
    return SimResult(st, log, traj, tuple(observable_names))


def default_burn_in(g: Graph) -> int:
    """``max(10**4, 50 * diam(G)**2)`` events."""
    return max(10**4, 50 * g.diameter() ** 2)


def stationary_sample(g: Graph, P: RedistributionMatrix, stream: EventStream,
                      burn_in_events: int | None = None, state: MassState | None = None,
                      total: float | None = None) -> MassState:
    """Approximate draw from the stationary law.

    Starts from ``state`` (default: uniform mass) and runs
    ``burn_in_events`` hits.  Feeding the returned state back in with a
    smaller burn-in yields a stationary sequence from one trajectory.
    """
    if burn_in_events is None:
        burn_in_events = default_burn_in(g)
    st = init_state(g, total=total) if state is None else state.copy()
    return simulate(st, g, P, stream, n_events=int(burn_in_events), inplace=True).final_state


def stationary_samples(g: Graph, P: RedistributionMatrix, stream: EventStream, n_samples: int,
                       spacing: int, burn_in_events: int | None = None,
                       total: float | None = None):
    """Yield ``n_samples`` states from one trajectory, ``spacing`` events apart after burn-in."""
    st = stationary_sample(g, P, stream, burn_in_events, total=total)
    for i in range(n_samples):
        if i:
            simulate(st, g, P, stream, n_events=spacing, inplace=True)
        yield st.copy()


def crater_ready(g: Graph, P: RedistributionMatrix, stream: EventStream, state: MassState,
                 margin_time: float = 1.0) -> MassState:
    """Run ``state`` in place until every vertex has been hit, plus ``margin_time`` time units.

    From a start with no adjacent pair of zero total mass, crater
    positions are a function of last-hit times only, so once every
    vertex has been hit they are distributed exactly as under the
    stationary law.
    """
    while not state.all_hit():
        simulate(state, g, P, stream, n_events=g.vertex_count, inplace=True)
    simulate(state, g, P, stream, until=state.clock + margin_time, inplace=True)
    return state


@dataclass
class CoupledResult:
    distances: np.ndarray
    times: np.ndarray
    state_a: MassState
    state_b: MassState
    d0: float = field(default=0.0)


def coupled_run(state_a: MassState, state_b: MassState, g: Graph, P: RedistributionMatrix,
                stream: EventStream, *, n_events: int | None = None, until: float | None = None,
                resync: int | None = None) -> CoupledResult:
    """Two mass processes driven by the same hits; ``distances[i]`` is ``sum |M - M~|`` after hit ``i``."""
    ta, tb = state_a.total, state_b.total
    if abs(ta - tb) > 1e-12 * max(abs(ta), abs(tb), 1.0):
        raise ValidationError(f"coupled states need equal total mass, got {ta} and {tb}")
    if (n_events is None) == (until is None):
        raise ValidationError("give exactly one of n_events or until")
    a, b = state_a.copy(), state_b.copy()
    if n_events is not None:
        times, verts = stream.take(n_events)
    else:
        times, verts = stream.take_until(until)
    d0 = float(np.abs(a.masses - b.masses).sum())
    out = np.empty(len(verts))
    resync = g.vertex_count if resync is None else int(resync)
    kernels.coupled_events(a.masses, b.masses, a.last_hit, times, verts, g.indptr, g.indices,
                           P.weights, out, d0, resync, 0)
    b.last_hit[:] = a.last_hit
    for s in (a, b):
        s.n_events += len(verts)
        if len(verts):
            s.clock = float(times[-1])
        if until is not None:
            s.clock = max(s.clock, float(until))
    return CoupledResult(out, np.asarray(times).copy(), a, b, d0)


def hit_matrix(g: Graph, P: RedistributionMatrix, v: int) -> np.ndarray:
    """Matrix ``A_v`` with ``A_v @ masses`` equal to a hit at ``v``."""
    k = g.vertex_count
    if k > DENSE_LIMIT:
        raise BudgetError(f"dense matrices limited to {DENSE_LIMIT} vertices")
    A = np.eye(k)
    A[:, v] = 0.0
    for x, w in P.row(v).items():
        A[x, v] = w
    return A


def column_l1_diameter(A: np.ndarray) -> float:
    """``max_{i,j} sum_x |A[x,i] - A[x,j]|``."""
    k = A.shape[1]
    best = 0.0
    for i in range(k - 1):
        d = np.abs(A[:, i + 1:] - A[:, [i]]).sum(axis=0).max()
        best = max(best, float(d))
    return best


def matrix_trajectory(g: Graph, P: RedistributionMatrix, stream: EventStream, n_events: int,
                      diameter_every: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Product ``A_{I_n} ... A_{I_1}`` along the stream and its column L1 diameters.

    ``diameters[0]`` is the identity's diameter; entry ``i`` is taken after
    ``i * diameter_every`` events.
    """
    k = g.vertex_count
    if k > DENSE_LIMIT:
        raise BudgetError(f"dense matrix products limited to {DENSE_LIMIT} vertices")
    prod = np.eye(k)
    diam = [column_l1_diameter(prod)]
    if n_events <= 0:
        return prod, np.array(diam)
    _, verts = stream.take(n_events)
    rows = [P.row(v) for v in range(k)]
    for i, v in enumerate(verts.tolist(), start=1):
        src = prod[v].copy()
        prod[v] = 0.0
        for x, w in rows[v].items():
            prod[x] += w * src
        if i % diameter_every == 0:
            diam.append(column_l1_diameter(prod))
    return prod, np.array(diam)
