"""Random walkers driven by the meteor clocks.

A walker sitting at ``v`` jumps exactly when ``v`` is hit, to a
neighbor drawn from row ``v`` of the redistribution matrix.  Walkers at
the same vertex therefore always jump together, with independent
destinations; walkers at different vertices never jump together.
Started from ``M_0 / |V|``, a walker sits at ``x`` at time ``t`` with
conditional probability ``M^x_t / |V|`` given the clocks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .engine import init_state, simulate
from .errors import BudgetError, InvalidSizeError, ValidationError
from .events import EventStream, child_rng, split_seed
from .graph import Graph, RedistributionMatrix, build_torus, uniform_redistribution
from .stats import Estimate, batch_means, wilson_interval

WALKER_PURPOSE = 1 << 20
START_PURPOSE = 7
MEETING_PURPOSE = 11
BUFFER = 1024


class WalkerEnsemble:
    """Walkers on ``g`` sharing the clocks of an event stream.

    Each walker owns a direction generator split from ``seed``, so its
    sequence of destination draws does not depend on how events are
    batched or on the mass process sharing the same stream.
    """

    def __init__(self, g: Graph, P: RedistributionMatrix, positions, seed: int,
                 stream: EventStream | None = None, buffer: int = BUFFER):
        pos = np.array(positions, dtype=np.int64).ravel()
        if len(pos) == 0:
            raise ValidationError("walker ensemble must not be empty")
        if pos.min() < 0 or pos.max() >= g.vertex_count:
            raise ValidationError("walker start outside the vertex set")
        self.graph = g
        self.P = P
        self.pos = pos
        self.stream = stream
        self._cum = P.cumulative()
        self._rngs = [child_rng(seed, WALKER_PURPOSE + w) for w in range(len(pos))]
        self._unif = np.empty((len(pos), int(buffer)))
        for w, rng in enumerate(self._rngs):
            self._unif[w] = rng.random(buffer)
        self._ucur = np.zeros(len(pos), dtype=np.int64)
        self.jumps = np.zeros(len(pos), dtype=np.int64)
        self.clock = 0.0

    def __len__(self) -> int:
        return len(self.pos)

    def _refill(self) -> None:
        cap = self._unif.shape[1]
        for w in np.flatnonzero(self._ucur >= cap):
            self._unif[w] = self._rngs[w].random(cap)
            self._ucur[w] = 0

    def advance(self, times: np.ndarray, verts: np.ndarray, record: bool = False) -> np.ndarray | None:
        """Apply a batch of hits; with ``record`` return positions after each hit, shape ``(n, W)``."""
        n = len(verts)
        trace = np.empty((n if record else 0, len(self.pos)), dtype=np.int64)
        g = self.graph
        start = 0
        while True:
            start = kernels.move_walkers(self.pos, verts, g.indptr, g.indices, self._cum,
                                         self._unif, self._ucur, self.jumps, trace, start)
            if start >= n:
                break
            self._refill()
        if n:
            self.clock = float(times[-1])
        return trace if record else None

    def run(self, n_events: int | None = None, until: float | None = None, record: bool = False):
        """Pull hits from the bound stream; returns ``(times, trace)`` when recording."""
        if self.stream is None:
            raise ValidationError("ensemble is not bound to a stream")
        if (n_events is None) == (until is None):
            raise ValidationError("give exactly one of n_events or until")
        times, verts = self.stream.take(n_events) if n_events is not None else self.stream.take_until(until)
        trace = self.advance(times, verts, record)
        if until is not None:
            self.clock = max(self.clock, float(until))
        return (times, trace) if record else None


def spawn_walkers(g: Graph, stream: EventStream, init, n_walkers: int | None = None,
                  P: RedistributionMatrix | None = None, seed: int | None = None) -> WalkerEnsemble:
    """Walkers bound to ``stream``.

    ``init`` is either a vector of start vertices (integers) or a
    nonnegative weight vector over vertices from which ``n_walkers``
    independent starts are drawn.
    """
    P = uniform_redistribution(g) if P is None else P
    seed = stream.seed if seed is None else seed
    arr = np.asarray(init)
    if n_walkers is None:
        if arr.dtype.kind not in "iu":
            raise ValidationError("give n_walkers when init is a distribution")
        return WalkerEnsemble(g, P, arr, seed, stream)
    if n_walkers < 1:
        raise ValidationError("walker ensemble must not be empty")
    w = np.asarray(init, dtype=np.float64)
    if w.shape != (g.vertex_count,) or (w < 0).any() or w.sum() <= 0:
        raise ValidationError("start distribution must be a nonnegative vector over vertices")
    starts = child_rng(seed, START_PURPOSE).choice(g.vertex_count, size=n_walkers, p=w / w.sum())
    return WalkerEnsemble(g, P, starts, seed, stream)


# Occupancy identity ---------------------------------------------------------

@dataclass
class OccupancyReport:
    walker_freq: np.ndarray
    mass_freq: np.ndarray
    stderr: np.ndarray
    max_gap: float
    max_z: float
    n_walkers: int

    @property
    def ok(self) -> bool:
        return self.max_z < 3.0 or self.max_gap == 0.0


def occupancy_identity_check(g: Graph, P: RedistributionMatrix, seed: int, horizon: float,
                             reps: int, masses=None, walkers_per_rep: int = 64) -> OccupancyReport:
    """Compare walker occupancy at ``horizon`` with ``M_horizon / total``.

    Each replication runs one mass process and ``walkers_per_rep``
    walkers started from ``M_0 / total`` on the same clocks.  Given the
    clocks, walker positions are independent with law ``M_t / total``, so
    the pooled frequency has a multinomial standard error.
    """
    k = g.vertex_count
    counts = np.zeros(k)
    mass_acc = np.zeros(k)
    for r in range(reps):
        s = split_seed(seed, r)
        stream = EventStream(k, s)
        st = init_state(g, masses)
        total = st.total
        ens = spawn_walkers(g, stream, st.masses, walkers_per_rep, P, seed=s)
        times, verts = stream.take_until(horizon)
        ens.advance(times, verts)
        stream2 = _Replay(times, verts, k)
        st = simulate(st, g, P, stream2, n_events=len(verts), inplace=True).final_state
        counts += np.bincount(ens.pos, minlength=k)
        mass_acc += st.masses / total
    n = reps * walkers_per_rep
    wf = counts / n
    mf = mass_acc / reps
    se = np.sqrt(np.maximum(mf * (1 - mf), 1e-300) / n)
    gap = np.abs(wf - mf)
    return OccupancyReport(wf, mf, se, float(gap.max()), float((gap / se).max()), n)


class _Replay:
    """Minimal stream that hands back a prerecorded batch of hits."""

    def __init__(self, times, verts, n_vertices):
        self.times, self.verts, self.n_vertices = times, verts, n_vertices
        self.pos = 0

    def take(self, n):
        t = self.times[self.pos:self.pos + n]
        v = self.verts[self.pos:self.pos + n]
        self.pos += n
        return t, v


# Stationary law of the difference walk on a torus ---------------------------

@dataclass(frozen=True)
class DifferenceLaw:
    """Law of ``Z - Z~`` for two clock-coupled walkers on ``torus(n, d)``, indexed by vertex.

    ``embedded`` is the stationary law of the jump chain, ``time_weighted``
    the stationary law in continuous time (holding mean 1 at the origin,
    1/2 elsewhere).
    """

    n: int
    d: int
    embedded: np.ndarray
    time_weighted: np.ndarray

    def unit_indices(self) -> list[int]:
        out = []
        for axis in range(self.d):
            out.append(self.n ** axis)
            out.append((self.n - 1) * self.n ** axis)
        return out

    def second_moment(self, offset: int) -> float:
        """``E[M^x M^(x+offset)]`` under the stationary law with unit mean per vertex."""
        return float(self.n ** self.d * self.time_weighted[offset])

    def covariance(self, offset: int) -> float:
        return self.second_moment(offset) - 1.0


def _difference_chain(n: int, d: int) -> sp.csr_matrix:
    g = build_torus(n, d)
    N = g.vertex_count
    unit_coords = [np.array([(s if a == axis else 0) for a in range(d)])
                   for axis in range(d) for s in (1, -1)]
    rows, cols, vals = [], [], []
    q = 1.0 / (2 * d)
    for x in range(1, N):
        for y in g.neighbors(x):
            rows.append(x)
            cols.append(int(y))
            vals.append(q)
    for a in unit_coords:
        for b in unit_coords:
            rows.append(0)
            cols.append(g.index(tuple(a - b)))
            vals.append(q * q)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def difference_walk_stationary(n: int, d: int) -> DifferenceLaw:
    """Solve the balance equations of the embedded difference chain."""
    if n < 3 or d < 1:
        raise InvalidSizeError("difference walk needs n >= 3 and d >= 1")
    N = n ** d
    if N > 10**6:
        raise BudgetError(f"{N} states exceed the linear-solve budget of 10**6")
    T = _difference_chain(n, d)
    A = (T.T - sp.identity(N, format="csr")).tolil()
    A[0, :] = np.ones(N)
    rhs = np.zeros(N)
    rhs[0] = 1.0
    pi = spla.spsolve(A.tocsc(), rhs)
    return _with_time_weights(n, d, pi)


def difference_law_closed(n: int, d: int) -> DifferenceLaw:
    """Closed form: ``c(1 - 1/(2d))`` on the unit vectors, ``c`` elsewhere."""
    if n < 3 or d < 1:
        raise InvalidSizeError("difference walk needs n >= 3 and d >= 1")
    N = n ** d
    pi = np.ones(N)
    law = DifferenceLaw(n, d, pi, pi)
    pi[law.unit_indices()] = 1.0 - 1.0 / (2 * d)
    return _with_time_weights(n, d, pi / pi.sum())


def _with_time_weights(n: int, d: int, pi: np.ndarray) -> DifferenceLaw:
    h = np.full(len(pi), 0.5)
    h[0] = 1.0
    w = pi * h
    return DifferenceLaw(n, d, pi, w / w.sum())


# Meeting-time tails ----------------------------------------------------------

@dataclass
class MeetingTail:
    t_grid: np.ndarray
    alpha: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    stderr: np.ndarray
    worst_pair: list[tuple[int, int]]
    n_pairs: int
    reps: int
    exhaustive: bool

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "alpha", "wilson_low", "wilson_high", "stderr", "x", "y"])
            for i, t in enumerate(self.t_grid):
                x, y = self.worst_pair[i]
                w.writerow([repr(float(t)), repr(float(self.alpha[i])), repr(float(self.lower[i])),
                            repr(float(self.upper[i])), repr(float(self.stderr[i])), x, y])


def _independent_meeting_times(g: Graph, P: RedistributionMatrix, x: int, y: int, reps: int,
                               t_max: float, rng: np.random.Generator) -> np.ndarray:
    """Meeting times of two independent rate-1 walkers; ``inf`` if not met by ``t_max``."""
    tau = np.full(reps, np.inf)
    if x == y:
        tau[:] = 0.0
        return tau
    cum = P.cumulative()
    ip = g.indptr
    maxdeg = int(np.diff(ip).max())
    pos = np.empty((2, reps), dtype=np.int64)
    pos[0], pos[1] = x, y
    clock = np.zeros(reps)
    live = np.arange(reps)
    while len(live):
        m = len(live)
        clock[live] += rng.standard_exponential(m) / 2.0
        over = clock[live] > t_max
        live = live[~over]
        m = len(live)
        if m == 0:
            break
        who = rng.integers(0, 2, m)
        v = pos[who, live]
        u = rng.random(m)
        s = ip[v].copy()
        last = ip[v + 1] - 1
        for _ in range(maxdeg - 1):
            step = (s < last) & (cum[s] <= u)
            if not step.any():
                break
            s += step
        pos[who, live] = g.indices[s]
        met = pos[0, live] == pos[1, live]
        tau[live[met]] = clock[live[met]]
        live = live[~met]
    return tau


def meeting_tail_alpha(g: Graph, P: RedistributionMatrix, t_grid, reps: int, seed: int,
                       start_pairs=None, n_pairs: int = 16, exhaustive: bool = False,
                       confidence: float = 0.95) -> MeetingTail:
    """``alpha(t) = max over start pairs of P(tau > t)`` for independent walkers.

    Start pairs are ``start_pairs`` if given, all ordered pairs with
    ``exhaustive``, and otherwise ``n_pairs`` uniform draws.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    k = g.vertex_count
    rng = child_rng(seed, MEETING_PURPOSE)
    if start_pairs is not None:
        pairs = [(int(a), int(b)) for a, b in start_pairs]
    elif exhaustive:
        pairs = [(a, b) for a in range(k) for b in range(k) if a != b]
    else:
        pairs = [tuple(int(z) for z in rng.integers(0, k, 2)) for _ in range(n_pairs)]
    t_max = float(t_grid.max()) if len(t_grid) else 0.0
    surv = np.zeros((len(pairs), len(t_grid)), dtype=np.int64)
    for i, (x, y) in enumerate(pairs):
        tau = _independent_meeting_times(g, P, x, y, reps, t_max, rng)
        surv[i] = (tau[None, :] > t_grid[:, None]).sum(axis=1)
    best = surv.argmax(axis=0)
    hits = surv[best, np.arange(len(t_grid))]
    alpha = hits / reps
    ci = [wilson_interval(int(h), reps, confidence) for h in hits]
    se = np.sqrt(alpha * (1 - alpha) / reps)
    return MeetingTail(t_grid, alpha, np.array([c[0] for c in ci]), np.array([c[1] for c in ci]),
                       se, [pairs[b] for b in best], len(pairs), reps, exhaustive)


def meeting_survival_exact(g: Graph, P: RedistributionMatrix, t_grid) -> np.ndarray:
    """``P(tau > t | x, y)`` for independent walkers, shape ``(len(t_grid), k, k)``, by matrix exponential."""
    k = g.vertex_count
    if k > 60:
        raise BudgetError("exact meeting tails are limited to 60 vertices")
    D = P.dense()
    off = [(x, y) for x in range(k) for y in range(k) if x != y]
    idx = {s: i for i, s in enumerate(off)}
    Q = -2.0 * np.eye(len(off))
    for i, (x, y) in enumerate(off):
        for x2 in np.flatnonzero(D[x]):
            j = idx.get((int(x2), y))
            if j is not None:
                Q[i, j] += D[x, x2]
        for y2 in np.flatnonzero(D[y]):
            j = idx.get((x, int(y2)))
            if j is not None:
                Q[i, j] += D[y, y2]
    out = np.zeros((len(t_grid), k, k))
    for a, t in enumerate(np.asarray(t_grid, dtype=np.float64)):
        s = scipy.linalg.expm(t * Q) @ np.ones(len(off))
        for i, (x, y) in enumerate(off):
            out[a, x, y] = s[i]
    return out


def meeting_tail_exact(g: Graph, P: RedistributionMatrix, t_grid) -> np.ndarray:
    """Worst case over start pairs of :func:`meeting_survival_exact`."""
    return meeting_survival_exact(g, P, t_grid).max(axis=(1, 2))


# Joint occupancy of a clock-coupled pair ------------------------------------

@dataclass
class JointOccupancy:
    probs: np.ndarray
    n_samples: int
    n_pairs: int
    diag_mass: Estimate

    def second_moments(self) -> np.ndarray:
        """``E[M^x M^y] = |V|^2 P(Z = x, Z~ = y)`` with unit mean mass per vertex."""
        k = self.probs.shape[0]
        return k * k * self.probs

    def offset_law(self) -> np.ndarray:
        """``P(Z~ - Z = offset)`` on a vertex-transitive graph, by offset index ``(y - x) mod k``."""
        k = self.probs.shape[0]
        x, y = np.indices((k, k))
        return np.bincount(((y - x) % k).ravel(), weights=self.probs.ravel(), minlength=k)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "probability"])
            k = self.probs.shape[0]
            for x in range(k):
                for y in range(k):
                    w.writerow([x, y, repr(float(self.probs[x, y]))])


def joint_occupancy(g: Graph, P: RedistributionMatrix, seed: int, n_pairs: int = 32,
                    burn_in_time: float | None = None, n_samples: int = 1000,
                    spacing_time: float = 1.0) -> JointOccupancy:
    """Empirical stationary law of ``(Z, Z~)`` for clock-coupled walker pairs.

    ``n_pairs`` pairs ride one stream; pairs interact with each other
    through shared clocks, but each pair on its own is a clock-coupled
    pair, so the pooled histogram is unbiased.  Samples are taken every
    ``spacing_time`` after ``burn_in_time`` (default ``2 * diam**2``).
    """
    k = g.vertex_count
    if k * k > 4 * 10**6:
        raise BudgetError("joint occupancy matrix too large")
    if burn_in_time is None:
        burn_in_time = 2.0 * max(g.diameter(), 1) ** 2 + 10.0
    stream = EventStream(k, seed)
    starts = child_rng(seed, START_PURPOSE).integers(0, k, 2 * n_pairs)
    ens = WalkerEnsemble(g, P, starts, seed, stream)
    ens.run(until=burn_in_time)
    hist = np.zeros(k * k)
    diag = np.empty(n_samples)
    t = burn_in_time
    for i in range(n_samples):
        t += spacing_time
        ens.run(until=t)
        z, zt = ens.pos[:n_pairs], ens.pos[n_pairs:]
        hist += np.bincount(z * k + zt, minlength=k * k)
        diag[i] = np.mean(z == zt)
    probs = hist.reshape(k, k) / (n_samples * n_pairs)
    return JointOccupancy(probs, n_samples, n_pairs, batch_means(diag))


def exact_cycle_moments(k: int) -> dict[str, float]:
    """Stationary ``Var M``, adjacent and distant covariances on ``cycle(k)``, ``k >= 4``."""
    law = difference_law_closed(k, 1)
    return {"var": law.covariance(0), "cov_adjacent": law.covariance(1),
            "cov_far": law.covariance(2) if k >= 5 else math.nan}
