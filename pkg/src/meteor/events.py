"""Reproducible meteor-hit streams and seed splitting.

All vertex clocks are merged into one rate-``k`` Poisson process with
i.i.d. uniform marks, which is equivalent in law to ``k`` independent
rate-1 clocks.  Times and vertices come from two independent PCG64
generators spawned from the stream seed.  They are drawn in fixed-size
internal blocks, so the emitted sequence does not depend on how callers
slice their requests.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

BLOCK = 1 << 16


def split_seed(master: int, index: int) -> int:
    """Seed of replication ``index`` under ``master``: ``SeedSequence([master, index])``, first 64 bits."""
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def child_rng(seed: int, purpose: int) -> np.random.Generator:
    """Independent generator for an auxiliary purpose (walker directions, start points, ...)."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), 0xA11CE, int(purpose)])
    return np.random.Generator(np.random.PCG64(ss))


class EventStream:
    """Ordered ``(time, vertex)`` meteor hits for a graph with ``n_vertices`` vertices."""

    def __init__(self, n_vertices: int, seed: int, start_time: float = 0.0):
        if n_vertices < 1:
            raise ValidationError("stream needs at least one vertex")
        self.n_vertices = int(n_vertices)
        self.seed = int(seed)
        ss = np.random.SeedSequence(self.seed & (2**64 - 1))
        t_ss, v_ss = ss.spawn(2)
        self._t_rng = np.random.Generator(np.random.PCG64(t_ss))
        self._v_rng = np.random.Generator(np.random.PCG64(v_ss))
        self._clock = float(start_time)
        self._times = np.empty(0)
        self._verts = np.empty(0, dtype=np.int64)
        self._pos = 0
        self.cursor = 0

    def _refill(self) -> None:
        dt = self._t_rng.standard_exponential(BLOCK) / self.n_vertices
        times = self._clock + np.cumsum(dt)
        verts = self._v_rng.integers(0, self.n_vertices, BLOCK, dtype=np.int64)
        self._clock = float(times[-1])
        rest_t = self._times[self._pos:]
        rest_v = self._verts[self._pos:]
        self._times = np.concatenate([rest_t, times]) if len(rest_t) else times
        self._verts = np.concatenate([rest_v, verts]) if len(rest_v) else verts
        self._pos = 0

    def take(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``n`` events."""
        n = int(n)
        while len(self._times) - self._pos < n:
            self._refill()
        t = self._times[self._pos:self._pos + n]
        v = self._verts[self._pos:self._pos + n]
        self._pos += n
        self.cursor += n
        return t, v

    def take_until(self, t_end: float, limit: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Events with time ``<= t_end`` (at most ``limit`` of them)."""
        if len(self._times) - self._pos == 0:
            self._refill()
        while self._times[-1] <= t_end and (limit is None or len(self._times) - self._pos < limit):
            self._refill()
        n = int(np.searchsorted(self._times[self._pos:], t_end, side="right"))
        if limit is not None:
            n = min(n, limit)
        return self.take(n)

    def peek_time(self) -> float:
        if len(self._times) - self._pos == 0:
            self._refill()
        return float(self._times[self._pos])

    def chunks(self, n_events: int, size: int = BLOCK):
        """Yield ``(times, vertices)`` chunks totalling ``n_events`` events."""
        left = int(n_events)
        while left > 0:
            m = min(size, left)
            yield self.take(m)
            left -= m
