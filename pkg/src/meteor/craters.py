"""Crater, mound and pattern statistics of mass-process states.

A crater is a vertex of zero mass.  Once every vertex has been hit (and
no adjacent pair started empty) this is the same as the last hit at
``v`` being the latest in its closed neighborhood.  On a cycle, craters
are the peaks and mounds the valleys of the last-hit sequence.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .engine import NEVER, MassState
from .errors import UnsupportedGraphError, ValidationError
from .graph import Graph
from .oracle import PatternSpec, closed_A, closed_B, closed_p
from .stats import Estimate, wilson_interval


def _require_cycle(g: Graph) -> int:
    if g.kind == "cycle" or (g.kind == "torus" and g.params[1] == 1):
        return g.vertex_count
    raise UnsupportedGraphError(f"operation needs a cycle, got {g.kind}")


def detect_craters(state: MassState, g: Graph) -> np.ndarray:
    """Sorted crater vertices from last-hit times.

    A vertex is a crater when its last hit is at least as late as every
    neighbor's and it has been hit.  Where nothing in the closed
    neighborhood has been hit yet the mass there is still the initial
    mass, so zero mass decides.
    """
    T = state.last_hit
    src, dst = g.edge_arrays()
    nb_max = np.full(g.vertex_count, NEVER)
    np.maximum.at(nb_max, src, T[dst])
    hit_max = (T >= nb_max) & (T > NEVER)
    untouched = (T == NEVER) & (nb_max == NEVER) & (state.masses == 0.0)
    return np.flatnonzero(hit_max | untouched)


def detect_craters_by_mass(state: MassState) -> np.ndarray:
    return np.flatnonzero(state.masses == 0.0)


def _cyclic_extrema(T: np.ndarray, peaks: bool) -> np.ndarray:
    left = np.roll(T, 1)
    right = np.roll(T, -1)
    if peaks:
        return np.flatnonzero((T > left) & (T > right))
    return np.flatnonzero((T < left) & (T < right))


def rank_permutation(state_or_times) -> np.ndarray:
    """Ranks ``0..k-1`` of last-hit times; never-hit sorts lowest, ties by vertex index."""
    T = state_or_times.last_hit if isinstance(state_or_times, MassState) else np.asarray(state_or_times)
    order = np.lexsort((np.arange(len(T)), T))
    ranks = np.empty(len(T), dtype=np.int64)
    ranks[order] = np.arange(len(T))
    return ranks


def detect_mounds(state: MassState, g: Graph) -> np.ndarray:
    """Local minima of last-hit times around a cycle."""
    _require_cycle(g)
    return _cyclic_extrema(rank_permutation(state), peaks=False)


@dataclass(frozen=True)
class CraterProfile:
    craters: np.ndarray
    mounds: np.ndarray
    rank_perm: np.ndarray

    @property
    def k(self) -> int:
        return len(self.rank_perm)


def crater_profile(state: MassState, g: Graph) -> CraterProfile:
    _require_cycle(g)
    r = rank_permutation(state)
    return CraterProfile(_cyclic_extrema(r, True), _cyclic_extrema(r, False), r)


def count_pattern_occurrences(profile: CraterProfile | np.ndarray, spec: PatternSpec) -> int:
    """Positions ``j`` of a cycle where some pattern of ``spec`` matches the window from ``j``.

    Patterns of length 3 or less, the common case, are vectorized.
    """
    r = profile.rank_perm if isinstance(profile, CraterProfile) else np.asarray(profile)
    k = len(r)
    if not spec.patterns:
        return 0
    if spec.max_len > k:
        raise ValidationError("pattern window longer than the cycle")
    hit = np.zeros(k, dtype=bool)
    for p in spec.patterns:
        L = len(p)
        win = np.stack([np.roll(r, -i) for i in range(L)], axis=1)
        ok = np.ones(k, dtype=bool)
        for a in range(L):
            for b in range(a + 1, L):
                if p[a] < p[b]:
                    ok &= win[:, a] < win[:, b]
                else:
                    ok &= win[:, a] > win[:, b]
        hit |= ok
    return int(hit.sum())


# Gap spectra -------------------------------------------------------------------

@dataclass
class GapSpectrum:
    """Pooled run statistics over fully wrapped cycles.

    ``runs[n]`` counts craters followed by exactly ``n`` non-craters,
    ``a_pairs[(i, j)]`` two consecutive runs of lengths ``i, j >= 1``,
    ``b_pairs[(i, j)]`` runs split by their mound into ``i`` sites before
    and ``j`` after.  Frequencies are per site.
    """

    runs: Counter = field(default_factory=Counter)
    a_pairs: Counter = field(default_factory=Counter)
    b_pairs: Counter = field(default_factory=Counter)
    n_craters: int = 0
    n_sites: int = 0
    n_profiles: int = 0
    per_profile: list = field(default_factory=list)
    mound_offsets: dict = field(default_factory=dict)

    def merge(self, other: "GapSpectrum") -> "GapSpectrum":
        out = GapSpectrum(self.runs + other.runs, self.a_pairs + other.a_pairs,
                          self.b_pairs + other.b_pairs, self.n_craters + other.n_craters,
                          self.n_sites + other.n_sites, self.n_profiles + other.n_profiles,
                          self.per_profile + other.per_profile)
        for src in (self.mound_offsets, other.mound_offsets):
            for n, xs in src.items():
                out.mound_offsets.setdefault(n, []).extend(xs)
        return out

    def frequency(self, what: str, key) -> float:
        table = {"run": self.runs, "A": self.a_pairs, "B": self.b_pairs}[what]
        return table[key] / self.n_sites if self.n_sites else math.nan

    def estimate(self, what: str, key) -> Estimate:
        """Per-site frequency with a between-profile standard error."""
        vals = np.array([prof[what].get(key, 0) / prof["k"] for prof in self.per_profile])
        n = len(vals)
        se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return Estimate(self.frequency(what, key), se, n)

    def crater_estimate(self) -> Estimate:
        vals = np.array([prof["craters"] / prof["k"] for prof in self.per_profile])
        n = len(vals)
        se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return Estimate(self.n_craters / self.n_sites, se, n)

    def write_csv(self, path) -> None:
        """Observed per-site frequencies next to the exact values."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "i", "j", "count", "frequency", "expected"])
            for n in sorted(self.runs):
                w.writerow(["run", n, "", self.runs[n], repr(self.frequency("run", n)), repr(float(closed_p(n)))])
            for (i, j) in sorted(self.a_pairs):
                w.writerow(["A", i, j, self.a_pairs[(i, j)], repr(self.frequency("A", (i, j))),
                            repr(float(closed_A(i, j)))])
            for (i, j) in sorted(self.b_pairs):
                w.writerow(["B", i, j, self.b_pairs[(i, j)], repr(self.frequency("B", (i, j))),
                            repr(float(closed_B(i, j)))])


def profile_spectrum(profile: CraterProfile, max_len: int = 40) -> GapSpectrum:
    """Gap statistics of one cycle.  Runs longer than ``max_len`` are still counted."""
    k = profile.k
    c = profile.craters
    sp = GapSpectrum(n_sites=k, n_profiles=1, n_craters=len(c))
    if len(c) == 0:
        sp.per_profile.append({"k": k, "craters": 0, "run": {}, "A": {}, "B": {}})
        return sp
    gaps = (np.roll(c, -1) - c - 1) % k
    if len(c) == 1:
        gaps = np.array([k - 1])
    runs = Counter(gaps.tolist())
    nxt = np.roll(gaps, -1)
    pairs = Counter((int(i), int(j)) for i, j in zip(gaps, nxt) if i >= 1 and j >= 1)
    is_mound = np.zeros(k, dtype=bool)
    is_mound[profile.mounds] = True
    bp: Counter = Counter()
    offsets: dict[int, list[int]] = {}
    for start, n in zip(c.tolist(), gaps.tolist()):
        if n == 0:
            continue
        sites = (start + 1 + np.arange(n)) % k
        m = np.flatnonzero(is_mound[sites])
        if len(m) != 1:
            raise AssertionError("craters and mounds do not alternate")
        i = int(m[0])
        bp[(i, n - 1 - i)] += 1
        if n <= max_len:
            offsets.setdefault(n, []).append(i + 1)
    sp.runs, sp.a_pairs, sp.b_pairs = runs, pairs, bp
    sp.mound_offsets = offsets
    sp.per_profile.append({"k": k, "craters": len(c), "run": dict(runs), "A": dict(pairs), "B": dict(bp)})
    return sp


def gap_spectrum(profiles) -> GapSpectrum:
    out = GapSpectrum()
    for p in profiles:
        out = out.merge(profile_spectrum(p))
    return out


@dataclass
class MoundTail:
    n: int
    eps: float
    frequency: float
    low: float
    high: float
    n_runs: int
    mean_ratio: float
    insufficient: bool


def mound_position_check(spectrum: GapSpectrum, n: int, eps: float, min_runs: int = 30) -> MoundTail:
    """Empirical ``P(|R/n - 1/2| > eps)`` over runs of length ``n``, ``R`` the mound's 1-based offset."""
    R = np.asarray(spectrum.mound_offsets.get(n, []), dtype=np.float64)
    m = len(R)
    if m == 0:
        return MoundTail(n, eps, math.nan, 0.0, 1.0, 0, math.nan, True)
    bad = int((np.abs(R / n - 0.5) > eps).sum())
    lo, hi = wilson_interval(bad, m)
    return MoundTail(n, eps, bad / m, lo, hi, m, float((R / n).mean()), m < min_runs)


def oldest_soil_statistic(state: MassState, g: Graph) -> float:
    """Age of the oldest exposed soil: clock minus ``min_n max(T^(n-1), T^n, T^(n+1))``."""
    _require_cycle(g)
    T = state.last_hit
    if not np.isfinite(T).all():
        raise ValidationError("oldest-soil statistic needs every site hit")
    w = np.maximum(np.maximum(np.roll(T, 1), T), np.roll(T, -1))
    return float(state.clock - w.min())
