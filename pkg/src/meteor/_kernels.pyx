# Compiled inner loops.  Every function here has a line-for-line twin in
# _pykernels.py; both must perform the same floating-point operations in
# the same order so that the two backends agree bit for bit.

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

ctypedef cnp.int64_t i64


def apply_events(double[::1] masses, double[::1] last_hit,
                 const double[::1] times, const i64[::1] verts,
                 const i64[::1] indptr, const i64[::1] indices,
                 const double[::1] weights):
    cdef Py_ssize_t n = verts.shape[0]
    cdef Py_ssize_t e, s
    cdef i64 v
    cdef double m
    with nogil:
        for e in range(n):
            v = verts[e]
            m = masses[v]
            masses[v] = 0.0
            last_hit[v] = times[e]
            if m != 0.0:
                for s in range(indptr[v], indptr[v + 1]):
                    masses[indices[s]] += m * weights[s]


cdef inline double _local_gap(double[::1] a, double[::1] b, i64 v,
                              const i64[::1] indptr, const i64[::1] indices) noexcept nogil:
    cdef double acc = fabs(a[v] - b[v])
    cdef Py_ssize_t s
    cdef i64 x
    for s in range(indptr[v], indptr[v + 1]):
        x = indices[s]
        acc += fabs(a[x] - b[x])
    return acc


cdef inline double _full_gap(double[::1] a, double[::1] b) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        acc += fabs(a[i] - b[i])
    return acc


def coupled_events(double[::1] ma, double[::1] mb, double[::1] last_hit,
                   const double[::1] times, const i64[::1] verts,
                   const i64[::1] indptr, const i64[::1] indices,
                   const double[::1] weights, double[::1] dout,
                   double d0, Py_ssize_t resync, Py_ssize_t phase):
    """Drive two mass vectors with one event list; ``dout[e]`` is the L1 gap after event ``e``.

    The gap is updated locally and recomputed in full every ``resync``
    events (counted from ``phase``).  Returns the gap after the last event.
    """
    cdef Py_ssize_t n = verts.shape[0]
    cdef Py_ssize_t e, s
    cdef i64 v, x
    cdef double a, b, before, d = d0
    with nogil:
        for e in range(n):
            v = verts[e]
            before = _local_gap(ma, mb, v, indptr, indices)
            a = ma[v]
            b = mb[v]
            ma[v] = 0.0
            mb[v] = 0.0
            last_hit[v] = times[e]
            for s in range(indptr[v], indptr[v + 1]):
                x = indices[s]
                if a != 0.0:
                    ma[x] += a * weights[s]
                if b != 0.0:
                    mb[x] += b * weights[s]
            if resync > 0 and (phase + e + 1) % resync == 0:
                d = _full_gap(ma, mb)
            else:
                d = d + (_local_gap(ma, mb, v, indptr, indices) - before)
            dout[e] = d
    return d


cdef Py_ssize_t _move_walkers(i64[::1] pos, const i64[::1] verts,
                              const i64[::1] indptr, const i64[::1] indices,
                              const double[::1] cum, const double[:, ::1] unif,
                              i64[::1] ucur, i64[::1] jumps, i64[:, ::1] trace,
                              Py_ssize_t start) noexcept nogil:
    cdef Py_ssize_t n = verts.shape[0]
    cdef Py_ssize_t w, nw = pos.shape[0], cap = unif.shape[1]
    cdef Py_ssize_t e, s, b
    cdef bint record = trace.shape[0] > 0
    cdef i64 v
    cdef double u
    for e in range(start, n):
        v = verts[e]
        for w in range(nw):
            if pos[w] == v and ucur[w] >= cap:
                return e
        for w in range(nw):
            if pos[w] == v:
                u = unif[w, ucur[w]]
                ucur[w] += 1
                b = indptr[v + 1] - 1
                s = indptr[v]
                while s < b and cum[s] <= u:
                    s += 1
                pos[w] = indices[s]
                jumps[w] += 1
        if record:
            for w in range(nw):
                trace[e, w] = pos[w]
    return n


def move_walkers(i64[::1] pos, const i64[::1] verts,
                 const i64[::1] indptr, const i64[::1] indices,
                 const double[::1] cum, const double[:, ::1] unif,
                 i64[::1] ucur, i64[::1] jumps, i64[:, ::1] trace,
                 Py_ssize_t start):
    """Move every walker sitting on the hit vertex, for events ``start..``.

    Each walker draws its destination from its own row of ``unif``.  If a
    walker that must move has exhausted its row, nothing is applied for
    that event and its index is returned so the caller can refill.
    Returns ``len(verts)`` when all events were consumed.
    """
    cdef Py_ssize_t stop
    with nogil:
        stop = _move_walkers(pos, verts, indptr, indices, cum, unif, ucur, jumps, trace, start)
    return stop


def worm_steps(double[::1] masses, i64 worm, const double[::1] unif,
               const i64[::1] indptr, const i64[::1] indices,
               const double[::1] weights):
    """Advance the earthworm one jump per entry of ``unif``; returns its final position.

    The worm moves to a uniformly chosen neighbor, then the mass at its
    arrival vertex is redistributed.
    """
    cdef Py_ssize_t n = unif.shape[0]
    cdef Py_ssize_t e, s, a, deg
    cdef double m
    with nogil:
        for e in range(n):
            a = indptr[worm]
            deg = indptr[worm + 1] - a
            s = <Py_ssize_t>(unif[e] * deg)
            if s >= deg:
                s = deg - 1
            worm = indices[a + s]
            m = masses[worm]
            masses[worm] = 0.0
            if m != 0.0:
                for s in range(indptr[worm], indptr[worm + 1]):
                    masses[indices[s]] += m * weights[s]
    return worm


def descent_counts(int m):
    """Histogram of all ``m!`` permutations by descent mask (bit ``i``: ``p[i] > p[i+1]``).

    Plain enumeration (Heap's algorithm); no counting shortcuts.
    """
    if m < 1 or m > 13:
        raise ValueError("window length must be in 1..13")
    cdef Py_ssize_t size = 1 << (m - 1) if m > 1 else 1
    counts = np.zeros(size, dtype=np.int64)
    cdef i64[::1] cv = counts
    cdef int a[16]
    cdef int c[16]
    cdef int i, t, mask
    for i in range(m):
        a[i] = i
        c[i] = 0
    with nogil:
        mask = 0
        for t in range(m - 1):
            if a[t] > a[t + 1]:
                mask |= 1 << t
        cv[mask] += 1
        i = 0
        while i < m:
            if c[i] < i:
                if i % 2 == 0:
                    t = a[0]; a[0] = a[i]; a[i] = t
                else:
                    t = a[c[i]]; a[c[i]] = a[i]; a[i] = t
                mask = 0
                for t in range(m - 1):
                    if a[t] > a[t + 1]:
                        mask |= 1 << t
                cv[mask] += 1
                c[i] += 1
                i = 0
            else:
                c[i] = 0
                i += 1
    return counts


def complete_events(double[::1] offsets, double[::1] last_hit,
                    const double[::1] times, const i64[::1] verts, double base):
    """Hits on the complete graph with uniform splitting, O(1) per hit.

    Vertex ``x`` holds ``offsets[x] + base``; a hit at ``v`` raises the
    shared ``base`` by ``M^v / (k - 1)`` and pins ``v`` to zero.  Returns
    the new ``base``.
    """
    cdef Py_ssize_t n = verts.shape[0]
    cdef Py_ssize_t e
    cdef i64 v
    cdef double m, share = 1.0 / (offsets.shape[0] - 1)
    with nogil:
        for e in range(n):
            v = verts[e]
            m = offsets[v] + base
            base = base + m * share
            offsets[v] = -base
            last_hit[v] = times[e]
    return base
