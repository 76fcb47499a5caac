"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same operation order, hence identical floating-point
results.  Used when the extension is not built or when
``METEOR_BACKEND=python`` is set.
"""

import numpy as np


def apply_events(masses, last_hit, times, verts, indptr, indices, weights):
    m_ = masses.tolist()
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    ts = times.tolist()
    lh = last_hit
    for e, v in enumerate(verts.tolist()):
        m = m_[v]
        m_[v] = 0.0
        lh[v] = ts[e]
        if m != 0.0:
            for s in range(ip[v], ip[v + 1]):
                m_[ix[s]] += m * wt[s]
    masses[:] = m_


def _local_gap(a, b, v, ip, ix):
    acc = abs(a[v] - b[v])
    for s in range(ip[v], ip[v + 1]):
        x = ix[s]
        acc += abs(a[x] - b[x])
    return acc


def _full_gap(a, b):
    acc = 0.0
    for x, y in zip(a, b):
        acc += abs(x - y)
    return acc


def coupled_events(ma, mb, last_hit, times, verts, indptr, indices, weights,
                   dout, d0, resync, phase):
    a_ = ma.tolist()
    b_ = mb.tolist()
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    ts = times.tolist()
    d = d0
    for e, v in enumerate(verts.tolist()):
        before = _local_gap(a_, b_, v, ip, ix)
        a = a_[v]
        b = b_[v]
        a_[v] = 0.0
        b_[v] = 0.0
        last_hit[v] = ts[e]
        for s in range(ip[v], ip[v + 1]):
            x = ix[s]
            if a != 0.0:
                a_[x] += a * wt[s]
            if b != 0.0:
                b_[x] += b * wt[s]
        if resync > 0 and (phase + e + 1) % resync == 0:
            d = _full_gap(a_, b_)
        else:
            d = d + (_local_gap(a_, b_, v, ip, ix) - before)
        dout[e] = d
    ma[:] = a_
    mb[:] = b_
    return d


def move_walkers(pos, verts, indptr, indices, cum, unif, ucur, jumps, trace, start):
    n = len(verts)
    nw = len(pos)
    cap = unif.shape[1]
    record = trace.shape[0] > 0
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
            trace[e, :] = pos
    return n


def worm_steps(masses, worm, unif, indptr, indices, weights):
    m_ = masses.tolist()
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    worm = int(worm)
    for u in unif.tolist():
        a = ip[worm]
        deg = ip[worm + 1] - a
        s = int(u * deg)
        if s >= deg:
            s = deg - 1
        worm = ix[a + s]
        m = m_[worm]
        m_[worm] = 0.0
        if m != 0.0:
            for s in range(ip[worm], ip[worm + 1]):
                m_[ix[s]] += m * wt[s]
    masses[:] = m_
    return worm


def descent_counts(m):
    if m < 1 or m > 13:
        raise ValueError("window length must be in 1..13")
    counts = np.zeros(1 << (m - 1) if m > 1 else 1, dtype=np.int64)
    a = list(range(m))
    c = [0] * m

    def tally():
        mask = 0
        for t in range(m - 1):
            if a[t] > a[t + 1]:
                mask |= 1 << t
        counts[mask] += 1

    tally()
    i = 0
    while i < m:
        if c[i] < i:
            j = 0 if i % 2 == 0 else c[i]
            a[j], a[i] = a[i], a[j]
            tally()
            c[i] += 1
            i = 0
        else:
            c[i] = 0
            i += 1
    return counts


def complete_events(offsets, last_hit, times, verts, base):
    off = offsets.tolist()
    ts = times.tolist()
    share = 1.0 / (len(off) - 1)
    for e, v in enumerate(verts.tolist()):
        m = off[v] + base
        base = base + m * share
        off[v] = -base
        last_hit[v] = ts[e]
    offsets[:] = off
    return base
