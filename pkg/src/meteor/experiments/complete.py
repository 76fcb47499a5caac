"""Single-site law on large complete graphs."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps

from .._backend import kernels
from ..events import EventStream, split_seed
from ..stats import Estimate, ks_distance
from .report import Claim, Report, band, near, sigma

E_INV = math.exp(-1.0)


def complete_graph_samples(k: int, seed: int, n_samples: int, spacing: float = 4.0,
                           burn_in: float = 20.0) -> dict:
    """Masses of vertices 0 and 1 sampled every ``spacing`` time units on ``complete(k)``.

    Uses the O(1) uniform-split kernel: vertex ``x`` holds
    ``offsets[x] + base``.  Also tracks ``sup |M^0_t - M^0_0 - t + T^0_t|``
    over the sampling grid, with ``T^0_t`` the time since the last hit
    (or ``t`` if there was none) measured from each sampling start.
    """
    stream = EventStream(k, seed)
    off = np.ones(k)
    last = np.full(k, -np.inf)
    base = 0.0
    times, verts = stream.take_until(burn_in)
    base = kernels.complete_events(off, last, times, verts, base)
    m0 = np.empty(n_samples)
    m1 = np.empty(n_samples)
    drift = 0.0
    t = burn_in
    for i in range(n_samples):
        start_mass = off[0] + base
        t0 = t
        t += spacing
        times, verts = stream.take_until(t)
        base = kernels.complete_events(off, last, times, verts, base)
        m0[i] = off[0] + base
        m1[i] = off[1] + base
        # fold the shared level back in so offsets stay O(1)
        off += base
        base = 0.0
        hit_since = last[0] > t0
        age = t - last[0] if hit_since else t - t0
        pred = age if hit_since else start_mass + (t - t0)
        drift = max(drift, abs(m0[i] - pred))
    if abs(off.sum() - k) > 1e-8 * k:
        raise AssertionError("mass not conserved on the complete graph")
    return {"m0": m0, "m1": m1, "path_gap": drift}


def complete_graph_limit(k_list, seed: int, n_samples: int = 10**4, spacing: float = 4.0) -> dict:
    """Per ``k``: KS distance of ``M^0`` to Exp(1), ``P(M^0 > 1)``, ``corr(M^0, M^1)``."""
    out = {}
    for i, k in enumerate(k_list):
        s = complete_graph_samples(k, split_seed(seed, i), n_samples, spacing)
        m0, m1 = s["m0"], s["m1"]
        tail = float((m0 > 1.0).mean())
        out[k] = {
            "ks": ks_distance(m0, sps.expon.cdf),
            "p_gt_1": Estimate(tail, math.sqrt(tail * (1 - tail) / n_samples), n_samples),
            "corr": float(np.corrcoef(m0, m1)[0, 1]),
            "p_zero": float((m0 == 0.0).mean()),
            "mean": Estimate(float(m0.mean()), float(m0.std(ddof=1) / math.sqrt(n_samples)), n_samples),
            "path_gap": s["path_gap"],
        }
    return out


def run_complete(seed: int, cfg: dict) -> Report:
    rep = Report("complete-graph", cfg)
    ks = [int(k) for k in cfg["k_list"]]
    res = complete_graph_limit(ks, seed, int(cfg["samples"]), float(cfg["spacing"]))
    big, small = max(ks), min(ks)
    r = res[big]
    rep.add(
        band(f"KS distance to Exp(1) at k={big} below 0.05", "complete-graph limit", r["ks"], 0.0, 0.05,
             open_=True),
        near(f"|corr(M1, M2)| at k={big} below 0.05", "propagation of chaos", r["corr"], 0.0, 0.05),
        near(f"P(M1 > 1) at k={big} within 0.015 of exp(-1)", "complete-graph limit", r["p_gt_1"],
             E_INV, 0.015),
        sigma(f"P(M1 > 1) at k={big} within 3 stderr of exp(-1)", "complete-graph limit", r["p_gt_1"],
              E_INV),
    )
    ordered = sorted(ks)
    ks_vals = [res[k]["ks"] for k in ordered]
    rep.add(Claim(f"KS distance strictly decreasing over k={ordered}", "complete-graph limit",
                  ks_vals, "decreasing", None, all(a > b for a, b in zip(ks_vals, ks_vals[1:]))))
    rep.add(Claim(f"KS at k={big} strictly below KS at k={small}", "complete-graph limit",
                  [r["ks"], res[small]["ks"]], "smaller", None, r["ks"] < res[small]["ks"]))
    rep.add_table("complete_graph.csv", [{"k": k, "ks": r["ks"], "p_gt_1": r["p_gt_1"].mean,
                                          "corr": r["corr"], "p_zero": r["p_zero"]} for k, r in res.items()])
    rep.data = res
    return rep
