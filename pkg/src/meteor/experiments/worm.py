"""Earthworm variant: redistribution follows one random walker."""

from __future__ import annotations

import math

import numpy as np

from .._backend import kernels
from ..errors import ValidationError
from ..events import child_rng, split_seed
from ..graph import build_torus, uniform_redistribution
from ..stats import Estimate, iid_estimate
from .common import box_indices
from .report import Claim, Report, sigma, truth

WORM_PURPOSE = 5


def earthworm_masses(n: int, d: int, horizon_events: int, seed: int, chunk: int = 1 << 20):
    """Final masses after ``horizon_events`` worm jumps from uniform total-1 mass.

    The worm starts at a uniformly chosen vertex.  Returns the masses and
    the largest deviation of the running total from 1.
    """
    g = build_torus(n, d)
    P = uniform_redistribution(g)
    rng = child_rng(seed, WORM_PURPOSE)
    k = g.vertex_count
    m = np.full(k, 1.0 / k)
    worm = int(rng.integers(k))
    left = int(horizon_events)
    drift = 0.0
    while left > 0:
        c = min(chunk, left)
        worm = kernels.worm_steps(m, worm, rng.random(c), g.indptr, g.indices, P.weights)
        drift = max(drift, abs(m.sum() - 1.0))
        left -= c
    return m, worm, drift


def earthworm_run(n_list, d: int, reps: int, seed: int, horizon_factor: float = 20.0,
                  box_fraction: float = 0.5) -> dict:
    """Across-replication mean and variance of the mass in the box ``[0, box_fraction]^d`` scaled by ``n``.

    Each replication runs ``horizon_factor * n**(d+1)`` worm jumps.
    """
    out = {}
    for i, n in enumerate(n_list):
        side = int(round(box_fraction * n))
        if side < 1:
            raise ValidationError("box is empty at this n")
        g = build_torus(n, d)
        box = box_indices(g, [side] * d)
        H = int(horizon_factor * n ** (d + 1))
        vals = np.empty(reps)
        drift = 0.0
        for r in range(reps):
            m, _, dr = earthworm_masses(n, d, H, split_seed(seed, 1000 * i + r))
            vals[r] = m[box].sum()
            drift = max(drift, dr)
        var = float(vals.var(ddof=1))
        out[n] = {"box_mass": iid_estimate(vals), "variance": var,
                  "variance_stderr": var * math.sqrt(2.0 / (reps - 1)), "horizon_events": H,
                  "total_drift": drift, "box_volume": len(box) / g.vertex_count}
    return out


def run_earthworm(seed: int, cfg: dict) -> Report:
    rep = Report("earthworm", cfg)
    ns = [int(n) for n in cfg["n_list"]]
    d = int(cfg["d"])
    res = earthworm_run(ns, d, int(cfg["reps"]), seed, float(cfg["horizon_factor"]))
    for n in ns:
        est: Estimate = res[n]["box_mass"]
        rep.add(sigma(f"n={n}: mean quarter-box mass is 1/4 within 3 stderr", "earthworm uniformity",
                      est, res[n]["box_volume"]))
    variances = [res[n]["variance"] for n in sorted(ns)]
    rep.add(Claim(f"quarter-box variance strictly decreasing over n={sorted(ns)}", "earthworm uniformity",
                  variances, "decreasing", None, all(a > b for a, b in zip(variances, variances[1:]))))
    rep.add(truth("total mass stays 1 (drift < 1e-9)", "conservation",
                  max(res[n]["total_drift"] for n in ns) < 1e-9,
                  max(res[n]["total_drift"] for n in ns)))
    rep.add_table("earthworm.csv", [{"n": n, "box_mass": r["box_mass"].mean, "box_mass_stderr": r["box_mass"].stderr,
                                     "variance": r["variance"], "horizon_events": r["horizon_events"]}
                                    for n, r in res.items()])
    rep.data = res
    return rep
