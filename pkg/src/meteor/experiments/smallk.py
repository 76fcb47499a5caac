"""Exact stationary laws on the two- and three-vertex cycles."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps

from ..engine import init_state, simulate
from ..events import EventStream, split_seed
from ..graph import build_cycle, uniform_redistribution
from ..stats import Estimate, chi_square_uniform, ks_distance
from .report import Claim, Report, near, truth


def _samples(k: int, total: float, seed: int, n_samples: int, spacing: float, burn_in: float) -> np.ndarray:
    g = build_cycle(k)
    P = uniform_redistribution(g)
    stream = EventStream(k, seed)
    st = init_state(g, total=total)
    simulate(st, g, P, stream, until=burn_in, inplace=True)
    out = np.empty((n_samples, k))
    t = burn_in
    for i in range(n_samples):
        t += spacing
        simulate(st, g, P, stream, until=t, inplace=True)
        out[i] = st.masses
    return out


def small_k_exact_check(seed: int, n_samples: int = 10**4, spacing: float = 5.0,
                        total3: float = 2.0) -> dict:
    """k=2 atom frequencies; k=3 crater positions and the law of the mass after the crater."""
    two = _samples(2, 2.0, split_seed(seed, 0), n_samples, spacing, 10.0)
    atom = float((two[:, 0] == 2.0).mean())
    three = _samples(3, total3, split_seed(seed, 1), n_samples, spacing, 10.0)
    crater = np.argmax(three == 0.0, axis=1)
    has_crater = (three == 0.0).sum(axis=1) == 1
    nxt = three[np.arange(n_samples), (crater + 1) % 3]
    return {
        "k2_atom_20": Estimate(atom, math.sqrt(atom * (1 - atom) / n_samples), n_samples),
        "k2_states_ok": bool(np.all(np.sort(two, axis=1) == [0.0, 2.0])),
        "k3_ks": ks_distance(nxt, sps.uniform(loc=0.0, scale=total3).cdf),
        "k3_position_counts": np.bincount(crater, minlength=3),
        "k3_position_p": chi_square_uniform(np.bincount(crater, minlength=3)),
        "k3_one_crater": bool(has_crater.all()),
        "k3_total_gap": float(np.abs(three.sum(axis=1) - total3).max()),
        "total3": total3,
    }


def run_small_k(seed: int, cfg: dict) -> Report:
    rep = Report("small-k", cfg)
    n = int(cfg["samples"])
    res = small_k_exact_check(seed, n, float(cfg["spacing"]), float(cfg["total3"]))
    alt = small_k_exact_check(split_seed(seed, 7), n, float(cfg["spacing"]), 3.0)
    atom = res["k2_atom_20"]
    rep.add(
        near("k=2: atom (2,0) has probability 0.5 +- 0.02", "small-k laws", atom, 0.5, 0.02),
        near("k=2: atom (0,2) has probability 0.5 +- 0.02", "small-k laws", 1.0 - atom.mean, 0.5, 0.02),
        truth("k=2: every sampled state is one of the two atoms", "small-k laws", res["k2_states_ok"]),
        Claim("k=3: mass after the crater is uniform on [0, total], KS < 0.02", "small-k laws",
              res["k3_ks"], f"uniform[0,{res['total3']:g}]", 0.02, res["k3_ks"] < 0.02),
        truth("k=3: exactly one crater in every sample", "small-k laws", res["k3_one_crater"]),
        truth("k=3: crater position uniform (chi-square p > 0.001)", "small-k laws",
              res["k3_position_p"] > 1e-3, res["k3_position_counts"]),
        truth("k=3: the two non-crater masses sum to the configured total", "small-k laws",
              res["k3_total_gap"] < 1e-12, res["k3_total_gap"]),
        Claim("k=3 with total 3: law scales to uniform[0,3], KS < 0.02", "small-k laws",
              alt["k3_ks"], "uniform[0,3]", 0.02, alt["k3_ks"] < 0.02),
    )
    rep.data = {"total_configured": res, "total_3": alt}
    return rep
