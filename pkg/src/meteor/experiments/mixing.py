"""Coupling distance decay and the meeting-time bound."""

from __future__ import annotations

import math

import numpy as np

from ..engine import coupled_run, init_state
from ..events import EventStream, split_seed
from ..graph import Graph, RedistributionMatrix, build_cycle, build_torus, uniform_redistribution
from ..stats import Estimate
from ..wimps import meeting_tail_alpha, meeting_tail_exact
from .report import Claim, Report, band, truth

MONOTONE_TOL = 1e-9


def coupled_distance_paths(g: Graph, P: RedistributionMatrix, masses_a, masses_b, t_grid,
                           seed: int, reps: int) -> tuple[np.ndarray, float]:
    """``D_t`` on ``t_grid`` per replication, and the largest upward step seen along any path."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    out = np.empty((reps, len(t_grid)))
    worst = 0.0
    for r in range(reps):
        a = init_state(g, masses_a)
        b = init_state(g, masses_b)
        res = coupled_run(a, b, g, P, EventStream(g.vertex_count, split_seed(seed, r)),
                          until=float(t_grid[-1]))
        d = np.concatenate([[res.d0], res.distances])
        if len(d) > 1:
            worst = max(worst, float(np.diff(d).max()))
        idx = np.searchsorted(res.times, t_grid, side="right")
        out[r] = d[idx]
    return out, worst


def mixing_decay_fit(n_list, d: int, seed: int, reps: int = 200, window=(0.25, 1.0),
                     n_points: int = 16) -> dict:
    """Exponential decay rate of ``E D_t`` per torus size, and the log-log slope against ``n``.

    The pair starts from all mass at the origin versus uniform mass; the
    rate is fitted on ``t in [window[0] n^2, window[1] n^2]``.
    """
    rates, paths_ok, per_n = [], [], {}
    for i, n in enumerate(n_list):
        g = build_torus(n, d) if d > 1 else build_cycle(n)
        P = uniform_redistribution(g)
        k = g.vertex_count
        point = np.zeros(k)
        point[0] = k
        grid = np.linspace(window[0] * n * n, window[1] * n * n, n_points)
        D, worst = coupled_distance_paths(g, P, point, np.ones(k), grid, split_seed(seed, i), reps)
        mean = D.mean(axis=0)
        keep = mean > 0
        if keep.sum() < 3:
            per_n[n] = {"rate": math.nan, "skipped": True}
            continue
        slope = np.polyfit(grid[keep], np.log(mean[keep]), 1)[0]
        rates.append((n, -slope))
        paths_ok.append(worst <= MONOTONE_TOL)
        per_n[n] = {"rate": -slope, "rate_times_n2": -slope * n * n, "max_increase": worst,
                    "grid": grid, "mean_distance": mean}
    ns = np.array([n for n, _ in rates], dtype=np.float64)
    rs = np.array([r for _, r in rates])
    exponent = float(np.polyfit(np.log(ns), np.log(rs), 1)[0]) if len(rs) >= 2 and (rs > 0).all() else math.nan
    return {"per_n": per_n, "exponent": exponent, "monotone": all(paths_ok), "rates": rates}


def f101_bound_check(g: Graph, P: RedistributionMatrix, masses_a, masses_b, t_grid, seed: int,
                     reps: int, alpha_reps: int, exhaustive: bool = True) -> dict:
    """Compare ``E sum |M_t - M~_t|`` with ``|V| alpha(t)`` on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    D, worst = coupled_distance_paths(g, P, masses_a, masses_b, t_grid, seed, reps)
    lhs = [Estimate(float(c.mean()), float(c.std(ddof=1) / math.sqrt(reps)), reps) for c in D.T]
    tail = meeting_tail_alpha(g, P, t_grid, alpha_reps, split_seed(seed, 10**6), exhaustive=exhaustive)
    k = g.vertex_count
    rows = []
    for i, t in enumerate(t_grid):
        slack = 3.0 * math.hypot(lhs[i].stderr, k * tail.stderr[i])
        rows.append({"t": float(t), "lhs": lhs[i], "rhs": k * float(tail.alpha[i]), "slack": slack,
                     "holds": lhs[i].mean <= k * tail.alpha[i] + slack,
                     "holds_2x": lhs[i].mean <= 2 * k * tail.alpha[i] + 2 * slack})
    exact = meeting_tail_exact(g, P, t_grid) if k <= 60 else None
    return {"rows": rows, "alpha": tail, "alpha_exact": exact, "max_increase": worst}


def run_mixing(seed: int, cfg: dict) -> Report:
    rep = Report("mixing", cfg)
    fit = mixing_decay_fit(cfg["n_list"], int(cfg["d"]), seed, int(cfg["reps"]))
    rep.add(
        truth("coupling distance nonincreasing along every path (tol 1e-9)", "coupling monotonicity",
              fit["monotone"], {n: v.get("max_increase") for n, v in fit["per_n"].items()}),
        band("decay-rate exponent against n in (-2.5, -1.5)", "mixing scaling", fit["exponent"], -2.5, -1.5,
             open_=True),
    )
    rates = dict(fit["rates"])
    ns = sorted(rates)
    for a, b in zip(ns, ns[1:]):
        if b == 2 * a:
            ratio = rates[b] / rates[a]
            rep.add(Claim(f"rate ratio n={b} vs n={a} near 1/4 within 30%", "mixing scaling", ratio, 0.25,
                          0.3 * 0.25, abs(ratio - 0.25) <= 0.3 * 0.25))
    rep.add_table("mixing_decay.csv", [{"n": n, "t": float(t), "mean_distance": float(m)}
                                       for n, v in fit["per_n"].items() if "grid" in v
                                       for t, m in zip(v["grid"], v["mean_distance"])])
    rep.data = fit
    return rep


def run_f101(seed: int, cfg: dict) -> Report:
    rep = Report("coupling-bound", cfg)
    k = int(cfg["k"])
    g = build_cycle(k)
    P = uniform_redistribution(g)
    a = np.zeros(k)
    a[0] = k
    b = np.zeros(k)
    b[k // 2] = k
    res = f101_bound_check(g, P, a, b, cfg["t_grid"], seed, int(cfg["reps"]), int(cfg["alpha_reps"]))
    for row in res["rows"]:
        rep.add(Claim(f"E sum|M - M~| <= |V| alpha(t) + 3 stderr at t={row['t']:g}", "coupling bound",
                      row["lhs"], row["rhs"], row["slack"], row["holds"]))
    # sum_x |1{Z=x} - 1{Z^=x}| is 2 on {Z != Z^}, so the coupling argument yields 2|V| alpha(t)
    for row in res["rows"]:
        rep.add(Claim(f"E sum|M - M~| <= 2|V| alpha(t) + 6 stderr at t={row['t']:g}", "coupling bound, factor 2",
                      row["lhs"], 2 * row["rhs"], 2 * row["slack"], row["holds_2x"]))
    same = f101_bound_check(g, P, a, a, cfg["t_grid"][:1], seed, 4, 100)
    rep.add(truth("identical initial states stay at distance 0", "coupling bound",
                  same["rows"][0]["lhs"].mean == 0.0, same["rows"][0]["lhs"]))
    if res["alpha_exact"] is not None:
        gap = float(np.max(np.abs(res["alpha_exact"] - res["alpha"].alpha)))
        rep.add(truth("Monte Carlo alpha within 0.05 of the matrix-exponential value", "meeting tail",
                      gap < 0.05, {"max_gap": gap}))
    rep.files["meeting_tail.csv"] = res["alpha"].write_csv
    rep.add_table("coupling_bound.csv", [{"t": r["t"], "lhs": r["lhs"].mean, "lhs_stderr": r["lhs"].stderr,
                                          "v_alpha": r["rhs"], "slack": r["slack"]} for r in res["rows"]])
    rep.data = res
    return rep
