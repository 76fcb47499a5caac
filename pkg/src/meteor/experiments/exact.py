"""Exact combinatorics suite and the walker-law checks."""

from __future__ import annotations

import csv
from fractions import Fraction

import numpy as np

from ..graph import build_cycle, uniform_redistribution
from ..oracle import (CRATER_SPEC, a_event, b_event, clt_params, closed_A, closed_B, closed_B_literal,
                      closed_p, closed_phat, enumerate_window_probability, nonpeak_event,
                      probability_table, run_event, series_partial_sums)
from ..wimps import (difference_law_closed, difference_walk_stationary, joint_occupancy,
                     occupancy_identity_check)
from .report import Report, truth


def exact_suite(max_n: int = 6, max_ij: int = 5, identity_n: int = 30, j151_max: int = 10,
                series_n: int = 30) -> dict[str, dict]:
    """Every closed form against window enumeration, plus the exact identities."""
    res = {}
    bad = [n for n in range(0, max_n + 1)
           if closed_p(n) != enumerate_window_probability(run_event(n).m, run_event(n))]
    res["p_vs_enumeration"] = {"ok": not bad, "failures": bad}
    bad = [n for n in range(1, max_n + 1) if closed_phat(n) != enumerate_window_probability(n + 2, nonpeak_event(n))]
    res["phat_vs_enumeration"] = {"ok": not bad, "failures": bad}
    bad = [(i, j) for i in range(1, max_ij) for j in range(1, max_ij + 1 - i)
           if closed_A(i, j) != enumerate_window_probability(i + j + 5, a_event(i, j))]
    res["A_vs_enumeration"] = {"ok": not bad, "failures": bad}
    bad = [(i, j) for i in range(0, max_ij + 1) for j in range(0, max_ij + 1 - i)
           if closed_B(i, j) != enumerate_window_probability(i + j + 5, b_event(i, j))]
    res["B_vs_enumeration"] = {"ok": not bad, "failures": bad}
    asym = [(i, j) for i in range(0, 4) for j in range(0, 4)
            if i != j and closed_B_literal(i, j) != closed_B_literal(j, i)]
    res["B_literal_asymmetric"] = {"ok": bool(asym), "examples": asym[:4]}
    bad = [n for n in range(1, identity_n + 1)
           if closed_p(n) != closed_phat(n) - 2 * closed_phat(n + 1) + closed_phat(n + 2)]
    res["p_phat_identity"] = {"ok": not bad, "failures": bad}
    p0 = closed_p(0)
    hold = {i: [closed_A(i, j) / p0 == (closed_p(i) / p0) * (closed_p(j) / p0) for j in range(1, j151_max + 1)]
            for i in (1, 2, 3)}
    res["gap_independence_i2"] = {"ok": all(hold[2])}
    res["gap_independence_fails_i1"] = {"ok": not all(hold[1]),
                                        "failing_j": [j + 1 for j, h in enumerate(hold[1]) if not h]}
    res["gap_independence_fails_i3"] = {"ok": not all(hold[3]),
                                        "failing_j": [j + 1 for j, h in enumerate(hold[3]) if not h]}
    s0, s1 = series_partial_sums(series_n)
    two_thirds = Fraction(2, 3)
    res["series_sum_p"] = {"ok": abs(float(s0 - two_thirds)) < 1e-12, "value": float(s0)}
    res["series_sum_np"] = {"ok": abs(float(s1 - two_thirds)) < 1e-12, "value": float(s1)}
    par = clt_params(CRATER_SPEC)
    res["crater_clt"] = {"ok": par.mu == Fraction(1, 3) and par.sigma2 == Fraction(2, 45),
                         "mu": str(par.mu), "sigma2": str(par.sigma2)}
    return res


def write_table_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["quantity", "i", "j", "fraction", "decimal"])
        w.writeheader()
        for r in rows:
            w.writerow({**r, "decimal": repr(r["decimal"])})


def run_oracle_tables(seed: int, cfg: dict) -> Report:
    rep = Report("oracle-tables", cfg)
    suite = exact_suite()
    labels = {
        "p_vs_enumeration": "p_n equals window enumeration, n <= 6",
        "phat_vs_enumeration": "phat_n equals window enumeration, n <= 6",
        "A_vs_enumeration": "A(i,j) equals window enumeration, i+j <= 5",
        "B_vs_enumeration": "B(i,j) equals window enumeration, i+j <= 5",
        "B_literal_asymmetric": "the unsymmetrized B formula is not symmetric",
        "p_phat_identity": "p_n = phat_n - 2 phat_(n+1) + phat_(n+2), n <= 30",
        "gap_independence_i2": "A(2,j)/p0 = (p2/p0)(pj/p0) for j <= 10",
        "gap_independence_fails_i1": "the same identity fails for i = 1",
        "gap_independence_fails_i3": "the same identity fails for i = 3",
        "series_sum_p": "sum of p_n to N=30 within 1e-12 of 2/3",
        "series_sum_np": "sum of n p_n to N=30 within 1e-12 of 2/3",
        "crater_clt": "crater CLT parameters mu = 1/3, sigma^2 = 2/45",
    }
    for key, label in labels.items():
        rep.add(truth(label, "exact combinatorics", suite[key]["ok"], suite[key]))
    table = probability_table(range(1, 21), range(1, 21),
                              [(i, j) for i in range(1, 7) for j in range(1, 7)],
                              [(i, j) for i in range(0, 7) for j in range(0, 7)])
    rep.data = {"table": table}
    rep.files["oracle_table.csv"] = lambda path: write_table_csv(table, path)
    return rep


def run_walkers(seed: int, cfg: dict) -> Report:
    rep = Report("walkers", cfg)
    worst = 0.0
    for n in range(3, int(cfg["max_n"]) + 1):
        for d in (1, 2, 3):
            if n ** d > 8000:
                continue
            a, b = difference_walk_stationary(n, d), difference_law_closed(n, d)
            worst = max(worst, float(np.abs(a.embedded - b.embedded).max()))
    rep.add(truth("difference-walk linear solve equals the closed form to 1e-12", "difference walk",
                  worst < 1e-12, worst))
    g = build_cycle(8)
    P = uniform_redistribution(g)
    occ = occupancy_identity_check(g, P, seed, 5.0, int(cfg["occupancy_reps"]))
    rep.add(truth("walker occupancy matches M_t/|V| within 3 stderr at every vertex", "occupancy identity",
                  occ.ok, {"max_gap": occ.max_gap, "max_z": occ.max_z}))
    k = int(cfg["joint_k"])
    gj = build_cycle(k)
    jo = joint_occupancy(gj, uniform_redistribution(gj), seed, n_samples=int(cfg["joint_samples"]))
    law = difference_law_closed(k, 1).time_weighted
    obs = jo.offset_law()
    se = jo.diag_mass.stderr
    rep.add(truth("clock-coupled pair: P(Z = Z~) matches the exact law within 4 batch stderr",
                  "joint occupancy", abs(obs[0] - law[0]) <= 4 * se, {"observed": obs[0], "exact": law[0]}))
    rep.files["joint_occupancy.csv"] = jo.write_csv
    rep.add_table("offset_law.csv", [{"offset": i, "observed": o, "exact": e}
                                     for i, (o, e) in enumerate(zip(obs, law))])
    rep.data = {"max_solve_gap": worst, "occupancy": vars(occ), "offset_law": obs, "exact_offset_law": law}
    return rep
