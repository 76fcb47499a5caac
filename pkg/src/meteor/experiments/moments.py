"""Stationary one- and two-point moments on cycles and tori."""

from __future__ import annotations

import math

import numpy as np

from ..engine import default_burn_in
from ..errors import UnsupportedGraphError
from ..events import split_seed
from ..graph import Graph, build_cycle, build_torus, parse_graph_spec, uniform_redistribution
from ..stats import Estimate, batch_means, ratio_batch_means
from ..wimps import difference_law_closed
from .common import box_indices, boundary_size, shifted, snapshot_run, translates
from .report import Claim, Report, band, near, sigma, truth

POOL_LIMIT = 200_000
HIST_BINS = np.linspace(0.0, 8.0, 81)


def _torus_params(g: Graph) -> tuple[int, int]:
    if g.kind == "cycle":
        return g.vertex_count, 1
    if g.kind == "torus":
        return g.params
    raise UnsupportedGraphError(f"moments need a cycle or torus, got {g.kind}")


def gamma_third_moment(m1: float, m2: float) -> float:
    """Third moment of the gamma law with first two moments ``m1, m2``."""
    beta = (m2 - m1 * m1) / m1
    alpha = m1 / beta
    return beta ** 3 * alpha * (alpha + 1) * (alpha + 2)


def estimate_moments(g: Graph, seed: int, burn_in: int | None = None, n_events: int = 2 * 10**7,
                     stride: int | None = None, n_batches: int = 20) -> dict:
    """Moment estimates from one stationary trajectory with unit mean mass per vertex.

    Keys: ``mean``, ``var``, ``cov_adjacent``, ``cov_distance2``, ``m3``,
    ``ew``, ``ew2``, ``ew3``, ``p_zero``, plus the pooled histogram of
    positive masses and the exact finite-size second moments.
    """
    n, d = _torus_params(g)
    P = uniform_redistribution(g)
    right = shifted(g, 1)
    two = shifted(g, 2)
    three = shifted(g, 3)
    hist = np.zeros(len(HIST_BINS) - 1)
    zeros = [0]

    def observe(st):
        m = st.masses
        pos = m > 0
        h, _ = np.histogram(m[pos], HIST_BINS)
        hist[:] += h
        zeros[0] += int((~pos).sum())
        sq = m * m
        return (m.mean(), sq.mean(), (m * m[right]).mean(), (m * m[two]).mean(),
                (m ** 3).mean(), pos.mean(), (sq * sq).mean(),
                (sq * m[right]).mean(), (sq * m[two]).mean(), (sq * m[three]).mean())

    burn = default_burn_in(g) if burn_in is None else burn_in
    rows = snapshot_run(g, P, seed, burn, n_events, stride or g.vertex_count, observe)
    mean, m2, adj, d2, m3, ppos, m4 = (rows[:, i] for i in range(7))
    law = difference_law_closed(n, d)
    ew = ratio_batch_means(mean, ppos, n_batches)
    ew2 = ratio_batch_means(m2, ppos, n_batches)
    ew3 = ratio_batch_means(m3, ppos, n_batches)
    n_obs = rows.shape[0] * g.vertex_count
    return {
        "mean": batch_means(mean, n_batches),
        "var": _shift(batch_means(m2, n_batches), -1.0),
        "cov_adjacent": _shift(batch_means(adj, n_batches), -1.0),
        "cov_distance2": _shift(batch_means(d2, n_batches), -1.0),
        "m3": batch_means(m3, n_batches),
        "p_zero": _shift(batch_means(ppos, n_batches), 1.0, -1.0),
        "ew": ew, "ew2": ew2, "ew3": ew3,
        "gamma_m3": gamma_third_moment(ew.mean, ew2.mean),
        "exact": {"var": law.covariance(0), "cov_adjacent": law.covariance(1),
                  "cov_distance2": law.covariance(2 % n) if n > 4 else math.nan},
        "square_corr": _square_correlations(rows[:, 7:], m2, m4, n_batches),
        "histogram": {"atom_zero": zeros[0] / n_obs, "edges": HIST_BINS, "density": hist / n_obs},
        "snapshots": rows.shape[0], "burn_in_events": burn, "events": n_events,
    }


def _square_correlations(cross: np.ndarray, m2: np.ndarray, m4: np.ndarray, n_batches: int) -> dict:
    """``corr((M^0)^2, M^j)`` for lags ``j = 1, 2, 3``, reported without a bound."""
    var_sq = float(m4.mean() - m2.mean() ** 2)
    var_m = float(m2.mean() - 1.0)
    out = {}
    for j in range(cross.shape[1]):
        cov = _shift(batch_means(cross[:, j], n_batches), -float(m2.mean()))
        scale = math.sqrt(var_sq * var_m)
        out[j + 1] = {"cov": cov, "corr": cov.mean / scale, "corr_stderr": cov.stderr / scale}
    return out


def _shift(e: Estimate, add: float, scale: float = 1.0) -> Estimate:
    return Estimate(scale * e.mean + add, e.stderr, e.n_samples, e.method)


def third_moment_cycle(k: int, seed: int, **kw) -> Estimate:
    return estimate_moments(build_cycle(k), seed, **kw)["m3"]


def run_moments(g: Graph, seed: int, cfg: dict) -> Report:
    rep = Report("moments", cfg)
    res = estimate_moments(g, seed, cfg.get("burn_in"), int(cfg["events"]))
    _, d = _torus_params(g)
    mean = res["mean"]
    rep.add(
        near("mean mass per vertex is 1", "stationary mean", mean, 1.0, max(3 * mean.stderr, 1e-9)),
        near("variance of single-site mass near 1", "stationary variance", res["var"], 1.0, 0.05),
        near("adjacent covariance near -1/(2d)", "stationary covariance",
             res["cov_adjacent"], -1.0 / (2 * d), 0.05),
        near("distance-2 covariance near 0", "stationary covariance", res["cov_distance2"], 0.0, 0.03),
        near("crater fraction 1/3", "crater frequency", res["p_zero"], 1.0 / 3.0, 0.01),
    )
    if d == 1:
        rep.add(
            band("third moment in [4.6, 4.9]", "third moment", res["m3"], 4.6, 4.9),
            band("E[W] in [1.48, 1.52] for W = M | M > 0", "conditional moments", res["ew"], 1.48, 1.52),
            band("E[W^2] in [2.95, 3.05]", "conditional moments", res["ew2"], 2.95, 3.05),
            truth("W is not gamma: matched-gamma third moment differs by > 10 stderr",
                  "conditional moments",
                  abs(res["gamma_m3"] - res["ew3"].mean) > 10 * res["ew3"].stderr,
                  {"gamma_m3": res["gamma_m3"], "ew3": res["ew3"]}),
        )
    h = res["histogram"]
    rep.add_table("mass_histogram.csv",
                  [{"low": 0.0, "high": 0.0, "probability": h["atom_zero"]}]
                  + [{"low": float(lo), "high": float(hi), "probability": float(p)}
                     for lo, hi, p in zip(h["edges"][:-1], h["edges"][1:], h["density"])])
    rep.data = dict(res)
    return rep


def region_variance(g: Graph, regions: dict[str, np.ndarray], seed: int, burn_in: int | None = None,
                    n_events: int = 10**7, n_batches: int = 20) -> dict[str, dict]:
    """``Var M^A`` per region from one stationary trajectory, with ``|dA| / (2d)``.

    Each snapshot averages ``(M^A - |A|)^2`` over all translates of ``A``
    when that is cheap; the law is translation invariant, so this only
    reduces the variance of the estimate.
    """
    n, d = _torus_params(g)
    P = uniform_redistribution(g)
    names = list(regions)
    idx = []
    for a in names:
        r = np.asarray(regions[a])
        idx.append(translates(g, r) if len(r) * g.vertex_count <= POOL_LIMIT else r[None, :])

    def observe(st):
        return [((st.masses[i].sum(axis=1) - i.shape[1]) ** 2).mean() for i in idx]

    burn = default_burn_in(g) if burn_in is None else burn_in
    rows = snapshot_run(g, P, seed, burn, n_events, g.vertex_count, observe)
    out = {}
    for j, a in enumerate(names):
        r = np.asarray(regions[a])
        out[a] = {"size": len(r), "boundary": boundary_size(g, r), "translates": idx[j].shape[0],
                  "var": batch_means(rows[:, j], n_batches),
                  "prediction": boundary_size(g, r) / (2 * d)}
    return out


def run_region_variance(seed: int, cfg: dict) -> Report:
    rep = Report("region-variance", cfg)
    cyc = build_cycle(int(cfg["cycle_k"]))
    rc = region_variance(cyc, {"single": np.array([0]), "interval5": box_indices(cyc, [5]),
                               "all": np.arange(cyc.vertex_count)},
                         seed, cfg.get("burn_in"), int(cfg["events"]))
    rep.add(
        near("single site: variance 1 = |dA|/(2d)", "region variance", rc["single"]["var"], 1.0, 0.05),
        near("interval of 5 sites on the cycle: variance 1 +- 0.1", "region variance",
             rc["interval5"]["var"], 1.0, 0.1),
        truth("whole vertex set: variance 0 (total mass is fixed)", "region variance",
              rc["all"]["var"].mean <= 1e-12, rc["all"]["var"]),
    )
    n2 = int(cfg["torus_n"])
    tor = build_torus(n2, 2)
    shapes = {"square4x4": box_indices(tor, [4, 4]), "rect2x6": box_indices(tor, [2, 6], [10, 10])}
    rt = region_variance(tor, shapes, split_seed(seed, 1), int(cfg["torus_burn_in"]),
                         int(cfg["torus_events"]))
    a, b = rt["square4x4"]["var"], rt["rect2x6"]["var"]
    se = math.hypot(a.stderr, b.stderr)
    rep.add(
        truth("equal-perimeter regions on the torus have equal variance (3 combined stderr)",
              "region variance", abs(a.mean - b.mean) <= 3 * se,
              {"square4x4": a, "rect2x6": b, "combined_stderr": se}),
        sigma("4x4 square variance matches |dA|/(2d) = 4", "region variance", a,
              rt["square4x4"]["prediction"], 4.0),
    )
    rep.add_table("region_variance.csv",
                  [{"graph": gname, "region": a, **{k: v for k, v in row.items()}}
                   for gname, res in (("cycle", rc), ("torus", rt)) for a, row in res.items()])
    rep.data = {"cycle": rc, "torus": rt}
    return rep


def distance_transitive_bound(g: Graph) -> float:
    """``(r+1) / (r-1 + 2r/(|V|-1))`` for an ``r``-regular graph."""
    r = int(g.degrees[0])
    k = g.vertex_count
    return (r + 1) / (r - 1 + 2 * r / (k - 1))


def run_variance_bound(seed: int, cfg: dict) -> Report:
    """Stationary single-site variance against the distance-transitive bound.

    Only cycles, tori and complete graphs are accepted; no attempt is made
    to recognise distance-transitivity in general.
    """
    rep = Report("variance-bound", cfg)

    def observe(st):
        return ((st.masses * st.masses).mean(),)

    for i, spec in enumerate(cfg["graphs"]):
        g = parse_graph_spec(spec)
        if g.kind not in ("cycle", "torus", "complete"):
            raise UnsupportedGraphError("bound is only checked on cycles, tori and complete graphs")
        burn = default_burn_in(g) if cfg.get("burn_in") is None else int(cfg["burn_in"])
        rows = snapshot_run(g, uniform_redistribution(g), split_seed(seed, i), burn,
                            int(cfg["events"]), g.vertex_count, observe)
        var = _shift(batch_means(rows[:, 0]), -1.0)
        bound = distance_transitive_bound(g)
        rep.data[spec] = {"var": var, "bound": bound}
        rep.add(Claim(f"{spec}: stationary variance <= (r+1)/(r-1+2r/(|V|-1)) + 3 stderr",
                      "variance bound", var, bound, 3 * var.stderr,
                      var.mean <= bound + 3 * var.stderr))
    return rep
