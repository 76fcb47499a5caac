"""Crater statistics on large cycles: gap spectra, CLT, oldest soil."""

from __future__ import annotations

import math

import numpy as np

from ..craters import (count_pattern_occurrences, crater_profile, detect_craters,
                       detect_craters_by_mass, gap_spectrum, mound_position_check,
                       oldest_soil_statistic)
from ..engine import crater_ready, init_state, simulate
from ..events import EventStream
from ..graph import build_cycle, uniform_redistribution
from ..oracle import CRATER_SPEC, clt_params, closed_A, closed_B, closed_p
from ..stats import iid_estimate
from .common import replicate
from .report import Claim, Report, near, sigma, truth


def _crater_sample(seed: int, index: int, k: int):
    g = build_cycle(k)
    P = uniform_redistribution(g)
    st = init_state(g)
    crater_ready(g, P, EventStream(k, seed), st)
    same = bool(np.array_equal(detect_craters(st, g), detect_craters_by_mass(st)))
    return crater_profile(st, g), same


def crater_spectrum(k: int, reps: int, seed: int, workers: int = 1):
    """Profiles of ``reps`` independent cycles, each run until every site has been hit.

    Crater positions are then functions of i.i.d. continuous last-hit
    ages, which is exactly their stationary law.
    """
    out = replicate(_crater_sample, seed, reps, workers, k=k)
    profiles = [p for p, _ in out]
    return gap_spectrum(profiles), all(s for _, s in out)


def run_crater_spectrum(seed: int, cfg: dict) -> Report:
    rep = Report("crater-spectrum", cfg)
    k, reps = int(cfg["k"]), int(cfg["reps"])
    spec, zero_ok = crater_spectrum(k, reps, seed, int(cfg.get("workers", 1)))
    crater = spec.crater_estimate()
    run1, run2 = spec.estimate("run", 1), spec.estimate("run", 2)
    a11, b00 = spec.estimate("A", (1, 1)), spec.estimate("B", (0, 0))
    runs_total = sum(spec.runs.values())
    covered = spec.n_craters + sum(n * c for n, c in spec.runs.items())
    rep.add(
        near("crater fraction 1/3 +- 0.01", "crater frequency", crater, 1 / 3, 0.01),
        near("run-length-1 fraction 2/15 +- 0.005", "run lengths", run1, float(closed_p(1)), 0.005),
        near("run-length-2 fraction 1/9 +- 0.005", "run lengths", run2, float(closed_p(2)), 0.005),
        sigma("A(1,1) frequency matches 17/315 within 3 stderr", "crater pairs", a11, float(closed_A(1, 1))),
        sigma("B(0,0) frequency matches 2/15 within 3 stderr", "crater-mound pairs", b00,
              float(closed_B(0, 0))),
        truth("zero-mass sites equal last-hit maxima in every sample", "crater criterion", zero_ok),
        truth("every crater starts exactly one run", "spectrum consistency",
              runs_total == spec.n_craters, {"runs": runs_total, "craters": spec.n_craters}),
        truth("craters plus run sites cover every site once", "spectrum consistency",
              covered == spec.n_sites, {"covered": covered, "sites": spec.n_sites}),
    )
    tails = {n: mound_position_check(spec, n, float(cfg["mound_eps"])) for n in range(1, 13)}
    t1 = mound_position_check(spec, 1, 0.5)
    rep.add(truth("run of length 1: |R/n - 1/2| > 1/2 never happens", "mound position",
                  t1.frequency == 0.0, t1.frequency))
    m8 = spec.mound_offsets.get(8, [])
    if len(m8) > 30:
        r8 = iid_estimate(np.asarray(m8) / 8.0)
        rep.add(sigma("n=8: mean R/n equals (n+1)/(2n) within 3 stderr", "mound position", r8, 9 / 16))
    rep.files["gap_spectrum.csv"] = spec.write_csv
    rep.data = {
        "crater": crater, "run": {n: spec.estimate("run", n) for n in sorted(spec.runs) if n <= 12},
        "expected_run": {n: float(closed_p(n)) for n in range(0, 13)},
        "A11": a11, "B00": b00,
        "mound_tails": {n: vars(t) for n, t in tails.items()},
    }
    return rep


def _clt_sample(seed: int, index: int, k: int) -> int:
    prof, _ = _crater_sample(seed, index, k)
    return count_pattern_occurrences(prof, CRATER_SPEC)


def run_clt(seed: int, cfg: dict) -> Report:
    rep = Report("crater-clt", cfg)
    k, reps = int(cfg["k"]), int(cfg["reps"])
    par = clt_params(CRATER_SPEC)
    counts = np.array(replicate(_clt_sample, seed, reps, int(cfg.get("workers", 1)), k=k), dtype=np.float64)
    z = (counts - k * float(par.mu)) / (par.sigma * math.sqrt(k))
    zm = iid_estimate(z)
    zv = float(z.var(ddof=1))
    rep.add(
        near("standardized crater count: mean within +-0.1", "crater CLT", zm, 0.0, 0.1),
        Claim("standardized crater count: variance in [0.9, 1.1]", "crater CLT", zv,
              {"low": 0.9, "high": 1.1}, None, 0.9 <= zv <= 1.1),
    )
    rep.add_table("crater_counts.csv", [{"replicate": i, "count": int(c), "z": float(v)}
                                        for i, (c, v) in enumerate(zip(counts, z))])
    rep.data = {"mu": str(par.mu), "sigma2": str(par.sigma2), "z_mean": zm, "z_var": zv,
                "z_var_stderr": zv * math.sqrt(2.0 / (reps - 1))}
    return rep


def oldest_soil_run(k: int, seed: int) -> float:
    """Oldest exposed soil age on a cycle run for ``3 log k + 5`` time units."""
    g = build_cycle(k)
    P = uniform_redistribution(g)
    st = init_state(g)
    simulate(st, g, P, EventStream(k, seed), until=3 * math.log(k) + 5.0, inplace=True)
    return oldest_soil_statistic(st, g)


def run_oldest_soil(seed: int, cfg: dict) -> Report:
    rep = Report("oldest-soil", cfg)
    k = int(cfg["k"])
    age = oldest_soil_run(k, seed)
    ratio = age / math.log(k)
    rep.add(Claim("oldest exposed soil age / log k in (0.23, 0.43)", "oldest soil", ratio,
                  {"low": 0.23, "high": 0.43, "limit": 1 / 3}, None, 0.23 < ratio < 0.43),
            truth("age is nonnegative", "oldest soil", age >= 0, age))
    rep.data = {"age": age, "ratio": ratio}
    return rep

