"""Closed registry of experiments and their default configuration.

Every default (sizes, replications, burn-in, tolerances baked into the
claims) lives in :data:`DEFAULTS`, so a report's config echo plus its
seed reproduces it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..graph import parse_graph_spec
from .complete import run_complete
from .craters_exp import run_clt, run_crater_spectrum, run_oldest_soil
from .exact import run_oracle_tables, run_walkers
from .mixing import run_f101, run_mixing
from .moments import run_moments, run_region_variance, run_variance_bound
from .report import Claim, Report
from .rim import run_rim_height
from .smallk import run_small_k
from .worm import run_earthworm


@dataclass(frozen=True)
class Experiment:
    name: str
    runner: Callable
    summary: str
    graph_key: str | None = None
    graph_kinds: tuple[str, ...] = ("cycle",)
    reps_key: str | None = None


DEFAULTS: dict[str, dict] = {
    "oracle-tables": {},
    "crater-spectrum": {"k": 10_000, "reps": 200, "mound_eps": 0.3, "workers": 1},
    "crater-clt": {"k": 100_000, "reps": 1000, "workers": 1},
    "moments": {"graph": "cycle:2000", "burn_in": None, "events": 20_000_000},
    "rim-height": {"k": 2000, "burn_in": None, "events": 40_000_000, "ode_k": 2000, "dt": 1e-3,
                   "horizon": 12.0},
    "mixing": {"n_list": [8, 16, 32], "d": 1, "reps": 200},
    "coupling-bound": {"k": 10, "t_grid": [1.0, 2.0, 5.0, 10.0], "reps": 4000, "alpha_reps": 4000},
    "complete-graph": {"k_list": [64, 256, 1024], "samples": 10_000, "spacing": 4.0},
    "small-k": {"samples": 10_000, "spacing": 5.0, "total3": 2.0},
    "region-variance": {"cycle_k": 2000, "burn_in": None, "events": 20_000_000, "torus_n": 40,
                        "torus_burn_in": 3_200_000, "torus_events": 16_000_000},
    "earthworm": {"n_list": [10, 20, 40], "d": 2, "reps": 200, "horizon_factor": 20.0},
    "variance-bound": {"graphs": ["cycle:200", "torus:10:2", "complete:50"], "burn_in": None,
                       "events": 4_000_000},
    "oldest-soil": {"k": 100_000},
    "walkers": {"max_n": 20, "occupancy_reps": 2000, "joint_k": 12, "joint_samples": 4000},
}

REGISTRY: dict[str, Experiment] = {e.name: e for e in [
    Experiment("oracle-tables", lambda g, s, c: run_oracle_tables(s, c),
               "exact peak/valley probabilities, identities and tables"),
    Experiment("crater-spectrum", lambda g, s, c: run_crater_spectrum(s, c),
               "crater frequency, run lengths, gap pairs and mound positions", "k", reps_key="reps"),
    Experiment("crater-clt", lambda g, s, c: run_clt(s, c),
               "normalized crater counts on a large cycle", "k", reps_key="reps"),
    Experiment("moments", lambda g, s, c: run_moments(g, s, c),
               "stationary variance, covariances, third and conditional moments", "graph",
               ("cycle", "torus")),
    Experiment("rim-height", lambda g, s, c: run_rim_height(s, c),
               "mass next to a crater: simulation and ODE", "k"),
    Experiment("mixing", lambda g, s, c: run_mixing(s, c),
               "coupling distance decay and its n^-2 scaling", reps_key="reps"),
    Experiment("coupling-bound", lambda g, s, c: run_f101(s, c),
               "coupling distance against |V| times the meeting-time tail", "k", reps_key="reps"),
    Experiment("complete-graph", lambda g, s, c: run_complete(s, c),
               "exponential limit and asymptotic independence on complete graphs"),
    Experiment("small-k", lambda g, s, c: run_small_k(s, c), "exact laws for k = 2 and 3"),
    Experiment("region-variance", lambda g, s, c: run_region_variance(s, c),
               "variance of the mass in a region against its boundary size"),
    Experiment("earthworm", lambda g, s, c: run_earthworm(s, c),
               "earthworm stirring makes the mass uniform", reps_key="reps"),
    Experiment("variance-bound", lambda g, s, c: run_variance_bound(s, c),
               "single-site variance against the distance-transitive bound"),
    Experiment("oldest-soil", lambda g, s, c: run_oldest_soil(s, c),
               "age of the oldest exposed soil on a large cycle", "k"),
    Experiment("walkers", lambda g, s, c: run_walkers(s, c),
               "difference-walk law, occupancy identity, joint occupancy"),
]}


def effective_config(name: str, overrides: dict | None = None) -> dict:
    if name not in REGISTRY:
        raise KeyError(name)
    cfg = dict(DEFAULTS[name])
    for key, val in (overrides or {}).items():
        if key not in cfg:
            raise ValueError(f"unknown parameter {key!r} for experiment {name!r}; "
                             f"valid: {sorted(cfg)}")
        cfg[key] = val
    return cfg


def run_experiment(name: str, seed: int, overrides: dict | None = None) -> Report:
    exp = REGISTRY[name]
    cfg = effective_config(name, overrides)
    g = parse_graph_spec(cfg["graph"]) if exp.graph_key == "graph" else None
    rep = exp.runner(g, int(seed), cfg)
    rep.config = {"experiment": name, "seed": int(seed), **cfg}
    return rep


__all__ = ["Claim", "DEFAULTS", "Experiment", "REGISTRY", "Report", "effective_config", "run_experiment"]
