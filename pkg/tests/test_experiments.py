import json
import os

import pytest

from meteor.experiments import DEFAULTS, REGISTRY, effective_config, run_experiment
from meteor.experiments.report import Claim, Report

SMALL = {
    "oracle-tables": {},
    "crater-spectrum": {"k": 300, "reps": 8},
    "crater-clt": {"k": 300, "reps": 20},
    "moments": {"graph": "cycle:100", "events": 200_000},
    "rim-height": {"k": 200, "events": 200_000, "ode_k": 200, "dt": 1e-2, "horizon": 10.0},
    "mixing": {"n_list": [6, 8], "reps": 20},
    "coupling-bound": {"k": 6, "t_grid": [1.0, 4.0], "reps": 100, "alpha_reps": 100},
    "complete-graph": {"k_list": [16, 32], "samples": 300},
    "small-k": {"samples": 500},
    "region-variance": {"cycle_k": 100, "events": 200_000, "torus_n": 8, "torus_burn_in": 20_000,
                        "torus_events": 200_000},
    "earthworm": {"n_list": [4, 6], "reps": 10},
    "variance-bound": {"graphs": ["cycle:30", "torus:4:2", "complete:10"], "events": 100_000},
    "oldest-soil": {"k": 2000},
    "walkers": {"max_n": 6, "occupancy_reps": 100, "joint_k": 6, "joint_samples": 300},
}


def test_registry_and_defaults_agree():
    assert set(REGISTRY) == set(DEFAULTS) == set(SMALL)
    for name, small in SMALL.items():
        assert set(small) <= set(DEFAULTS[name])


def test_effective_config_rejects_unknown():
    with pytest.raises(ValueError):
        effective_config("moments", {"nope": 1})
    with pytest.raises(KeyError):
        effective_config("nope")


@pytest.mark.parametrize("name", sorted(SMALL))
def test_smoke_and_determinism(name, tmp_path):
    a = run_experiment(name, 7, SMALL[name])
    b = run_experiment(name, 7, SMALL[name])
    assert isinstance(a, Report) and a.claims
    assert all(isinstance(c, Claim) for c in a.claims)
    assert a.config["seed"] == 7 and a.config["experiment"] == name
    assert a.to_json() == b.to_json()
    doc = json.loads(a.to_json())
    assert doc["pass"] == a.passed
    for c in doc["claims"]:
        assert set(c) >= {"claim", "ref", "observed", "expected", "pass"}
    written = a.write_files(tmp_path)
    for path in written:
        assert os.path.getsize(path) > 0


def test_oracle_tables_all_exact_claims_pass():
    assert run_experiment("oracle-tables", 0).passed


def test_seed_changes_output():
    a = run_experiment("oldest-soil", 1, SMALL["oldest-soil"])
    b = run_experiment("oldest-soil", 2, SMALL["oldest-soil"])
    assert a.data["age"] != b.data["age"]
