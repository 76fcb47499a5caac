import math

import numpy as np
import pytest
from scipy import stats as sps

from meteor.errors import BudgetError, InvalidSizeError, ValidationError
from meteor.events import EventStream
from meteor.graph import build_complete, build_cycle, build_torus, uniform_redistribution
from meteor.wimps import (WalkerEnsemble, difference_law_closed, difference_walk_stationary,
                          exact_cycle_moments, joint_occupancy, meeting_survival_exact, meeting_tail_alpha,
                          meeting_tail_exact, occupancy_identity_check, spawn_walkers)


def test_single_walker_rate_one():
    g = build_cycle(4)
    ens = spawn_walkers(g, EventStream(4, 1), [0])
    ens.run(until=1000.0)
    assert abs(ens.jumps[0] - 1000) <= 3 * math.sqrt(1000)


def test_holding_times_exponential():
    g = build_cycle(6)
    ens = spawn_walkers(g, EventStream(6, 2), [0])
    times, trace = ens.run(until=12_000.0, record=True)
    moved = np.flatnonzero(np.diff(np.concatenate([[0], trace[:, 0]])) != 0)
    hold = np.diff(np.concatenate([[0.0], times[moved]]))
    assert len(hold) > 10_000
    assert sps.kstest(hold[:10_000], "expon").pvalue > 0.01


def test_colocated_walkers_jump_together():
    g = build_torus(5, 2)
    ens = spawn_walkers(g, EventStream(25, 3), [7, 7])
    times, trace = ens.run(n_events=500, record=True)
    first = np.flatnonzero(trace[:, 0] != 7)[0]
    assert trace[first, 1] != 7


def test_distinct_walkers_never_jump_together():
    g = build_cycle(10)
    ens = spawn_walkers(g, EventStream(10, 4), [0, 5])
    _, trace = ens.run(n_events=50_000, record=True)
    prev = np.vstack([[0, 5], trace[:-1]])
    moved = trace != prev
    both = moved.all(axis=1)
    # joint moves only happen from a shared vertex
    assert (prev[both, 0] == prev[both, 1]).all()


def test_colocated_destinations_independent():
    g = build_complete(4)
    P = uniform_redistribution(g)
    cells = np.zeros((3, 3))
    for seed in range(40):
        ens = WalkerEnsemble(g, P, np.zeros(100, dtype=np.int64), seed, EventStream(4, seed))
        while (ens.pos == 0).all():
            ens.run(n_events=1)
        a, b = ens.pos[0::2] - 1, ens.pos[1::2] - 1
        np.add.at(cells, (a, b), 1)
    assert sps.chisquare(cells.ravel()).pvalue > 1e-3


def test_walker_direction_stream_independent_of_batching():
    g = build_cycle(9)
    a = spawn_walkers(g, EventStream(9, 5), [0, 4])
    a.run(n_events=3000)
    b = spawn_walkers(g, EventStream(9, 5), [0, 4])
    for _ in range(30):
        b.run(n_events=100)
    assert a.pos.tolist() == b.pos.tolist()


def test_spawn_validation():
    g = build_cycle(4)
    with pytest.raises(ValidationError):
        spawn_walkers(g, EventStream(4, 1), np.array([], dtype=np.int64))
    with pytest.raises(ValidationError):
        spawn_walkers(g, EventStream(4, 1), [1.0, 0, 0, 0], n_walkers=0)
    with pytest.raises(ValidationError):
        spawn_walkers(g, EventStream(4, 1), [9])
    ens = spawn_walkers(g, EventStream(4, 1), [0, 0, 2.0, 0], n_walkers=50)
    assert (ens.pos == 2).all()


def test_occupancy_at_time_zero():
    g = build_cycle(5)
    rep = occupancy_identity_check(g, uniform_redistribution(g), 1, 0.0, 50, walkers_per_rep=100)
    assert np.allclose(rep.mass_freq, 0.2)
    assert rep.ok


def test_occupancy_identity_cycle8():
    g = build_cycle(8)
    rep = occupancy_identity_check(g, uniform_redistribution(g), 3, 5.0, 300)
    assert rep.ok, rep.max_z


def test_occupancy_identity_point_mass():
    g = build_cycle(8)
    m = np.zeros(8)
    m[0] = 8.0
    rep = occupancy_identity_check(g, uniform_redistribution(g), 4, 0.7, 300, masses=m)
    assert rep.ok, rep.max_z
    assert rep.mass_freq[0] > 0.3


def test_difference_law_cycle4():
    law = difference_walk_stationary(4, 1)
    assert np.allclose(law.embedded, [1 / 3, 1 / 6, 1 / 3, 1 / 6], atol=1e-14)


@pytest.mark.parametrize("n,d", [(3, 1), (5, 1), (3, 2), (6, 2), (4, 3), (7, 3)])
def test_difference_solve_equals_closed_form(n, d):
    a, b = difference_walk_stationary(n, d), difference_law_closed(n, d)
    assert np.max(np.abs(a.embedded - b.embedded)) < 1e-12
    assert abs(a.embedded.sum() - 1.0) < 1e-12
    others = np.setdiff1d(np.arange(1, n ** d), b.unit_indices())
    if len(others):
        assert np.ptp(b.embedded[others]) < 1e-15


def test_difference_law_symmetric():
    g = build_torus(5, 2)
    law = difference_law_closed(5, 2)
    for v in range(25):
        x, y = g.coords(v)
        for w in (g.index(((-x) % 5, y)), g.index((y, x))):
            assert law.embedded[v] == law.embedded[w]


def test_exact_moments_from_difference_law():
    for n, d in ((10, 1), (6, 2), (4, 3)):
        law = difference_law_closed(n, d)
        assert abs(law.covariance(0) - 1.0) < 1e-12
        for u in law.unit_indices():
            assert abs(law.covariance(u) + 1 / (2 * d)) < 1e-12
    assert exact_cycle_moments(50)["cov_far"] == pytest.approx(0.0, abs=1e-12)


def test_difference_errors():
    with pytest.raises(InvalidSizeError):
        difference_walk_stationary(2, 1)
    with pytest.raises(BudgetError):
        difference_walk_stationary(1001, 2)


def test_meeting_same_start_is_zero():
    g = build_cycle(6)
    tail = meeting_tail_alpha(g, uniform_redistribution(g), [0.5, 1.0], 200, 1, start_pairs=[(2, 2)])
    assert tail.alpha.tolist() == [0.0, 0.0]


def test_meeting_cycle2_exact():
    g = build_cycle(2)
    P = uniform_redistribution(g)
    t = np.array([0.1, 0.5, 1.0, 2.0])
    assert np.allclose(meeting_tail_exact(g, P, t), np.exp(-2 * t), atol=1e-14)
    tail = meeting_tail_alpha(g, P, t, 20_000, 3, start_pairs=[(0, 1)])
    assert (np.abs(tail.alpha - np.exp(-2 * t)) <= 4 * tail.stderr + 1e-3).all()


def test_meeting_tail_mc_matches_exact_and_monotone():
    g = build_cycle(7)
    P = uniform_redistribution(g)
    t = np.array([0.5, 1.0, 2.0, 4.0])
    exact = meeting_survival_exact(g, P, t)[:, 0, 3]
    tail = meeting_tail_alpha(g, P, t, 20_000, 5, start_pairs=[(0, 3)])
    assert (np.abs(tail.alpha - exact) <= 4 * tail.stderr).all()
    assert (np.diff(tail.alpha) <= 0).all()
    assert (tail.lower <= tail.alpha).all() and (tail.alpha <= tail.upper).all()


def test_meeting_tail_csv(tmp_path):
    g = build_cycle(5)
    tail = meeting_tail_alpha(g, uniform_redistribution(g), [1.0], 100, 1, n_pairs=4)
    tail.write_csv(tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().startswith("t,alpha,wilson_low")


def test_joint_occupancy_marginals_and_diagonal():
    k = 8
    g = build_cycle(k)
    jo = joint_occupancy(g, uniform_redistribution(g), 2, n_samples=3000)
    assert abs(jo.probs.sum() - 1.0) < 1e-12
    assert np.abs(jo.probs.sum(axis=1) - 1 / k).max() < 0.02
    exact = difference_law_closed(k, 1).time_weighted
    obs = jo.offset_law()
    assert abs(obs[0] - exact[0]) <= 4 * jo.diag_mass.stderr
    assert abs(jo.second_moments().trace() / k - 2.0) < 0.2
