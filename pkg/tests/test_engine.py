import numpy as np
import pytest
from hypothesis import given, strategies as hst

from meteor.engine import (NEVER, apply_hit, column_l1_diameter, coupled_run, crater_ready, default_burn_in,
                           hit_matrix, init_state, matrix_trajectory, simulate, stationary_sample)
from meteor.errors import BudgetError, ValidationError
from meteor.events import EventStream
from meteor.graph import (build_complete, build_cycle, build_torus, custom_redistribution, parse_graph_spec,
                          uniform_redistribution)
from meteor.stats import batch_means


def _hits(g, masses, verts):
    P = uniform_redistribution(g)
    st = init_state(g, masses)
    for v in verts:
        st = apply_hit(st, v, P)
    return st.masses


def test_init_state():
    g = build_cycle(4)
    assert init_state(g).total == 4.0
    assert init_state(g, [4, 0, 0, 0]).total == 4.0
    assert (init_state(g).last_hit == NEVER).all()
    assert init_state(g, total=2.0).masses.tolist() == [0.5] * 4
    with pytest.raises(ValidationError):
        init_state(g, [1, -1, 1, 1])
    with pytest.raises(ValidationError):
        init_state(g, [1, 1, 1])


def test_apply_hit_examples():
    c4 = build_cycle(4)
    assert _hits(c4, [4, 0, 0, 0], [0]).tolist() == [0, 2, 0, 2]
    assert _hits(c4, [0, 2, 0, 2], [1]).tolist() == [1, 0, 1, 2]
    assert _hits(build_complete(3), [3, 0, 0], [0]).tolist() == [0, 1.5, 1.5]


def test_cycle3_two_hits_frozen(fixed_stream):
    # (3,0,0) -> (0,1.5,1.5) -> (0.75,0,2.25), worked by hand
    g = build_cycle(3)
    P = uniform_redistribution(g)
    res = simulate(init_state(g, [3, 0, 0]), g, P, fixed_stream([0, 1]), n_events=2)
    assert res.final_state.masses.tolist() == [0.75, 0.0, 2.25]
    assert res.final_state.last_hit.tolist() == [1.0, 2.0, NEVER]
    assert _hits(g, [3, 0, 0], [0, 1]).tolist() == [0.75, 0.0, 2.25]


def test_apply_hit_custom_matrix():
    g = build_cycle(3)
    P = custom_redistribution(g, [[0, .75, .25], [.5, 0, .5], [.5, .5, 0]])
    st = apply_hit(init_state(g, [4, 0, 0]), 0, P)
    assert st.masses.tolist() == [0.0, 3.0, 1.0]


def test_zero_events_is_identity():
    g = build_cycle(5)
    st = init_state(g, [1, 2, 3, 4, 5])
    res = simulate(st, g, uniform_redistribution(g), EventStream(5, 1), n_events=0)
    assert np.array_equal(res.final_state.masses, st.masses)


def test_conservation_torus():
    g = build_torus(10, 2)
    res = simulate(init_state(g), g, uniform_redistribution(g), EventStream(100, 3), n_events=10**6)
    assert abs(res.final_state.total - 100.0) <= 1e-9 * 100.0


def test_conservation_complete_with_renormalize():
    g = build_complete(30)
    P = uniform_redistribution(g)
    res = simulate(init_state(g), g, P, EventStream(30, 3), n_events=2 * 10**6, renormalize=True)
    assert abs(res.final_state.total - 30.0) <= 1e-9 * 30.0


def test_determinism_bit_exact():
    g = build_torus(6, 2)
    P = uniform_redistribution(g)
    a = simulate(init_state(g), g, P, EventStream(36, 9), n_events=5000, record_events=True)
    b = simulate(init_state(g), g, P, EventStream(36, 9), n_events=5000, record_events=True)
    assert a.final_state.masses.tobytes() == b.final_state.masses.tobytes()
    assert a.event_log[0].tobytes() == b.event_log[0].tobytes()
    t, v = EventStream(36, 9).take(5000)
    assert np.array_equal(a.event_log[0], t) and np.array_equal(a.event_log[1], v)


def test_until_and_observe():
    g = build_cycle(10)
    P = uniform_redistribution(g)
    res = simulate(init_state(g), g, P, EventStream(10, 2), until=50.0, observe=lambda s: [s.total],
                   observable_names=["total"], stride=10)
    assert res.final_state.clock == 50.0
    assert res.trajectory.shape[1] == 4
    assert np.allclose(res.trajectory[:, 3], 10.0)
    with pytest.raises(ValidationError):
        simulate(init_state(g), g, P, EventStream(10, 2))


def test_trajectory_csv(tmp_path):
    g = build_cycle(5)
    res = simulate(init_state(g), g, uniform_redistribution(g), EventStream(5, 2), n_events=50,
                   observe=lambda s: [s.masses[0]], observable_names=["m0"], stride=5)
    path = tmp_path / "traj.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "event,time,vertex,m0"
    assert len(lines) == 11


def test_zero_pair_count_checked_along_run():
    g = build_cycle(50)
    P = uniform_redistribution(g)
    m = np.zeros(50)
    m[0] = 50.0
    simulate(init_state(g, m), g, P, EventStream(50, 4), n_events=20_000, stride=7, check=True)


def test_hit_matrix_examples():
    g = build_cycle(3)
    P = uniform_redistribution(g)
    A = hit_matrix(g, P, 0)
    assert (A @ np.array([3.0, 0, 0])).tolist() == [0, 1.5, 1.5]
    assert np.allclose(A.sum(axis=0), 1.0)


def test_matrix_product_equals_engine():
    g = build_cycle(20)
    P = uniform_redistribution(g)
    m0 = np.random.default_rng(0).random(20) * 3
    prod, _ = matrix_trajectory(g, P, EventStream(20, 5), 1000)
    res = simulate(init_state(g, m0), g, P, EventStream(20, 5), n_events=1000)
    assert np.max(np.abs(prod @ m0 - res.final_state.masses)) <= 1e-10


def test_matrix_trajectory_identity_and_contraction():
    g = build_cycle(10)
    P = uniform_redistribution(g)
    prod, diam = matrix_trajectory(g, P, EventStream(10, 1), 0)
    assert np.array_equal(prod, np.eye(10)) and diam.tolist() == [2.0]
    prod, diam = matrix_trajectory(g, P, EventStream(10, 1), 10**4, diameter_every=100)
    assert (np.diff(diam) <= 1e-12).all()
    assert column_l1_diameter(prod) < 1e-6
    with pytest.raises(BudgetError):
        hit_matrix(build_cycle(3000), uniform_redistribution(build_cycle(3000)), 0)


def test_coupled_identical_states_zero():
    g = build_cycle(8)
    st = init_state(g)
    res = coupled_run(st, st, g, uniform_redistribution(g), EventStream(8, 1), n_events=1000)
    assert (res.distances == 0).all()


def test_coupled_monotone_cycle4():
    g = build_cycle(4)
    a = init_state(g, [4, 0, 0, 0])
    b = init_state(g, [0, 0, 4, 0])
    res = coupled_run(a, b, g, uniform_redistribution(g), EventStream(4, 3), n_events=10_000)
    d = np.concatenate([[res.d0], res.distances])
    assert (np.diff(d) <= 1e-9).all()


def test_coupled_torus_distance_decreases():
    g = build_torus(5, 2)
    rng = np.random.default_rng(1)
    a = init_state(g, rng.random(25), total=25.0)
    b = init_state(g, rng.random(25), total=25.0)
    res = coupled_run(a, b, g, uniform_redistribution(g), EventStream(25, 3), n_events=10_000)
    assert res.distances[-1] <= res.d0
    exact = np.abs(res.state_a.masses - res.state_b.masses).sum()
    assert abs(exact - res.distances[-1]) < 1e-9


def test_coupled_rejects_unequal_totals():
    g = build_cycle(4)
    with pytest.raises(ValidationError):
        coupled_run(init_state(g), init_state(g, total=3.0), g, uniform_redistribution(g),
                    EventStream(4, 1), n_events=10)


def test_crater_ready_hits_everything():
    g = build_cycle(100)
    st = init_state(g)
    crater_ready(g, uniform_redistribution(g), EventStream(100, 1), st)
    assert st.all_hit()


def test_default_burn_in():
    assert default_burn_in(build_cycle(10)) == 10**4
    assert default_burn_in(build_cycle(2000)) == 50 * 1000 ** 2


def test_stationary_mean_torus():
    g = build_torus(10, 2)
    P = uniform_redistribution(g)
    stream = EventStream(100, 8)
    st = stationary_sample(g, P, stream)
    vals = []
    for _ in range(2000):
        simulate(st, g, P, stream, n_events=100, inplace=True)
        vals.append(st.masses[0])
    assert batch_means(vals).within(1.0, 3.0)


_GRAPHS = hst.sampled_from(["cycle:5", "cycle:12", "torus:3:2", "torus:4:2", "complete:6"])


def _masses(k, draw_floats):
    m = np.asarray(draw_floats, dtype=np.float64)[:k]
    return m * (k / m.sum()) if m.sum() > 0 else np.ones(k)


@given(_GRAPHS, hst.lists(hst.floats(0.0, 10.0), min_size=16, max_size=16), hst.integers(0, 2**31),
       hst.integers(1, 3000))
def test_property_conservation(spec, raw, seed, n):
    g = parse_graph_spec(spec)
    m = _masses(g.vertex_count, raw)
    res = simulate(init_state(g, m), g, uniform_redistribution(g), EventStream(g.vertex_count, seed), n_events=n)
    assert abs(res.final_state.total - m.sum()) <= 1e-9 * m.sum()
    assert (res.final_state.masses >= 0).all()


@given(_GRAPHS, hst.lists(hst.floats(0.0, 10.0), min_size=16, max_size=16),
       hst.lists(hst.floats(0.0, 10.0), min_size=16, max_size=16), hst.integers(0, 2**31))
def test_property_coupled_monotone(spec, ra, rb, seed):
    g = parse_graph_spec(spec)
    a, b = _masses(g.vertex_count, ra), _masses(g.vertex_count, rb)
    res = coupled_run(init_state(g, a), init_state(g, b), g, uniform_redistribution(g),
                      EventStream(g.vertex_count, seed), n_events=2000)
    d = np.concatenate([[res.d0], res.distances])
    assert (np.diff(d) <= 1e-9).all()


@given(hst.integers(0, 2**31), hst.integers(1, 200))
def test_property_engine_matches_hit_sequence(seed, n):
    g = build_cycle(7)
    P = uniform_redistribution(g)
    res = simulate(init_state(g), g, P, EventStream(7, seed), n_events=n, record_events=True)
    _, verts = res.event_log
    assert np.allclose(res.final_state.masses, _hits(g, np.ones(7), verts), atol=1e-12)
