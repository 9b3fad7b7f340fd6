import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdlab.cluster import explore, loglinear_fit, radius_tail, stabilization_check
from bdlab.dynamics import ChainConfig, UpdateSchedule, generate_schedule
from bdlab.lattice import BoxSpec, HeightField, l1, neighbors

BOX = BoxSpec(1, 5)


def sched(lists, T=1.0, box=BOX):
    return UpdateSchedule.from_site_lists(box, T, lists)


def test_empty_schedule_stops_at_once():
    cl = explore((0,), sched({}))
    assert cl.sites == {(0,)} and cl.K == 0 and cl.rho == 0


def test_one_step():
    cl = explore((0,), sched({(0,): [0.5]}))
    assert cl.sites == {(-1,), (0,), (1,)} and cl.K == 1 and cl.rho == 1


def test_earlier_neighbour_event_extends():
    cl = explore((0,), sched({(0,): [0.5], (1,): [0.3]}))
    assert cl.sites == {(-1,), (0,), (1,), (2,)}
    assert cl.K == 2 and cl.rho == 2
    assert cl.times.tolist() == [0.5, 0.3]


def test_later_neighbour_event_is_invisible():
    cl = explore((0,), sched({(0,): [0.5], (1,): [0.7]}))
    assert cl.sites == {(-1,), (0,), (1,)} and cl.K == 1


def test_root_must_be_in_box():
    with pytest.raises(ValueError):
        explore((9,), sched({}))


def test_escape_is_flagged():
    box = BoxSpec(1, 1)
    cl = explore((1,), sched({(1,): [0.5]}, box=box))
    assert cl.escaped


def is_connected(sites):
    sites = set(sites)
    start = next(iter(sites))
    seen, todo = {start}, [start]
    while todo:
        for y in neighbors(todo.pop()):
            if y in sites and y not in seen:
                seen.add(y)
                todo.append(y)
    return seen == sites


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([1, 2]), T=st.floats(0, 3))
def test_exploration_invariants(seed, d, T):
    box = BoxSpec(d, 8)
    P = generate_schedule(ChainConfig(box), T, np.random.default_rng(seed))
    x = box.origin
    cl = explore(x, P)
    assert x in cl.sites
    assert cl.size <= 2 * d * cl.K + 1
    assert is_connected(cl.sites)
    assert cl.rho == max(l1(y) for y in cl.sites)
    assert np.all(np.diff(cl.times) < 0)
    again = explore(x, P)
    assert again.sites == cl.sites and again.K == cl.K


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), cut=st.floats(1e-6, 1.0))
def test_horizon_cut_after_first_step_changes_nothing(seed, cut):
    box = BoxSpec(1, 15)
    P = generate_schedule(ChainConfig(box), 3.0, np.random.default_rng(seed))
    full = explore(box.origin, P)
    t1 = full.times[0] if full.K else 0.0
    short = explore(box.origin, P.truncate(t1 + (3.0 - t1) * cut))
    assert short.sites == full.sites and short.K == full.K


def test_stabilization_on_empty_schedule():
    f = HeightField.from_array(BOX, np.arange(11))
    rep = stabilization_check(f, UpdateSchedule.empty(BOX, 1.0), (0,))
    assert rep.passed and rep.value == f.at((0,))


@pytest.mark.parametrize("d", [1, 2])
def test_stabilization_random(d):
    box = BoxSpec(d, 10 if d == 1 else 6)
    rng = np.random.default_rng(40 + d)
    checked = 0
    for _ in range(60):
        f = HeightField.from_array(box, rng.integers(0, 6, size=box.shape))
        P = generate_schedule(ChainConfig(box), 2.0, rng)
        rep = stabilization_check(f, P, box.origin, rng=rng)
        if not rep.escaped:
            checked += 1
            assert rep.passed, rep.values
    assert checked > 30


def test_tail_at_time_zero_is_zero():
    tail = radius_tail(1, 10, [0.0], 50, c=2.0, seed=1)
    assert tail.prob.tolist() == [0.0]


def test_tail_rows_shape():
    tail = radius_tail(1, 50, [1, 2], 40, c=1.0, seed=2)
    rows = list(tail.rows())
    assert len(rows) == 2 and all(len(r) == 4 for r in rows)
    assert np.all((tail.prob >= 0) & (tail.prob <= 1))


def test_loglinear_fit_recovers_slope():
    x = np.arange(1, 6, dtype=float)
    slope, intercept, r2 = loglinear_fit(x, np.exp(-0.7 * x + 0.2))
    assert slope == pytest.approx(-0.7) and intercept == pytest.approx(0.2)
    assert r2 == pytest.approx(1.0)


def test_loglinear_fit_needs_two_points():
    assert np.isnan(loglinear_fit(np.arange(3.0), np.array([0.0, 0.0, 0.1]))[0])
