import random

import pytest
from hypothesis import given, settings, strategies as st

from locality_sched.capacity import ArrivalVector, ServiceModel, ServiceModelError, solve_capacity_lp
from locality_sched.policies import Layout, PolicyError, make_policy
from locality_sched.simulation import (
    ArrivalProcess,
    Simulation,
    SimulationFault,
    Task,
    run_simulation,
    sample_service_completion,
)
from locality_sched.topology import LocalityClass, TaskType, classify_locality, singleton_racks, validate_topology

SVC3 = ServiceModel(alpha=0.9, beta=0.5, gamma=0.2)
SVC2 = ServiceModel(alpha=0.9, gamma=0.2)
TOPO6 = validate_topology(6, (1, 1, 1, 2, 2, 2))
TYPES6 = [TaskType(r) for r in [(1, 2), (1, 4), (2, 5), (3, 6), (4, 5), (5, 6)]]
ALL_KINDS = [
    "jsq_mw_2",
    "jsq_mw_3",
    "pandas",
    "weighted_workload_priority",
    "gcmu",
    "static_lp_split",
    "fifo_random",
]


def policy_for(kind, topo=TOPO6, svc=SVC3, arr=None):
    if kind == "static_lp_split":
        _, dec = solve_capacity_lp(topo, svc, arr)
        return make_policy(kind, decomposition=dec)
    return make_policy(kind)


def idle_sim(kind, topo, svc, types, **kw):
    arr = ArrivalVector({t: 0.0 for t in types})
    return Simulation(topo, svc, arr, policy_for(kind, topo, svc, ArrivalVector({t: 0.1 for t in types})), 0, **kw)


def inject(sim, type_idx, queue, arrival=0):
    task = Task(sim.next_id, type_idx, arrival)
    sim.next_id += 1
    sim.arrived += 1
    sim.state.queues[queue].append(task)
    return task


# -- examples ------------------------------------------------------------------


def test_null_step():
    sim = idle_sim("jsq_mw_3", TOPO6, SVC3, TYPES6)
    sim.step()
    assert sim.state.slot == 1
    assert sim.state.total_queued() == 0 and sim.state.busy() == 0


def test_alpha_one_departs_in_same_slot():
    svc = ServiceModel(alpha=1.0, beta=0.5, gamma=0.2)
    sim = idle_sim("jsq_mw_3", TOPO6, svc, TYPES6)
    task = Task(0, 0, 0)
    task.locality, task.start_slot, task.server = LocalityClass.LOCAL, 0, 1
    sim.state.in_service[0] = task
    sim.state.slot = 3
    sim.step()
    assert task.departure_slot == 3
    assert sim.state.in_service[0] is None
    assert sim.metrics.completion_sum == 4  # slots 0..3 inclusive


def test_pandas_idle_server_takes_own_task():
    sim = idle_sim("pandas", singleton_racks(2), SVC2, [TaskType((1,))])
    task = inject(sim, 0, 0)
    sim.step()
    assert sim.state.in_service[0] is task
    assert task.locality == LocalityClass.LOCAL and task.start_slot == 0


def test_fifo_head_served_remotely():
    topo = singleton_racks(2)
    sim = idle_sim("fifo_random", topo, SVC2, [TaskType((1,))])
    sim.state.in_service[0] = Task(99, 0, 0)  # keep server 1 busy
    sim.state.in_service[0].locality = LocalityClass.LOCAL
    sim.state.in_service[0].start_slot = 0
    sim._rates = [0.0, 0.0, 0.0]  # nothing completes this slot
    task = inject(sim, 0, 0)
    sim.step()
    assert sim.state.in_service[1] is task
    assert task.locality == LocalityClass.REMOTE


def test_fifo_empty_and_lowest_id_first():
    sim = idle_sim("fifo_random", TOPO6, SVC3, TYPES6)
    sim.step()
    assert sim.state.busy() == 0
    task = inject(sim, 3, 0)
    sim.step()
    assert sim.state.in_service[0] is task
    assert sim.state.busy() == 1


def test_horizon_must_be_positive():
    with pytest.raises(ValueError):
        run_simulation(TOPO6, SVC3, ArrivalVector({t: 0.1 for t in TYPES6}), make_policy("pandas"), 0, 1)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_zero_arrivals(kind):
    arr = ArrivalVector({t: 0.0 for t in TYPES6})
    pol = policy_for(kind, arr=ArrivalVector({t: 0.1 for t in TYPES6})) if kind == "static_lp_split" else make_policy(kind)
    b = run_simulation(TOPO6, SVC3, arr, pol, 1000, 1)
    assert b.departures == 0 and b.final_total_queue == 0 and b.arrivals == 0
    assert b.verdict == "stable" and b.stability_slope == 0


def test_single_server_service_mean():
    arr = ArrivalVector({TaskType((1,)): 0.4})
    svc = ServiceModel(alpha=0.8, gamma=0.1)
    b = run_simulation(singleton_racks(1), svc, arr, make_policy("jsq_mw_2"), 10**6, 3)
    assert b.mean_service_time["local"] == pytest.approx(1.25, rel=0.02)
    assert b.verdict == "stable"


@pytest.mark.parametrize("kind", ["pandas", "weighted_workload_priority", "gcmu", "fifo_random"])
def test_single_server_service_mean_other_policies(kind):
    arr = ArrivalVector({TaskType((1,)): 0.4})
    svc = ServiceModel(alpha=0.8, gamma=0.1)
    b = run_simulation(singleton_racks(1), svc, arr, make_policy(kind), 2 * 10**5, 3)
    assert b.mean_service_time["local"] == pytest.approx(1.25, rel=0.02)


# -- service sampling ------------------------------------------------------------


def test_sample_alpha_one_always_completes(rng):
    svc = ServiceModel(alpha=1.0, beta=0.5, gamma=0.2)
    assert all(sample_service_completion(rng, LocalityClass.LOCAL, svc) for _ in range(1000))


def test_zero_gamma_rejected():
    with pytest.raises(ServiceModelError):
        ServiceModel(alpha=0.9, beta=0.45, gamma=0.0)


def test_sample_rate_and_single_draw():
    svc = ServiceModel(alpha=0.9, beta=0.45, gamma=0.2)
    rng = random.Random(5)
    hits = sum(sample_service_completion(rng, LocalityClass.RACK_LOCAL, svc) for _ in range(10**5))
    assert hits / 10**5 == pytest.approx(0.45, abs=0.005)
    a, b = random.Random(1), random.Random(1)
    sample_service_completion(a, LocalityClass.REMOTE, svc)
    b.random()
    assert a.getstate() == b.getstate()


# -- setup validation ------------------------------------------------------------


def test_arrival_process_bounds():
    with pytest.raises(ValueError):
        ArrivalProcess((1.2,))
    with pytest.raises(ValueError):
        ArrivalProcess((4.5,), "batch_binomial", 4)
    counts = ArrivalProcess((3.0,), "batch_binomial", 4).sample(random.Random(0))
    assert 0 <= counts[0] <= 4


def test_invalid_compositions_rejected():
    arr = ArrivalVector({TaskType((1,)): 0.3})
    with pytest.raises(PolicyError):
        Simulation(singleton_racks(2), SVC2, arr, make_policy("jsq_mw_3"), 0)
    with pytest.raises(ServiceModelError):
        Simulation(TOPO6, SVC2, arr, make_policy("pandas"), 0)
    with pytest.raises(ValueError):
        Simulation(singleton_racks(2), SVC2, arr, make_policy("pandas"), 0, schedule_order="sideways")


def test_bad_policy_decision_is_a_fault():
    sim = idle_sim("pandas", singleton_racks(2), SVC2, [TaskType((1,))])
    sim.policy.schedule = lambda m, queues, rng: 1  # empty queue
    inject(sim, 0, 0)
    with pytest.raises(SimulationFault):
        sim.step()


# -- trace invariants ------------------------------------------------------------


def run_checked(kind, topo, svc, types, rates, seed, slots, **kw):
    """Step a simulation and check conservation, non-preemption and locality every slot."""
    arr = ArrivalVector(dict(zip(types, rates)))
    pol = policy_for(kind, topo, svc, arr)
    sim = Simulation(topo, svc, arr, pol, seed, **kw)
    started = {}
    for _ in range(slots):
        sim.step()
        st_ = sim.state
        assert sim.arrived == sim.metrics.departures + st_.total_queued() + st_.busy()
        ids = [t.id for q in st_.queues for t in q] + [t.id for t in st_.in_service if t]
        assert len(ids) == len(set(ids))
        for m, task in enumerate(st_.in_service, start=1):
            if task is None:
                continue
            assert task.server == m
            assert task.locality == classify_locality(topo, types[task.type_idx], m)
            if task.id in started:
                assert started[task.id] == (m, task.locality, task.start_slot)
            started[task.id] = (m, task.locality, task.start_slot)
        if pol.layout is Layout.SERVER and kind != "static_lp_split":
            for m, q in enumerate(st_.queues, start=1):
                assert all(m in types[t.type_idx] for t in q)
        if pol.layout is Layout.SUBQUEUE:
            for j, q in enumerate(st_.queues):
                m, cls = j // 3 + 1, j % 3
                assert all(classify_locality(topo, types[t.type_idx], m) == cls for t in q)
    return sim


@settings(max_examples=25)
@given(
    st.sampled_from(ALL_KINDS),
    st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6),
    st.integers(0, 10**6),
    st.sampled_from(["ascending", "random"]),
)
def test_invariants_hold_every_slot(kind, rates, seed, order):
    if sum(rates) == 0:
        rates[0] = 0.5
    run_checked(kind, TOPO6, SVC3, TYPES6, rates, seed, 300, schedule_order=order)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_determinism_per_slot(kind):
    def trace(seed):
        arr = ArrivalVector({t: 0.7 for t in TYPES6})
        sim = Simulation(TOPO6, SVC3, arr, policy_for(kind, arr=arr), seed, schedule_order="random")
        out = []
        for _ in range(2000):
            sim.step()
            out.append(tuple(sim.state.queue_lengths()))
        return out

    assert trace(11) == trace(11)
    assert trace(11) != trace(12)


def test_pandas_never_steals_below_threshold():
    topo = singleton_racks(4)
    types = [TaskType((1, 2)), TaskType((1,)), TaskType((3, 4))]
    arr = ArrivalVector(dict(zip(types, [0.6, 0.9, 0.4])))
    sim = Simulation(topo, SVC2, arr, make_policy("pandas"), 4, record_schedules=True)
    sim.run(20000)
    steals = [e for e in sim.schedule_log if e[2] != e[1] - 1]
    assert steals  # the overloaded server 1 gets help
    for slot, m, q, qlen, own, qmax in steals:
        assert own == 0
        assert qlen == qmax >= SVC2.steal_threshold
