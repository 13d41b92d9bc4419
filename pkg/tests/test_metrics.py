import pytest
from hypothesis import given, strategies as st

from locality_sched.capacity import ArrivalVector, ServiceModel
from locality_sched.metrics import MetricsCollector, MetricsError, lyapunov_value, stability_estimate
from locality_sched.policies import Layout, make_policy
from locality_sched.simulation import SimState, Task, run_simulation
from locality_sched.topology import LocalityClass, TaskType, validate_topology

SVC_W = ServiceModel(alpha=0.5, beta=0.25, gamma=0.1)


def departed(arrival, start, locality=LocalityClass.LOCAL):
    t = Task(0, 0, arrival)
    t.start_slot, t.locality = start, locality
    return t


@pytest.mark.parametrize("arrival, departure, expected", [(10, 10, 1), (10, 14, 5)])
def test_completion_time_convention(arrival, departure, expected):
    c = MetricsCollector(warmup=0)
    c.record_departure(departed(arrival, arrival), departure)
    assert c.mean_completion_time == expected


def test_warmup_arrivals_excluded():
    c = MetricsCollector(warmup=100)
    c.record_departure(departed(50, 50), 120)
    c.record_departure(departed(110, 110), 112)
    assert c.mean_completion_time == 3
    assert sum(c.class_counts) == 1
    assert c.departures == 2


def test_departure_before_arrival_is_fault():
    with pytest.raises(MetricsError):
        MetricsCollector().record_departure(departed(10, 10), 9)


def test_flat_trace_is_stable():
    assert stability_estimate([(t, 12) for t in range(1000)]) == (0.0, "stable")


def test_linear_growth_is_unstable():
    slope, verdict = stability_estimate([(t, 0.01 * t) for t in range(1000)])
    assert slope == pytest.approx(0.01)
    assert verdict == "unstable"


def test_suspect_band():
    assert stability_estimate([(t, 5e-4 * t) for t in range(1000)])[1] == "suspect"


def test_short_trace_rejected():
    with pytest.raises(MetricsError):
        stability_estimate([(t, 0) for t in range(99)])


def test_zero_load_run_is_stable():
    topo = validate_topology(2, (1, 2))
    arr = ArrivalVector({TaskType((1,)): 0.0})
    b = run_simulation(topo, ServiceModel(0.9, 0.2), arr, make_policy("pandas"), 5000, 1)
    assert b.stability_slope == 0.0 and b.verdict == "stable"


def state_with(triples):
    st_ = SimState(Layout.SUBQUEUE, 3 * len(triples), len(triples))
    for j, triple in enumerate(triples):
        for cls, n in enumerate(triple):
            st_.queues[3 * j + cls].extend(Task(i, 0, 0) for i in range(n))
    return st_


@pytest.mark.parametrize(
    "triples, expected",
    [([(2, 1, 3)], 1444), ([(0, 0, 0), (0, 0, 0)], 0), ([(1, 0, 0), (0, 0, 1)], 104)],
)
def test_lyapunov_examples(triples, expected):
    assert lyapunov_value(state_with(triples), SVC_W) == expected


def test_lyapunov_needs_subqueues():
    with pytest.raises(MetricsError):
        lyapunov_value(SimState(Layout.SERVER, 2, 2), SVC_W)


@given(st.lists(st.tuples(*[st.integers(0, 4)] * 3), min_size=1, max_size=4))
def test_lyapunov_zero_iff_empty(triples):
    v = lyapunov_value(state_with(triples), SVC_W)
    assert (v == 0) == all(sum(t) == 0 for t in triples)


def test_mean_completion_at_least_local_service_time():
    topo = validate_topology(4, (1, 1, 2, 2))
    svc = ServiceModel(0.9, 0.2, 0.5)
    arr = ArrivalVector({TaskType((1, 2)): 0.5, TaskType((3,)): 0.3, TaskType((2, 4)): 0.6})
    for kind in ["jsq_mw_3", "weighted_workload_priority", "pandas"]:
        b = run_simulation(topo, svc, arr, make_policy(kind), 40000, 2)
        assert b.counted_departures >= 10**4
        assert b.mean_completion_time >= (1 / svc.alpha) * 0.95
        assert sum(b.shares()) == pytest.approx(1.0, abs=1e-9)
        assert b.arrivals == b.departures + b.final_total_queue + b.in_service


def test_lyapunov_trace_only_for_subqueue_layout():
    topo = validate_topology(2, (1, 1))
    svc = ServiceModel(0.9, 0.2, 0.5)
    arr = ArrivalVector({TaskType((1,)): 0.5})
    b = run_simulation(topo, svc, arr, make_policy("weighted_workload_priority"), 2000, 1, trace_stride=10)
    assert len(b.lyapunov_trace) == len(b.total_queue_trace) == 200
    b = run_simulation(topo, svc, arr, make_policy("jsq_mw_3"), 2000, 1, trace_stride=10)
    assert b.lyapunov_trace == []
