from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from colosim.comm import Architecture, ClusterSpec
from colosim.engine import Phase, validate_trace
from colosim.scheduler import (
    Policy,
    SchedulePlan,
    predicted_speedup,
    schedule_crossover,
    schedule_sequential,
    simulate,
    steady_state_period,
)
from colosim.workload import JobProfile, TensorSpec

from oracles import brute_crossover, brute_sequential, crossover_cycle, spans_from_trace

# Parameter-server at 16 Gbps (2e9 B/s) with zero latency prices a payload of
# S bytes at exactly S nanoseconds, so tests can dial sync durations directly.
CLUSTER = ClusterSpec(workers=2, bandwidth_bytes_per_sec=2_000_000_000,
                      latency_per_message=0,
                      architecture=Architecture.PARAMETER_SERVER)


def job(job_id, fwd, bwd, comm_ns, iterations):
    return JobProfile(job_id, fwd, bwd, (TensorSpec("g", comm_ns),), iterations)


def plan(policy, specs, cluster=CLUSTER):
    return SchedulePlan(policy, tuple(job(*s) for s in specs), cluster)


def two_identical(comp=2, comm=1, iterations=3, policy=Policy.CROSSOVER):
    fwd, bwd = comp // 2, comp - comp // 2
    return plan(policy, [("j1", fwd, bwd, comm, iterations),
                         ("j2", fwd, bwd, comm, iterations)])


GOLDEN_CROSSOVER = [
    ("gpu0", "j1", "forward", 1, 0, 1), ("gpu0", "j1", "backward", 1, 1, 2),
    ("nic0", "j1", "sync", 1, 2, 3),
    ("gpu0", "j2", "forward", 1, 2, 3), ("gpu0", "j2", "backward", 1, 3, 4),
    ("nic0", "j2", "sync", 1, 4, 5),
    ("gpu0", "j1", "forward", 2, 4, 5), ("gpu0", "j1", "backward", 2, 5, 6),
    ("nic0", "j1", "sync", 2, 6, 7),
    ("gpu0", "j2", "forward", 2, 6, 7), ("gpu0", "j2", "backward", 2, 7, 8),
    ("nic0", "j2", "sync", 2, 8, 9),
    ("gpu0", "j1", "forward", 3, 8, 9), ("gpu0", "j1", "backward", 3, 9, 10),
    ("nic0", "j1", "sync", 3, 10, 11),
    ("gpu0", "j2", "forward", 3, 10, 11), ("gpu0", "j2", "backward", 3, 11, 12),
    ("nic0", "j2", "sync", 3, 12, 13),
]


class TestCrossover:
    def test_golden_trace(self):
        trace = schedule_crossover(two_identical())
        assert spans_from_trace(trace) == GOLDEN_CROSSOVER
        assert trace.makespan == 13
        assert validate_trace(trace) == []

    def test_single_job_still_respects_dependency(self):
        # without an overlap partner: T * (comp + comm) exactly
        trace = schedule_crossover(plan(Policy.CROSSOVER, [("solo", 1, 1, 1, 2)]))
        assert trace.makespan == 2 * (2 + 1)
        assert spans_from_trace(trace) == [
            ("gpu0", "solo", "forward", 1, 0, 1), ("gpu0", "solo", "backward", 1, 1, 2),
            ("nic0", "solo", "sync", 1, 2, 3),
            ("gpu0", "solo", "forward", 2, 3, 4), ("gpu0", "solo", "backward", 2, 4, 5),
            ("nic0", "solo", "sync", 2, 5, 6),
        ]

    def test_zero_comm_packs_computes_back_to_back(self):
        trace = schedule_crossover(two_identical(comp=2, comm=0))
        assert trace.makespan == 3 * 2 * 2  # T * N * comp

    def test_zero_comm_matches_sequential_trace(self):
        cross = schedule_crossover(two_identical(comm=0))
        seq = schedule_sequential(two_identical(comm=0, policy=Policy.SEQUENTIAL))
        assert spans_from_trace(cross) == spans_from_trace(seq)

    def test_policy_mismatch(self):
        with pytest.raises(ValueError):
            schedule_crossover(two_identical(policy=Policy.SEQUENTIAL))

    def test_simulate_dispatches_on_policy(self):
        assert simulate(two_identical()).makespan == 13
        assert simulate(two_identical(policy=Policy.SEQUENTIAL)).makespan == 18


class TestSequential:
    def test_golden_makespan(self):
        trace = schedule_sequential(two_identical(policy=Policy.SEQUENTIAL))
        assert trace.makespan == 18  # T * N * (comp + comm)
        assert validate_trace(trace) == []

    def test_single_job_single_iteration(self):
        trace = schedule_sequential(plan(Policy.SEQUENTIAL, [("solo", 2, 3, 4, 1)]))
        assert trace.makespan == 2 + 3 + 4

    def test_gpu_idles_during_sync(self):
        trace = schedule_sequential(two_identical(policy=Policy.SEQUENTIAL))
        computes = sorted((s.start, s.end) for s in trace.spans if s.phase is not Phase.SYNC)
        syncs = sorted((s.start, s.end) for s in trace.spans if s.phase is Phase.SYNC)
        for start, end in syncs:
            assert all(c_end <= start or c_start >= end for c_start, c_end in computes)


class TestSteadyStatePeriod:
    def test_crossover_compute_bound(self):
        assert steady_state_period(two_identical(comp=2, comm=1)) == 4

    def test_crossover_network_bound(self):
        assert steady_state_period(two_identical(comp=1, comm=2)) == 4

    def test_sequential_sums(self):
        assert steady_state_period(two_identical(comp=2, comm=1,
                                                 policy=Policy.SEQUENTIAL)) == 6

    def test_heterogeneous_unsupported(self):
        hetero = plan(Policy.CROSSOVER, [("a", 1, 1, 1, 3), ("b", 2, 2, 1, 3)])
        with pytest.raises(ValueError, match="homogeneous"):
            steady_state_period(hetero)

    def test_matches_golden_compute_starts(self):
        trace = schedule_crossover(two_identical())
        starts = [s.start for s in trace.spans
                  if s.job_id == "j1" and s.phase is Phase.FORWARD]
        assert starts == [0, 4, 8]


class TestPredictedSpeedup:
    def test_hidden_regime_is_one_plus_ratio(self):
        # comm/comp = 0.15
        p = plan(Policy.CROSSOVER, [("a", 500_000, 500_000, 150_000, 3),
                                    ("b", 500_000, 500_000, 150_000, 3)])
        assert predicted_speedup(p) == Fraction(23, 20)

    def test_break_even_doubles(self):
        assert predicted_speedup(two_identical(comp=2, comm=2)) == 2

    def test_network_bound_decays(self):
        assert predicted_speedup(two_identical(comp=1, comm=2)) == Fraction(3, 2)


class TestBoundarySemantics:
    @pytest.mark.parametrize("specs", [
        [("a", 1, 2, 3, 4), ("b", 2, 1, 1, 4)],
        [("a", 1, 1, 5, 3), ("b", 1, 2, 0, 5), ("c", 0, 3, 2, 2)],
    ])
    def test_exactly_t_syncs_and_final_drain(self, specs):
        trace = schedule_crossover(plan(Policy.CROSSOVER, specs))
        for job_id, _, _, _, iterations in specs:
            syncs = [s for s in trace.spans
                     if s.job_id == job_id and s.phase is Phase.SYNC]
            assert len(syncs) == iterations
            last_compute_end = max(s.end for s in trace.spans
                                   if s.job_id == job_id and s.phase is not Phase.SYNC)
            drain = max(syncs, key=lambda s: s.iteration)
            assert drain.iteration == iterations
            assert drain.start >= last_compute_end

    def test_first_iteration_needs_no_sync(self):
        # rotation fill only: each first compute starts at the sum of the
        # previous jobs' compute times, never waiting on the NIC
        specs = [("a", 2, 3, 50, 2), ("b", 1, 4, 50, 2), ("c", 3, 3, 50, 2)]
        trace = schedule_crossover(plan(Policy.CROSSOVER, specs))
        expected_start = 0
        for job_id, fwd, bwd, _, _ in specs:
            first = min((s for s in trace.spans
                         if s.job_id == job_id and s.phase is Phase.FORWARD),
                        key=lambda s: s.iteration)
            assert first.start == expected_start
            expected_start += fwd + bwd


class TestHidingCondition:
    @pytest.mark.parametrize("n_jobs", [2, 3, 4])
    @pytest.mark.parametrize("ratio_tenths", range(0, 11))
    def test_sync_never_delays_compute(self, n_jobs, ratio_tenths):
        comp, iterations = 1_000_000, 50
        comm = ratio_tenths * comp // 10
        specs = [(f"j{i}", comp // 2, comp - comp // 2, comm, iterations)
                 for i in range(n_jobs)]
        trace = schedule_crossover(plan(Policy.CROSSOVER, specs))
        for idx in range(n_jobs):
            starts = sorted(s.start for s in trace.spans
                            if s.job_id == f"j{idx}" and s.phase is Phase.FORWARD)
            assert starts == [idx * comp + t * n_jobs * comp
                              for t in range(iterations)]

    def test_asymptotic_agreement_at_large_t(self):
        p = two_identical(comp=1_000, comm=700, iterations=1000)
        makespan = schedule_crossover(p).makespan
        period = steady_state_period(p)
        assert abs(makespan / (1000 * period) - 1) < 0.01


class TestWorkConservation:
    def test_compute_budget_fully_spent(self):
        specs = [("a", 3, 4, 5, 6), ("b", 2, 2, 9, 4)]
        trace = schedule_crossover(plan(Policy.CROSSOVER, specs))
        for job_id, fwd, bwd, _, iterations in specs:
            busy = sum(s.end - s.start for s in trace.spans
                       if s.job_id == job_id and s.phase is not Phase.SYNC)
            assert busy == iterations * (fwd + bwd)


job_spec_st = st.tuples(
    st.integers(min_value=0, max_value=12),   # forward
    st.integers(min_value=0, max_value=12),   # backward
    st.integers(min_value=0, max_value=15),   # comm (ns == payload bytes)
    st.integers(min_value=1, max_value=6),    # iterations
).filter(lambda s: s[0] + s[1] > 0)

plan_st = st.lists(job_spec_st, min_size=1, max_size=4)


def build_specs(raw):
    return [(f"j{i}", fwd, bwd, comm, iters)
            for i, (fwd, bwd, comm, iters) in enumerate(raw)]


@settings(max_examples=200, deadline=None)
@given(plan_st)
def test_engine_matches_brute_force_enumeration(raw):
    specs = build_specs(raw)
    cross = schedule_crossover(plan(Policy.CROSSOVER, specs))
    seq = schedule_sequential(plan(Policy.SEQUENTIAL, specs))
    brute_x_spans, brute_x_makespan = brute_crossover(specs)
    brute_s_spans, brute_s_makespan = brute_sequential(specs)
    assert sorted(spans_from_trace(cross)) == sorted(brute_x_spans)
    assert sorted(spans_from_trace(seq)) == sorted(brute_s_spans)
    assert cross.makespan == brute_x_makespan
    assert seq.makespan == brute_s_makespan


@settings(max_examples=200, deadline=None)
@given(plan_st)
def test_baseline_dominance(raw):
    specs = build_specs(raw)
    cross = schedule_crossover(plan(Policy.CROSSOVER, specs)).makespan
    seq = schedule_sequential(plan(Policy.SEQUENTIAL, specs)).makespan
    assert cross <= seq
    if len(specs) >= 2 and all(s[3] > 0 for s in specs):
        assert cross < seq


@settings(max_examples=200, deadline=None)
@given(plan_st)
def test_traces_are_always_legal(raw):
    specs = build_specs(raw)
    assert validate_trace(schedule_crossover(plan(Policy.CROSSOVER, specs))) == []
    assert validate_trace(schedule_sequential(plan(Policy.SEQUENTIAL, specs))) == []


@settings(max_examples=150, deadline=None)
@given(st.lists(job_spec_st, min_size=2, max_size=4))
def test_steady_cycle_lower_bound(raw):
    specs = build_specs(raw)
    cycle = crossover_cycle(specs)
    total_comp = sum(f + b for _, f, b, _, _ in specs)
    total_comm = sum(c for _, _, _, c, _ in specs)
    tightest = max(total_comp, total_comm,
                   max(f + b + c for _, f, b, c, _ in specs))
    assert cycle >= tightest


class TestUnequalBudgets:
    def test_rotation_skips_finished_jobs(self):
        specs = [("short", 1, 1, 1, 2), ("long", 1, 1, 1, 5)]
        trace = schedule_crossover(plan(Policy.CROSSOVER, specs))
        assert validate_trace(trace) == []
        for job_id, _, _, _, iterations in specs:
            syncs = [s for s in trace.spans
                     if s.job_id == job_id and s.phase is Phase.SYNC]
            assert len(syncs) == iterations
        # once the short job drains, the long one runs like a solo job
        brute_spans, brute_makespan = brute_crossover(specs)
        assert trace.makespan == brute_makespan

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            SchedulePlan(Policy.CROSSOVER, (), CLUSTER)
        with pytest.raises(ValueError, match="unique"):
            plan(Policy.CROSSOVER, [("dup", 1, 1, 1, 1), ("dup", 1, 1, 1, 1)])
