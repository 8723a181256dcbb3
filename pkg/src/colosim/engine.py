"""Deterministic discrete-event core: lanes, event queue, span traces.

A simulation owns exclusive resource lanes (one GPU compute lane, one worker
NIC lane for the representative worker) and a single event queue.  Tasks are
enqueued on a lane when their dependencies are already satisfied; a lane runs
one task at a time, FIFO.  Queueing is encoded by the lane's ``busy_until``
reservation: a task enqueued at time ``t`` starts at ``max(busy_until, t)``,
and ties between jobs enqueuing at the same instant resolve by job index
because the event loop processes same-time events in (kind, job index) order.

Everything is integer nanoseconds; a run is a pure function of its input, so
repeated runs produce byte-identical traces.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

from .errors import DeadlockError

__all__ = [
    "LaneKind",
    "Phase",
    "EventKind",
    "Lane",
    "Event",
    "Span",
    "Trace",
    "Simulation",
    "Driver",
    "validate_trace",
    "trace_to_json",
    "trace_to_chrome_json",
]


class LaneKind(Enum):
    COMPUTE = "compute"
    NETWORK = "network"


class Phase(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    SYNC = "sync"


class EventKind(Enum):
    # Enum values are the tie-break order for same-time events.
    COMPUTE_DONE = 0
    COMM_DONE = 1


_KIND_FOR_LANE = {LaneKind.COMPUTE: EventKind.COMPUTE_DONE,
                  LaneKind.NETWORK: EventKind.COMM_DONE}


@dataclass
class Lane:
    """An exclusive resource that executes at most one span at a time."""

    lane_id: str
    kind: LaneKind
    busy_until: int = 0


@dataclass(frozen=True)
class Event:
    time: int
    kind: EventKind
    job_id: str
    iteration: int


@dataclass(frozen=True)
class Span:
    lane_id: str
    job_id: str
    phase: Phase
    iteration: int
    start: int
    end: int


@dataclass(frozen=True)
class Trace:
    spans: tuple[Span, ...]
    makespan: int


class Driver(Protocol):
    """Policy hook driving a simulation: reacts to events, reports open work."""

    def on_event(self, sim: "Simulation", event: Event) -> None: ...

    def pending(self) -> list[tuple[str, int]]: ...


class Simulation:
    """One deterministic single-threaded simulation run."""

    def __init__(self, job_order: Sequence[str]):
        self._job_index = {job_id: i for i, job_id in enumerate(job_order)}
        if len(self._job_index) != len(job_order):
            raise ValueError("job ids must be unique")
        self._queue: list[tuple[int, int, int, int, Event]] = []
        self._seq = 0
        self._spans: list[Span] = []
        self._lanes: dict[str, Lane] = {}
        self._now = 0

    @property
    def now(self) -> int:
        return self._now

    def add_lane(self, lane_id: str, kind: LaneKind) -> Lane:
        if lane_id in self._lanes:
            raise ValueError(f"duplicate lane {lane_id!r}")
        lane = Lane(lane_id, kind)
        self._lanes[lane_id] = lane
        return lane

    def enqueue(self, lane: Lane, job_id: str, iteration: int,
                duration: int, phase: Phase) -> Event:
        """Enqueue a single-span task; returns its scheduled completion event."""
        return self.enqueue_task(lane, job_id, iteration, ((phase, duration),))

    def enqueue_task(self, lane: Lane, job_id: str, iteration: int,
                     segments: Sequence[tuple[Phase, int]]) -> Event:
        """Enqueue one task rendered as back-to-back spans (e.g. forward+backward).

        The task starts at max(lane.busy_until, now) and emits one completion
        event at its end, typed by the lane kind.
        """
        if not segments:
            raise ValueError("task must have at least one segment")
        start = max(lane.busy_until, self._now)
        cursor = start
        for phase, duration in segments:
            if duration < 0:
                raise ValueError("segment duration must be >= 0")
            self._spans.append(Span(lane.lane_id, job_id, phase, iteration,
                                    cursor, cursor + duration))
            cursor += duration
        lane.busy_until = cursor
        event = Event(cursor, _KIND_FOR_LANE[lane.kind], job_id, iteration)
        heapq.heappush(self._queue, (event.time, event.kind.value,
                                     self._job_index[job_id], self._seq, event))
        self._seq += 1
        return event

    def run(self, driver: Driver | None = None) -> Trace:
        """Drain the event queue in (time, kind, job index) order.

        Raises DeadlockError if the queue empties while the driver still
        reports pending work (a task waiting on an event that can never fire).
        """
        while self._queue:
            time, _, _, _, event = heapq.heappop(self._queue)
            assert time >= self._now, "event times must be non-decreasing"
            self._now = time
            if driver is not None:
                driver.on_event(self, event)
        if driver is not None:
            stuck = driver.pending()
            if stuck:
                job_id, iteration = stuck[0]
                raise DeadlockError(job_id, iteration,
                                    f"{len(stuck)} job(s) unfinished at quiescence")
        makespan = max((s.end for s in self._spans), default=0)
        return Trace(tuple(self._spans), makespan)


def validate_trace(trace: Trace) -> list[str]:
    """Check trace legality; returns violation messages (empty means legal).

    Checked: span sanity, per-lane non-overlap, per-job phase ordering
    forward_t < backward_t < sync_t < forward_{t+1}, a sync present for every
    non-final iteration, and makespan consistency.
    """
    violations: list[str] = []

    for s in trace.spans:
        if s.start < 0 or s.end < s.start:
            violations.append(
                f"span {s.lane_id}/{s.job_id}/{s.phase.value}/t{s.iteration}: "
                f"bad interval [{s.start}, {s.end}]")

    by_lane: dict[str, list[Span]] = {}
    for s in trace.spans:
        by_lane.setdefault(s.lane_id, []).append(s)
    for lane_id, spans in by_lane.items():
        ordered = sorted(spans, key=lambda s: (s.start, s.end))
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.start < prev.end:
                violations.append(
                    f"lane {lane_id}: {prev.job_id}/t{prev.iteration} "
                    f"[{prev.start},{prev.end}] overlaps {cur.job_id}/t{cur.iteration} "
                    f"[{cur.start},{cur.end}]")

    by_job: dict[str, dict[int, dict[Phase, Span]]] = {}
    for s in trace.spans:
        phases = by_job.setdefault(s.job_id, {}).setdefault(s.iteration, {})
        if s.phase in phases:
            violations.append(
                f"job {s.job_id}: duplicate {s.phase.value} span for iteration {s.iteration}")
        else:
            phases[s.phase] = s

    for job_id, iters in by_job.items():
        last_iter = max(iters)
        prev_sync: Span | None = None
        for t in sorted(iters):
            phases = iters[t]
            fwd = phases.get(Phase.FORWARD)
            bwd = phases.get(Phase.BACKWARD)
            syn = phases.get(Phase.SYNC)
            if fwd is None:
                violations.append(f"job {job_id}: missing forward span for iteration {t}")
            if bwd is None:
                violations.append(f"job {job_id}: missing backward span for iteration {t}")
            if syn is None and t < last_iter:
                violations.append(f"job {job_id}: missing sync span for iteration {t}")
            if fwd and bwd and bwd.start < fwd.end:
                violations.append(f"job {job_id}: backward precedes forward at iteration {t}")
            if bwd and syn and syn.start < bwd.end:
                violations.append(f"job {job_id}: sync starts before backward ends at iteration {t}")
            if prev_sync and fwd and fwd.start < prev_sync.end:
                violations.append(
                    f"job {job_id}: iteration {t} compute starts before "
                    f"iteration {prev_sync.iteration} sync completes")
            prev_sync = syn

    expected = max((s.end for s in trace.spans), default=0)
    if trace.makespan != expected:
        violations.append(f"makespan {trace.makespan} != max span end {expected}")

    return violations


def trace_to_json(trace: Trace) -> str:
    """Serialize the trace as a JSON array of span records."""
    records = [
        {
            "lane_id": s.lane_id,
            "job_id": s.job_id,
            "phase": s.phase.value,
            "iteration": s.iteration,
            "start_ns": s.start,
            "end_ns": s.end,
        }
        for s in trace.spans
    ]
    return json.dumps(records, indent=2) + "\n"


def trace_to_chrome_json(trace: Trace) -> str:
    """Render the trace in the Chrome trace-event JSON format.

    Complete ("X") events with microsecond timestamps, one viewer row (tid)
    per lane, loadable in chrome://tracing or Perfetto.
    """
    lane_ids = sorted({s.lane_id for s in trace.spans})
    tid = {lane_id: i for i, lane_id in enumerate(lane_ids)}
    events: list[dict] = [
        {
            "name": "thread_name",
            "ph": "M",
            "pid": 0,
            "tid": tid[lane_id],
            "args": {"name": lane_id},
        }
        for lane_id in lane_ids
    ]
    for s in trace.spans:
        events.append({
            "name": f"{s.job_id} {s.phase.value} t{s.iteration}",
            "ph": "X",
            "ts": s.start / 1000.0,
            "dur": (s.end - s.start) / 1000.0,
            "pid": 0,
            "tid": tid[s.lane_id],
            "args": {"job": s.job_id, "iteration": s.iteration},
        })
    return json.dumps({"traceEvents": events, "displayTimeUnit": "ms"}, indent=2) + "\n"
