"""Scheduling state as a resource-flow network, and the task-insertion
transition that drives the serial generation scheme.

A state tracks, independently for each duration type (min / max / mode), the
committed flow arcs, the open flows (units released by a scheduled task and
not yet consumed), and each scheduled task's start date.  Inserting a task
claims the earliest open units of every resource it consumes and starts the
task once its precedence predecessors and all claimed units are available.

States are values: transitions return a new state and never mutate ledgers
in place, so distinct episodes can share common structure freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .instance import Instance
from .uncertainty import DurationTriple, durations_of

__all__ = [
    "DURATION_TYPES",
    "FlowArc",
    "FlowState",
    "ResourceLedger",
    "eligible_actions",
    "initial_state",
    "insert_task",
    "makespan",
    "render_state",
    "replay_with_durations",
    "single_type_state",
]

# canonical duration-type order, also the feature/indicator channel order
DURATION_TYPES = ("min", "max", "mod")


@dataclass(frozen=True)
class FlowArc:
    """``units`` of one resource handed from ``src`` to ``dst``."""

    units: int
    src: int
    dst: int


@dataclass(frozen=True)
class ResourceLedger:
    """Flow bookkeeping of one resource under one duration type.

    ``open`` maps a holder task to the units it has released and nobody has
    claimed yet; at most one entry per task.  Treated as immutable: the
    transition builds fresh ledgers instead of mutating.
    """

    flows: tuple[FlowArc, ...]
    open: dict[int, int]

    def open_units(self) -> int:
        return sum(self.open.values())


@dataclass
class FlowState:
    """Partial schedule: shared scheduled set, per-type start dates and
    ledgers, and the fixed per-type durations of the episode."""

    n_tasks: int
    scheduled: set[int]
    start: dict[str, dict[int, int]]
    ledgers: dict[str, list[ResourceLedger]]
    durations: dict[str, tuple[int, ...]]
    step: int = 0

    @property
    def dtypes(self) -> tuple[str, ...]:
        return tuple(self.durations)

    def is_terminal(self) -> bool:
        return len(self.scheduled) == self.n_tasks


def _blank_state(instance: Instance, durations: dict[str, tuple[int, ...]]) -> FlowState:
    start = {d: {instance.source: 0} for d in durations}
    ledgers = {
        d: [ResourceLedger(flows=(), open={instance.source: r.capacity}) for r in instance.resources]
        for d in durations
    }
    return FlowState(
        n_tasks=instance.n_tasks,
        scheduled={instance.source},
        start=start,
        ledgers=ledgers,
        durations=durations,
    )


def initial_state(instance: Instance, triples: Mapping[int, DurationTriple]) -> FlowState:
    """Source scheduled at 0; every resource's whole capacity sits as one
    open flow of the source, in all three duration types."""
    durations = {d: durations_of(triples, d) for d in DURATION_TYPES}
    return _blank_state(instance, durations)


def single_type_state(instance: Instance, realized: Sequence[int], label: str = "real") -> FlowState:
    """State with a single duration type (scenario replay, list execution)."""
    if len(realized) != instance.n_tasks:
        raise ValueError(f"expected {instance.n_tasks} durations, got {len(realized)}")
    return _blank_state(instance, {label: tuple(int(x) for x in realized)})


def eligible_actions(state: FlowState, instance: Instance) -> set[int]:
    """Unscheduled tasks whose precedence predecessors are all scheduled."""
    if state.is_terminal():
        raise ValueError("terminal state has no actions")
    sched = state.scheduled
    return {
        t.index
        for t in instance.tasks
        if t.index not in sched and instance.predecessors(t.index) <= sched
    }


def _consumption(instance: Instance, task: int, resource: int) -> int:
    # the sink closes the network: it drains every open flow, leaving the
    # terminal ledger with the whole capacity parked on the sink
    if task == instance.sink:
        return instance.resources[resource].capacity
    return instance.tasks[task].consumption[resource]


def insert_task(state: FlowState, instance: Instance, task: int) -> FlowState:
    """Insert an eligible task, updating each duration type independently.

    Per consumed resource the open flows are ordered by availability date
    (holder start + holder duration, ties by ascending task index) and the
    earliest are claimed until the consumption is covered; an over-claimed
    last flow is split and its remainder returned.  The task starts at the
    latest end among its precedence and flow predecessors.
    """
    if task in state.scheduled or not instance.predecessors(task) <= state.scheduled:
        raise ValueError(f"task {task} is not eligible at step {state.step}")

    preds = instance.predecessors(task)
    new_start: dict[str, dict[int, int]] = {}
    new_ledgers: dict[str, list[ResourceLedger]] = {}
    for d, durs in state.durations.items():
        starts = dict(state.start[d])
        prev = set(preds)
        ledgers: list[ResourceLedger] = []
        for r, ledger in enumerate(state.ledgers[d]):
            need = _consumption(instance, task, r)
            if need == 0:
                ledgers.append(ledger)
                continue
            ordered = sorted(ledger.open.items(), key=lambda kv: (starts[kv[0]] + durs[kv[0]], kv[0]))
            claimed: list[tuple[int, int]] = []
            total = 0
            for holder, units in ordered:
                if total >= need:
                    break
                claimed.append((holder, units))
                total += units
            # open units always sum to the capacity, which bounds consumption
            assert total >= need, "open flows cannot cover a feasible consumption"
            open_ = dict(ledger.open)
            for holder, _ in claimed:
                del open_[holder]
            if total > need:
                holder, units = claimed[-1]
                remainder = total - need
                claimed[-1] = (holder, units - remainder)
                open_[holder] = remainder
            arcs = list(ledger.flows)
            for holder, units in claimed:
                arcs.append(FlowArc(units=units, src=holder, dst=task))
                prev.add(holder)
            open_[task] = need
            ledgers.append(ResourceLedger(flows=tuple(arcs), open=open_))
        starts[task] = max(starts[p] + durs[p] for p in prev)
        new_start[d] = starts
        new_ledgers[d] = ledgers

    return FlowState(
        n_tasks=state.n_tasks,
        scheduled=state.scheduled | {task},
        start=new_start,
        ledgers=new_ledgers,
        durations=state.durations,
        step=state.step + 1,
    )


def makespan(state: FlowState, dtype: str) -> int:
    """Sink start date of a terminal state under one duration type."""
    if not state.is_terminal():
        raise ValueError("makespan is only defined for terminal states")
    return state.start[dtype][state.n_tasks - 1]


def replay_with_durations(
    instance: Instance, actions: Sequence[int], realized: Sequence[int]
) -> dict[int, int]:
    """Run the insertion transition once with the given realized durations.

    ``actions`` must visit every task in an eligibility-respecting order
    (a leading source entry is tolerated: the source is pre-scheduled).
    Returns the full start-date map; the sink entry is the makespan.
    """
    seq = list(actions)
    if seq and seq[0] == instance.source:
        seq = seq[1:]
    state = single_type_state(instance, realized)
    for t in seq:
        state = insert_task(state, instance, t)
    if not state.is_terminal():
        raise ValueError(f"action sequence covers {len(seq) + 1} of {instance.n_tasks} tasks")
    return dict(state.start["real"])


def render_state(state: FlowState, instance: Instance) -> str:
    """Deterministic text dump of a state (debugging, golden tests)."""
    lines = [f"step {state.step}", "scheduled " + " ".join(map(str, sorted(state.scheduled)))]
    for d in state.dtypes:
        lines.append(f"[{d}]")
        starts = state.start[d]
        lines.append("  start " + " ".join(f"{t}:{starts[t]}" for t in sorted(starts)))
        for r, ledger in enumerate(state.ledgers[d]):
            flows = " ".join(
                f"{a.src}->{a.dst}:{a.units}" for a in sorted(ledger.flows, key=lambda a: (a.src, a.dst))
            )
            open_ = " ".join(f"{t}:{u}" for t, u in sorted(ledger.open.items()))
            lines.append(f"  r{r} flows {flows}".rstrip())
            lines.append(f"  r{r} open {open_}".rstrip())
    return "\n".join(lines) + "\n"
