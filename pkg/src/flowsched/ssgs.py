"""Serial schedule generation from priority lists, classic dispatch rules,
an independent feasibility checker, and the terminal reward."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from . import flow
from .instance import Instance
from .uncertainty import DurationTriple

__all__ = [
    "Rule",
    "Schedule",
    "Violation",
    "check_schedule",
    "execute_list",
    "read_priority_list",
    "rule_rollout",
    "rule_value",
    "terminal_reward",
    "write_priority_list",
]


class Rule(str, Enum):
    """Static priority dispatch rules."""

    SPT = "spt"  # shortest mode duration first
    LPT = "lpt"  # longest mode duration first
    MIS = "mis"  # most direct successors first
    GRPW = "grpw"  # greatest mode duration + direct successors' mode durations

    @property
    def maximizing(self) -> bool:
        return self is not Rule.SPT


@dataclass(frozen=True)
class Schedule:
    """Start date per task; the makespan is the sink's start date."""

    start: dict[int, int]
    makespan: int


@dataclass(frozen=True)
class Violation:
    kind: str  # "precedence" | "capacity"
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def execute_list(instance: Instance, order: Sequence[int], durations: Sequence[int]) -> Schedule:
    """Insert tasks strictly in list order under the given durations.

    ``order`` must be a permutation of all task ids in which every task
    appears after all of its predecessors (so each prefix keeps the next
    task eligible).
    """
    if sorted(order) != list(range(instance.n_tasks)):
        raise ValueError("priority list is not a permutation of all task ids")
    position = {t: i for i, t in enumerate(order)}
    for a, b in instance.arcs:
        if position[a] > position[b]:
            raise ValueError(f"priority list violates precedence ({a} before {b})")
    start = flow.replay_with_durations(instance, order, durations)
    return Schedule(start=start, makespan=start[instance.sink])


def rule_value(rule: Rule, instance: Instance, triples: Mapping[int, DurationTriple], task: int) -> int:
    """Static ordering key of one task under a dispatch rule."""
    mode = lambda t: triples[t].mode
    if rule in (Rule.SPT, Rule.LPT):
        return mode(task)
    if rule is Rule.MIS:
        return len(instance.successors(task))
    if rule is Rule.GRPW:
        return mode(task) + sum(mode(s) for s in instance.successors(task))
    raise ValueError(f"unknown rule {rule!r}")


def rule_rollout(
    rule: Rule,
    instance: Instance,
    triples: Mapping[int, DurationTriple],
    durations: Sequence[int],
) -> tuple[list[int], Schedule]:
    """Greedy rollout of a dispatch rule; returns the induced priority list
    and the schedule it produces under ``durations``.

    At each step the eligible task optimizing the rule key is inserted
    (minimum for SPT, maximum otherwise), ties broken by ascending task
    index.  Keys are static, so the induced list does not depend on the
    durations used for the schedule.
    """
    keys = {t.index: rule_value(rule, instance, triples, t.index) for t in instance.tasks}
    sign = -1 if rule.maximizing else 1
    state = flow.single_type_state(instance, durations)
    order = [instance.source]
    while not state.is_terminal():
        candidates = flow.eligible_actions(state, instance)
        pick = min(candidates, key=lambda t: (sign * keys[t], t))
        state = flow.insert_task(state, instance, pick)
        order.append(pick)
    start = dict(state.start["real"])
    return order, Schedule(start=start, makespan=start[instance.sink])


def check_schedule(
    instance: Instance, schedule: Schedule | Mapping[int, int], durations: Sequence[int]
) -> list[Violation]:
    """Independent feasibility verifier (no flow logic).

    Checks every precedence arc and sweeps each resource's load profile
    over time against its capacity; reports every violation found.
    """
    start = schedule.start if isinstance(schedule, Schedule) else dict(schedule)
    missing = [t.index for t in instance.tasks if t.index not in start]
    if missing:
        raise ValueError(f"schedule misses tasks {missing}")

    violations: list[Violation] = []
    for t in instance.tasks:
        if start[t.index] < 0:
            violations.append(Violation("precedence", f"task {t.index} starts at negative date {start[t.index]}"))
    for a, b in instance.arcs:
        if start[a] + durations[a] > start[b]:
            violations.append(
                Violation(
                    "precedence",
                    f"task {a} ends at {start[a] + durations[a]} after successor {b} starts at {start[b]}",
                )
            )

    for r in instance.resources:
        events: dict[int, int] = {}
        for t in instance.tasks:
            c = t.consumption[r.index]
            if c == 0 or durations[t.index] == 0:
                continue
            events[start[t.index]] = events.get(start[t.index], 0) + c
            end = start[t.index] + durations[t.index]
            events[end] = events.get(end, 0) - c
        load = 0
        times = sorted(events)
        for i, time in enumerate(times):
            load += events[time]
            if load > r.capacity:
                until = times[i + 1] if i + 1 < len(times) else time
                violations.append(
                    Violation(
                        "capacity",
                        f"resource {r.index} load {load} exceeds capacity {r.capacity} on [{time}, {until})",
                    )
                )
    return violations


def terminal_reward(makespan: int, instance: Instance) -> float:
    """Episode reward: the negated makespan divided by the task count
    (source and sink included), keeping magnitudes near [-2, -1]."""
    if makespan < 0:
        raise ValueError(f"negative makespan {makespan}")
    return -makespan / instance.n_tasks


def read_priority_list(path: str | Path) -> list[int]:
    """One task id per line."""
    return [int(line) for line in Path(path).read_text().split()]


def write_priority_list(order: Sequence[int], path: str | Path) -> None:
    Path(path).write_text("\n".join(str(t) for t in order) + "\n")
