"""Synthetic instance generation and PSPLib-format emission.

Used by the test harness, the benchmark scripts, and to produce small
training sets for learning experiments.  Everything is seeded.
"""

from __future__ import annotations

import random
from typing import Sequence

from . import flow
from .instance import Instance, make_instance

__all__ = ["chain_instance", "random_eligible_order", "random_instance", "to_psplib"]


def random_instance(
    seed: int,
    n_tasks: int,
    n_resources: int,
    *,
    max_duration: int = 9,
    max_capacity: int = 6,
    density: float = 0.35,
    name: str = "",
) -> Instance:
    """Random DAG instance with ``n_tasks`` total tasks (source and sink
    included); every interior task consumes at least one resource unit."""
    if n_tasks < 2:
        raise ValueError("an instance needs at least source and sink")
    rng = random.Random(seed)
    source, sink = 0, n_tasks - 1
    interior = range(1, n_tasks - 1)

    arcs: set[tuple[int, int]] = set()
    for i in interior:
        for j in interior:
            if i < j and rng.random() < density:
                arcs.add((i, j))
    for i in interior:
        if not any(a == i for a, _ in arcs) and not any(b == i for _, b in arcs):
            pass  # handled below like every other dangling case
    for i in interior:
        if not any(b == i for (_, b) in arcs):
            arcs.add((source, i))
        if not any(a == i for (a, _) in arcs):
            arcs.add((i, sink))
    if n_tasks == 2:
        arcs.add((source, sink))

    capacities = [rng.randint(1, max_capacity) for _ in range(n_resources)]
    durations = [0] * n_tasks
    consumptions = [[0] * n_resources for _ in range(n_tasks)]
    for i in interior:
        durations[i] = rng.randint(1, max_duration)
        cons = [rng.randint(0, capacities[r]) for r in range(n_resources)]
        if all(c == 0 for c in cons):
            r = rng.randrange(n_resources)
            cons[r] = rng.randint(1, capacities[r])
        consumptions[i] = cons
    return make_instance(durations, consumptions, sorted(arcs), capacities, name=name)


def chain_instance(durations: Sequence[int], *, consumption: int = 1, capacity: int = 1, name: str = "") -> Instance:
    """Pure chain: source, the given interior durations in order, sink."""
    if consumption > capacity:
        raise ValueError("consumption exceeds capacity")
    durs = [0, *durations, 0]
    n = len(durs)
    cons = [[0]] + [[consumption] for _ in durations] + [[0]]
    arcs = [(i, i + 1) for i in range(n - 1)]
    return make_instance(durs, cons, arcs, [capacity], name=name)


def random_eligible_order(instance: Instance, seed: int) -> list[int]:
    """Random eligibility-respecting full insertion order (source first)."""
    rng = random.Random(seed)
    scheduled = {instance.source}
    order = [instance.source]
    remaining = set(range(instance.n_tasks)) - scheduled
    while remaining:
        eligible = sorted(t for t in remaining if instance.predecessors(t) <= scheduled)
        pick = rng.choice(eligible)
        order.append(pick)
        scheduled.add(pick)
        remaining.remove(pick)
    return order


def to_psplib(instance: Instance) -> str:
    """Emit a single-mode PSPLib document equivalent to the instance."""
    n = instance.n_tasks
    horizon = sum(t.duration for t in instance.tasks) or 1
    lines = [
        "*" * 72,
        "file with basedata            : none",
        "initial value random generator: 0",
        "*" * 72,
        "projects                      :  1",
        f"jobs (incl. supersource/sink ):  {n}",
        f"horizon                       :  {horizon}",
        "RESOURCES",
        f"  - renewable                 :  {instance.n_resources}   R",
        "  - nonrenewable              :  0   N",
        "  - doubly constrained        :  0   D",
        "*" * 72,
        "PROJECT INFORMATION:",
        "pronr.  #jobs rel.date duedate tardcost  MPM-Time",
        f"    1     {n - 2}      0       {horizon}       0       {horizon}",
        "*" * 72,
        "PRECEDENCE RELATIONS:",
        "jobnr.    #modes  #successors   successors",
    ]
    for t in instance.tasks:
        succ = sorted(s + 1 for s in instance.successors(t.index))
        succ_txt = ("   " + "  ".join(f"{s:3d}" for s in succ)) if succ else ""
        lines.append(f"{t.index + 1:4d}        1         {len(succ):2d}     {succ_txt}")
    lines += [
        "*" * 72,
        "REQUESTS/DURATIONS:",
        "jobnr. mode duration  " + "  ".join(f"R {r + 1}" for r in range(instance.n_resources)),
        "-" * 72,
    ]
    for t in instance.tasks:
        req = "  ".join(f"{c:3d}" for c in t.consumption)
        lines.append(f"{t.index + 1:4d}     1    {t.duration:3d}    {req}")
    lines += [
        "*" * 72,
        "RESOURCEAVAILABILITIES:",
        "  " + "  ".join(f"R {r + 1}" for r in range(instance.n_resources)),
        "  " + "  ".join(f"{r.capacity:3d}" for r in instance.resources),
        "*" * 72,
        "",
    ]
    return "\n".join(lines)
