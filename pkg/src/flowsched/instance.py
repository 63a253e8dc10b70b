"""Project model: tasks, renewable resources, precedence DAG, validation,
and ingestion of single-mode PSPLib ``.sm`` files.

Task ids are dense 0-based indices in file order; index 0 is the project
source, the last index is the sink.  Instances are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

__all__ = [
    "Diagnostic",
    "Instance",
    "ParseError",
    "Resource",
    "Task",
    "canonical_text",
    "errors_of",
    "parse_canonical",
    "parse_psplib",
    "topological_order",
    "validate",
]


class ParseError(ValueError):
    """Malformed instance file.  ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Resource:
    """Renewable resource with a fixed per-instant capacity."""

    index: int
    capacity: int


@dataclass(frozen=True)
class Task:
    """A project activity holding ``consumption[r]`` units of each resource
    for its whole duration."""

    index: int
    duration: int
    consumption: tuple[int, ...]
    name: str = ""

    def label(self) -> str:
        return self.name or str(self.index)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


def errors_of(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    """The error-severity subset of a diagnostics list."""
    return [d for d in diagnostics if d.severity == "error"]


@dataclass(frozen=True)
class Instance:
    """Immutable project instance.  ``tasks[0]`` is the source and
    ``tasks[-1]`` the sink; both carry zero duration and zero stored
    consumption (the scheduling engine closes flows at the sink itself)."""

    tasks: tuple[Task, ...]
    arcs: tuple[tuple[int, int], ...]
    resources: tuple[Resource, ...]
    name: str = ""

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return len(self.tasks) - 1

    @cached_property
    def _succ(self) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in self.tasks]
        for a, b in self.arcs:
            out[a].add(b)
        return tuple(frozenset(s) for s in out)

    @cached_property
    def _pred(self) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in self.tasks]
        for a, b in self.arcs:
            out[b].add(a)
        return tuple(frozenset(s) for s in out)

    def successors(self, task: int) -> frozenset[int]:
        """Direct successors of ``task`` in the precedence relation."""
        self._check_id(task)
        return self._succ[task]

    def predecessors(self, task: int) -> frozenset[int]:
        """Direct predecessors of ``task`` in the precedence relation."""
        self._check_id(task)
        return self._pred[task]

    def _check_id(self, task: int) -> None:
        if not 0 <= task < len(self.tasks):
            raise ValueError(f"unknown task id {task}")


def _make_instance(
    durations: Sequence[int],
    consumptions: Sequence[Sequence[int]],
    arcs: Iterable[tuple[int, int]],
    capacities: Sequence[int],
    name: str = "",
    task_names: Sequence[str] | None = None,
) -> Instance:
    tasks = tuple(
        Task(
            index=i,
            duration=int(durations[i]),
            consumption=tuple(int(c) for c in consumptions[i]),
            name=(task_names[i] if task_names else str(i + 1)),
        )
        for i in range(len(durations))
    )
    resources = tuple(Resource(r, int(c)) for r, c in enumerate(capacities))
    return Instance(
        tasks=tasks,
        arcs=tuple(sorted(set((int(a), int(b)) for a, b in arcs))),
        resources=resources,
        name=name,
    )


def make_instance(
    durations: Sequence[int],
    consumptions: Sequence[Sequence[int]],
    arcs: Iterable[tuple[int, int]],
    capacities: Sequence[int],
    name: str = "",
    task_names: Sequence[str] | None = None,
) -> Instance:
    """Build an instance from plain sequences (tests and generators)."""
    return _make_instance(durations, consumptions, arcs, capacities, name, task_names)


# ---------------------------------------------------------------------------
# validation


def topological_order(instance: Instance) -> list[int]:
    """Lexicographically smallest topological order; raises on a cycle.

    For a valid instance the source comes first and the sink last.
    """
    order, leftover = _toposort(instance)
    if leftover:
        raise ValueError(f"precedence relation has a cycle involving tasks {sorted(leftover)}")
    return order


def _toposort(instance: Instance) -> tuple[list[int], set[int]]:
    indeg = [0] * instance.n_tasks
    for _, b in instance.arcs:
        indeg[b] += 1
    heap = [i for i, d in enumerate(indeg) if d == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        i = heapq.heappop(heap)
        order.append(i)
        for j in instance._succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, j)
    leftover = {i for i, d in enumerate(indeg) if d > 0}
    return order, leftover


def validate(instance: Instance) -> list[Diagnostic]:
    """Check every instance invariant; one diagnostic per violation.

    The returned list is empty iff the instance is fully well formed.  An
    interior task that consumes nothing everywhere yields a warning, not an
    error; ``errors_of`` filters the blocking subset.
    """
    diags: list[Diagnostic] = []
    err = lambda m: diags.append(Diagnostic("error", m))
    warn = lambda m: diags.append(Diagnostic("warning", m))

    n = instance.n_tasks
    m = instance.n_resources
    if n < 2:
        err("instance needs at least a source and a sink task")
        return diags

    for r in instance.resources:
        if r.capacity < 1:
            err(f"resource {r.index} has non-positive capacity {r.capacity}")

    for t in instance.tasks:
        if t.duration < 0:
            err(f"task {t.index} has negative duration {t.duration}")
        if len(t.consumption) != m:
            err(f"task {t.index} has {len(t.consumption)} consumption entries, expected {m}")
            continue
        for r, c in enumerate(t.consumption):
            if c < 0:
                err(f"task {t.index} has negative consumption {c} on resource {r}")
            elif c > instance.resources[r].capacity:
                err(
                    f"task {t.index} requests {c} units of resource {r}"
                    f" exceeding capacity {instance.resources[r].capacity}"
                )

    for endpoint in (instance.source, instance.sink):
        if instance.tasks[endpoint].duration != 0:
            err(f"task {endpoint} is the project {'source' if endpoint == 0 else 'sink'} and must have duration 0")

    bad_arcs = False
    for a, b in instance.arcs:
        if not (0 <= a < n and 0 <= b < n):
            err(f"arc ({a}, {b}) references an unknown task")
            bad_arcs = True
        elif a == b:
            err(f"arc ({a}, {b}) is a self loop")
            bad_arcs = True
    if bad_arcs:
        return diags

    if instance.predecessors(instance.source):
        err("source task has predecessors")
    if instance.successors(instance.sink):
        err("sink task has successors")

    _, leftover = _toposort(instance)
    if leftover:
        err(f"precedence relation has a cycle involving tasks {sorted(leftover)}")
        return diags

    reached = _reachable(instance, instance.source, forward=True)
    for i in range(n):
        if i != instance.source and i not in reached:
            err(f"task {i} is not (transitively) preceded by the source")
    reaching = _reachable(instance, instance.sink, forward=False)
    for i in range(n):
        if i != instance.sink and i not in reaching:
            err(f"task {i} does not (transitively) precede the sink")

    for t in instance.tasks:
        if t.index in (instance.source, instance.sink):
            continue
        if len(t.consumption) == m and all(c == 0 for c in t.consumption):
            warn(f"task {t.index} consumes no resource at all")

    return diags


def _reachable(instance: Instance, start: int, forward: bool) -> set[int]:
    adj = instance._succ if forward else instance._pred
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


# ---------------------------------------------------------------------------
# PSPLib single-mode (.sm) ingestion

_INT_RE = re.compile(r"-?\d+")


def _ints(line: str) -> list[int]:
    return [int(x) for x in _INT_RE.findall(line)]


def parse_psplib(text: str, name: str = "") -> Instance:
    """Parse a single-mode PSPLib ``.sm`` document into a validated Instance.

    Job 1 maps to the source (id 0), the last job to the sink.  Precedence
    arcs are read from the successor lists.  Structural problems raise
    :class:`ParseError` with the offending 1-based line number.
    """
    lines = text.splitlines()

    def find_line(predicate, start=0, what="section"):
        for idx in range(start, len(lines)):
            if predicate(lines[idx]):
                return idx
        raise ParseError(f"missing {what}", line=len(lines))

    jobs_idx = find_line(lambda s: s.strip().lower().startswith("jobs"), 0, "'jobs' count header")
    jobs_ints = _ints(lines[jobs_idx])
    if not jobs_ints:
        raise ParseError("malformed 'jobs' header", line=jobs_idx + 1)
    n_jobs = jobs_ints[-1]
    if n_jobs < 2:
        raise ParseError(f"job count {n_jobs} is too small", line=jobs_idx + 1)

    renew_idx = find_line(
        lambda s: s.strip().lstrip("-").strip().lower().startswith("renewable"),
        jobs_idx,
        "'renewable' resource count",
    )
    renew_ints = _ints(lines[renew_idx])
    if not renew_ints:
        raise ParseError("malformed renewable resource header", line=renew_idx + 1)
    n_resources = renew_ints[0]
    for kw in ("nonrenewable", "doubly"):
        try:
            idx = find_line(
                lambda s, kw=kw: kw in s.strip().lstrip("-").strip().lower(), renew_idx, kw
            )
        except ParseError:
            continue
        counts = _ints(lines[idx])
        if counts and counts[0] != 0:
            raise ParseError(f"only renewable resources are supported ({kw} count is {counts[0]})", line=idx + 1)

    prec_idx = find_line(
        lambda s: s.strip().upper().startswith("PRECEDENCE RELATIONS"), jobs_idx, "'PRECEDENCE RELATIONS' section"
    )
    arcs: list[tuple[int, int]] = []
    seen_jobs = 0
    row = prec_idx + 2  # skip column header line
    while row < len(lines) and not lines[row].startswith("****"):
        vals = _ints(lines[row])
        if not vals:
            row += 1
            continue
        if len(vals) < 3:
            raise ParseError("malformed precedence row", line=row + 1)
        jobnr, n_modes, n_succ, *succ = vals
        if n_modes != 1:
            raise ParseError(f"job {jobnr} has {n_modes} modes; only single-mode files are supported", line=row + 1)
        if len(succ) != n_succ:
            raise ParseError(
                f"job {jobnr} announces {n_succ} successors but lists {len(succ)}", line=row + 1
            )
        if not 1 <= jobnr <= n_jobs:
            raise ParseError(f"job number {jobnr} out of range 1..{n_jobs}", line=row + 1)
        for s in succ:
            if not 1 <= s <= n_jobs:
                raise ParseError(f"successor {s} of job {jobnr} out of range", line=row + 1)
            arcs.append((jobnr - 1, s - 1))
        seen_jobs += 1
        row += 1
    if seen_jobs != n_jobs:
        raise ParseError(
            f"precedence section lists {seen_jobs} jobs, header announces {n_jobs}", line=prec_idx + 1
        )

    req_idx = find_line(
        lambda s: s.strip().upper().startswith("REQUESTS/DURATIONS"), prec_idx, "'REQUESTS/DURATIONS' section"
    )
    durations = [None] * n_jobs
    consumptions: list[tuple[int, ...] | None] = [None] * n_jobs
    request_line: dict[int, int] = {}
    row = req_idx + 2  # skip column header line
    while row < len(lines) and not lines[row].startswith("****"):
        stripped = lines[row].strip()
        if not stripped or set(stripped) <= {"-"}:
            row += 1
            continue
        vals = _ints(lines[row])
        if len(vals) != 3 + n_resources:
            raise ParseError(
                f"request row has {len(vals)} fields, expected {3 + n_resources}", line=row + 1
            )
        jobnr, _mode, duration, *req = vals
        if not 1 <= jobnr <= n_jobs:
            raise ParseError(f"job number {jobnr} out of range 1..{n_jobs}", line=row + 1)
        if duration < 0:
            raise ParseError(f"job {jobnr} has negative duration {duration}", line=row + 1)
        for r, c in enumerate(req):
            if c < 0:
                raise ParseError(f"job {jobnr} has negative request {c} on resource {r + 1}", line=row + 1)
        durations[jobnr - 1] = duration
        consumptions[jobnr - 1] = tuple(req)
        request_line[jobnr - 1] = row + 1
        row += 1
    missing = [i + 1 for i, d in enumerate(durations) if d is None]
    if missing:
        raise ParseError(f"requests section is missing jobs {missing}", line=req_idx + 1)

    avail_idx = find_line(
        lambda s: s.strip().upper().startswith("RESOURCEAVAILABILITIES"), req_idx, "'RESOURCEAVAILABILITIES' section"
    )
    capacities: list[int] = []
    row = avail_idx + 1
    while row < len(lines) and not lines[row].startswith("****"):
        vals = _ints(lines[row])
        if vals:
            capacities = vals
            cap_row = row
            break
        row += 1
    else:
        raise ParseError("missing capacities row", line=avail_idx + 1)
    # the first numeric row may still be the column header when resource
    # names carry digits ("R 1  R 2"); in that case it enumerates 1..m
    if capacities == list(range(1, n_resources + 1)):
        row += 1
        while row < len(lines) and not lines[row].startswith("****"):
            vals = _ints(lines[row])
            if vals:
                capacities = vals
                cap_row = row
                break
            row += 1
    if len(capacities) != n_resources:
        raise ParseError(
            f"capacities row lists {len(capacities)} values, expected {n_resources}", line=cap_row + 1
        )

    instance = _make_instance(durations, consumptions, arcs, capacities, name=name)

    for t in instance.tasks:
        for r, c in enumerate(t.consumption):
            if c > instance.resources[r].capacity:
                raise ParseError(
                    f"job {t.index + 1} requests {c} units of resource {r + 1}"
                    f" exceeding capacity {instance.resources[r].capacity}",
                    line=request_line.get(t.index),
                )
    _, leftover = _toposort(instance)
    if leftover:
        raise ParseError(
            f"cyclic precedence involving jobs {[i + 1 for i in sorted(leftover)]}", line=prec_idx + 1
        )
    bad = errors_of(validate(instance))
    if bad:
        raise ParseError("; ".join(d.message for d in bad))
    return instance


# ---------------------------------------------------------------------------
# canonical line-oriented form (diffable fixtures, golden tests)


def canonical_text(instance: Instance) -> str:
    """Deterministic line-oriented dump of an instance."""
    out = [f"instance {instance.name or '-'}"]
    out.append(f"tasks {instance.n_tasks}")
    out.append(f"resources {instance.n_resources}")
    for r in instance.resources:
        out.append(f"resource {r.index} {r.capacity}")
    for t in instance.tasks:
        cons = " ".join(str(c) for c in t.consumption)
        out.append(f"task {t.index} {t.duration} {cons}".rstrip())
    out.append(f"arcs {len(instance.arcs)}")
    for a, b in instance.arcs:
        out.append(f"arc {a} {b}")
    return "\n".join(out) + "\n"


def parse_canonical(text: str) -> Instance:
    """Inverse of :func:`canonical_text`."""
    durations: list[int] = []
    consumptions: list[list[int]] = []
    capacities: list[int] = []
    arcs: list[tuple[int, int]] = []
    name = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = raw.split()
        if not fields:
            continue
        kind = fields[0]
        if kind == "instance":
            name = "" if fields[1] == "-" else fields[1]
        elif kind == "resource":
            capacities.append(int(fields[2]))
        elif kind == "task":
            durations.append(int(fields[2]))
            consumptions.append([int(c) for c in fields[3:]])
        elif kind == "arc":
            arcs.append((int(fields[1]), int(fields[2])))
        elif kind in ("tasks", "resources", "arcs"):
            continue
        else:
            raise ParseError(f"unknown record {kind!r}", line=lineno)
    return _make_instance(durations, consumptions, arcs, capacities, name=name)
