"""Rewired heterogeneous observation graph over a scheduling state.

The observation adds reverse edges for precedence and flow arcs, a node per
resource wired to unscheduled consumers, a virtual pool node receiving an
edge from every task and resource node, and one typed self loop per node.
Edges touching fully drained ("past") tasks are dropped.  The action mask
marks exactly the eligible tasks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from . import flow
from .instance import Instance

__all__ = [
    "EDGE_ATTR_CHANNELS",
    "EdgeType",
    "NODE_FEATURE_CHANNELS",
    "NodeKind",
    "ObsEdge",
    "ObsGraph",
    "ObsNode",
    "build_observation",
    "serialize",
]


class NodeKind(str, Enum):
    TASK = "task"
    RESOURCE = "resource"
    POOL = "pool"


class EdgeType(str, Enum):
    PRECEDENCE = "precedence"
    REVERSE_PRECEDENCE = "reverse-precedence"
    FLOW = "flow"
    REVERSE_FLOW = "reverse-flow"
    TASK_TO_RESOURCE = "task-resource"
    RESOURCE_TO_TASK = "resource-task"
    TASK_TO_POOL = "task-pool"
    RESOURCE_TO_POOL = "resource-pool"
    TASK_SELF = "task-self-loop"
    RESOURCE_SELF = "resource-self-loop"
    POOL_SELF = "pool-self-loop"


# task node feature vector, in order
NODE_FEATURE_CHANNELS = (
    "affected",  # 1 once scheduled
    "selectable",  # 1 while eligible
    "past",  # 1 once scheduled and drained of open flows in every type
    "endpoint",  # -1 source, 1 sink, 0 otherwise
    "dur_min",
    "dur_max",
    "dur_mod",  # durations / max over tasks of the max-type duration
    "tct_min",
    "tct_max",
    "tct_mod",  # completion times on the partial schedule, same normalizer
)

# flow and resource edge attribute vector, in order
EDGE_ATTR_CHANNELS = (
    "level",  # transferred or requested units / capacity
    "type_min",
    "type_max",
    "type_mod",  # duration-type indicators (all zero on resource edges)
)


@dataclass(frozen=True)
class ObsNode:
    kind: NodeKind
    features: tuple[float, ...]


@dataclass(frozen=True)
class ObsEdge:
    type: EdgeType
    src: int
    dst: int
    attr: tuple[float, ...]


@dataclass(frozen=True)
class ObsGraph:
    """Nodes are indexed tasks first (by id), then resources (by id), then
    the pool node last; ``mask[t]`` is per task node."""

    nodes: tuple[ObsNode, ...]
    edges: tuple[ObsEdge, ...]
    mask: tuple[bool, ...]

    @property
    def n_tasks(self) -> int:
        return len(self.mask)

    def to_json_dict(self) -> dict:
        return {
            "version": 1,
            "nodes": [{"kind": n.kind.value, "features": list(n.features)} for n in self.nodes],
            "edges": [
                {"type": e.type.value, "src": e.src, "dst": e.dst, "attr": list(e.attr)}
                for e in self.edges
            ],
            "mask": list(self.mask),
        }


def build_observation(state: flow.FlowState, instance: Instance) -> ObsGraph:
    """Observation of a non-terminal state carrying the three duration types."""
    if state.is_terminal():
        raise ValueError("terminal states are not observed")
    if set(state.dtypes) != set(flow.DURATION_TYPES):
        raise ValueError(f"observation needs duration types {flow.DURATION_TYPES}, state has {state.dtypes}")

    n = instance.n_tasks
    m = instance.n_resources
    resource_node = lambda r: n + r
    pool = n + m
    eligible = flow.eligible_actions(state, instance)

    norm = max(max(state.durations["max"], default=0), 1)

    past = []
    for t in range(n):
        drained = t in state.scheduled and all(
            t not in ledger.open for d in state.dtypes for ledger in state.ledgers[d]
        )
        past.append(drained)

    nodes: list[ObsNode] = []
    for t in range(n):
        scheduled = t in state.scheduled
        endpoint = -1.0 if t == instance.source else (1.0 if t == instance.sink else 0.0)
        features = [
            1.0 if scheduled else 0.0,
            1.0 if t in eligible else 0.0,
            1.0 if past[t] else 0.0,
            endpoint,
        ]
        for d in flow.DURATION_TYPES:
            features.append(state.durations[d][t] / norm)
        for d in flow.DURATION_TYPES:
            if scheduled:
                features.append((state.start[d][t] + state.durations[d][t]) / norm)
            else:
                features.append(0.0)
        nodes.append(ObsNode(NodeKind.TASK, tuple(features)))
    nodes.extend(ObsNode(NodeKind.RESOURCE, ()) for _ in range(m))
    nodes.append(ObsNode(NodeKind.POOL, ()))

    edges: list[ObsEdge] = []

    for a, b in instance.arcs:
        if past[a] or past[b]:
            continue
        edges.append(ObsEdge(EdgeType.PRECEDENCE, a, b, ()))
        edges.append(ObsEdge(EdgeType.REVERSE_PRECEDENCE, b, a, ()))

    # one edge per distinct flow arc, its duration-type memberships encoded
    # as indicator channels
    type_index = {d: i for i, d in enumerate(flow.DURATION_TYPES)}
    flow_groups: dict[tuple[int, int, int, int], list[float]] = {}
    for d in state.dtypes:
        for r, ledger in enumerate(state.ledgers[d]):
            for arc in ledger.flows:
                if past[arc.src] or past[arc.dst]:
                    continue
                key = (r, arc.src, arc.dst, arc.units)
                indicators = flow_groups.setdefault(key, [0.0, 0.0, 0.0])
                indicators[type_index[d]] = 1.0
    for (r, src, dst, units), indicators in sorted(flow_groups.items()):
        attr = (units / instance.resources[r].capacity, *indicators)
        edges.append(ObsEdge(EdgeType.FLOW, src, dst, attr))
        edges.append(ObsEdge(EdgeType.REVERSE_FLOW, dst, src, attr))

    for r in instance.resources:
        for t in instance.tasks:
            if t.index in state.scheduled:
                continue
            c = t.consumption[r.index]
            if c == 0:
                continue
            attr = (c / r.capacity, 0.0, 0.0, 0.0)
            edges.append(ObsEdge(EdgeType.TASK_TO_RESOURCE, t.index, resource_node(r.index), attr))
            edges.append(ObsEdge(EdgeType.RESOURCE_TO_TASK, resource_node(r.index), t.index, attr))

    for t in range(n):
        edges.append(ObsEdge(EdgeType.TASK_TO_POOL, t, pool, ()))
    for r in range(m):
        edges.append(ObsEdge(EdgeType.RESOURCE_TO_POOL, resource_node(r), pool, ()))
    for t in range(n):
        edges.append(ObsEdge(EdgeType.TASK_SELF, t, t, ()))
    for r in range(m):
        edges.append(ObsEdge(EdgeType.RESOURCE_SELF, resource_node(r), resource_node(r), ()))
    edges.append(ObsEdge(EdgeType.POOL_SELF, pool, pool, ()))

    mask = tuple(t in eligible for t in range(n))
    return ObsGraph(nodes=tuple(nodes), edges=tuple(_sorted_edges(edges)), mask=mask)


def _sorted_edges(edges: list[ObsEdge]) -> list[ObsEdge]:
    return sorted(edges, key=lambda e: (e.type.value, e.src, e.dst, e.attr))


def serialize(obs: ObsGraph) -> bytes:
    """Canonical byte encoding; re-serialization is byte-identical."""
    return json.dumps(obs.to_json_dict(), sort_keys=True, separators=(",", ":")).encode()
