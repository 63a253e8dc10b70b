"""Flow-based serial scheduling engine for resource-constrained projects
with uncertain task durations."""

from .instance import (
    Diagnostic,
    Instance,
    ParseError,
    Resource,
    Task,
    canonical_text,
    parse_canonical,
    parse_psplib,
    topological_order,
    validate,
)
from .uncertainty import (
    DurationTriple,
    Scenario,
    UncertaintyModel,
    derive_triples,
    sample_scenario,
    scenario_batch,
)
from .flow import (
    DURATION_TYPES,
    FlowArc,
    FlowState,
    eligible_actions,
    initial_state,
    insert_task,
    makespan,
    replay_with_durations,
    single_type_state,
)
from .ssgs import Rule, Schedule, check_schedule, execute_list, rule_rollout, rule_value, terminal_reward
from .observation import EdgeType, NodeKind, ObsGraph, build_observation, serialize
from .env import Environment, EpisodeConfig, ProtocolError, StepResult, replay_reward
from .bench import EvalRecord, evaluate, gap, split_dataset

__version__ = "0.1.0"
