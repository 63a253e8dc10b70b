"""Reset/step environment over the scheduling MDP, plus a newline-delimited
JSON wire protocol so external agents can drive episodes out of process.

An episode walks the insertion MDP on the triple duration graphs; the
terminal reward replays the chosen action sequence under a realized duration
scenario sampled from the episode seed and normalizes the makespan by the
task count.  Everything is a pure function of (instance, model, seed,
actions), so episodes replay exactly.
"""

from __future__ import annotations

import json
import logging
import socketserver
from dataclasses import dataclass, field
from typing import IO, Mapping

from . import flow, observation, ssgs
from .instance import Instance
from .uncertainty import Scenario, UncertaintyModel, derive_triples, sample_scenario

__all__ = [
    "Environment",
    "EpisodeConfig",
    "ProtocolError",
    "StepResult",
    "replay_reward",
    "serve_stream",
    "serve_tcp",
]

PROTOCOL_VERSION = 1

log = logging.getLogger(__name__)


class ProtocolError(Exception):
    """Request violates the episode protocol; the episode is unchanged."""


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode determinism contract: the seed fully determines the sampled
    durations.  ``resample`` advances the seed every reset; ``fixed`` reuses
    the same scenario for every episode."""

    instance: Instance
    model: UncertaintyModel = UncertaintyModel()
    seed: int = 0
    scenario_policy: str = "resample"  # "resample" | "fixed"
    name: str = ""

    def __post_init__(self):
        if self.scenario_policy not in ("resample", "fixed"):
            raise ValueError(f"unknown scenario policy {self.scenario_policy!r}")


@dataclass
class StepResult:
    observation: observation.ObsGraph | None
    reward: float
    done: bool
    info: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "observation": self.observation.to_json_dict() if self.observation else None,
            "reward": self.reward,
            "done": self.done,
            "info": self.info,
        }


class Environment:
    """One sequential episode at a time over a fixed instance."""

    def __init__(self, config: EpisodeConfig):
        self.config = config
        self.instance = config.instance
        self.triples = derive_triples(config.instance, config.model)
        self._episodes = 0
        self._state: flow.FlowState | None = None
        self._scenario: Scenario | None = None
        self._actions: list[int] = []

    @property
    def scenario(self) -> Scenario | None:
        return self._scenario

    @property
    def action_log(self) -> list[int]:
        return list(self._actions)

    def reset(self, seed: int | None = None) -> StepResult:
        """Start a fresh episode; its scenario is sampled from the seed."""
        if seed is None:
            if self.config.scenario_policy == "fixed":
                seed = self.config.seed
            else:
                seed = self.config.seed + self._episodes
        self._episodes += 1
        self._scenario = sample_scenario(self.triples, seed)
        self._state = flow.initial_state(self.instance, self.triples)
        self._actions = []
        obs = observation.build_observation(self._state, self.instance)
        info = {
            "instance": self.config.name or self.instance.name,
            "tasks": self.instance.n_tasks,
            "resources": self.instance.n_resources,
            "seed": seed,
        }
        return StepResult(observation=obs, reward=0.0, done=False, info=info)

    def step(self, task: int) -> StepResult:
        """Insert one eligible task; terminal steps carry the episode reward."""
        if self._state is None:
            raise ProtocolError("step before reset")
        if self._state.is_terminal():
            raise ProtocolError("episode already finished")
        if not isinstance(task, int) or not 0 <= task < self.instance.n_tasks:
            raise ProtocolError(f"unknown task {task!r}")
        if task not in flow.eligible_actions(self._state, self.instance):
            raise ProtocolError(f"task {task} is masked")

        self._state = flow.insert_task(self._state, self.instance, task)
        self._actions.append(task)
        if self._state.is_terminal():
            assert self._scenario is not None
            realized_start = flow.replay_with_durations(self.instance, self._actions, self._scenario.realized)
            sampled_makespan = realized_start[self.instance.sink]
            reward = ssgs.terminal_reward(sampled_makespan, self.instance)
            info = {
                "makespans": {d: flow.makespan(self._state, d) for d in flow.DURATION_TYPES},
                "sampled_makespan": sampled_makespan,
                "seed": self._scenario.seed,
                "actions": list(self._actions),
            }
            return StepResult(observation=None, reward=reward, done=True, info=info)
        obs = observation.build_observation(self._state, self.instance)
        return StepResult(observation=obs, reward=0.0, done=False, info={})


def replay_reward(instance: Instance, model: UncertaintyModel, seed: int, actions: list[int]) -> float:
    """Recompute a served terminal reward offline from the episode log."""
    triples = derive_triples(instance, model)
    scenario = sample_scenario(triples, seed)
    start = flow.replay_with_durations(instance, actions, scenario.realized)
    return ssgs.terminal_reward(start[instance.sink], instance)


# ---------------------------------------------------------------------------
# wire protocol: newline-delimited JSON request/reply


def _reply(payload: dict, ok: bool = True) -> str:
    doc = {"v": PROTOCOL_VERSION, "ok": ok}
    doc.update(payload)
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


class _Session:
    """Dispatches protocol messages for one connection.

    A connection hosts one active episode at a time; a new ``reset``
    discards the previous episode.
    """

    def __init__(
        self,
        registry: Mapping[str, Instance],
        model: UncertaintyModel,
        scenario_policy: str,
        base_seed: int,
        episode_log: IO[str] | None = None,
    ):
        self.registry = registry
        self.model = model
        self.scenario_policy = scenario_policy
        self.base_seed = base_seed
        self.episode_log = episode_log
        self.env: Environment | None = None
        self.closed = False
        self.n_resets = 0  # resample seeding must advance across resets

    def handle_line(self, line: str) -> str:
        line = line.strip()
        if not line:
            return _reply({"error": "empty request"}, ok=False)
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            return _reply({"error": f"malformed JSON: {exc.msg}"}, ok=False)
        if not isinstance(msg, dict) or "cmd" not in msg:
            return _reply({"error": "request must be an object with a 'cmd' field"}, ok=False)
        try:
            return self._dispatch(msg)
        except ProtocolError as exc:
            return _reply({"error": str(exc)}, ok=False)

    def _dispatch(self, msg: dict) -> str:
        cmd = msg.get("cmd")
        if cmd == "instances":
            return _reply({"instances": sorted(self.registry)})
        if cmd == "reset":
            name = msg.get("instance")
            if name is None:
                if len(self.registry) != 1:
                    raise ProtocolError("reset needs an 'instance' field when several are loaded")
                name = next(iter(self.registry))
            if name not in self.registry:
                raise ProtocolError(f"unknown instance {name!r}")
            if "seed" in msg:
                if not isinstance(msg["seed"], int):
                    raise ProtocolError("'seed' must be an integer")
                seed = msg["seed"]
            elif self.scenario_policy == "fixed":
                seed = self.base_seed
            else:
                seed = self.base_seed + self.n_resets
            self.n_resets += 1
            config = EpisodeConfig(
                instance=self.registry[name],
                model=self.model,
                seed=seed,
                scenario_policy=self.scenario_policy,
                name=name,
            )
            self.env = Environment(config)
            result = self.env.reset(seed=seed)
            return _reply(result.to_json_dict())
        if cmd == "step":
            if self.env is None:
                raise ProtocolError("step before reset")
            if "task" not in msg or not isinstance(msg["task"], int):
                raise ProtocolError("step needs an integer 'task' field")
            result = self.env.step(msg["task"])
            if result.done and self.episode_log is not None:
                self.episode_log.write(
                    json.dumps(
                        {
                            "instance": self.env.config.name,
                            "seed": result.info["seed"],
                            "actions": result.info["actions"],
                            "reward": result.reward,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
                self.episode_log.flush()
            return _reply(result.to_json_dict())
        if cmd == "close":
            self.closed = True
            return _reply({"closed": True})
        return _reply({"error": f"unknown command {cmd!r}"}, ok=False)


def serve_stream(
    registry: Mapping[str, Instance],
    rfile: IO[str],
    wfile: IO[str],
    *,
    model: UncertaintyModel | None = None,
    scenario_policy: str = "resample",
    base_seed: int = 0,
    episode_log: IO[str] | None = None,
) -> None:
    """Serve one connection worth of requests over text streams."""
    session = _Session(registry, model or UncertaintyModel(), scenario_policy, base_seed, episode_log)
    for line in rfile:
        try:
            reply = session.handle_line(line)
            wfile.write(reply + "\n")
            wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            log.info("connection dropped mid-episode")
            return
        if session.closed:
            return


def serve_tcp(
    registry: Mapping[str, Instance],
    host: str = "127.0.0.1",
    port: int = 0,
    *,
    model: UncertaintyModel | None = None,
    scenario_policy: str = "resample",
    base_seed: int = 0,
    episode_log: IO[str] | None = None,
) -> socketserver.ThreadingTCPServer:
    """TCP server hosting one independent episode stream per connection.

    Returns the (not yet running) server; call ``serve_forever`` on it.  The
    bound port is ``server.server_address[1]`` (useful with port 0).
    """

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            rfile = (line.decode("utf-8", "replace") for line in self.rfile)
            class _W:
                def write(_, text):
                    self.wfile.write(text.encode())
                def flush(_):
                    pass
            try:
                serve_stream(
                    registry,
                    rfile,
                    _W(),
                    model=model,
                    scenario_policy=scenario_policy,
                    base_seed=base_seed,
                    episode_log=episode_log,
                )
            except (BrokenPipeError, ConnectionResetError):
                log.info("connection dropped mid-episode")

    server = socketserver.ThreadingTCPServer((host, port), Handler)
    server.daemon_threads = True
    return server
