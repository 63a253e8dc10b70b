"""Duration triples and scenario sampling.

Deterministic benchmark durations are widened into (min, mode, max) triples
by rational scale factors, and realized durations are drawn per task from a
triangular distribution over the triple.  All sampling is a pure function of
(triples, seed).
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .instance import Instance

__all__ = [
    "DurationTriple",
    "Scenario",
    "UncertaintyModel",
    "derive_triples",
    "durations_of",
    "sample_scenario",
    "scenario_batch",
    "scenarios_from_csv",
    "scenarios_to_csv",
]

FactorLike = Union[int, float, str, Fraction]


def _as_fraction(value: FactorLike) -> Fraction:
    # floats go through their decimal repr so that 0.85 means 85/100, not
    # the binary neighbour; factor arithmetic must stay exact for floor/ceil
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class DurationTriple:
    """Known (minimum, mode, maximum) of one task's uncertain duration."""

    min: int
    mode: int
    max: int

    def __post_init__(self):
        if not 0 <= self.min <= self.mode <= self.max:
            raise ValueError(f"invalid duration triple ({self.min}, {self.mode}, {self.max})")


@dataclass(frozen=True)
class UncertaintyModel:
    """How deterministic durations widen into triples, and the sampling law.

    ``low_factor``/``high_factor`` are exact rationals; the default widening
    is (0.85, 1.3).  ``kind`` tags the sampling distribution (triangular is
    the only one implemented).
    """

    low_factor: Fraction = Fraction("0.85")
    high_factor: Fraction = Fraction("1.3")
    kind: str = "triangular"

    def __post_init__(self):
        object.__setattr__(self, "low_factor", _as_fraction(self.low_factor))
        object.__setattr__(self, "high_factor", _as_fraction(self.high_factor))
        if not 0 <= self.low_factor <= 1:
            raise ValueError(f"low_factor {self.low_factor} outside [0, 1]")
        if self.high_factor < 1:
            raise ValueError(f"high_factor {self.high_factor} below 1")
        if self.kind != "triangular":
            raise ValueError(f"unsupported distribution kind {self.kind!r}")


@dataclass(frozen=True)
class Scenario:
    """One joint realization of all task durations; ``realized[t]`` indexes
    by task id."""

    realized: tuple[int, ...]
    seed: int


def derive_triples(instance: Instance, model: UncertaintyModel | None = None) -> dict[int, DurationTriple]:
    """Widen each task's deterministic duration into a triple.

    min = floor(low_factor * d), mode = d, max = ceil(high_factor * d);
    zero-duration tasks map to (0, 0, 0).
    """
    model = model or UncertaintyModel()
    out: dict[int, DurationTriple] = {}
    for t in instance.tasks:
        if t.duration == 0:
            out[t.index] = DurationTriple(0, 0, 0)
        else:
            lo = math.floor(model.low_factor * t.duration)
            hi = math.ceil(model.high_factor * t.duration)
            out[t.index] = DurationTriple(lo, t.duration, hi)
    return out


def durations_of(triples: Mapping[int, DurationTriple], which: str) -> tuple[int, ...]:
    """Per-task durations of one triple component, indexed by task id."""
    return tuple(getattr(triples[i], {"min": "min", "max": "max", "mod": "mode"}[which]) for i in sorted(triples))


def sample_scenario(triples: Mapping[int, DurationTriple], seed: int) -> Scenario:
    """Draw one realized duration per task, fully determined by ``seed``.

    Each task draws independently from triangular(min, max, mode), rounded
    to the nearest integer and clamped to [min, max]; degenerate triples
    return their single value without touching the stream.
    """
    rng = random.Random(seed)
    realized = []
    for i in sorted(triples):
        triple = triples[i]
        if triple.min == triple.max:
            realized.append(triple.min)
            continue
        x = rng.triangular(triple.min, triple.max, triple.mode)
        realized.append(min(triple.max, max(triple.min, math.floor(x + 0.5))))
    return Scenario(realized=tuple(realized), seed=seed)


def scenario_batch(triples: Mapping[int, DurationTriple], base_seed: int, n: int) -> list[Scenario]:
    """``n`` scenarios seeded ``base_seed + i``; pairwise reproducible."""
    if n < 1:
        raise ValueError(f"scenario count must be >= 1, got {n}")
    return [sample_scenario(triples, base_seed + i) for i in range(n)]


def scenarios_to_csv(scenarios: Sequence[Scenario]) -> str:
    """Flat CSV of a scenario batch (one row per task per scenario)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario", "seed", "task", "duration"])
    for idx, scen in enumerate(scenarios):
        for task, duration in enumerate(scen.realized):
            writer.writerow([idx, scen.seed, task, duration])
    return buf.getvalue()


def scenarios_from_csv(text: str) -> list[Scenario]:
    """Inverse of :func:`scenarios_to_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["scenario", "seed", "task", "duration"]:
        raise ValueError("not a scenario batch CSV")
    by_index: dict[int, tuple[int, dict[int, int]]] = {}
    for idx_s, seed_s, task_s, dur_s in rows[1:]:
        idx, seed, task, dur = int(idx_s), int(seed_s), int(task_s), int(dur_s)
        entry = by_index.setdefault(idx, (seed, {}))
        entry[1][task] = dur
    out = []
    for idx in sorted(by_index):
        seed, realized = by_index[idx]
        out.append(Scenario(realized=tuple(realized[t] for t in sorted(realized)), seed=seed))
    return out
