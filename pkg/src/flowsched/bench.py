"""Dataset-scale evaluation: priority-rule methods over scenario batches,
gap/coverage aggregation, CSV emission, and dataset splitting.

Two runs with equal seeds emit byte-identical CSVs, and every aggregate is
recomputable from the per-scenario CSV alone (plus the best-known file when
one is used).
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import ssgs
from .instance import Instance
from .uncertainty import UncertaintyModel, derive_triples, scenario_batch

__all__ = [
    "EvalRecord",
    "aggregate_csv",
    "evaluate",
    "gap",
    "read_best_known",
    "records_csv",
    "records_from_csv",
    "split_dataset",
]

# keeps per-instance scenario streams independent while still a pure
# function of (seed, instance ordinal)
_INSTANCE_SEED_STRIDE = 100_000


def gap(sol: float, best: float) -> float:
    """Relative distance to the best known value: 100 * (sol - best) / sol."""
    if sol <= 0:
        raise ValueError(f"gap needs a positive solution value, got {sol}")
    return 100.0 * (sol - best) / sol


@dataclass
class EvalRecord:
    """Per-scenario makespans of one method on one instance."""

    instance_id: str
    method: str
    makespans: list[int]
    solved: list[bool]
    seeds: list[int]
    wall_time: float = 0.0

    @property
    def coverage(self) -> float:
        return 100.0 * sum(self.solved) / len(self.solved) if self.solved else 0.0

    @property
    def mean_makespan(self) -> float | None:
        values = [m for m, ok in zip(self.makespans, self.solved) if ok]
        if not values:
            return None
        return sum(values) / len(values)


def _method_list(method: str, instance: Instance, triples) -> list[int]:
    if method.startswith("list:"):
        order = ssgs.read_priority_list(method[5:])
        # raises if not a precedence-consistent permutation of this instance
        ssgs.execute_list(instance, order, [t.duration for t in instance.tasks])
        return order
    rule = ssgs.Rule(method)
    mode = tuple(triples[i].mode for i in sorted(triples))
    order, _ = ssgs.rule_rollout(rule, instance, triples, mode)
    return order


def evaluate(
    instances: Mapping[str, Instance],
    methods: Sequence[str],
    *,
    scenarios: int = 100,
    seed: int = 0,
    model: UncertaintyModel | None = None,
    best_known: Mapping[str, float] | None = None,
) -> tuple[list[EvalRecord], list[dict]]:
    """Evaluate each method on each instance over a shared scenario batch.

    A method is a rule name (``spt``/``lpt``/``mis``/``grpw``) or
    ``list:<path>``.  A method that cannot produce a valid priority list for
    an instance marks all of that instance's scenarios unsolved; the run
    never aborts.  Returns the per-scenario records and the aggregate rows.
    """
    model = model or UncertaintyModel()
    records: list[EvalRecord] = []
    for ordinal, instance_id in enumerate(sorted(instances)):
        instance = instances[instance_id]
        triples = derive_triples(instance, model)
        batch = scenario_batch(triples, seed + ordinal * _INSTANCE_SEED_STRIDE, scenarios)
        for method in methods:
            t0 = time.perf_counter()
            try:
                order = _method_list(method, instance, triples)
            except (ValueError, OSError):
                records.append(
                    EvalRecord(
                        instance_id,
                        method,
                        makespans=[0] * scenarios,
                        solved=[False] * scenarios,
                        seeds=[s.seed for s in batch],
                        wall_time=time.perf_counter() - t0,
                    )
                )
                continue
            makespans = [ssgs.execute_list(instance, order, scen.realized).makespan for scen in batch]
            records.append(
                EvalRecord(
                    instance_id,
                    method,
                    makespans=makespans,
                    solved=[True] * scenarios,
                    seeds=[s.seed for s in batch],
                    wall_time=time.perf_counter() - t0,
                )
            )
    return records, aggregate(records, methods, best_known)


def aggregate(
    records: Sequence[EvalRecord],
    methods: Sequence[str] | None = None,
    best_known: Mapping[str, float] | None = None,
) -> list[dict]:
    """Aggregate rows per method: mean makespan, mean gap, coverage.

    Without a best-known table, an instance's best is the minimum mean
    makespan among the evaluated methods.  All means iterate records in
    their stored order, so re-aggregating a re-read CSV reproduces the
    floats bit for bit.
    """
    if methods is None:
        methods = list(dict.fromkeys(r.method for r in records))
    best: dict[str, float] = dict(best_known or {})
    if best_known is None:
        for r in records:
            mean = r.mean_makespan
            if mean is None:
                continue
            if r.instance_id not in best or mean < best[r.instance_id]:
                best[r.instance_id] = mean

    rows = []
    for method in methods:
        mine = [r for r in records if r.method == method]
        flat = [m for r in mine for m, ok in zip(r.makespans, r.solved) if ok]
        mean_mks = sum(flat) / len(flat) if flat else None
        gaps = [
            gap(r.mean_makespan, best[r.instance_id])
            for r in mine
            if r.mean_makespan is not None and r.instance_id in best and r.mean_makespan > 0
        ]
        mean_gap = sum(gaps) / len(gaps) if gaps else None
        total = sum(len(r.solved) for r in mine)
        covered = sum(sum(r.solved) for r in mine)
        rows.append(
            {
                "method": method,
                "mean_makespan": mean_mks,
                "mean_gap": mean_gap,
                "coverage": 100.0 * covered / total if total else 0.0,
            }
        )
    return rows


def records_csv(records: Sequence[EvalRecord]) -> str:
    """Per-scenario CSV (deterministic bytes; wall times are not emitted)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "method", "scenario", "seed", "makespan", "solved"])
    for r in records:
        for i, (mks, ok, s) in enumerate(zip(r.makespans, r.solved, r.seeds)):
            writer.writerow([r.instance_id, r.method, i, s, mks, int(ok)])
    return buf.getvalue()


def records_from_csv(text: str) -> list[EvalRecord]:
    """Rebuild records from :func:`records_csv` output, preserving order."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["instance", "method", "scenario", "seed", "makespan", "solved"]:
        raise ValueError("not a per-scenario records CSV")
    records: list[EvalRecord] = []
    current: EvalRecord | None = None
    for instance_id, method, _scenario, seed, mks, ok in rows[1:]:
        if current is None or current.instance_id != instance_id or current.method != method:
            current = EvalRecord(instance_id, method, [], [], [])
            records.append(current)
        current.makespans.append(int(mks))
        current.solved.append(bool(int(ok)))
        current.seeds.append(int(seed))
    return records


def aggregate_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "mean_makespan", "mean_gap", "coverage"])
    for row in rows:
        writer.writerow(
            [
                row["method"],
                "" if row["mean_makespan"] is None else repr(row["mean_makespan"]),
                "" if row["mean_gap"] is None else repr(row["mean_gap"]),
                repr(row["coverage"]),
            ]
        )
    return buf.getvalue()


def read_best_known(path: str | Path) -> dict[str, float]:
    """Best-known table: CSV rows ``instance,value`` (no header required)."""
    out: dict[str, float] = {}
    for row in csv.reader(Path(path).read_text().splitlines()):
        if not row or row[0] == "instance":
            continue
        out[row[0]] = float(row[1])
    return out


def split_dataset(
    files: Sequence[str],
    *,
    seed: int = 0,
    ukn_configs: int = 5,
    train_frac: float = 0.8,
) -> dict[str, list[str]]:
    """Deterministic train / unseen / unknown split of a benchmark directory.

    Files sharing the stem before the last underscore form one parameter
    configuration; whole configurations are held out as the unknown set so
    its structure never appears in training, then the remaining files split
    file-wise into train and unseen.
    """
    names = sorted(Path(f).name for f in files)
    if not names:
        raise ValueError("no instance files to split")
    configs: dict[str, list[str]] = {}
    for name in names:
        stem = Path(name).stem
        key = stem.rsplit("_", 1)[0] if "_" in stem else stem
        configs.setdefault(key, []).append(name)

    rng = random.Random(seed)
    config_keys = sorted(configs)
    held = set(rng.sample(config_keys, min(ukn_configs, max(len(config_keys) - 1, 0))))
    ukn = sorted(n for key in held for n in configs[key])
    rest = [n for key in config_keys if key not in held for n in configs[key]]
    rng.shuffle(rest)
    n_train = round(len(rest) * train_frac)
    manifest = {
        "train": sorted(rest[:n_train]),
        "usn": sorted(rest[n_train:]),
        "ukn": ukn,
    }
    return manifest


def write_manifest(manifest: Mapping[str, list[str]], path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
