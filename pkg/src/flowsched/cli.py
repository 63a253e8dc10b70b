"""Command-line front end: validate, schedule, bench, export-obs, serve,
gen, split, scenarios."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, env, flow, generator, observation, ssgs
from .instance import Instance, errors_of, parse_psplib, validate
from .uncertainty import UncertaintyModel, derive_triples, sample_scenario, scenario_batch, scenarios_to_csv


def _load(path: str) -> Instance:
    text = Path(path).read_text()
    return parse_psplib(text, name=Path(path).name)


def _model(args) -> UncertaintyModel:
    return UncertaintyModel(low_factor=args.low, high_factor=args.high)


def _add_model_flags(parser) -> None:
    parser.add_argument("--low", default="0.85", help="duration widening lower factor (rational)")
    parser.add_argument("--high", default="1.3", help="duration widening upper factor (rational)")


def cmd_validate(args) -> int:
    try:
        instance = _load(args.file)
    except Exception as exc:
        print(f"error: {exc}")
        return 1
    diags = validate(instance)
    for d in diags:
        print(d)
    if not diags:
        print(f"ok: {instance.n_tasks} tasks, {instance.n_resources} resources, {len(instance.arcs)} arcs")
    return 1 if errors_of(diags) else 0


def cmd_schedule(args) -> int:
    instance = _load(args.file)
    model = _model(args)
    triples = derive_triples(instance, model)
    if args.scenario_seed is not None:
        durations = sample_scenario(triples, args.scenario_seed).realized
    else:
        durations = tuple(t.duration for t in instance.tasks)
    if args.list:
        order = ssgs.read_priority_list(args.list)
        schedule = ssgs.execute_list(instance, order, durations)
    else:
        rule = ssgs.Rule(args.rule)
        order, schedule = ssgs.rule_rollout(rule, instance, triples, durations)
    violations = ssgs.check_schedule(instance, schedule, durations)
    for t in instance.tasks:
        print(f"{t.index}\t{t.label()}\tstart {schedule.start[t.index]}")
    print(f"makespan {schedule.makespan}")
    print(f"order {','.join(map(str, order))}")
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return 1
    return 0


def cmd_export_obs(args) -> int:
    instance = _load(args.file)
    triples = derive_triples(instance, _model(args))
    state = flow.initial_state(instance, triples)
    if args.after_actions:
        for token in args.after_actions.split(","):
            state = flow.insert_task(state, instance, int(token))
    payload = observation.serialize(observation.build_observation(state, instance))
    if args.out:
        Path(args.out).write_bytes(payload + b"\n")
    else:
        sys.stdout.buffer.write(payload + b"\n")
    return 0


def cmd_serve(args) -> int:
    registry = {}
    root = Path(args.instances)
    files = sorted(root.glob("*.sm")) if root.is_dir() else [root]
    for f in files:
        registry[f.name] = parse_psplib(f.read_text(), name=f.name)
    if not registry:
        print(f"error: no .sm files under {root}", file=sys.stderr)
        return 1
    model = _model(args)
    log_file = open(args.log, "a") if args.log else None
    if args.port is None:
        env.serve_stream(
            registry, sys.stdin, sys.stdout,
            model=model, scenario_policy=args.policy, base_seed=args.seed, episode_log=log_file,
        )
        return 0
    server = env.serve_tcp(
        registry, port=args.port,
        model=model, scenario_policy=args.policy, base_seed=args.seed, episode_log=log_file,
    )
    print(json.dumps({"listening": server.server_address[1], "instances": len(registry)}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_bench(args) -> int:
    root = Path(args.dataset)
    files = sorted(root.glob("*.sm")) if root.is_dir() else [root]
    instances = {f.name: parse_psplib(f.read_text(), name=f.name) for f in files}
    if not instances:
        print(f"error: no .sm files under {root}", file=sys.stderr)
        return 1
    best = bench.read_best_known(args.best) if args.best else None
    methods = args.methods.split(",")
    records, rows = bench.evaluate(
        instances, methods,
        scenarios=args.scenarios, seed=args.seed, model=_model(args), best_known=best,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(bench.records_csv(records))
    (out / "aggregate.csv").write_text(bench.aggregate_csv(rows))
    width = max(len(r["method"]) for r in rows)
    for row in rows:
        mks = "-" if row["mean_makespan"] is None else f"{row['mean_makespan']:.2f}"
        gp = "-" if row["mean_gap"] is None else f"{row['mean_gap']:.1f}"
        print(f"{row['method']:<{width}}  mks {mks:>8}  gap {gp:>6}  cov {row['coverage']:.1f}")
    return 0


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    import random as _random

    rng = _random.Random(args.seed)
    for i in range(args.count):
        n = rng.randint(args.min_tasks, args.max_tasks)
        m = rng.randint(args.min_resources, args.max_resources)
        inst = generator.random_instance(rng.randrange(2**32), n, m)
        name = f"syn{i // 10:03d}_{i % 10 + 1}.sm"
        (out / name).write_text(generator.to_psplib(inst))
    print(f"wrote {args.count} instances to {out}")
    return 0


def cmd_split(args) -> int:
    files = sorted(str(p) for p in Path(args.dataset).glob("*.sm"))
    manifest = bench.split_dataset(files, seed=args.seed, ukn_configs=args.ukn_configs, train_frac=args.train_frac)
    bench.write_manifest(manifest, args.out)
    print(
        f"train {len(manifest['train'])}  usn {len(manifest['usn'])}  ukn {len(manifest['ukn'])} -> {args.out}"
    )
    return 0


def cmd_scenarios(args) -> int:
    instance = _load(args.file)
    triples = derive_triples(instance, _model(args))
    batch = scenario_batch(triples, args.seed, args.scenarios)
    text = scenarios_to_csv(batch)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("file")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("schedule", help="build and print one schedule")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--rule", choices=[r.value for r in ssgs.Rule])
    group.add_argument("--list", help="priority list file, one task id per line")
    p.add_argument("--scenario-seed", type=int, default=None, help="sample realized durations from this seed")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("export-obs", help="write the canonical observation of a state")
    p.add_argument("file")
    p.add_argument("--after-actions", default="", help="comma-separated task ids to insert first")
    p.add_argument("--out", default="")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_export_obs)

    p = sub.add_parser("serve", help="serve episodes over stdio or TCP")
    p.add_argument("--instances", required=True, help="an .sm file or a directory of them")
    p.add_argument("--port", type=int, default=None, help="TCP port (0 picks one); stdio when omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=["resample", "fixed"], default="resample")
    p.add_argument("--log", default="", help="append completed episodes to this JSONL file")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("bench", help="evaluate methods over scenario batches")
    p.add_argument("--dataset", required=True)
    p.add_argument("--methods", default="spt,lpt,mis,grpw", help="comma list: spt,lpt,mis,grpw,list:<file>")
    p.add_argument("--scenarios", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--best", default="", help="best-known CSV (instance,value)")
    p.add_argument("--out-dir", default="bench-out")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("gen", help="generate synthetic .sm instances")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--min-tasks", type=int, default=8)
    p.add_argument("--max-tasks", type=int, default=15)
    p.add_argument("--min-resources", type=int, default=1)
    p.add_argument("--max-resources", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("split", help="split a dataset into train/usn/ukn manifests")
    p.add_argument("dataset")
    p.add_argument("--out", default="manifest.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ukn-configs", type=int, default=5)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("scenarios", help="sample a scenario batch to CSV")
    p.add_argument("file")
    p.add_argument("--scenarios", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_scenarios)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
