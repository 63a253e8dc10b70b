/**
 * Rollout collection, policy evaluation, and the training loop, all driving
 * the scheduler purely through its episode protocol.
 */

import * as fs from "node:fs";
import { EnvClient } from "./client.js";
import { batchGraphs, decodeObservation, Graph } from "./graph.js";
import { actionDistribution, PolicyModel } from "./model.js";
import { assignEpisodeReturns, DEFAULT_PPO, PpoConfig, ppoUpdate, RolloutStep } from "./ppo.js";
import { RAdam } from "./radam.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  iterations: number;
  rolloutSteps: number;
  lr: number;
  weightDecay: number;
  ppo: PpoConfig;
  evalSeeds: number; // scenarios per instance in evaluations
  evalSeedBase: number;
  seed: number;
  /** scenario-seed pool for collection; undefined resamples every episode */
  scenarioPool?: ScenarioPool;
}

export const DEFAULT_TRAIN: TrainConfig = {
  iterations: 10,
  rolloutSteps: 1024,
  lr: 1e-3,
  weightDecay: 0.01,
  ppo: DEFAULT_PPO,
  evalSeeds: 100,
  evalSeedBase: 1_000_000,
  seed: 0,
  scenarioPool: { base: 0, size: 4 },
};

/** The paper-scale preset (one-day training); kept for reference, far
 * beyond desk scale. */
export const PAPER_SCALE: Partial<TrainConfig> = {
  rolloutSteps: 500_000,
  ppo: { ...DEFAULT_PPO, minibatch: 256, epochs: 3 },
};

function sampleIndex(probs: Float64Array, rng: Rng): number {
  const r = rng.next();
  let acc = 0;
  for (let i = 0; i < probs.length; i++) {
    acc += probs[i];
    if (r < acc) return i;
  }
  return probs.length - 1;
}

function argmax(values: Float64Array): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) if (values[i] > values[best]) best = i;
  return best;
}

export interface CollectStats {
  steps: RolloutStep[];
  episodes: number;
  meanReward: number;
}

/** Reuse a small set of scenario seeds during collection instead of
 * resampling every episode; cuts duration noise out of the reward signal. */
export interface ScenarioPool {
  base: number;
  size: number;
}

/** Play episodes (cycling through the instances) until enough steps are
 * gathered; episodes always run to termination so returns are defined. */
export async function collectRollout(
  client: EnvClient,
  model: PolicyModel,
  instances: string[],
  steps: number,
  rng: Rng,
  pool?: ScenarioPool,
): Promise<CollectStats> {
  const out: RolloutStep[] = [];
  let episodes = 0;
  let rewardSum = 0;
  let instanceIdx = 0;
  while (out.length < steps) {
    const name = instances[instanceIdx % instances.length];
    instanceIdx++;
    const seed = pool ? pool.base + (episodes % pool.size) : undefined;
    let reply = await client.reset(name, seed);
    const episode: RolloutStep[] = [];
    while (!reply.done) {
      const graph: Graph = decodeObservation(reply.observation!);
      const { probs, value } = actionDistribution(model, batchGraphs([graph]));
      const choice = sampleIndex(probs, rng);
      episode.push({ graph, choice, logProb: Math.log(probs[choice]), value, ret: 0, advantage: 0 });
      reply = await client.step(graph.candidates[choice]);
    }
    assignEpisodeReturns(episode, reply.reward!, DEFAULT_PPO);
    out.push(...episode);
    episodes++;
    rewardSum += reply.reward!;
  }
  return { steps: out, episodes, meanReward: rewardSum / episodes };
}

export type PolicyMode = "greedy" | "random";

/**
 * Mean sampled makespan of a policy over `nSeeds` scenario seeds per
 * instance. Seeds are explicit so two policies can be compared on exactly
 * the same scenarios.
 */
export async function evaluatePolicy(
  client: EnvClient,
  model: PolicyModel | null,
  instances: string[],
  mode: PolicyMode,
  nSeeds: number,
  seedBase: number,
  rngSeed = 123,
): Promise<number> {
  const rng = new Rng(rngSeed);
  let total = 0;
  let count = 0;
  for (const name of instances) {
    for (let k = 0; k < nSeeds; k++) {
      let reply = await client.reset(name, seedBase + k);
      while (!reply.done) {
        const graph = decodeObservation(reply.observation!);
        let choice: number;
        if (mode === "random") {
          choice = rng.int(graph.candidates.length);
        } else {
          const { probs } = actionDistribution(model!, batchGraphs([graph]));
          choice = argmax(probs);
        }
        reply = await client.step(graph.candidates[choice]);
      }
      total += reply.info!.sampled_makespan as number;
      count++;
    }
  }
  return total / count;
}

export interface IterationLog {
  iteration: number;
  episodes: number;
  meanReward: number;
  policyLoss: number;
  valueLoss: number;
  greedyMakespan?: number;
}

export async function trainLoop(
  client: EnvClient,
  model: PolicyModel,
  instances: string[],
  config: TrainConfig,
  onIteration?: (log: IterationLog) => void | Promise<void>,
): Promise<IterationLog[]> {
  const optimizer = new RAdam({ lr: config.lr, weightDecay: config.weightDecay });
  const rng = new Rng(config.seed ^ 0x51eaf00d);
  const history: IterationLog[] = [];
  for (let it = 0; it < config.iterations; it++) {
    const collected = await collectRollout(client, model, instances, config.rolloutSteps, rng, config.scenarioPool);
    const stats = ppoUpdate(model, optimizer, collected.steps, rng, config.ppo);
    const log: IterationLog = {
      iteration: it,
      episodes: collected.episodes,
      meanReward: collected.meanReward,
      policyLoss: stats.policyLoss,
      valueLoss: stats.valueLoss,
    };
    history.push(log);
    if (onIteration) await onIteration(log);
  }
  return history;
}

// ---------------------------------------------------------------------------
// command line: node dist/train.js --port 5555 [--host h] [--iterations n] ...

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--")) throw new Error(`unexpected argument ${argv[i]}`);
    out[argv[i].slice(2)] = argv[i + 1];
  }
  return out;
}

export async function main(argv: string[]): Promise<void> {
  const args = parseArgs(argv);
  if (!args.port) throw new Error("--port is required (launch `flowsched serve --port 0` first)");
  const client = await EnvClient.connect(args.host ?? "127.0.0.1", Number(args.port));
  const instances = await client.instances();
  const config: TrainConfig = {
    ...DEFAULT_TRAIN,
    iterations: Number(args.iterations ?? DEFAULT_TRAIN.iterations),
    rolloutSteps: Number(args.rollout ?? DEFAULT_TRAIN.rolloutSteps),
    lr: Number(args.lr ?? DEFAULT_TRAIN.lr),
    seed: Number(args.seed ?? DEFAULT_TRAIN.seed),
    evalSeeds: Number(args["eval-seeds"] ?? DEFAULT_TRAIN.evalSeeds),
  };
  const model = new PolicyModel({
    hidden: Number(args.hidden ?? 24),
    seed: config.seed + 1,
  });

  const curve: string[] = ["iteration,episodes,mean_reward,policy_loss,value_loss"];
  console.log(`training on ${instances.length} instances: ${instances.join(", ")}`);
  await trainLoop(client, model, instances, config, (log) => {
    curve.push(
      [log.iteration, log.episodes, log.meanReward.toFixed(4), log.policyLoss.toFixed(4), log.valueLoss.toFixed(4)].join(","),
    );
    console.log(
      `iter ${log.iteration}: episodes ${log.episodes} mean reward ${log.meanReward.toFixed(3)} ` +
        `policy loss ${log.policyLoss.toFixed(4)} value loss ${log.valueLoss.toFixed(4)}`,
    );
  });

  const greedy = await evaluatePolicy(client, model, instances, "greedy", config.evalSeeds, config.evalSeedBase);
  const random = await evaluatePolicy(client, null, instances, "random", config.evalSeeds, config.evalSeedBase);
  console.log(`greedy mean sampled makespan ${greedy.toFixed(2)} vs uniform-random ${random.toFixed(2)}`);

  if (args.out) {
    fs.writeFileSync(args.out, model.serialize());
    fs.writeFileSync(args.out.replace(/(\.json)?$/, ".curve.csv"), curve.join("\n") + "\n");
    console.log(`checkpoint written to ${args.out}`);
  }
  await client.close();
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(process.argv.slice(2)).catch((err) => {
    console.error(err);
    process.exit(1);
  });
}
