/**
 * Clipped-surrogate policy optimization over rollout buffers.
 *
 * Rewards arrive only at episode end, and both the discount and the GAE
 * mixing default to 1, so every step of an episode carries the episode's
 * terminal reward as its return; advantages are return minus the critic's
 * estimate. Each collected batch is processed for a fixed number of epochs
 * in shuffled minibatches; there is no entropy bonus and no reward
 * clipping.
 */

import { Tape } from "./autodiff.js";
import { batchGraphs, Graph } from "./graph.js";
import { PolicyModel } from "./model.js";
import { RAdam } from "./radam.js";
import { Rng } from "./rng.js";

export interface RolloutStep {
  graph: Graph;
  /** index into graph.candidates of the action taken */
  choice: number;
  logProb: number;
  value: number;
  ret: number;
  advantage: number;
}

export interface PpoConfig {
  clip: number;
  epochs: number;
  minibatch: number;
  valueCoef: number;
  normalizeAdvantages: boolean;
  gamma: number;
  lambda: number;
}

export const DEFAULT_PPO: PpoConfig = {
  clip: 0.2,
  epochs: 3,
  minibatch: 256,
  valueCoef: 0.5,
  normalizeAdvantages: true,
  gamma: 1.0,
  lambda: 1.0,
};

/** Fill ret/advantage for one finished episode's steps (terminal-only reward). */
export function assignEpisodeReturns(steps: RolloutStep[], terminalReward: number, config: PpoConfig): void {
  // gamma = lambda = 1 collapses GAE to (terminal reward - value)
  let ret = terminalReward;
  for (let i = steps.length - 1; i >= 0; i--) {
    steps[i].ret = ret;
    steps[i].advantage = ret - steps[i].value;
    ret *= config.gamma;
  }
}

export interface UpdateStats {
  policyLoss: number;
  valueLoss: number;
  minibatches: number;
}

export function ppoUpdate(
  model: PolicyModel,
  optimizer: RAdam,
  steps: RolloutStep[],
  rng: Rng,
  config: PpoConfig = DEFAULT_PPO,
): UpdateStats {
  const order = new Int32Array(steps.length);
  let policyLossTotal = 0;
  let valueLossTotal = 0;
  let minibatches = 0;

  for (let epoch = 0; epoch < config.epochs; epoch++) {
    for (let i = 0; i < order.length; i++) order[i] = i;
    rng.shuffle(order);
    for (let off = 0; off < order.length; off += config.minibatch) {
      const idx = Array.from(order.slice(off, off + config.minibatch));
      const sample = idx.map((i) => steps[i]);
      const batch = batchGraphs(sample.map((s) => s.graph));

      const advantages = new Float64Array(sample.length);
      for (let i = 0; i < sample.length; i++) advantages[i] = sample[i].advantage;
      if (config.normalizeAdvantages && sample.length > 1) {
        let mean = 0;
        for (const a of advantages) mean += a;
        mean /= advantages.length;
        let varSum = 0;
        for (const a of advantages) varSum += (a - mean) * (a - mean);
        const std = Math.sqrt(varSum / advantages.length) + 1e-8;
        for (let i = 0; i < advantages.length; i++) advantages[i] = (advantages[i] - mean) / std;
      }

      // chosen candidate rows in the batched logits tensor
      const chosenRow = new Int32Array(sample.length);
      let candOff = 0;
      for (let g = 0; g < sample.length; g++) {
        chosenRow[g] = candOff + sample[g].choice;
        candOff += sample[g].graph.candidates.length;
      }
      const identityRows = new Int32Array(candOff);
      for (let i = 0; i < candOff; i++) identityRows[i] = i;

      const oldLogProbs = new Float64Array(sample.map((s) => s.logProb));
      const returns = new Float64Array(sample.map((s) => s.ret));

      const tape = new Tape();
      const bound = model.bindParams(tape);
      const { candidateLogits, values } = model.forward(batch, tape, bound);

      const newLogProbs = tape.maskedChoiceLogProb(candidateLogits, identityRows, batch.candidateGroup, chosenRow);
      const ratio = tape.exp(tape.subConst(newLogProbs, oldLogProbs));
      const surrogate = tape.minPair(
        tape.mulConst(ratio, advantages),
        tape.mulConst(tape.clamp(ratio, 1 - config.clip, 1 + config.clip), advantages),
      );
      const policyLoss = tape.scale(tape.mean(surrogate), -1);
      const valueLoss = tape.mean(tape.square(tape.subConst(values, returns)));
      const loss = tape.add(policyLoss, tape.scale(valueLoss, config.valueCoef));

      model.zeroGrads();
      tape.backward(loss);
      model.accumulateGrads(bound);
      optimizer.step(model.params.values());

      policyLossTotal += policyLoss.item();
      valueLossTotal += valueLoss.item();
      minibatches += 1;
    }
  }
  return {
    policyLoss: policyLossTotal / Math.max(minibatches, 1),
    valueLoss: valueLossTotal / Math.max(minibatches, 1),
    minibatches,
  };
}
