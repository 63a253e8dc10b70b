import { describe, expect, it } from "vitest";

import { batchGraphs, Graph, NODE_INPUT_DIM } from "../src/graph.js";
import { actionDistribution, PolicyModel, Param } from "../src/model.js";
import { assignEpisodeReturns, DEFAULT_PPO, ppoUpdate, RolloutStep } from "../src/ppo.js";
import { RAdam } from "../src/radam.js";
import { Rng } from "../src/rng.js";

/** two-candidate single-decision graph with distinguishable node features */
function banditGraph(): Graph {
  const nNodes = 4; // 3 tasks + pool
  const nodeInput = new Float64Array(nNodes * NODE_INPUT_DIM);
  for (let i = 0; i < nNodes; i++) nodeInput[i * NODE_INPUT_DIM + (i === 3 ? 2 : 0)] = 1;
  nodeInput[0 * NODE_INPUT_DIM + 4] = 0.3;
  nodeInput[1 * NODE_INPUT_DIM + 4] = 0.9;
  const src: number[] = [], dst: number[] = [], type: number[] = [], attr: number[] = [];
  const push = (s: number, d: number, t: number) => {
    src.push(s);
    dst.push(d);
    type.push(t);
    attr.push(0, 0, 0, 0);
  };
  for (let t = 0; t < 3; t++) push(t, 3, 6); // task->pool
  for (let t = 0; t < 3; t++) push(t, t, 8); // self loops
  push(3, 3, 10);
  return {
    nNodes,
    nTasks: 3,
    nodeInput,
    src: Int32Array.from(src),
    dst: Int32Array.from(dst),
    edgeType: Int32Array.from(type),
    edgeAttr: Float64Array.from(attr),
    candidates: Int32Array.from([0, 1]),
    poolNode: 3,
  };
}

describe("episode returns", () => {
  function step(value: number): RolloutStep {
    return { graph: banditGraph(), choice: 0, logProb: -0.7, value, ret: 0, advantage: 0 };
  }

  it("terminal-only reward propagates undiscounted to every step", () => {
    const steps = [step(0.1), step(-0.3), step(0.0)];
    assignEpisodeReturns(steps, -1.5, DEFAULT_PPO);
    for (const s of steps) expect(s.ret).toBe(-1.5);
    expect(steps[0].advantage).toBeCloseTo(-1.6, 12);
    expect(steps[1].advantage).toBeCloseTo(-1.2, 12);
  });

  it("a discount below one decays the terminal reward backwards", () => {
    const steps = [step(0), step(0), step(0)];
    assignEpisodeReturns(steps, -8, { ...DEFAULT_PPO, gamma: 0.5 });
    expect(steps.map((s) => s.ret)).toEqual([-2, -4, -8]);
  });
});

describe("policy optimization", () => {
  it("learns to prefer the rewarded arm of a one-step bandit", () => {
    const model = new PolicyModel({ hidden: 12, layers: 2, seed: 2 });
    const opt = new RAdam({ lr: 3e-3 });
    const rng = new Rng(0);
    const graph = banditGraph();
    const probBest = () => actionDistribution(model, batchGraphs([graph])).probs[0];
    const before = probBest();
    for (let iter = 0; iter < 30; iter++) {
      const steps: RolloutStep[] = [];
      for (let k = 0; k < 64; k++) {
        const { probs, value } = actionDistribution(model, batchGraphs([graph]));
        const choice = rng.next() < probs[0] ? 0 : 1;
        const reward = choice === 0 ? 1 : 0;
        steps.push({ graph, choice, logProb: Math.log(probs[choice]), value, ret: reward, advantage: reward - value });
      }
      ppoUpdate(model, opt, steps, rng, { ...DEFAULT_PPO, minibatch: 64 });
    }
    const after = probBest();
    expect(before).toBeLessThan(0.7);
    expect(after).toBeGreaterThan(0.8);
  });

  it("reports finite losses and covers all minibatches", () => {
    const model = new PolicyModel({ hidden: 8, layers: 1, seed: 4 });
    const opt = new RAdam();
    const rng = new Rng(5);
    const graph = banditGraph();
    const steps: RolloutStep[] = [];
    for (let k = 0; k < 50; k++) {
      const { probs, value } = actionDistribution(model, batchGraphs([graph]));
      const choice = k % 2;
      steps.push({ graph, choice, logProb: Math.log(probs[choice]), value, ret: -1, advantage: -1 - value });
    }
    const stats = ppoUpdate(model, opt, steps, rng, { ...DEFAULT_PPO, minibatch: 16 });
    expect(Number.isFinite(stats.policyLoss)).toBe(true);
    expect(Number.isFinite(stats.valueLoss)).toBe(true);
    expect(stats.minibatches).toBe(4 * DEFAULT_PPO.epochs);
  });
});

describe("rectified adaptive-moment optimizer", () => {
  function quadratic(): { param: Param; loss: () => number } {
    const data = Float64Array.from([5, -3]);
    const param: Param = { name: "w", rows: 2, cols: 1, data, grad: new Float64Array(2) };
    return { param, loss: () => data[0] * data[0] + data[1] * data[1] };
  }

  it("descends a quadratic", () => {
    // early steps run unrectified (momentum only), so give the schedule
    // room before asserting near-convergence
    const { param, loss } = quadratic();
    const opt = new RAdam({ lr: 0.05, weightDecay: 0 });
    const start = loss();
    for (let t = 0; t < 600; t++) {
      param.grad[0] = 2 * param.data[0];
      param.grad[1] = 2 * param.data[1];
      opt.step([param]);
    }
    expect(loss()).toBeLessThan(start * 1e-3);
  });

  it("decoupled weight decay shrinks parameters even with zero gradients", () => {
    const param: Param = { name: "w", rows: 1, cols: 1, data: Float64Array.from([2]), grad: new Float64Array(1) };
    const opt = new RAdam({ lr: 0.1, weightDecay: 0.5 });
    for (let t = 0; t < 10; t++) opt.step([param]);
    expect(Math.abs(param.data[0])).toBeLessThan(2);
    expect(Math.abs(param.data[0])).toBeGreaterThan(0);
  });
});

describe("model checkpoints", () => {
  it("serialize/deserialize round-trips parameters and behaviour", () => {
    const model = new PolicyModel({ hidden: 10, layers: 2, seed: 8 });
    const graph = banditGraph();
    const before = actionDistribution(model, batchGraphs([graph])).probs;
    const clone = PolicyModel.deserialize(model.serialize());
    const after = actionDistribution(clone, batchGraphs([graph])).probs;
    expect(Array.from(after)).toEqual(Array.from(before));
  });
});
