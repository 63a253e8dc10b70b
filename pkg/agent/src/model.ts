/**
 * Graph-attention policy/value network over scheduling observations.
 *
 * Node inputs pass through a 3-layer perceptron; each of the message-passing
 * layers embeds edges (type embedding + linear map of the 4 attribute
 * channels, summed), computes attention over each node's incoming edges
 * (self loops included, so every node attends to itself), and applies a
 * residual update x_i' = x_i + sum_j alpha_ij (theta_t x_j). The actor head
 * reads the concatenated per-layer states of candidate task nodes; the
 * critic head reads the concatenated per-layer states of the pool node.
 * GELU activations throughout.
 */

import { Tape, Tensor } from "./autodiff.js";
import { EDGE_ATTRS, GraphBatch, N_EDGE_TYPES, NODE_INPUT_DIM } from "./graph.js";
import { Rng } from "./rng.js";

export interface ModelConfig {
  hidden: number;
  layers: number;
  headHidden: number;
  leakySlope: number;
  /** zero the message projections so each layer starts as the identity */
  zeroMessageInit: boolean;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  hidden: 24,
  layers: 8,
  headHidden: 24,
  leakySlope: 0.2,
  zeroMessageInit: false,
  seed: 1,
};

export interface Param {
  name: string;
  rows: number;
  cols: number;
  data: Float64Array;
  grad: Float64Array;
}

export class PolicyModel {
  readonly config: ModelConfig;
  readonly params = new Map<string, Param>();

  constructor(config: Partial<ModelConfig> = {}) {
    this.config = { ...DEFAULT_CONFIG, ...config };
    const rng = new Rng(this.config.seed);
    const H = this.config.hidden;
    const HH = this.config.headHidden;

    const glorot = (name: string, rows: number, cols: number) => {
      const limit = Math.sqrt(6 / (rows + cols));
      const data = new Float64Array(rows * cols);
      for (let i = 0; i < data.length; i++) data[i] = (rng.next() * 2 - 1) * limit;
      this.addParam(name, rows, cols, data);
    };
    const zeros = (name: string, rows: number, cols: number) => {
      this.addParam(name, rows, cols, new Float64Array(rows * cols));
    };

    glorot("embed.W0", NODE_INPUT_DIM, H);
    zeros("embed.b0", 1, H);
    glorot("embed.W1", H, H);
    zeros("embed.b1", 1, H);
    glorot("embed.W2", H, H);
    zeros("embed.b2", 1, H);

    for (let l = 0; l < this.config.layers; l++) {
      glorot(`L${l}.typeEmb`, N_EDGE_TYPES, H);
      glorot(`L${l}.attrW`, EDGE_ATTRS, H);
      glorot(`L${l}.thetaS`, H, H);
      if (this.config.zeroMessageInit) {
        zeros(`L${l}.thetaT`, H, H);
        zeros(`L${l}.attn`, 1, H);
      } else {
        glorot(`L${l}.thetaT`, H, H);
        glorot(`L${l}.attn`, 1, H);
      }
    }

    const catDim = this.config.layers * H;
    glorot("actor.W0", catDim, HH);
    zeros("actor.b0", 1, HH);
    glorot("actor.W1", HH, 1);
    zeros("actor.b1", 1, 1);
    glorot("critic.W0", catDim, HH);
    zeros("critic.b0", 1, HH);
    glorot("critic.W1", HH, 1);
    zeros("critic.b1", 1, 1);
  }

  private addParam(name: string, rows: number, cols: number, data: Float64Array) {
    this.params.set(name, { name, rows, cols, data, grad: new Float64Array(rows * cols) });
  }

  zeroGrads(): void {
    for (const p of this.params.values()) p.grad.fill(0);
  }

  /**
   * Forward pass over a (possibly batched) graph. When `tape` is given the
   * pass is differentiable and `bound` maps param names to tape tensors
   * whose grads must be folded back via `accumulateGrads`.
   */
  forward(batch: GraphBatch, tape: Tape, bound?: Map<string, Tensor>) {
    const cfg = this.config;
    const get = (name: string): Tensor => {
      if (bound) return bound.get(name)!;
      const p = this.params.get(name)!;
      return tape.constant(p.rows, p.cols, p.data);
    };

    const input = tape.constant(batch.nNodes, NODE_INPUT_DIM, batch.nodeInput);
    const attr = tape.constant(batch.edgeType.length, EDGE_ATTRS, batch.edgeAttr);

    let x = tape.gelu(tape.addBias(tape.matmul(input, get("embed.W0")), get("embed.b0")));
    x = tape.gelu(tape.addBias(tape.matmul(x, get("embed.W1")), get("embed.b1")));
    x = tape.addBias(tape.matmul(x, get("embed.W2")), get("embed.b2"));

    const layerOuts: Tensor[] = [];
    for (let l = 0; l < cfg.layers; l++) {
      // type embedding plus a linear map of the 4 attribute channels
      const typeVec = tape.gatherRows(get(`L${l}.typeEmb`), batch.edgeType);
      const edgeVec = tape.add(typeVec, tape.matmul(attr, get(`L${l}.attrW`)));

      const s = tape.matmul(x, get(`L${l}.thetaS`));
      const t = tape.matmul(x, get(`L${l}.thetaT`));
      const z = tape.leakyRelu(
        tape.add(tape.add(tape.gatherRows(s, batch.dst), tape.gatherRows(t, batch.src)), edgeVec),
        cfg.leakySlope,
      );
      const logits = tape.matVec(z, get(`L${l}.attn`));
      const weights = tape.segmentSoftmax(logits, batch.dst, batch.nNodes);
      const messages = tape.gatherRows(t, batch.src);
      const aggregated = tape.weightedSegmentSum(messages, weights, batch.dst, batch.nNodes);
      x = tape.add(aggregated, x);
      layerOuts.push(x);
    }

    const cat = tape.concatCols(layerOuts);

    const candCat = tape.gatherRows(cat, batch.candidateRows);
    const actorH = tape.gelu(tape.addBias(tape.matmul(candCat, get("actor.W0")), get("actor.b0")));
    const candidateLogits = tape.addBias(tape.matmul(actorH, get("actor.W1")), get("actor.b1"));

    const poolCat = tape.gatherRows(cat, batch.poolRows);
    const criticH = tape.gelu(tape.addBias(tape.matmul(poolCat, get("critic.W0")), get("critic.b0")));
    const values = tape.addBias(tape.matmul(criticH, get("critic.W1")), get("critic.b1"));

    return { candidateLogits, values, layerOuts };
  }

  bindParams(tape: Tape): Map<string, Tensor> {
    const bound = new Map<string, Tensor>();
    for (const p of this.params.values()) bound.set(p.name, tape.param(p.rows, p.cols, p.data));
    return bound;
  }

  accumulateGrads(bound: Map<string, Tensor>): void {
    for (const p of this.params.values()) {
      const t = bound.get(p.name)!;
      if (!t.grad) continue;
      for (let i = 0; i < p.grad.length; i++) p.grad[i] += t.grad[i];
    }
  }

  serialize(): string {
    const doc: Record<string, { rows: number; cols: number; data: number[] }> = {};
    for (const p of this.params.values()) doc[p.name] = { rows: p.rows, cols: p.cols, data: Array.from(p.data) };
    return JSON.stringify({ config: this.config, params: doc });
  }

  static deserialize(text: string): PolicyModel {
    const doc = JSON.parse(text);
    const model = new PolicyModel(doc.config);
    for (const [name, entry] of Object.entries<any>(doc.params)) {
      const p = model.params.get(name);
      if (!p || p.rows !== entry.rows || p.cols !== entry.cols) throw new Error(`checkpoint mismatch at ${name}`);
      p.data.set(entry.data);
    }
    return model;
  }
}

/** Probabilities over the candidate actions of a single decoded graph. */
export function actionDistribution(model: PolicyModel, batch: GraphBatch): { probs: Float64Array; value: number } {
  const tape = new Tape();
  const { candidateLogits, values } = model.forward(batch, tape);
  const n = candidateLogits.rows;
  let max = -Infinity;
  for (let i = 0; i < n; i++) max = Math.max(max, candidateLogits.data[i]);
  const probs = new Float64Array(n);
  let sum = 0;
  for (let i = 0; i < n; i++) {
    probs[i] = Math.exp(candidateLogits.data[i] - max);
    sum += probs[i];
  }
  for (let i = 0; i < n; i++) probs[i] /= sum;
  return { probs, value: values.data[0] };
}
