import { describe, expect, it } from "vitest";
import { Tape, Tensor } from "../src/autodiff.js";
import { GraphBatch, NODE_INPUT_DIM, EDGE_ATTRS } from "../src/graph.js";
import { PolicyModel } from "../src/model.js";
import { Rng } from "../src/rng.js";

/** A small synthetic batch: 1 graph, 3 tasks + 1 resource + pool, with self
 * loops on every node so each node attends to itself. */
function tinyBatch(rng: Rng): GraphBatch {
  const nNodes = 5;
  const nodeInput = new Float64Array(nNodes * NODE_INPUT_DIM);
  for (let i = 0; i < nodeInput.length; i++) nodeInput[i] = rng.normal() * 0.3;
  const src: number[] = [];
  const dst: number[] = [];
  const type: number[] = [];
  const attr: number[] = [];
  const push = (s: number, d: number, t: number, a: number[] = [0, 0, 0, 0]) => {
    src.push(s);
    dst.push(d);
    type.push(t);
    attr.push(...a);
  };
  push(0, 1, 0); // precedence
  push(1, 0, 1); // reverse
  push(0, 2, 2, [0.5, 1, 1, 1]); // flow
  push(2, 0, 3, [0.5, 1, 1, 1]);
  push(1, 3, 4, [0.25, 0, 0, 0]); // task->resource
  push(3, 1, 5, [0.25, 0, 0, 0]);
  for (let t = 0; t < 3; t++) push(t, 4, 6); // task->pool
  push(3, 4, 7); // resource->pool
  for (let t = 0; t < 3; t++) push(t, t, 8); // task self loops
  push(3, 3, 9);
  push(4, 4, 10);
  return {
    nNodes,
    nodeInput,
    src: Int32Array.from(src),
    dst: Int32Array.from(dst),
    edgeType: Int32Array.from(type),
    edgeAttr: Float64Array.from(attr),
    poolRows: Int32Array.from([4]),
    candidateRows: Int32Array.from([1, 2]),
    candidateGroup: Int32Array.from([0, 0]),
  };
}

describe("attention layer", () => {
  it("attention weights over each in-neighbourhood (self included) sum to 1", () => {
    const rng = new Rng(7);
    const batch = tinyBatch(rng);
    const tape = new Tape();
    const logits = tape.constant(batch.src.length, 1, Float64Array.from({ length: batch.src.length }, () => rng.normal()));
    const weights = tape.segmentSoftmax(logits, batch.dst, batch.nNodes);
    const sums = new Float64Array(batch.nNodes);
    for (let e = 0; e < batch.src.length; e++) sums[batch.dst[e]] += weights.data[e];
    for (let n = 0; n < batch.nNodes; n++) {
      expect(Math.abs(sums[n] - 1)).toBeLessThan(1e-6);
    }
  });

  it("a single node with only a self loop keeps weight 1 on itself", () => {
    const tape = new Tape();
    const logits = tape.constant(1, 1, Float64Array.from([0.37]));
    const weights = tape.segmentSoftmax(logits, Int32Array.from([0]), 1);
    expect(weights.data[0]).toBe(1);
  });

  it("zero-initialized message weights make every layer the identity", () => {
    const rng = new Rng(3);
    const batch = tinyBatch(rng);
    const model = new PolicyModel({ hidden: 8, layers: 4, zeroMessageInit: true, seed: 5 });
    const tape = new Tape();
    const { layerOuts } = model.forward(batch, tape);
    for (let l = 1; l < layerOuts.length; l++) {
      for (let i = 0; i < layerOuts[0].size; i++) {
        expect(layerOuts[l].data[i]).toBeCloseTo(layerOuts[0].data[i], 12);
      }
    }
  });
});

describe("gradient checks", () => {
  function lossOf(model: PolicyModel, batch: GraphBatch): number {
    const tape = new Tape();
    const { candidateLogits, values } = model.forward(batch, tape);
    let s = 0;
    for (let i = 0; i < candidateLogits.size; i++) s += Math.sin((i + 1) * 0.7) * candidateLogits.data[i];
    s += 0.5 * values.data[0];
    return s;
  }

  it("analytic gradients of the attention stack match central differences at 1e-4 relative", () => {
    const rng = new Rng(11);
    const batch = tinyBatch(rng);
    const model = new PolicyModel({ hidden: 6, layers: 1, headHidden: 6, seed: 9 });

    // analytic gradients of the same scalar loss
    const tape = new Tape();
    const bound = model.bindParams(tape);
    const { candidateLogits, values } = model.forward(batch, tape, bound);
    const coeffs = new Float64Array(candidateLogits.size);
    for (let i = 0; i < coeffs.length; i++) coeffs[i] = Math.sin((i + 1) * 0.7);
    const weighted = tape.mulConst(candidateLogits, coeffs);
    const loss = tape.add(tape.sum(weighted), tape.scale(tape.sum(values), 0.5));
    model.zeroGrads();
    tape.backward(loss);
    model.accumulateGrads(bound);

    const eps = 1e-6;
    const checked = ["L0.thetaS", "L0.thetaT", "L0.attn", "L0.typeEmb", "L0.attrW", "embed.W0", "actor.W0", "critic.W0"];
    let comparisons = 0;
    for (const name of checked) {
      const p = model.params.get(name)!;
      const probe = Math.min(p.data.length, 10);
      for (let k = 0; k < probe; k++) {
        const i = Math.floor((k * p.data.length) / probe);
        const keep = p.data[i];
        p.data[i] = keep + eps;
        const up = lossOf(model, batch);
        p.data[i] = keep - eps;
        const down = lossOf(model, batch);
        p.data[i] = keep;
        const numeric = (up - down) / (2 * eps);
        const analytic = p.grad[i];
        const scale = Math.max(Math.abs(numeric), Math.abs(analytic), 1e-6);
        expect(Math.abs(numeric - analytic) / scale).toBeLessThan(1e-4);
        comparisons++;
      }
    }
    expect(comparisons).toBeGreaterThan(50);
  });

  it("masked-out logits receive zero probability and zero gradient", () => {
    const tape = new Tape();
    const logits = tape.param(5, 1, Float64Array.from([0.3, -1.2, 2.0, 0.1, -0.4]));
    // only rows 1 and 3 are candidates; chosen action is row 3
    const logProb = tape.maskedChoiceLogProb(
      logits,
      Int32Array.from([1, 3]),
      Int32Array.from([0, 0]),
      Int32Array.from([3]),
    );
    const expected = logits.data[3] - Math.log(Math.exp(logits.data[1]) + Math.exp(logits.data[3]));
    expect(logProb.data[0]).toBeCloseTo(expected, 12);
    tape.backward(tape.sum(logProb));
    const grad = logits.grad!;
    expect(grad[0]).toBe(0);
    expect(grad[2]).toBe(0);
    expect(grad[4]).toBe(0);
    expect(Math.abs(grad[1])).toBeGreaterThan(0);
    expect(grad[1] + grad[3]).toBeCloseTo(0, 12); // softmax gradient sums to 0
  });

  it("finite differences confirm the segment softmax backward", () => {
    const rng = new Rng(4);
    const n = 7;
    const seg = Int32Array.from([0, 0, 1, 1, 1, 2, 2]);
    const base = Float64Array.from({ length: n }, () => rng.normal());
    const coeff = Float64Array.from({ length: n }, () => rng.normal());

    const lossAt = (vals: Float64Array) => {
      const tape = new Tape();
      const l = tape.constant(n, 1, vals);
      const w = tape.segmentSoftmax(l, seg, 3);
      let s = 0;
      for (let i = 0; i < n; i++) s += coeff[i] * w.data[i];
      return s;
    };

    const tape = new Tape();
    const logits = tape.param(n, 1, Float64Array.from(base));
    const weights = tape.segmentSoftmax(logits, seg, 3);
    const loss = tape.sum(tape.mulConst(weights, coeff));
    tape.backward(loss);

    const eps = 1e-6;
    for (let i = 0; i < n; i++) {
      const perturbed = Float64Array.from(base);
      perturbed[i] = base[i] + eps;
      const up = lossAt(perturbed);
      perturbed[i] = base[i] - eps;
      const down = lossAt(perturbed);
      const numeric = (up - down) / (2 * eps);
      const scale = Math.max(Math.abs(numeric), Math.abs(logits.grad![i]), 1e-6);
      expect(Math.abs(numeric - logits.grad![i]) / scale).toBeLessThan(1e-4);
    }
  });
});
