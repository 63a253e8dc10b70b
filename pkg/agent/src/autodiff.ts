/**
 * Minimal reverse-mode autodiff over float64 buffers.
 *
 * Tensors are dense row-major matrices (vectors are [n, 1]). Operations
 * record themselves on a tape; `backward(loss)` seeds d(loss)=1 and walks
 * the tape in reverse. Gradients are exact, which is what makes central
 * finite-difference checks at 1e-4 relative tolerance meaningful.
 */

export class Tensor {
  readonly rows: number;
  readonly cols: number;
  readonly data: Float64Array;
  grad: Float64Array | null = null;
  readonly requiresGrad: boolean;
  backwardFn: (() => void) | null = null;
  readonly parents: Tensor[];

  constructor(rows: number, cols: number, data?: Float64Array, requiresGrad = false, parents: Tensor[] = []) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    this.requiresGrad = requiresGrad;
    this.parents = parents;
  }

  get size(): number {
    return this.rows * this.cols;
  }

  ensureGrad(): Float64Array {
    if (!this.grad) this.grad = new Float64Array(this.size);
    return this.grad;
  }

  item(): number {
    if (this.size !== 1) throw new Error(`item() on tensor of size ${this.size}`);
    return this.data[0];
  }
}

export class Tape {
  private nodes: Tensor[] = [];

  /** A trainable tensor (gradients accumulate across backward calls until zeroed). */
  param(rows: number, cols: number, data: Float64Array): Tensor {
    return new Tensor(rows, cols, data, true);
  }

  constant(rows: number, cols: number, data: Float64Array): Tensor {
    return new Tensor(rows, cols, data, false);
  }

  private track(out: Tensor): Tensor {
    if (out.requiresGrad) this.nodes.push(out);
    return out;
  }

  private result(rows: number, cols: number, parents: Tensor[], backwardFn: (out: Tensor) => void): Tensor {
    const needsGrad = parents.some((p) => p.requiresGrad);
    const out = new Tensor(rows, cols, undefined, needsGrad, parents);
    if (needsGrad) out.backwardFn = () => backwardFn(out);
    return this.track(out);
  }

  /** C = A (n,k) x B (k,m) */
  matmul(a: Tensor, b: Tensor): Tensor {
    if (a.cols !== b.rows) throw new Error(`matmul shape mismatch ${a.cols} vs ${b.rows}`);
    const n = a.rows, k = a.cols, m = b.cols;
    const out = this.result(n, m, [a, b], (o) => {
      const g = o.grad!;
      if (a.requiresGrad) {
        const ga = a.ensureGrad();
        for (let i = 0; i < n; i++)
          for (let j = 0; j < m; j++) {
            const gij = g[i * m + j];
            if (gij === 0) continue;
            for (let p = 0; p < k; p++) ga[i * k + p] += gij * b.data[p * m + j];
          }
      }
      if (b.requiresGrad) {
        const gb = b.ensureGrad();
        for (let i = 0; i < n; i++)
          for (let p = 0; p < k; p++) {
            const aip = a.data[i * k + p];
            if (aip === 0) continue;
            for (let j = 0; j < m; j++) gb[p * m + j] += aip * g[i * m + j];
          }
      }
    });
    for (let i = 0; i < n; i++)
      for (let p = 0; p < k; p++) {
        const aip = a.data[i * k + p];
        if (aip === 0) continue;
        for (let j = 0; j < m; j++) out.data[i * m + j] += aip * b.data[p * m + j];
      }
    return out;
  }

  /** Y = X + b broadcast over rows; b is [m,1] or [1,m]. */
  addBias(x: Tensor, b: Tensor): Tensor {
    const m = x.cols;
    if (b.size !== m) throw new Error("bias size mismatch");
    const out = this.result(x.rows, m, [x, b], (o) => {
      const g = o.grad!;
      if (x.requiresGrad) {
        const gx = x.ensureGrad();
        for (let i = 0; i < g.length; i++) gx[i] += g[i];
      }
      if (b.requiresGrad) {
        const gb = b.ensureGrad();
        for (let i = 0; i < x.rows; i++) for (let j = 0; j < m; j++) gb[j] += g[i * m + j];
      }
    });
    for (let i = 0; i < x.rows; i++) for (let j = 0; j < m; j++) out.data[i * m + j] = x.data[i * m + j] + b.data[j];
    return out;
  }

  add(a: Tensor, b: Tensor): Tensor {
    if (a.size !== b.size) throw new Error("add shape mismatch");
    const out = this.result(a.rows, a.cols, [a, b], (o) => {
      const g = o.grad!;
      if (a.requiresGrad) {
        const ga = a.ensureGrad();
        for (let i = 0; i < g.length; i++) ga[i] += g[i];
      }
      if (b.requiresGrad) {
        const gb = b.ensureGrad();
        for (let i = 0; i < g.length; i++) gb[i] += g[i];
      }
    });
    for (let i = 0; i < a.size; i++) out.data[i] = a.data[i] + b.data[i];
    return out;
  }

  sub(a: Tensor, b: Tensor): Tensor {
    if (a.size !== b.size) throw new Error("sub shape mismatch");
    const out = this.result(a.rows, a.cols, [a, b], (o) => {
      const g = o.grad!;
      if (a.requiresGrad) {
        const ga = a.ensureGrad();
        for (let i = 0; i < g.length; i++) ga[i] += g[i];
      }
      if (b.requiresGrad) {
        const gb = b.ensureGrad();
        for (let i = 0; i < g.length; i++) gb[i] -= g[i];
      }
    });
    for (let i = 0; i < a.size; i++) out.data[i] = a.data[i] - b.data[i];
    return out;
  }

  /** Y[i,:] = X[index[i],:] */
  gatherRows(x: Tensor, index: Int32Array): Tensor {
    const m = x.cols;
    const out = this.result(index.length, m, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < index.length; i++) {
        const r = index[i];
        for (let j = 0; j < m; j++) gx[r * m + j] += g[i * m + j];
      }
    });
    for (let i = 0; i < index.length; i++) {
      const r = index[i];
      for (let j = 0; j < m; j++) out.data[i * m + j] = x.data[r * m + j];
    }
    return out;
  }

  leakyRelu(x: Tensor, slope = 0.2): Tensor {
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) gx[i] += g[i] * (x.data[i] > 0 ? 1 : slope);
    });
    for (let i = 0; i < x.size; i++) out.data[i] = x.data[i] > 0 ? x.data[i] : slope * x.data[i];
    return out;
  }

  /** tanh-form gelu; the derivative is exact for this form. */
  gelu(x: Tensor): Tensor {
    const C = Math.sqrt(2 / Math.PI);
    const A = 0.044715;
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) {
        const v = x.data[i];
        const u = C * (v + A * v * v * v);
        const t = Math.tanh(u);
        const du = C * (1 + 3 * A * v * v);
        gx[i] += g[i] * (0.5 * (1 + t) + 0.5 * v * (1 - t * t) * du);
      }
    });
    for (let i = 0; i < x.size; i++) {
      const v = x.data[i];
      out.data[i] = 0.5 * v * (1 + Math.tanh(C * (v + A * v * v * v)));
    }
    return out;
  }

  /** y_i = X[i,:] . v  -> [n,1] */
  matVec(x: Tensor, v: Tensor): Tensor {
    const m = x.cols;
    if (v.size !== m) throw new Error("matVec size mismatch");
    const out = this.result(x.rows, 1, [x, v], (o) => {
      const g = o.grad!;
      if (x.requiresGrad) {
        const gx = x.ensureGrad();
        for (let i = 0; i < x.rows; i++) for (let j = 0; j < m; j++) gx[i * m + j] += g[i] * v.data[j];
      }
      if (v.requiresGrad) {
        const gv = v.ensureGrad();
        for (let i = 0; i < x.rows; i++) for (let j = 0; j < m; j++) gv[j] += g[i] * x.data[i * m + j];
      }
    });
    for (let i = 0; i < x.rows; i++) {
      let s = 0;
      for (let j = 0; j < m; j++) s += x.data[i * m + j] * v.data[j];
      out.data[i] = s;
    }
    return out;
  }

  /**
   * Softmax of logits [e,1] within segments (e.g. the incoming edges of
   * each destination node). Every segment present must be non-empty.
   */
  segmentSoftmax(logits: Tensor, segment: Int32Array, nSegments: number): Tensor {
    const e = logits.rows;
    const maxes = new Float64Array(nSegments).fill(-Infinity);
    for (let i = 0; i < e; i++) {
      const s = segment[i];
      if (logits.data[i] > maxes[s]) maxes[s] = logits.data[i];
    }
    const sums = new Float64Array(nSegments);
    const expv = new Float64Array(e);
    for (let i = 0; i < e; i++) {
      expv[i] = Math.exp(logits.data[i] - maxes[segment[i]]);
      sums[segment[i]] += expv[i];
    }
    const out = this.result(e, 1, [logits], (o) => {
      const g = o.grad!;
      const gl = logits.ensureGrad();
      const dot = new Float64Array(nSegments);
      for (let i = 0; i < e; i++) dot[segment[i]] += g[i] * out.data[i];
      for (let i = 0; i < e; i++) gl[i] += out.data[i] * (g[i] - dot[segment[i]]);
    });
    for (let i = 0; i < e; i++) out.data[i] = expv[i] / sums[segment[i]];
    return out;
  }

  /** O[s,:] = sum over rows with segment s of w_r * V[r,:] */
  weightedSegmentSum(values: Tensor, weights: Tensor, segment: Int32Array, nSegments: number): Tensor {
    const e = values.rows, m = values.cols;
    if (weights.size !== e) throw new Error("weight count mismatch");
    const out = this.result(nSegments, m, [values, weights], (o) => {
      const g = o.grad!;
      if (values.requiresGrad) {
        const gv = values.ensureGrad();
        for (let r = 0; r < e; r++) {
          const s = segment[r], w = weights.data[r];
          for (let j = 0; j < m; j++) gv[r * m + j] += w * g[s * m + j];
        }
      }
      if (weights.requiresGrad) {
        const gw = weights.ensureGrad();
        for (let r = 0; r < e; r++) {
          const s = segment[r];
          let acc = 0;
          for (let j = 0; j < m; j++) acc += values.data[r * m + j] * g[s * m + j];
          gw[r] += acc;
        }
      }
    });
    for (let r = 0; r < e; r++) {
      const s = segment[r], w = weights.data[r];
      for (let j = 0; j < m; j++) out.data[s * m + j] += w * values.data[r * m + j];
    }
    return out;
  }

  concatCols(parts: Tensor[]): Tensor {
    const n = parts[0].rows;
    const total = parts.reduce((acc, p) => acc + p.cols, 0);
    const out = this.result(n, total, parts, (o) => {
      const g = o.grad!;
      let off = 0;
      for (const p of parts) {
        if (p.requiresGrad) {
          const gp = p.ensureGrad();
          for (let i = 0; i < n; i++) for (let j = 0; j < p.cols; j++) gp[i * p.cols + j] += g[i * total + off + j];
        }
        off += p.cols;
      }
    });
    let off = 0;
    for (const p of parts) {
      if (p.rows !== n) throw new Error("concatCols row mismatch");
      for (let i = 0; i < n; i++) for (let j = 0; j < p.cols; j++) out.data[i * total + off + j] = p.data[i * p.cols + j];
      off += p.cols;
    }
    return out;
  }

  /**
   * Log-probability of a chosen row among candidate rows, per group: a
   * masked log-softmax where excluded rows get no probability mass and no
   * gradient.
   */
  maskedChoiceLogProb(
    logits: Tensor,
    candidateRows: Int32Array,
    candidateGroup: Int32Array,
    chosenRow: Int32Array,
  ): Tensor {
    const nGroups = chosenRow.length;
    const maxes = new Float64Array(nGroups).fill(-Infinity);
    for (let i = 0; i < candidateRows.length; i++) {
      const v = logits.data[candidateRows[i]];
      if (v > maxes[candidateGroup[i]]) maxes[candidateGroup[i]] = v;
    }
    const sums = new Float64Array(nGroups);
    for (let i = 0; i < candidateRows.length; i++) {
      sums[candidateGroup[i]] += Math.exp(logits.data[candidateRows[i]] - maxes[candidateGroup[i]]);
    }
    const out = this.result(nGroups, 1, [logits], (o) => {
      const g = o.grad!;
      const gl = logits.ensureGrad();
      for (let i = 0; i < candidateRows.length; i++) {
        const r = candidateRows[i], s = candidateGroup[i];
        const p = Math.exp(logits.data[r] - maxes[s]) / sums[s];
        gl[r] += g[s] * ((r === chosenRow[s] ? 1 : 0) - p);
      }
    });
    for (let s = 0; s < nGroups; s++) {
      out.data[s] = logits.data[chosenRow[s]] - (maxes[s] + Math.log(sums[s]));
    }
    return out;
  }

  exp(x: Tensor): Tensor {
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) gx[i] += g[i] * out.data[i];
    });
    for (let i = 0; i < x.size; i++) out.data[i] = Math.exp(x.data[i]);
    return out;
  }

  mulConst(x: Tensor, c: Float64Array | number): Tensor {
    const scale = typeof c === "number" ? null : c;
    const k = typeof c === "number" ? c : 0;
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) gx[i] += g[i] * (scale ? scale[i] : k);
    });
    for (let i = 0; i < x.size; i++) out.data[i] = x.data[i] * (scale ? scale[i] : k);
    return out;
  }

  subConst(x: Tensor, c: Float64Array): Tensor {
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) gx[i] += g[i];
    });
    for (let i = 0; i < x.size; i++) out.data[i] = x.data[i] - c[i];
    return out;
  }

  clamp(x: Tensor, lo: number, hi: number): Tensor {
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) {
        if (x.data[i] > lo && x.data[i] < hi) gx[i] += g[i];
      }
    });
    for (let i = 0; i < x.size; i++) out.data[i] = Math.min(hi, Math.max(lo, x.data[i]));
    return out;
  }

  /** elementwise minimum; ties route gradient to the first argument */
  minPair(a: Tensor, b: Tensor): Tensor {
    if (a.size !== b.size) throw new Error("minPair shape mismatch");
    const out = this.result(a.rows, a.cols, [a, b], (o) => {
      const g = o.grad!;
      for (let i = 0; i < g.length; i++) {
        if (a.data[i] <= b.data[i]) {
          if (a.requiresGrad) a.ensureGrad()[i] += g[i];
        } else if (b.requiresGrad) {
          b.ensureGrad()[i] += g[i];
        }
      }
    });
    for (let i = 0; i < a.size; i++) out.data[i] = Math.min(a.data[i], b.data[i]);
    return out;
  }

  square(x: Tensor): Tensor {
    const out = this.result(x.rows, x.cols, [x], (o) => {
      const g = o.grad!;
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) gx[i] += g[i] * 2 * x.data[i];
    });
    for (let i = 0; i < x.size; i++) out.data[i] = x.data[i] * x.data[i];
    return out;
  }

  mean(x: Tensor): Tensor {
    const n = x.size;
    const out = this.result(1, 1, [x], (o) => {
      const g = o.grad![0] / n;
      const gx = x.ensureGrad();
      for (let i = 0; i < n; i++) gx[i] += g;
    });
    let s = 0;
    for (let i = 0; i < n; i++) s += x.data[i];
    out.data[0] = s / n;
    return out;
  }

  sum(x: Tensor): Tensor {
    const out = this.result(1, 1, [x], (o) => {
      const g = o.grad![0];
      const gx = x.ensureGrad();
      for (let i = 0; i < x.size; i++) gx[i] += g;
    });
    let s = 0;
    for (let i = 0; i < x.size; i++) s += x.data[i];
    out.data[0] = s;
    return out;
  }

  scale(x: Tensor, k: number): Tensor {
    return this.mulConst(x, k);
  }

  backward(loss: Tensor): void {
    if (loss.size !== 1) throw new Error("backward expects a scalar loss");
    loss.ensureGrad()[0] = 1;
    for (let i = this.nodes.length - 1; i >= 0; i--) {
      const node = this.nodes[i];
      if (node.backwardFn && node.grad) node.backwardFn();
    }
  }
}
