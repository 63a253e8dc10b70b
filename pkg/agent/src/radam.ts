/**
 * Rectified adaptive-moment optimizer with decoupled weight decay.
 *
 * The variance rectification term switches the update between plain
 * momentum SGD (early steps, when the second-moment estimate is unreliable)
 * and the usual adaptive step; weight decay is applied directly to the
 * parameters, outside the adaptive scaling.
 */

import { Param } from "./model.js";

export interface RAdamConfig {
  lr: number;
  beta1: number;
  beta2: number;
  eps: number;
  weightDecay: number;
}

export const DEFAULT_RADAM: RAdamConfig = {
  lr: 3e-4,
  beta1: 0.9,
  beta2: 0.999,
  eps: 1e-8,
  weightDecay: 0.01,
};

export class RAdam {
  private readonly config: RAdamConfig;
  private readonly m = new Map<string, Float64Array>();
  private readonly v = new Map<string, Float64Array>();
  private t = 0;

  constructor(config: Partial<RAdamConfig> = {}) {
    this.config = { ...DEFAULT_RADAM, ...config };
  }

  step(params: Iterable<Param>): void {
    const { lr, beta1, beta2, eps, weightDecay } = this.config;
    this.t += 1;
    const t = this.t;
    const rhoInf = 2 / (1 - beta2) - 1;
    const beta2t = Math.pow(beta2, t);
    const rho = rhoInf - (2 * t * beta2t) / (1 - beta2t);
    const rectified = rho > 4;
    const rect = rectified
      ? Math.sqrt(((rho - 4) * (rho - 2) * rhoInf) / ((rhoInf - 4) * (rhoInf - 2) * rho))
      : 0;
    const mCorr = 1 - Math.pow(beta1, t);

    for (const p of params) {
      let m = this.m.get(p.name);
      let v = this.v.get(p.name);
      if (!m) {
        m = new Float64Array(p.data.length);
        v = new Float64Array(p.data.length);
        this.m.set(p.name, m);
        this.v.set(p.name, v!);
      }
      for (let i = 0; i < p.data.length; i++) {
        const g = p.grad[i];
        m[i] = beta1 * m[i] + (1 - beta1) * g;
        v![i] = beta2 * v![i] + (1 - beta2) * g * g;
        const mHat = m[i] / mCorr;
        let update: number;
        if (rectified) {
          const vHat = Math.sqrt(v![i] / (1 - beta2t));
          update = (lr * rect * mHat) / (vHat + eps);
        } else {
          update = lr * mHat;
        }
        p.data[i] -= update + lr * weightDecay * p.data[i];
      }
    }
  }
}
