/**
 * Client for the scheduler's newline-JSON episode protocol (TCP).
 *
 * One request gets one reply, in order; the server keeps one active episode
 * per connection and `reset` starts a new one. See ../docs/protocol.md.
 */

import * as net from "node:net";
import { ObservationDoc } from "./graph.js";

export interface StepReply {
  v: number;
  ok: boolean;
  error?: string;
  observation?: ObservationDoc | null;
  reward?: number;
  done?: boolean;
  info?: Record<string, any>;
  instances?: string[];
  closed?: boolean;
}

export class EnvClient {
  private socket!: net.Socket;
  private buffer = "";
  private pending: Array<{ resolve: (r: StepReply) => void; reject: (e: Error) => void }> = [];

  static async connect(host: string, port: number): Promise<EnvClient> {
    const client = new EnvClient();
    await new Promise<void>((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        socket.off("error", reject);
        resolve();
      });
      socket.once("error", reject);
      client.socket = socket;
    });
    client.wire();
    return client;
  }

  private wire(): void {
    this.socket.setNoDelay(true);
    this.socket.on("data", (chunk) => {
      this.buffer += chunk.toString("utf-8");
      let nl;
      while ((nl = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, nl);
        this.buffer = this.buffer.slice(nl + 1);
        const waiter = this.pending.shift();
        if (!waiter) continue;
        try {
          waiter.resolve(JSON.parse(line));
        } catch (err) {
          waiter.reject(err as Error);
        }
      }
    });
    this.socket.on("error", (err) => {
      while (this.pending.length) this.pending.shift()!.reject(err);
    });
    this.socket.on("close", () => {
      const err = new Error("connection closed");
      while (this.pending.length) this.pending.shift()!.reject(err);
    });
  }

  request(msg: Record<string, unknown>): Promise<StepReply> {
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket.write(JSON.stringify(msg) + "\n");
    });
  }

  async instances(): Promise<string[]> {
    const reply = await this.request({ cmd: "instances" });
    if (!reply.ok || !reply.instances) throw new Error(reply.error ?? "bad instances reply");
    return reply.instances;
  }

  async reset(instance: string, seed?: number): Promise<StepReply> {
    const msg: Record<string, unknown> = { cmd: "reset", instance };
    if (seed !== undefined) msg.seed = seed;
    const reply = await this.request(msg);
    if (!reply.ok) throw new Error(reply.error ?? "reset failed");
    return reply;
  }

  async step(task: number): Promise<StepReply> {
    const reply = await this.request({ cmd: "step", task });
    if (!reply.ok) throw new Error(reply.error ?? "step failed");
    return reply;
  }

  async close(): Promise<void> {
    try {
      await this.request({ cmd: "close" });
    } finally {
      this.socket.end();
      this.socket.destroy();
    }
  }
}
