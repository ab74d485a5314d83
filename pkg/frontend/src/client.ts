import { type ChildProcessWithoutNullStreams, spawn } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

import {
  NmsLossError,
  type ErrorCode,
  type NmsLossRequest,
  type NmsLossResult,
} from "./types.js";

interface WireResponse {
  ok: boolean;
  code?: ErrorCode;
  message?: string;
  l_pull?: number;
  l_push?: number;
  l_nms?: number;
  kept?: number[];
  coord_grads?: number[][];
  score_grads?: number[];
}

export interface ClientOptions {
  /** Python interpreter used to host the kernel. */
  python?: string;
}

/**
 * Client for the nmsloss kernel's line-delimited JSON protocol.
 *
 * Spawns `python -m nmsloss.ffi` once and pipelines requests over its
 * stdin/stdout: one JSON object per line in, one per line out, answered
 * in order. The kernel turns malformed input into `{ok: false, code}`
 * responses, which surface here as NmsLossError.
 */
export class NmsLossClient {
  private proc: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending: Array<{
    resolve: (resp: WireResponse) => void;
    reject: (err: Error) => void;
  }> = [];
  private closed = false;

  constructor(options: ClientOptions = {}) {
    this.proc = spawn(options.python ?? "python3", ["-m", "nmsloss.ffi"], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.lines = createInterface({ input: this.proc.stdout });
    this.lines.on("line", (line) => {
      const waiter = this.pending.shift();
      if (!waiter) return;
      try {
        waiter.resolve(JSON.parse(line) as WireResponse);
      } catch (err) {
        waiter.reject(err as Error);
      }
    });
    this.proc.on("exit", (code) => {
      this.closed = true;
      const err = new Error(`kernel process exited with status ${code}`);
      for (const waiter of this.pending.splice(0)) waiter.reject(err);
    });
  }

  private send(request: NmsLossRequest): Promise<WireResponse> {
    if (this.closed) {
      return Promise.reject(new Error("client is closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.proc.stdin.write(JSON.stringify(request) + "\n");
    });
  }

  /** Forward + backward pass over flat detection/gt buffers. */
  async nmsLoss(request: NmsLossRequest): Promise<NmsLossResult> {
    const resp = await this.send(request);
    if (!resp.ok) {
      throw new NmsLossError(resp.code ?? "internal", resp.message ?? "");
    }
    return {
      lPull: resp.l_pull!,
      lPush: resp.l_push!,
      lNms: resp.l_nms!,
      kept: resp.kept!,
      coordGrads: resp.coord_grads!,
      scoreGrads: resp.score_grads!,
    };
  }

  close(): void {
    if (!this.closed) {
      this.closed = true;
      this.proc.stdin.end();
      this.proc.kill();
    }
  }
}

/** One-shot convenience: spawn, run a single request, tear down. */
export async function nmsLoss(
  request: NmsLossRequest,
  options: ClientOptions = {},
): Promise<NmsLossResult> {
  const client = new NmsLossClient(options);
  try {
    return await client.nmsLoss(request);
  } finally {
    client.close();
  }
}
