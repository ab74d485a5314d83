/** One detection row: x1, y1, x2, y2, score, gt index (-1 = unassigned). */
export type DetectionRow = [number, number, number, number, number, number];

/** One ground-truth row: x1, y1, x2, y2. */
export type GtRow = [number, number, number, number];

export interface NmsLossRequest {
  detections: DetectionRow[];
  gt: GtRow[];
  nt?: number;
  lambda_pull?: number;
  lambda_push?: number;
  reduction?: "mean" | "sum";
  iou_clamp_eps?: number;
}

export interface NmsLossResult {
  lPull: number;
  lPush: number;
  lNms: number;
  /** Kept original indices in suppression order. */
  kept: number[];
  /** Per-detection [d_x1, d_y1, d_x2, d_y2]. */
  coordGrads: number[][];
  scoreGrads: number[];
}

/** Stable error codes emitted by the kernel; never a crash. */
export type ErrorCode =
  | "bad-json"
  | "bad-shape"
  | "gt-out-of-range"
  | "bad-detection"
  | "bad-gt-box"
  | "bad-config"
  | "internal";

export class NmsLossError extends Error {
  constructor(
    public readonly code: ErrorCode,
    message: string,
  ) {
    super(message);
    this.name = "NmsLossError";
  }
}
