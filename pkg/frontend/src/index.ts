export { NmsLossClient, nmsLoss, type ClientOptions } from "./client.js";
export {
  NmsLossError,
  type DetectionRow,
  type ErrorCode,
  type GtRow,
  type NmsLossRequest,
  type NmsLossResult,
} from "./types.js";
