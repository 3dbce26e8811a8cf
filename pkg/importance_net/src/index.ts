export { CheckpointError, DatasetError, ShapeMismatch } from "./errors.js";
export {
  loadCheckpoint,
  saveCheckpoint,
  saveSnapshot,
  snapshotWeights,
  type WeightSnapshot,
} from "./checkpoint.js";
export { loadDataset, toTensors, type Sample, type SampleTensors } from "./data.js";
export { exportProvider, providerEntry } from "./export.js";
export { bceLoss, bceLossGraph, PREDICTION_CLAMP } from "./loss.js";
export {
  allVariables,
  backboneForward,
  createHead,
  createModel,
  disposeModel,
  FUSION_WIDTH,
  fuse,
  fusionTensor,
  headForward,
  headVariables,
  modelForward,
  predictMap,
  upsample,
  validateConfig,
  VGG_TAPS,
  type FloatMap,
  type FusionModel,
  type ModelConfig,
  type TapChannels,
  type Taps,
} from "./model.js";
export {
  decodePgm,
  decodePpm,
  encodePgm,
  encodePpm,
  quantizeMap,
  type Pgm,
  type Ppm,
} from "./pnm.js";
export { providerMain, CHECKPOINT_ENV } from "./provider.js";
export { train, type TrainConfig, type TrainResult } from "./train.js";
