export {
  AnnotationError,
  NotOffloadableError,
  parseAnnotations,
  parseFunction,
  validateArgs,
} from './annotations.js';
export type { AnnotatedFunction, DeclaredParam, ParamType } from './annotations.js';
export { canonicalRepr, digestValue, DEFAULT_PRECISION } from './digest.js';
export type { CanonicalValue } from './digest.js';
export { arcDistSum, rosenSum, fibMod, LOCAL_KERNELS } from './kernels.js';
export {
  PyCloudIoTClient,
  SubmitError,
  TaskFailedError,
} from './client.js';
export type { ClientOptions, TaskStatus } from './client.js';
export {
  deserializeAnnotated,
  serializeAnnotated,
  toTaskPayload,
} from './serialize.js';
export type { TaskPayload } from './serialize.js';
