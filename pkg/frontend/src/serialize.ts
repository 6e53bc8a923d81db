/**
 * Stable (de)serialization of annotated functions and task payloads.
 *
 * The round-trip is byte-exact: name, kernel, parameter declarations, and the
 * original source text survive serialize -> deserialize unchanged.
 */

import type { AnnotatedFunction } from './annotations.js';

export interface TaskPayload {
  kind: 'task';
  task_id: string;
  kernel: string;
  size: number;
  seed: number;
  client_id: string;
}

export function serializeAnnotated(fn: AnnotatedFunction): string {
  return JSON.stringify({
    name: fn.name,
    kernel: fn.kernel,
    params: fn.params,
    source: fn.source,
  });
}

export function deserializeAnnotated(raw: string): AnnotatedFunction {
  const data = JSON.parse(raw);
  for (const field of ['name', 'kernel', 'params', 'source']) {
    if (!(field in data)) throw new Error(`missing field ${field}`);
  }
  return {
    name: data.name,
    kernel: data.kernel,
    params: data.params,
    source: data.source,
  };
}

export function toTaskPayload(
  fn: AnnotatedFunction,
  args: Record<string, unknown>,
  taskId: string,
  clientId: string,
): TaskPayload {
  const size = args['size'];
  const seed = args['seed'];
  if (typeof size !== 'number' || typeof seed !== 'number') {
    throw new Error(
      `kernel submissions require integer 'size' and 'seed' arguments; ` +
        `got (${String(size)}, ${String(seed)})`,
    );
  }
  return {
    kind: 'task',
    task_id: taskId,
    kernel: fn.kernel,
    size,
    seed,
    client_id: clientId,
  };
}
