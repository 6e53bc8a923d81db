/**
 * HTTP-gateway client: submit offload-annotated functions, await voted results.
 *
 * The gateway retains submissions on the bus, so a POST that lands while the
 * dispatcher is down still resolves once it comes back; `awaitResult` simply
 * keeps polling.
 */

import { randomUUID } from 'node:crypto';

import { validateArgs, type AnnotatedFunction } from './annotations.js';
import { toTaskPayload } from './serialize.js';

export interface TaskStatus {
  task_id: string;
  status: 'pending' | 'accepted' | 'failed';
  digest: string | null;
  dissent_count: number;
  wall_time_s: number | null;
}

export class SubmitError extends Error {}

export class TaskFailedError extends Error {
  constructor(
    public readonly taskId: string,
    public readonly dissentCount: number,
  ) {
    super(`task ${taskId} failed (dissent=${dissentCount})`);
  }
}

export interface ClientOptions {
  clientId?: string;
  pollIntervalMs?: number;
  timeoutMs?: number;
}

export class PyCloudIoTClient {
  private readonly endpoint: string;
  private readonly clientId: string;
  private readonly pollIntervalMs: number;
  private readonly timeoutMs: number;

  constructor(endpoint: string, options: ClientOptions = {}) {
    this.endpoint = endpoint.replace(/\/$/, '');
    this.clientId = options.clientId ?? `sdk-${randomUUID().slice(0, 8)}`;
    this.pollIntervalMs = options.pollIntervalMs ?? 100;
    this.timeoutMs = options.timeoutMs ?? 60_000;
  }

  async health(): Promise<{ status: string; dispatcher_running: boolean; kernels: string[] }> {
    const resp = await fetch(`${this.endpoint}/health`);
    if (!resp.ok) throw new SubmitError(`health check failed: ${resp.status}`);
    return (await resp.json()) as never;
  }

  /** Validate args against the declarations and publish; resolves to the task id. */
  async submit(
    fn: AnnotatedFunction,
    args: Record<string, unknown>,
    taskId?: string,
  ): Promise<string> {
    validateArgs(fn, args); // malformed args are rejected before anything is published
    const payload = toTaskPayload(fn, args, taskId ?? `sdk-${randomUUID().slice(0, 12)}`, this.clientId);
    const resp = await fetch(`${this.endpoint}/v1/tasks`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
    if (!resp.ok) {
      throw new SubmitError(`submit rejected: ${resp.status} ${await resp.text()}`);
    }
    const body = (await resp.json()) as { task_id: string };
    return body.task_id;
  }

  async status(taskId: string): Promise<TaskStatus> {
    const resp = await fetch(`${this.endpoint}/v1/tasks/${taskId}`);
    if (!resp.ok) throw new SubmitError(`status failed: ${resp.status}`);
    return (await resp.json()) as TaskStatus;
  }

  /** Poll until the vote decides; resolves with the accepted digest. */
  async awaitResult(taskId: string): Promise<TaskStatus> {
    const deadline = Date.now() + this.timeoutMs;
    for (;;) {
      const current = await this.status(taskId);
      if (current.status === 'accepted') return current;
      if (current.status === 'failed') {
        throw new TaskFailedError(taskId, current.dissent_count);
      }
      if (Date.now() > deadline) {
        throw new SubmitError(`timed out waiting for ${taskId}`);
      }
      await new Promise((resolve) => setTimeout(resolve, this.pollIntervalMs));
    }
  }

  /** submit + awaitResult in one call. */
  async run(fn: AnnotatedFunction, args: Record<string, unknown>): Promise<TaskStatus> {
    const taskId = await this.submit(fn, args);
    return this.awaitResult(taskId);
  }
}
