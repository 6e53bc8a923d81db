/**
 * Canonical result digests, wire-compatible with the server side.
 *
 * Floats render with exactly `precision` digits after the decimal point
 * (default 9), integers render as plain decimal strings, and the digest is
 * the first 16 hex chars of the SHA-256 of the canonical text. Two honest
 * executions of the same task must digest identically, locally or remotely.
 *
 * JS has a single number type, so the server's int/float split maps to
 * bigint/number here: use bigint for integer-valued results (e.g. the fib
 * kernel) and number for real-valued ones.
 */

import { createHash } from 'node:crypto';

export const DEFAULT_PRECISION = 9;
export const DIGEST_WIDTH = 16;

export type CanonicalValue =
  | null
  | boolean
  | number
  | bigint
  | string
  | CanonicalValue[]
  | { [key: string]: CanonicalValue };

export function canonicalRepr(value: CanonicalValue, precision = DEFAULT_PRECISION): string {
  if (value === null) return 'null';
  if (typeof value === 'boolean') return value ? 'true' : 'false';
  if (typeof value === 'bigint') return value.toString();
  if (typeof value === 'number') return value.toFixed(precision);
  if (typeof value === 'string') {
    return '"' + value.replace(/\\/g, '\\\\').replace(/"/g, '\\"') + '"';
  }
  if (Array.isArray(value)) {
    return '[' + value.map((v) => canonicalRepr(v, precision)).join(',') + ']';
  }
  const keys = Object.keys(value).sort();
  return (
    '{' +
    keys
      .map((k) => canonicalRepr(k, precision) + ':' + canonicalRepr(value[k], precision))
      .join(',') +
    '}'
  );
}

export function digestValue(value: CanonicalValue, precision = DEFAULT_PRECISION): string {
  return createHash('sha256')
    .update(canonicalRepr(value, precision), 'utf8')
    .digest('hex')
    .slice(0, DIGEST_WIDTH);
}
