"""Canonical result digests and stable seed derivation.

Replicated task results are compared by digest, so two honest executions of
the same task must always digest identically. Floats are therefore
canonicalized to a fixed number of decimal places (default 9) before hashing,
which absorbs formatting differences without hiding real divergence.
"""

from __future__ import annotations

import hashlib

DEFAULT_PRECISION = 9
DIGEST_WIDTH = 16  # hex chars


def canonical_repr(value, precision: int = DEFAULT_PRECISION) -> str:
    """Deterministic string form of a result value.

    Supports the payload types that cross the wire: numbers, strings, bools,
    None, and (nested) lists/tuples/dicts with string keys. Floats are
    rendered with exactly `precision` digits after the decimal point.
    """
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, f".{precision}f")
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(canonical_repr(v, precision) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(
            canonical_repr(str(k), precision) + ":" + canonical_repr(v, precision)
            for k, v in items
        ) + "}"
    raise TypeError(f"cannot canonicalize {type(value).__name__}")


def digest_value(value, precision: int = DEFAULT_PRECISION) -> str:
    """Fixed-width checksum of a canonicalized value."""
    text = canonical_repr(value, precision)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:DIGEST_WIDTH]


def stable_seed(*parts) -> int:
    """Derive a reproducible 63-bit seed from arbitrary labeled parts.

    Used to give every simulated component (per-node fault streams, latency
    jitter, workload generation) an independent stream from one scenario seed.
    """
    text = "\x1f".join(str(p) for p in parts)
    h = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") >> 1
