"""Registered synthetic task kernels with compiled/pure backend selection.

Every kernel is a pure function of (size, seed): all honest executions of a
task produce the same value, which is what makes result voting meaningful.
The compiled extension is preferred when present; `backend_name()` reports
which one is active.
"""

from __future__ import annotations

from .digest import DEFAULT_PRECISION, digest_value
from . import _kernels_py

try:
    from . import _kernels as _impl  # compiled extension
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _kernels_py

_KERNELS = {
    "arc_dist": _impl.arc_dist_sum,
    "rosen": _impl.rosen_sum,
    "fib": _impl.fib_mod,
}


class UnknownKernelError(KeyError):
    """Raised when a task names a kernel that is not registered."""


def backend_name() -> str:
    return _impl.BACKEND


def kernel_names() -> list[str]:
    return sorted(_KERNELS)


def evaluate(kernel: str, size: int, seed: int):
    """Run a registered kernel and return its raw result value."""
    try:
        fn = _KERNELS[kernel]
    except KeyError:
        raise UnknownKernelError(kernel) from None
    if size < 0:
        raise ValueError("size must be >= 0")
    return fn(size, seed)


_digest_cache: dict[tuple[str, int, int, int], str] = {}


def kernel_digest(kernel: str, size: int, seed: int,
                  precision: int = DEFAULT_PRECISION) -> str:
    """Canonical digest of a kernel result.

    Cached: replicated execution across cluster members recomputes the same
    (kernel, size, seed) many times per task.
    """
    key = (kernel, size, seed, precision)
    found = _digest_cache.get(key)
    if found is None:
        found = digest_value(evaluate(kernel, size, seed), precision)
        _digest_cache[key] = found
    return found
