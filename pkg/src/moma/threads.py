"""Thread-count resolution for operations that may split pixel work."""

from __future__ import annotations

import os

from .errors import InvalidArgument

ENV_VAR = "MOMA_THREADS"


def resolve_threads(explicit: int | None = None) -> int:
    """Pick the worker bound: explicit argument, MOMA_THREADS, CPU count."""
    if explicit is not None:
        if explicit < 1:
            raise InvalidArgument("thread count must be >= 1")
        return explicit
    env = os.environ.get(ENV_VAR)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise InvalidArgument(f"{ENV_VAR} must be an integer, got {env!r}") from exc
        if value < 1:
            raise InvalidArgument(f"{ENV_VAR} must be >= 1")
        return value
    return os.cpu_count() or 1
