"""Execution-time context: progress reporting and the compute pool.

Every op invocation pushes a frame onto a thread-local stack. Bodies report
progress through report_progress without knowing who is listening; the
innermost frame labels the report with the op name and fans it out to the
listeners registered on the environment at invocation time. Outside any
frame both report_progress and current_pool degrade to safe no-ops, so op
bodies stay plain callables.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class ProgressReport:
    op_label: str
    fraction: float
    stage: str = ""


class ComputePool:
    """Bounded budget of compute slots for data-parallel op bodies.

    map_indexed partitions [0, count) into contiguous chunks, one per
    acquired slot, and evaluates fn(i) for every index. Results depend only
    on the index, never on the partitioning, so any budget yields identical
    output. At most ``budget`` slots are held at any moment; when none are
    free the caller simply computes sequentially.
    """

    def __init__(self, budget: int = 1):
        if budget < 1:
            raise ValueError("pool budget must be positive")
        self.budget = budget
        self._lock = threading.Lock()
        self._in_use = 0
        self._peak = 0

    def _try_acquire(self, want: int) -> int:
        with self._lock:
            granted = min(want, self.budget - self._in_use)
            if granted > 0:
                self._in_use += granted
                self._peak = max(self._peak, self._in_use)
                return granted
            return 0

    def _release(self, count: int) -> None:
        with self._lock:
            self._in_use -= count

    @property
    def peak_slots(self) -> int:
        with self._lock:
            return self._peak

    def map_indexed(self, fn: Callable[[int], object], count: int) -> list:
        if count <= 0:
            return []
        granted = self._try_acquire(min(self.budget, count))
        if granted <= 1:
            try:
                return [fn(i) for i in range(count)]
            finally:
                if granted:
                    self._release(granted)
        try:
            results: list = [None] * count
            errors: list[tuple[int, BaseException]] = []
            base, extra = divmod(count, granted)
            chunks: list[tuple[int, int]] = []
            start = 0
            for k in range(granted):
                size = base + (1 if k < extra else 0)
                chunks.append((start, start + size))
                start += size

            def run(lo: int, hi: int) -> None:
                try:
                    for i in range(lo, hi):
                        results[i] = fn(i)
                except BaseException as exc:
                    errors.append((lo, exc))

            threads = [
                threading.Thread(target=run, args=chunk, daemon=True)
                for chunk in chunks[1:]
            ]
            for t in threads:
                t.start()
            run(*chunks[0])
            for t in threads:
                t.join()
            if errors:
                raise min(errors)[1]
            return results
        finally:
            self._release(granted)


_DEFAULT_POOL = ComputePool(1)

# Frames are bare (label, listeners, pool) tuples on a thread-local stack;
# this sits on the per-invocation hot path, so no classes, no managers.
_tls = threading.local()


def frame_stack() -> list:
    stack = getattr(_tls, "stack", None)
    if stack is None:
        stack = []
        _tls.stack = stack
    return stack


@contextmanager
def execution_frame(label: str, listeners, pool: ComputePool):
    stack = frame_stack()
    stack.append((label, tuple(listeners), pool))
    try:
        yield
    finally:
        stack.pop()


def report_progress(fraction: float, stage: str = "") -> None:
    """Report completion of the innermost executing op; no-op outside one."""
    stack = frame_stack()
    if not stack:
        return
    label, listeners, _ = stack[-1]
    if not listeners:
        return
    report = ProgressReport(label, float(fraction), stage)
    for listener in listeners:
        listener(report)


def current_pool() -> ComputePool:
    stack = frame_stack()
    return stack[-1][2] if stack else _DEFAULT_POOL
