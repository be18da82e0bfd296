"""Basic testing framework: two freshly launched threads per iteration.

Each iteration zeroes the two test cells, launches one thread per side of
the litmus test over relaxed atomic shared memory, joins them, and checks
the final state.  The two memory indices are the framework's fuzzable
parameters; spreading them across a large buffer lets them land in
different cache lines or pages.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

from .backends import default_backend
from .litmus import LitmusTest

DEFAULT_BUFFER_LEN = 16384  # int32 elements, spans multiple pages


@dataclass(frozen=True)
class BasicParams:
    index_x: int
    index_y: int
    buffer_len: int = DEFAULT_BUFFER_LEN
    iterations: int = 100_000
    affinity: tuple[int, int] | None = None

    def __post_init__(self):
        if self.index_x == self.index_y:
            raise ValueError("index_x and index_y must differ")
        if not (0 <= self.index_x < self.buffer_len and 0 <= self.index_y < self.buffer_len):
            raise ValueError("indices must fall inside the buffer")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.affinity is not None:
            for core in self.affinity:
                if core < 0:
                    raise ValueError("affinity cores must be non-negative")


@dataclass(frozen=True)
class RunResult:
    test: str
    framework: str
    iterations: int
    reorders: int
    wall_time_s: float
    warnings: tuple[str, ...] = field(default_factory=tuple)

    CSV_HEADER = "test,framework,iterations,reorders,wall_time_s,warning_flags"

    def csv_row(self) -> str:
        flags = "|".join(self.warnings)
        return (f"{self.test},{self.framework},{self.iterations},"
                f"{self.reorders},{self.wall_time_s!r},{flags}")


def _validate_affinity(affinity) -> list[str]:
    """Bounds-check cores; returns warnings for unsupported platforms."""
    if affinity is None:
        return []
    ncores = os.cpu_count() or 1
    for core in affinity:
        if core >= ncores:
            raise ValueError(f"core {core} out of range (machine has {ncores})")
    if not hasattr(os, "sched_setaffinity"):
        return ["affinity-unsupported"]
    return []


def run_basic(test: LitmusTest, params: BasicParams, backend=None) -> RunResult:
    """Run the test for params.iterations and count re-ordered outcomes."""
    warnings = _validate_affinity(params.affinity)
    if backend is None:
        backend = default_backend()
    started = time.perf_counter()
    reorders, affinity_warned = backend.run_basic(test, params)
    elapsed = time.perf_counter() - started
    if affinity_warned and "affinity-unsupported" not in warnings:
        warnings.append("affinity-unsupported")
    if reorders > params.iterations:
        raise RuntimeError("backend reported more re-orderings than iterations")
    return RunResult(
        test=test.name,
        framework="basic",
        iterations=params.iterations,
        reorders=reorders,
        wall_time_s=elapsed,
        warnings=tuple(warnings),
    )


def apply_affinity(core: int) -> str:
    """Pin the calling thread to a core, best effort.

    Returns 'applied' or 'unsupported'; an out-of-range core is rejected.
    """
    ncores = os.cpu_count() or 1
    if not 0 <= core < ncores:
        raise ValueError(f"core {core} out of range (machine has {ncores})")
    if not hasattr(os, "sched_setaffinity"):
        return "unsupported"
    try:
        os.sched_setaffinity(0, {core})
    except OSError:
        return "unsupported"
    return "applied"


def observation_stream(test: LitmusTest, params: BasicParams, backend=None):
    """Endless per-run re-ordering counts; one value per completed run."""
    if backend is None:
        backend = default_backend()
    while True:
        yield run_basic(test, params, backend=backend).reorders
