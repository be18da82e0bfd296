"""The two stress workloads and their process-level driver.

Memory stress partitions a buffer into stress lines and has each thread
hammer one line with a load/store pattern before striding to the next.
Thread-launch stress repeatedly spawns and joins short-lived threads.
Both run until cancelled; in process mode the stressor is its own child
process (`disorder stress ...`) killed by the campaign driver.
"""

from __future__ import annotations

import json
import os
import select
import signal
import subprocess
import sys
import threading
import time
from dataclasses import dataclass

from .backends import StopFlag, default_backend

ELEM_BYTES = 4  # the stress buffer is int32

# Fuzzing ranges (see sample ranges in fuzz.sample_params): line sizes span
# cache-line through page granularity.
LINE_SIZES = (64, 128, 256, 1024, 4096)
MAX_PATTERN_LEN = 8
DEFAULT_BUFFER_BYTES = 4 * 1024 * 1024

LOAD = 0
STORE = 1


@dataclass(frozen=True)
class MemoryStressConfig:
    line_size: int = 64
    thread_offset: int = 0
    iterations_per_line: int = 64
    stride: int = 1
    pattern: tuple[int, ...] = (STORE,)
    num_threads: int = 8
    buffer_bytes: int = DEFAULT_BUFFER_BYTES

    kind = "memory"

    def __post_init__(self):
        if self.line_size <= 0 or self.buffer_bytes % self.line_size != 0:
            raise ValueError("line_size must divide buffer_bytes")
        if not 0 <= self.thread_offset < self.line_size:
            raise ValueError("thread_offset must fall inside a line")
        if self.thread_offset % ELEM_BYTES != 0:
            raise ValueError("thread_offset must be element aligned")
        if not self.pattern or len(self.pattern) > MAX_PATTERN_LEN:
            raise ValueError(f"pattern length must be 1..{MAX_PATTERN_LEN}")
        if any(op not in (LOAD, STORE) for op in self.pattern):
            raise ValueError("pattern entries must be loads (0) or stores (1)")
        if self.iterations_per_line <= 0 or self.num_threads <= 0 or self.stride <= 0:
            raise ValueError("iterations, threads and stride must be positive")

    @property
    def num_lines(self) -> int:
        return self.buffer_bytes // self.line_size

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "line_size": self.line_size,
            "thread_offset": self.thread_offset,
            "iterations_per_line": self.iterations_per_line,
            "stride": self.stride,
            "pattern": list(self.pattern),
            "num_threads": self.num_threads,
            "buffer_bytes": self.buffer_bytes,
        }


@dataclass(frozen=True)
class ThreadLaunchStressConfig:
    num_threads: int = 4
    loop_iterations: int = 4096

    kind = "thread-launch"

    def __post_init__(self):
        if self.num_threads <= 0 or self.loop_iterations <= 0:
            raise ValueError("num_threads and loop_iterations must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_threads": self.num_threads,
            "loop_iterations": self.loop_iterations,
        }


def config_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "memory":
        return MemoryStressConfig(
            line_size=int(d.get("line_size", 64)),
            thread_offset=int(d.get("thread_offset", 0)),
            iterations_per_line=int(d.get("iterations_per_line", 64)),
            stride=int(d.get("stride", 1)),
            pattern=tuple(int(v) for v in d.get("pattern", [STORE])),
            num_threads=int(d.get("num_threads", 8)),
            buffer_bytes=int(d.get("buffer_bytes", DEFAULT_BUFFER_BYTES)),
        )
    if kind == "thread-launch":
        return ThreadLaunchStressConfig(
            num_threads=int(d.get("num_threads", 4)),
            loop_iterations=int(d.get("loop_iterations", 4096)),
        )
    raise ValueError(f"unknown stress kind {kind!r}")


def line_schedule(cfg: MemoryStressConfig, tid: int, rounds: int) -> list[int]:
    """Reference line-walk: the sequence of lines thread `tid` visits.

    Thread t starts at line t mod num_lines (distinct lines where
    possible) and advances by `stride` lines per round.
    """
    line = tid % cfg.num_lines
    visits = []
    for _ in range(rounds):
        visits.append(line)
        line = (line + cfg.stride) % cfg.num_lines
    return visits


def run_memory_stress(cfg: MemoryStressConfig, stop: StopFlag,
                      max_rounds: int = 0, backend=None, trace=None) -> int:
    """Blocks until `stop` is set (or each thread did max_rounds > 0 rounds).

    Returns the total number of line-rounds executed.  `trace` captures
    (tid, line) visits and is honoured by the pure-Python kernels only.
    """
    if backend is None:
        backend = default_backend()
    kwargs = {}
    if trace is not None:
        if backend.name != "purepy":
            raise ValueError("tracing requires the purepy backend")
        kwargs["trace"] = trace
    return backend.memory_stress(
        cfg.num_lines, cfg.line_size // ELEM_BYTES, cfg.thread_offset // ELEM_BYTES,
        cfg.iterations_per_line, cfg.stride, list(cfg.pattern),
        cfg.num_threads, max_rounds, stop.cell, **kwargs)


def run_thread_launch_stress(cfg: ThreadLaunchStressConfig, stop: StopFlag,
                             max_rounds: int = 0, backend=None) -> int:
    """Blocks until `stop`; returns the number of threads launched."""
    if backend is None:
        backend = default_backend()
    return backend.thread_launch_stress(
        cfg.num_threads, cfg.loop_iterations, max_rounds, stop.cell)


def run_stress_for(cfg, duration_s: float, backend=None) -> int:
    """Convenience: run a stress in-process for a fixed wall-clock time."""
    stop = StopFlag()
    timer = threading.Timer(duration_s, stop.set)
    timer.start()
    try:
        if isinstance(cfg, MemoryStressConfig):
            return run_memory_stress(cfg, stop, backend=backend)
        return run_thread_launch_stress(cfg, stop, backend=backend)
    finally:
        timer.cancel()


class CampaignIntegrityError(RuntimeError):
    """A stressor process outlived its kill or two were alive at once."""


_live_stressors: set[int] = set()


def live_stressor_count() -> int:
    return len(_live_stressors)


class StressProcess:
    """A stressor running as a child process, killed with escalation."""

    GRACE_S = 2.0

    def __init__(self, cfg, backend_name: str = "auto"):
        self.cfg = cfg
        self.backend_name = backend_name
        self.proc: subprocess.Popen | None = None

    def start(self, ready_timeout_s: float = 15.0):
        if _live_stressors:
            raise CampaignIntegrityError("another stressor process is already alive")
        cmd = [sys.executable, "-m", "disorder", "stress", self.cfg.kind,
               "--config-json", json.dumps(self.cfg.to_dict())]
        env = dict(os.environ)
        if self.backend_name == "purepy":
            env["DISORDER_PURE_PY"] = "1"
        try:
            self.proc = subprocess.Popen(
                cmd, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                text=True, env=env)
        except OSError as exc:
            raise OSError(f"stressor failed to start: {exc}") from exc
        # The stress command prints one "ready" line once its threads run.
        readable, _, _ = select.select([self.proc.stdout], [], [], ready_timeout_s)
        line = self.proc.stdout.readline() if readable else ""
        if "ready" not in line:
            self.proc.kill()
            self.proc.wait()
            self.proc = None
            raise OSError("stressor did not report ready")
        _live_stressors.add(self.proc.pid)
        return self

    def stop(self):
        if self.proc is None:
            return
        pid = self.proc.pid
        self.proc.terminate()
        try:
            self.proc.wait(timeout=self.GRACE_S)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            try:
                self.proc.wait(timeout=self.GRACE_S)
            except subprocess.TimeoutExpired:
                raise CampaignIntegrityError(
                    f"stressor pid {pid} survived SIGKILL grace period")
        _live_stressors.discard(pid)
        self.proc = None

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
        return False


def stress_process_main(kind: str, cfg_dict: dict, duration_s: float | None,
                        backend=None) -> int:
    """Entry point used by the CLI `stress` subcommand (process mode).

    Installs signal handlers that set the stop flag, prints `ready`, and
    runs the kernel on a worker thread so signals stay deliverable.
    """
    cfg = config_from_dict({**cfg_dict, "kind": kind})
    stop = StopFlag()

    def handler(signum, frame):
        stop.set()

    signal.signal(signal.SIGTERM, handler)
    signal.signal(signal.SIGINT, handler)

    def work():
        if isinstance(cfg, MemoryStressConfig):
            run_memory_stress(cfg, stop, backend=backend)
        else:
            run_thread_launch_stress(cfg, stop, backend=backend)

    worker = threading.Thread(target=work)
    worker.start()
    print("ready", flush=True)
    deadline = None if duration_s is None else time.monotonic() + duration_s
    while worker.is_alive():
        if deadline is not None and time.monotonic() >= deadline:
            stop.set()
        worker.join(timeout=0.05)
    return 0
