"""Perpetual testing framework: threads launched once, trace analysis after.

Writers store the round numbers 1..rounds in order (so observed values are
directly comparable round indices), readers log what they saw, and the
analyzer counts witnesses: log contents impossible under every
interleaving of the two threads' program orders with immediately visible
writes.  Only MP, SB and LB fit this scheme (they have two reads).

The closed-form witness rules below are optimizations; the exhaustive
schedule oracle (`enumerate_sc_logs` / `sc_trace_feasible`) is the source
of truth and the test suite checks the rules against it on small
instances.

Witness rules:

* MP - thread 0 writes x=i then y=i.  A logged (y_obs, x_obs) pair with
  y_obs > x_obs saw the later write without the earlier one.
* SB - records (i, p) on thread 0 (after writing x=i it read y=p) and
  (j, q) on thread 1 with p < j and q < i form a mutual miss: each read
  happened before the other thread's write, yet each write happened
  before its own read - a cycle.  Witnesses are counted as pairs.
* LB - thread 0 reads x then writes y=i; a record (i, q) with q >= 1
  whose matching thread-1 record (q, p) has p >= i closes a value cycle.
  The mirrored rule applies from thread 1; a pair is counted once.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, replace

from .backends import default_backend
from .litmus import canonical_name
from .runner import DEFAULT_BUFFER_LEN, RunResult, _validate_affinity

PERPETUAL_TESTS = ("MP", "SB", "LB")


@dataclass(frozen=True)
class PerpetualParams:
    index_x: int
    index_y: int
    rounds: int = 10_000
    log_capacity: int | None = None  # defaults to rounds
    buffer_len: int = DEFAULT_BUFFER_LEN
    affinity: tuple[int, int] | None = None

    def __post_init__(self):
        if self.index_x == self.index_y:
            raise ValueError("index_x and index_y must differ")
        if not (0 <= self.index_x < self.buffer_len and 0 <= self.index_y < self.buffer_len):
            raise ValueError("indices must fall inside the buffer")
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")
        capacity = self.rounds if self.log_capacity is None else self.log_capacity
        if capacity < self.rounds:
            raise ValueError("log_capacity must be at least rounds")
        object.__setattr__(self, "log_capacity", capacity)


@dataclass(frozen=True)
class TraceLog:
    """Observation logs of one perpetual run, in each thread's program order."""

    test: str
    rounds: int
    reader_records: tuple[tuple[int, int], ...] | None = None  # MP: (y_obs, x_obs)
    thread0: tuple[int, ...] | None = None  # SB/LB: observed value per round
    thread1: tuple[int, ...] | None = None
    truncated: bool = False


def _check_value(value, rounds):
    if not isinstance(value, int) or not 0 <= value <= rounds:
        raise ValueError(f"malformed log value {value!r} for {rounds} rounds")


def _witnesses_mp(records, rounds) -> int:
    count = 0
    for record in records:
        if len(record) != 2:
            raise ValueError(f"malformed MP record {record!r}")
        y_obs, x_obs = record
        _check_value(y_obs, rounds)
        _check_value(x_obs, rounds)
        if y_obs > x_obs:
            count += 1
    return count


class _Fenwick:
    def __init__(self, size):
        self.tree = [0] * (size + 1)

    def add(self, i):
        i += 1
        while i < len(self.tree):
            self.tree[i] += 1
            i += i & (-i)

    def count_leq(self, i):
        i += 1
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & (-i)
        return total


def _witnesses_sb(log0, log1, rounds) -> int:
    # pairs (i, j), 1-based rounds, with p_i < j and q_j < i
    for v in list(log0) + list(log1):
        _check_value(v, rounds)
    if len(log0) != rounds or len(log1) != rounds:
        raise ValueError("SB logs must hold one record per round")
    # Sweep i downwards, inserting p_i; answer queries (j) ordered by q_j
    # so every inserted record satisfies i > q_j, then count p_i < j.
    queries = sorted(range(1, rounds + 1), key=lambda j: log1[j - 1], reverse=True)
    fen = _Fenwick(rounds + 1)
    i = rounds
    pairs = 0
    for j in queries:
        q_j = log1[j - 1]
        while i > q_j:
            fen.add(log0[i - 1])
            i -= 1
        pairs += fen.count_leq(j - 1)
    return pairs


def _witnesses_lb(log0, log1, rounds) -> int:
    for v in list(log0) + list(log1):
        _check_value(v, rounds)
    if len(log0) != rounds or len(log1) != rounds:
        raise ValueError("LB logs must hold one record per round")
    pairs = set()
    for i in range(1, rounds + 1):
        q = log0[i - 1]
        if q >= 1 and log1[q - 1] >= i:
            pairs.add((i, q))
    for j in range(1, rounds + 1):
        p = log1[j - 1]
        if p >= 1 and log0[p - 1] >= j:
            pairs.add((p, j))
    return len(pairs)


def analyze_trace(trace: TraceLog) -> int:
    """Count witness records/pairs in a trace (see the rules above)."""
    name = canonical_name(trace.test)
    if name == "MP":
        if trace.reader_records is None:
            raise ValueError("MP traces need reader_records")
        return _witnesses_mp(trace.reader_records, trace.rounds)
    if trace.thread0 is None or trace.thread1 is None:
        raise ValueError(f"{name} traces need both thread logs")
    if name == "SB":
        return _witnesses_sb(trace.thread0, trace.thread1, trace.rounds)
    if name == "LB":
        return _witnesses_lb(trace.thread0, trace.thread1, trace.rounds)
    raise ValueError(f"perpetual analysis supports {PERPETUAL_TESTS}, not {name}")


def run_perpetual(test_name: str, params: PerpetualParams,
                  backend=None) -> tuple[RunResult, TraceLog]:
    """Launch both threads once and analyze the collected logs."""
    name = canonical_name(test_name)
    if name not in PERPETUAL_TESTS:
        raise ValueError(f"perpetual framework supports {PERPETUAL_TESTS}, not {name}")
    warnings = _validate_affinity(params.affinity)
    if backend is None:
        backend = default_backend()

    started = time.perf_counter()
    if name == "MP":
        log_y, log_x, truncated, warned = backend.run_perpetual_mp(params)
        records = tuple((int(y), int(x)) for y, x in zip(log_y, log_x))
        trace = TraceLog(test=name, rounds=params.rounds,
                         reader_records=records, truncated=truncated)
        examined = len(records)
    else:
        log0, log1, warned = backend.run_perpetual_pair(name, params)
        trace = TraceLog(test=name, rounds=params.rounds,
                         thread0=tuple(int(v) for v in log0),
                         thread1=tuple(int(v) for v in log1))
        examined = 2 * params.rounds
    elapsed = time.perf_counter() - started

    if warned and "affinity-unsupported" not in warnings:
        warnings.append("affinity-unsupported")
    if trace.truncated:
        warnings.append("log-truncated")
    result = RunResult(
        test=name,
        framework="perpetual",
        iterations=examined,
        reorders=analyze_trace(trace),
        wall_time_s=elapsed,
        warnings=tuple(warnings),
    )
    return result, trace


def trace_csv(trace: TraceLog) -> str:
    """Raw-trace dump: thread,record_index,field,value rows."""
    lines = ["thread,record_index,field,value"]
    if trace.reader_records is not None:
        for idx, (y_obs, x_obs) in enumerate(trace.reader_records):
            lines.append(f"1,{idx},y_obs,{y_obs}")
            lines.append(f"1,{idx},x_obs,{x_obs}")
    if trace.thread0 is not None:
        for idx, v in enumerate(trace.thread0):
            lines.append(f"0,{idx},observed,{v}")
    if trace.thread1 is not None:
        for idx, v in enumerate(trace.thread1):
            lines.append(f"1,{idx},observed,{v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------
# exhaustive schedule oracle (small instances)
# ---------------------------------------------------------------------

def _programs(test: str, rounds: int, reader_records: int | None = None):
    """The two thread programs as op tuples: ('W', loc, val) / ('R', loc)."""
    name = canonical_name(test)
    if name == "MP":
        prog0 = []
        for i in range(1, rounds + 1):
            prog0 += [("W", "x", i), ("W", "y", i)]
        k = rounds if reader_records is None else reader_records
        prog1 = [("R", "y"), ("R", "x")] * k
        return prog0, prog1
    if name == "SB":
        prog0, prog1 = [], []
        for i in range(1, rounds + 1):
            prog0 += [("W", "x", i), ("R", "y")]
            prog1 += [("W", "y", i), ("R", "x")]
        return prog0, prog1
    if name == "LB":
        prog0, prog1 = [], []
        for i in range(1, rounds + 1):
            prog0 += [("R", "x"), ("W", "y", i)]
            prog1 += [("R", "y"), ("W", "x", i)]
        return prog0, prog1
    raise ValueError(f"no perpetual program for {name}")


def _execute_schedule(test, prog0, prog1, order, rounds):
    mem = {"x": 0, "y": 0}
    reads = ([], [])
    progs = (prog0, prog1)
    pointers = [0, 0]
    for tid in order:
        op = progs[tid][pointers[tid]]
        pointers[tid] += 1
        if op[0] == "W":
            mem[op[1]] = op[2]
        else:
            reads[tid].append(mem[op[1]])
    if test == "MP":
        r = reads[1]
        records = tuple((r[k], r[k + 1]) for k in range(0, len(r), 2))
        return TraceLog(test="MP", rounds=rounds, reader_records=records)
    return TraceLog(test=test, rounds=rounds,
                    thread0=tuple(reads[0]), thread1=tuple(reads[1]))


def enumerate_sc_traces(test: str, rounds: int,
                        reader_records: int | None = None) -> set[TraceLog]:
    """Every trace reachable under sequentially consistent scheduling."""
    name = canonical_name(test)
    prog0, prog1 = _programs(name, rounds, reader_records)
    n0, n1 = len(prog0), len(prog1)
    traces = set()
    for picks in itertools.combinations(range(n0 + n1), n0):
        picks = set(picks)
        order = [0 if pos in picks else 1 for pos in range(n0 + n1)]
        traces.add(_execute_schedule(name, prog0, prog1, order, rounds))
    return traces


def sc_trace_feasible(trace: TraceLog, reader_records: int | None = None) -> bool:
    """Membership in the exhaustive schedule enumeration (small instances)."""
    if trace.test == "MP" and reader_records is None:
        reader_records = len(trace.reader_records or ())
    probe = replace(trace, truncated=False)
    return probe in enumerate_sc_traces(trace.test, trace.rounds, reader_records)


def simulate_sc_trace(test: str, rounds: int, seed: int,
                      reader_records: int | None = None) -> TraceLog:
    """One random sequentially consistent schedule (seeded)."""
    name = canonical_name(test)
    prog0, prog1 = _programs(name, rounds, reader_records)
    rng = random.Random(seed)
    remaining = [len(prog0), len(prog1)]
    order = []
    while remaining[0] or remaining[1]:
        if not remaining[0]:
            tid = 1
        elif not remaining[1]:
            tid = 0
        else:
            tid = rng.randrange(2)
        order.append(tid)
        remaining[tid] -= 1
    return _execute_schedule(name, prog0, prog1, order, rounds)
