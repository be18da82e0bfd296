"""Pure-Python fallback kernels, selected when the compiled core is absent.

Functionally equivalent to the compiled kernels but much slower, and the
interpreter lock serializes bytecode so genuine hardware re-orderings are
effectively unobservable here; the fallback exists so every pipeline runs
(and stays testable) without a compiler.  Accesses to the shared test
buffer are single list-item reads/writes, each atomic under the
interpreter.
"""

from __future__ import annotations

import os
import threading

import numpy as np

KERNEL_NAME = "purepy"


def _pin_self(cpu: int) -> bool:
    """Best-effort self-affinity; returns True when a warning should be set."""
    if cpu < 0:
        return False
    try:
        os.sched_setaffinity(0, {cpu})
        return False
    except (AttributeError, OSError):
        return True


def run_basic_kernel(kinds, locs, args, check, iterations, idx_x, idx_y,
                     buf_len, cpu0, cpu1):
    buf = [0] * buf_len
    cells = (idx_x, idx_y)
    exp_v0, exp_v1, exp_x, exp_y = check
    warn = [False]

    def body(base, cpu, v):
        if _pin_self(cpu):
            warn[0] = True
        for i in (base, base + 1):
            cell = cells[locs[i]]
            if kinds[i] == 1:
                buf[cell] = args[i]
            else:
                v[args[i]] = buf[cell]

    reorders = 0
    for _ in range(iterations):
        buf[idx_x] = 0
        buf[idx_y] = 0
        v = [0, 0]
        try:
            t0 = threading.Thread(target=body, args=(0, cpu0, v))
            t1 = threading.Thread(target=body, args=(2, cpu1, v))
            t0.start()
            t1.start()
        except RuntimeError as exc:
            raise OSError("litmus worker thread spawn failed") from exc
        t0.join()
        t1.join()
        if ((exp_v0 < 0 or v[0] == exp_v0) and (exp_v1 < 0 or v[1] == exp_v1)
                and (exp_x < 0 or buf[idx_x] == exp_x)
                and (exp_y < 0 or buf[idx_y] == exp_y)):
            reorders += 1
    return reorders, warn[0]


def run_perpetual_mp_kernel(rounds, capacity, idx_x, idx_y, buf_len, cpu0, cpu1):
    buf = [0] * buf_len
    done = [False]
    log_y: list[int] = []
    log_x: list[int] = []
    truncated = [False]
    warn = [False]

    def writer():
        if _pin_self(cpu0):
            warn[0] = True
        for i in range(1, rounds + 1):
            buf[idx_x] = i
            buf[idx_y] = i
        done[0] = True

    def reader():
        if _pin_self(cpu1):
            warn[0] = True
        n = 0
        while n < capacity:
            vy = buf[idx_y]
            vx = buf[idx_x]
            log_y.append(vy)
            log_x.append(vx)
            n += 1
            if vy == rounds or done[0]:
                return
        truncated[0] = not done[0] and (not log_y or log_y[-1] != rounds)

    tw = threading.Thread(target=writer)
    tr = threading.Thread(target=reader)
    tw.start()
    tr.start()
    tw.join()
    tr.join()
    return (np.asarray(log_y, dtype=np.int32), np.asarray(log_x, dtype=np.int32),
            truncated[0], warn[0])


def run_perpetual_pair_kernel(test, rounds, idx_x, idx_y, buf_len, cpu0, cpu1):
    buf = [0] * buf_len
    read_first = test == "LB"
    logs = ([0] * rounds, [0] * rounds)
    warn = [False]

    def body(write_cell, read_cell, log, cpu):
        if _pin_self(cpu):
            warn[0] = True
        for i in range(1, rounds + 1):
            if read_first:
                log[i - 1] = buf[read_cell]
                buf[write_cell] = i
            else:
                buf[write_cell] = i
                log[i - 1] = buf[read_cell]

    t0 = threading.Thread(target=body, args=(idx_x, idx_y, logs[0], cpu0))
    t1 = threading.Thread(target=body, args=(idx_y, idx_x, logs[1], cpu1))
    t0.start()
    t1.start()
    t0.join()
    t1.join()
    return (np.asarray(logs[0], dtype=np.int32), np.asarray(logs[1], dtype=np.int32),
            warn[0])


def memory_stress_kernel(num_lines, line_elems, offset_elems, iters_per_line,
                         stride, pattern, num_threads, max_rounds, stop_flag,
                         trace=None):
    """Line-walking stress.  ``trace`` (purepy only) captures (tid, line)."""
    buf = [0] * (num_lines * line_elems)
    pattern = list(pattern)
    totals = [0] * num_threads
    lock = threading.Lock()

    def body(tid):
        line = tid % num_lines
        rounds = 0
        while not stop_flag[0] and (max_rounds <= 0 or rounds < max_rounds):
            if trace is not None:
                with lock:
                    trace.append((tid, line))
            p = line * line_elems + offset_elems
            for k in range(iters_per_line):
                for op in pattern:
                    if op:
                        buf[p] = k
                    else:
                        buf[p]
            line = (line + stride) % num_lines
            rounds += 1
        totals[tid] = rounds

    threads = [threading.Thread(target=body, args=(tid,)) for tid in range(num_threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return sum(totals)


def thread_launch_stress_kernel(num_threads, loop_iters, max_rounds, stop_flag):
    launches = 0
    rounds = 0
    slots = [0] * num_threads

    def body(i):
        for k in range(loop_iters):
            slots[i] = k
            slots[i]

    while not stop_flag[0] and (max_rounds <= 0 or rounds < max_rounds):
        workers = []
        for i in range(num_threads):
            try:
                t = threading.Thread(target=body, args=(i,))
                t.start()
            except RuntimeError:
                try:
                    t = threading.Thread(target=body, args=(i,))
                    t.start()
                except RuntimeError as exc:
                    for w in workers:
                        w.join()
                    raise OSError("thread launch stress spawn failed") from exc
            workers.append(t)
        for t in workers:
            t.join()
        launches += len(workers)
        rounds += 1
    return launches


def store_offsets_kernel(buf, offsets, repeats):
    for r in range(repeats):
        for off in offsets:
            buf[off] = r + 1


def signal_stop(stop_flag):
    stop_flag[0] = 1
