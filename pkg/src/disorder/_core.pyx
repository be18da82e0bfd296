# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernel bindings (pthreads + relaxed atomics), GIL released."""

from libc.stdint cimport int32_t, int64_t

import numpy as np

KERNEL_NAME = "compiled"

cdef extern from "_kernels.h" nogil:
    ctypedef struct dis_ops:
        int kind[4]
        int loc[4]
        int32_t arg[4]
    ctypedef struct dis_check:
        int32_t v0
        int32_t v1
        int32_t x
        int32_t y
    int dis_run_basic(const dis_ops *ops, const dis_check *chk, long iterations,
                      size_t idx_x, size_t idx_y, int32_t *buf,
                      int cpu0, int cpu1, long *out_reorders,
                      int *out_affinity_warn)
    int dis_run_perpetual_mp(long rounds, long capacity, size_t idx_x, size_t idx_y,
                             int32_t *buf, int cpu0, int cpu1,
                             int32_t *log_y, int32_t *log_x,
                             long *out_records, int *out_truncated,
                             int *out_affinity_warn)
    int dis_run_perpetual_sb(long rounds, size_t idx_x, size_t idx_y, int32_t *buf,
                             int cpu0, int cpu1, int32_t *log0, int32_t *log1,
                             int *out_affinity_warn)
    int dis_run_perpetual_lb(long rounds, size_t idx_x, size_t idx_y, int32_t *buf,
                             int cpu0, int cpu1, int32_t *log0, int32_t *log1,
                             int *out_affinity_warn)
    int dis_memory_stress(int32_t *buf, size_t num_lines, size_t line_elems,
                          size_t offset_elems, long iters_per_line, long stride,
                          const int *pattern, int pattern_len, int num_threads,
                          long max_rounds, const int32_t *stop, long *out_rounds)
    int dis_thread_launch_stress(int num_threads, long loop_iters, long max_rounds,
                                 const int32_t *stop, long *out_launches)
    void dis_store_offsets(int32_t *buf, const int64_t *offsets, long n, long repeats)
    void dis_signal_stop(int32_t *stop)


def run_basic_kernel(kinds, locs, args, check, long iterations,
                     size_t idx_x, size_t idx_y, size_t buf_len,
                     int cpu0, int cpu1):
    cdef dis_ops ops
    cdef dis_check chk
    cdef int i
    for i in range(4):
        ops.kind[i] = kinds[i]
        ops.loc[i] = locs[i]
        ops.arg[i] = args[i]
    chk.v0, chk.v1, chk.x, chk.y = check

    buf = np.zeros(buf_len, dtype=np.int32)
    cdef int32_t[::1] view = buf
    cdef long reorders = 0
    cdef int warn = 0
    cdef int rc
    with nogil:
        rc = dis_run_basic(&ops, &chk, iterations, idx_x, idx_y,
                           &view[0], cpu0, cpu1, &reorders, &warn)
    if rc != 0:
        raise OSError("litmus worker thread spawn failed")
    return reorders, bool(warn)


def run_perpetual_mp_kernel(long rounds, long capacity, size_t idx_x, size_t idx_y,
                            size_t buf_len, int cpu0, int cpu1):
    buf = np.zeros(buf_len, dtype=np.int32)
    log_y = np.zeros(max(capacity, 1), dtype=np.int32)
    log_x = np.zeros(max(capacity, 1), dtype=np.int32)
    cdef int32_t[::1] bview = buf
    cdef int32_t[::1] yview = log_y
    cdef int32_t[::1] xview = log_x
    cdef long records = 0
    cdef int truncated = 0, warn = 0, rc
    with nogil:
        rc = dis_run_perpetual_mp(rounds, capacity, idx_x, idx_y, &bview[0],
                                  cpu0, cpu1, &yview[0], &xview[0],
                                  &records, &truncated, &warn)
    if rc != 0:
        raise OSError("perpetual worker thread spawn failed")
    return log_y[:records].copy(), log_x[:records].copy(), bool(truncated), bool(warn)


def run_perpetual_pair_kernel(str test, long rounds, size_t idx_x, size_t idx_y,
                              size_t buf_len, int cpu0, int cpu1):
    buf = np.zeros(buf_len, dtype=np.int32)
    log0 = np.zeros(max(rounds, 1), dtype=np.int32)
    log1 = np.zeros(max(rounds, 1), dtype=np.int32)
    cdef int32_t[::1] bview = buf
    cdef int32_t[::1] v0 = log0
    cdef int32_t[::1] v1 = log1
    cdef int warn = 0, rc
    cdef bint is_lb = test == "LB"
    with nogil:
        if is_lb:
            rc = dis_run_perpetual_lb(rounds, idx_x, idx_y, &bview[0],
                                      cpu0, cpu1, &v0[0], &v1[0], &warn)
        else:
            rc = dis_run_perpetual_sb(rounds, idx_x, idx_y, &bview[0],
                                      cpu0, cpu1, &v0[0], &v1[0], &warn)
    if rc != 0:
        raise OSError("perpetual worker thread spawn failed")
    return log0[:rounds].copy(), log1[:rounds].copy(), bool(warn)


def memory_stress_kernel(size_t num_lines, size_t line_elems, size_t offset_elems,
                         long iters_per_line, long stride, pattern,
                         int num_threads, long max_rounds, stop_flag):
    buf = np.zeros(num_lines * line_elems, dtype=np.int32)
    pat = np.asarray(pattern, dtype=np.intc)
    cdef int32_t[::1] bview = buf
    cdef int[::1] pview = pat
    cdef int32_t[::1] sview = stop_flag
    cdef long rounds = 0
    cdef int rc
    with nogil:
        rc = dis_memory_stress(&bview[0], num_lines, line_elems, offset_elems,
                               iters_per_line, stride, &pview[0], pview.shape[0],
                               num_threads, max_rounds, &sview[0], &rounds)
    if rc != 0:
        raise OSError("memory stress thread spawn failed")
    return rounds


def thread_launch_stress_kernel(int num_threads, long loop_iters, long max_rounds,
                                stop_flag):
    cdef int32_t[::1] sview = stop_flag
    cdef long launches = 0
    cdef int rc
    with nogil:
        rc = dis_thread_launch_stress(num_threads, loop_iters, max_rounds,
                                      &sview[0], &launches)
    if rc != 0:
        raise OSError("thread launch stress spawn failed")
    return launches


def store_offsets_kernel(buf, offsets, long repeats):
    offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef int32_t[::1] bview = buf
    cdef int64_t[::1] oview = offs
    if oview.shape[0] == 0:
        return
    with nogil:
        dis_store_offsets(&bview[0], &oview[0], oview.shape[0], repeats)


def signal_stop(stop_flag):
    cdef int32_t[::1] sview = stop_flag
    with nogil:
        dis_signal_stop(&sview[0])
