#ifndef DISORDER_KERNELS_H
#define DISORDER_KERNELS_H

#include <stddef.h>
#include <stdint.h>

/* One litmus test: four ops, instruction order a, b (thread 0), c, d
 * (thread 1).  kind: 0 = read, 1 = write.  loc: 0 = x, 1 = y.
 * arg: value stored for writes, destination slot (0/1) for reads. */
typedef struct {
    int kind[4];
    int loc[4];
    int32_t arg[4];
} dis_ops;

/* Re-order check: expected final values, -1 means "don't care". */
typedef struct {
    int32_t v0, v1, x, y;
} dis_check;

/* Basic framework: two fresh threads per iteration over relaxed atomics.
 * Returns 0, or -1 on thread spawn failure.  cpu < 0 disables pinning. */
int dis_run_basic(const dis_ops *ops, const dis_check *chk, long iterations,
                  size_t idx_x, size_t idx_y, int32_t *buf,
                  int cpu0, int cpu1, long *out_reorders,
                  int *out_affinity_warn);

/* Perpetual framework, threads launched once.
 * MP: thread 0 writes x=i then y=i for i in 1..rounds, then raises a done
 * flag; thread 1 logs (y, x) observation pairs until it sees the final
 * round value, the flag, or runs out of log capacity. */
int dis_run_perpetual_mp(long rounds, long capacity, size_t idx_x, size_t idx_y,
                         int32_t *buf, int cpu0, int cpu1,
                         int32_t *log_y, int32_t *log_x,
                         long *out_records, int *out_truncated,
                         int *out_affinity_warn);

/* SB: thread 0 stores x=i then logs a y observation per round; thread 1
 * symmetric with the locations swapped. Both log exactly `rounds` values. */
int dis_run_perpetual_sb(long rounds, size_t idx_x, size_t idx_y, int32_t *buf,
                         int cpu0, int cpu1, int32_t *log0, int32_t *log1,
                         int *out_affinity_warn);

/* LB: per round, thread 0 logs an x observation then stores y=i; thread 1
 * symmetric. */
int dis_run_perpetual_lb(long rounds, size_t idx_x, size_t idx_y, int32_t *buf,
                         int cpu0, int cpu1, int32_t *log0, int32_t *log1,
                         int *out_affinity_warn);

/* Memory stress: each thread walks stress lines, applying the load/store
 * pattern at line base + offset for iters_per_line rounds, then moving
 * stride lines on.  Runs until *stop is set (checked between rounds) or
 * until each thread finishes max_rounds (max_rounds <= 0: unbounded).
 * pattern entries: 0 = load, 1 = store. */
int dis_memory_stress(int32_t *buf, size_t num_lines, size_t line_elems,
                      size_t offset_elems, long iters_per_line, long stride,
                      const int *pattern, int pattern_len, int num_threads,
                      long max_rounds, const int32_t *stop, long *out_rounds);

/* Thread-launch stress: repeatedly spawn num_threads threads, each running
 * loop_iters relaxed accesses, then join them all.  Spawn failures are
 * retried once.  Returns -1 when a retry also fails. */
int dis_thread_launch_stress(int num_threads, long loop_iters, long max_rounds,
                             const int32_t *stop, long *out_launches);

/* Relaxed stores to a list of element offsets, repeated `repeats` times. */
void dis_store_offsets(int32_t *buf, const int64_t *offsets, long n, long repeats);

/* Relaxed store of 1 into a stop flag cell. */
void dis_signal_stop(int32_t *stop);

#endif /* DISORDER_KERNELS_H */
