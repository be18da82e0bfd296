/* Hot kernels for the litmus runners and stressors.
 *
 * All test-memory traffic uses relaxed atomics (__atomic builtins with
 * __ATOMIC_RELAXED): single hardware-level loads and stores with no
 * ordering constraints beyond per-access atomicity, so every instruction
 * re-ordering the hardware permits stays observable.
 */

#ifdef __linux__
#define _GNU_SOURCE
#endif

#include "_kernels.h"

#include <pthread.h>
#include <stdlib.h>

#define LOAD(p) __atomic_load_n((p), __ATOMIC_RELAXED)
#define STORE(p, v) __atomic_store_n((p), (v), __ATOMIC_RELAXED)

static int dis_pin_self(int cpu)
{
#ifdef __linux__
    cpu_set_t set;
    if (cpu < 0)
        return 0;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    return pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
#else
    (void)cpu;
    return cpu < 0 ? 0 : 1;
#endif
}

/* ------------------------------------------------------------------ */
/* basic framework                                                     */
/* ------------------------------------------------------------------ */

typedef struct {
    const dis_ops *ops;
    int32_t *cell_x;
    int32_t *cell_y;
    int32_t v[2];
    int cpu[2];
    int affinity_warn;
} dis_basic_ctx;

typedef struct {
    dis_basic_ctx *ctx;
    int which; /* 0: ops a,b   1: ops c,d */
} dis_basic_arg;

static void dis_exec_op(dis_basic_ctx *ctx, int i)
{
    int32_t *p = ctx->ops->loc[i] == 0 ? ctx->cell_x : ctx->cell_y;
    if (ctx->ops->kind[i] == 1)
        STORE(p, ctx->ops->arg[i]);
    else
        ctx->v[ctx->ops->arg[i]] = LOAD(p);
}

static void *dis_basic_body(void *arg)
{
    dis_basic_arg *a = arg;
    int base = a->which ? 2 : 0;
    if (dis_pin_self(a->ctx->cpu[a->which]) != 0)
        a->ctx->affinity_warn = 1;
    dis_exec_op(a->ctx, base);
    dis_exec_op(a->ctx, base + 1);
    return NULL;
}

int dis_run_basic(const dis_ops *ops, const dis_check *chk, long iterations,
                  size_t idx_x, size_t idx_y, int32_t *buf,
                  int cpu0, int cpu1, long *out_reorders,
                  int *out_affinity_warn)
{
    dis_basic_ctx ctx;
    dis_basic_arg arg0 = {&ctx, 0}, arg1 = {&ctx, 1};
    pthread_t t0, t1;
    long reorders = 0;
    long it;

    ctx.ops = ops;
    ctx.cell_x = buf + idx_x;
    ctx.cell_y = buf + idx_y;
    ctx.cpu[0] = cpu0;
    ctx.cpu[1] = cpu1;
    ctx.affinity_warn = 0;

    for (it = 0; it < iterations; it++) {
        int32_t fx, fy;
        STORE(ctx.cell_x, 0);
        STORE(ctx.cell_y, 0);
        ctx.v[0] = 0;
        ctx.v[1] = 0;
        if (pthread_create(&t0, NULL, dis_basic_body, &arg0) != 0)
            return -1;
        if (pthread_create(&t1, NULL, dis_basic_body, &arg1) != 0) {
            pthread_join(t0, NULL);
            return -1;
        }
        pthread_join(t0, NULL);
        pthread_join(t1, NULL);
        fx = LOAD(ctx.cell_x);
        fy = LOAD(ctx.cell_y);
        if ((chk->v0 < 0 || ctx.v[0] == chk->v0) &&
            (chk->v1 < 0 || ctx.v[1] == chk->v1) &&
            (chk->x < 0 || fx == chk->x) &&
            (chk->y < 0 || fy == chk->y))
            reorders++;
    }
    *out_reorders = reorders;
    *out_affinity_warn = ctx.affinity_warn;
    return 0;
}

/* ------------------------------------------------------------------ */
/* perpetual framework                                                 */
/* ------------------------------------------------------------------ */

typedef struct {
    int32_t *cell_x;
    int32_t *cell_y;
    long rounds;
    long capacity;
    int32_t done;
    int32_t *log_y;
    int32_t *log_x;
    long records;
    int truncated;
    int cpu[2];
    int affinity_warn;
} dis_perp_ctx;

static void *dis_mp_writer(void *arg)
{
    dis_perp_ctx *c = arg;
    long i;
    if (dis_pin_self(c->cpu[0]) != 0)
        c->affinity_warn = 1;
    for (i = 1; i <= c->rounds; i++) {
        STORE(c->cell_x, (int32_t)i);
        STORE(c->cell_y, (int32_t)i);
    }
    STORE(&c->done, 1);
    return NULL;
}

static void *dis_mp_reader(void *arg)
{
    dis_perp_ctx *c = arg;
    long n = 0;
    if (dis_pin_self(c->cpu[1]) != 0)
        c->affinity_warn = 1;
    while (n < c->capacity) {
        int32_t vy = LOAD(c->cell_y);
        int32_t vx = LOAD(c->cell_x);
        c->log_y[n] = vy;
        c->log_x[n] = vx;
        n++;
        if (vy == (int32_t)c->rounds)
            break;
        if (LOAD(&c->done))
            break;
    }
    c->truncated = (n == c->capacity && c->log_y[n > 0 ? n - 1 : 0] != (int32_t)c->rounds &&
                    !LOAD(&c->done));
    c->records = n;
    return NULL;
}

int dis_run_perpetual_mp(long rounds, long capacity, size_t idx_x, size_t idx_y,
                         int32_t *buf, int cpu0, int cpu1,
                         int32_t *log_y, int32_t *log_x,
                         long *out_records, int *out_truncated,
                         int *out_affinity_warn)
{
    dis_perp_ctx ctx = {0};
    pthread_t tw, tr;

    ctx.cell_x = buf + idx_x;
    ctx.cell_y = buf + idx_y;
    ctx.rounds = rounds;
    ctx.capacity = capacity;
    ctx.log_y = log_y;
    ctx.log_x = log_x;
    ctx.cpu[0] = cpu0;
    ctx.cpu[1] = cpu1;
    STORE(ctx.cell_x, 0);
    STORE(ctx.cell_y, 0);

    if (pthread_create(&tw, NULL, dis_mp_writer, &ctx) != 0)
        return -1;
    if (pthread_create(&tr, NULL, dis_mp_reader, &ctx) != 0) {
        pthread_join(tw, NULL);
        return -1;
    }
    pthread_join(tw, NULL);
    pthread_join(tr, NULL);
    *out_records = ctx.records;
    *out_truncated = ctx.truncated;
    *out_affinity_warn = ctx.affinity_warn;
    return 0;
}

typedef struct {
    int32_t *write_cell;
    int32_t *read_cell;
    int32_t *log;
    long rounds;
    int read_first; /* LB reads before writing, SB writes first */
    int cpu;
    int *affinity_warn;
} dis_wr_arg;

static void *dis_wr_body(void *arg)
{
    dis_wr_arg *a = arg;
    long i;
    if (dis_pin_self(a->cpu) != 0)
        *a->affinity_warn = 1;
    for (i = 1; i <= a->rounds; i++) {
        if (a->read_first) {
            a->log[i - 1] = LOAD(a->read_cell);
            STORE(a->write_cell, (int32_t)i);
        } else {
            STORE(a->write_cell, (int32_t)i);
            a->log[i - 1] = LOAD(a->read_cell);
        }
    }
    return NULL;
}

static int dis_run_symmetric(long rounds, size_t idx_x, size_t idx_y,
                             int32_t *buf, int cpu0, int cpu1,
                             int32_t *log0, int32_t *log1, int read_first,
                             int *out_affinity_warn)
{
    int warn = 0;
    dis_wr_arg a0 = {buf + idx_x, buf + idx_y, log0, rounds, read_first, cpu0, &warn};
    dis_wr_arg a1 = {buf + idx_y, buf + idx_x, log1, rounds, read_first, cpu1, &warn};
    pthread_t t0, t1;

    STORE(buf + idx_x, 0);
    STORE(buf + idx_y, 0);
    if (pthread_create(&t0, NULL, dis_wr_body, &a0) != 0)
        return -1;
    if (pthread_create(&t1, NULL, dis_wr_body, &a1) != 0) {
        pthread_join(t0, NULL);
        return -1;
    }
    pthread_join(t0, NULL);
    pthread_join(t1, NULL);
    *out_affinity_warn = warn;
    return 0;
}

int dis_run_perpetual_sb(long rounds, size_t idx_x, size_t idx_y, int32_t *buf,
                         int cpu0, int cpu1, int32_t *log0, int32_t *log1,
                         int *out_affinity_warn)
{
    return dis_run_symmetric(rounds, idx_x, idx_y, buf, cpu0, cpu1,
                             log0, log1, 0, out_affinity_warn);
}

int dis_run_perpetual_lb(long rounds, size_t idx_x, size_t idx_y, int32_t *buf,
                         int cpu0, int cpu1, int32_t *log0, int32_t *log1,
                         int *out_affinity_warn)
{
    return dis_run_symmetric(rounds, idx_x, idx_y, buf, cpu0, cpu1,
                             log0, log1, 1, out_affinity_warn);
}

/* ------------------------------------------------------------------ */
/* stressors                                                           */
/* ------------------------------------------------------------------ */

typedef struct {
    int32_t *buf;
    size_t num_lines;
    size_t line_elems;
    size_t offset_elems;
    long iters_per_line;
    long stride;
    const int *pattern;
    int pattern_len;
    long max_rounds;
    const int32_t *stop;
    int tid;
    long rounds_done;
} dis_mem_arg;

static void *dis_mem_body(void *arg)
{
    dis_mem_arg *a = arg;
    size_t line = (size_t)a->tid % a->num_lines;
    long rounds = 0;
    int32_t sink = 0;

    while (!LOAD(a->stop) && (a->max_rounds <= 0 || rounds < a->max_rounds)) {
        int32_t *p = a->buf + line * a->line_elems + a->offset_elems;
        long k;
        int j;
        for (k = 0; k < a->iters_per_line; k++) {
            for (j = 0; j < a->pattern_len; j++) {
                if (a->pattern[j])
                    STORE(p, (int32_t)k);
                else
                    sink += LOAD(p);
            }
        }
        line = (line + (size_t)a->stride) % a->num_lines;
        rounds++;
    }
    a->rounds_done = rounds + (long)(sink & 0); /* keep the loads alive */
    return NULL;
}

int dis_memory_stress(int32_t *buf, size_t num_lines, size_t line_elems,
                      size_t offset_elems, long iters_per_line, long stride,
                      const int *pattern, int pattern_len, int num_threads,
                      long max_rounds, const int32_t *stop, long *out_rounds)
{
    dis_mem_arg *args;
    pthread_t *threads;
    long total = 0;
    int i, spawned = 0, rc = 0;

    args = calloc((size_t)num_threads, sizeof(*args));
    threads = calloc((size_t)num_threads, sizeof(*threads));
    if (!args || !threads) {
        free(args);
        free(threads);
        return -1;
    }
    for (i = 0; i < num_threads; i++) {
        args[i] = (dis_mem_arg){buf, num_lines, line_elems, offset_elems,
                                iters_per_line, stride, pattern, pattern_len,
                                max_rounds, stop, i, 0};
        if (pthread_create(&threads[i], NULL, dis_mem_body, &args[i]) != 0) {
            rc = -1;
            break;
        }
        spawned++;
    }
    for (i = 0; i < spawned; i++) {
        pthread_join(threads[i], NULL);
        total += args[i].rounds_done;
    }
    free(args);
    free(threads);
    *out_rounds = total;
    return rc;
}

typedef struct {
    int32_t *slot;
    long loop_iters;
} dis_tl_arg;

static void *dis_tl_body(void *arg)
{
    dis_tl_arg *a = arg;
    long k;
    int32_t sink = 0;
    for (k = 0; k < a->loop_iters; k++) {
        STORE(a->slot, (int32_t)k);
        sink += LOAD(a->slot);
    }
    STORE(a->slot, sink);
    return NULL;
}

int dis_thread_launch_stress(int num_threads, long loop_iters, long max_rounds,
                             const int32_t *stop, long *out_launches)
{
    int32_t *slots;
    dis_tl_arg *args;
    pthread_t *threads;
    long launches = 0, rounds = 0;
    int i, rc = 0;

    slots = calloc((size_t)num_threads, sizeof(*slots));
    args = calloc((size_t)num_threads, sizeof(*args));
    threads = calloc((size_t)num_threads, sizeof(*threads));
    if (!slots || !args || !threads) {
        free(slots);
        free(args);
        free(threads);
        return -1;
    }
    while (!LOAD(stop) && (max_rounds <= 0 || rounds < max_rounds) && rc == 0) {
        int spawned = 0;
        for (i = 0; i < num_threads; i++) {
            args[i] = (dis_tl_arg){&slots[i], loop_iters};
            if (pthread_create(&threads[i], NULL, dis_tl_body, &args[i]) != 0 &&
                pthread_create(&threads[i], NULL, dis_tl_body, &args[i]) != 0) {
                rc = -1;
                break;
            }
            spawned++;
        }
        for (i = 0; i < spawned; i++)
            pthread_join(threads[i], NULL);
        launches += spawned;
        rounds++;
    }
    free(slots);
    free(args);
    free(threads);
    *out_launches = launches;
    return rc;
}

void dis_store_offsets(int32_t *buf, const int64_t *offsets, long n, long repeats)
{
    long r, i;
    for (r = 0; r < repeats; r++)
        for (i = 0; i < n; i++)
            STORE(buf + offsets[i], (int32_t)(r + 1));
}

void dis_signal_stop(int32_t *stop)
{
    STORE(stop, 1);
}
