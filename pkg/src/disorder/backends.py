"""Kernel backend selection and the test-double execution backends.

The hardware backend dispatches to the compiled core when it imported
successfully (``disorder._core``, Cython + pthreads) and otherwise to the
pure-Python kernels.  Set ``DISORDER_PURE_PY=1`` to force the fallback.

Two further backends exist purely for verification: a sequential shim that
executes both threads' instructions in one thread (so no re-ordering can
ever be observed) and a replay backend that injects a fixed stream of
final states into the runner bookkeeping.
"""

from __future__ import annotations

import os

import numpy as np

from . import _purepy
from .litmus import FinalState, LitmusTest, check_reorder, interleaving_outcomes

try:  # pragma: no cover - exercised via DISORDER_PURE_PY in tests
    if os.environ.get("DISORDER_PURE_PY"):
        _core = None
    else:
        from . import _core
except ImportError:  # pragma: no cover
    _core = None

HAVE_COMPILED = _core is not None

_CHECK_FIELDS = ("v0", "v1", "x", "y")


def encode_test(test: LitmusTest):
    """Flatten a litmus test into the kernel calling convention."""
    kinds = [1 if op.kind == "W" else 0 for op in test.ops]
    locs = [0 if op.location == "x" else 1 for op in test.ops]
    args = [op.write_value if op.kind == "W" else op.read_slot for op in test.ops]
    check_map = dict(test.check)
    check = tuple(check_map.get(name, -1) for name in _CHECK_FIELDS)
    return kinds, locs, args, check


class StopFlag:
    """Cancellation cell shared with the kernels (one relaxed int32)."""

    def __init__(self):
        self.cell = np.zeros(1, dtype=np.int32)

    def set(self):
        kernels = _core if _core is not None else _purepy
        kernels.signal_stop(self.cell)

    def is_set(self) -> bool:
        return bool(self.cell[0])

    def clear(self):
        self.cell[0] = 0


class HardwareBackend:
    """Runs tests and stressors on real threads via the selected kernels."""

    def __init__(self, kernels=None):
        self.kernels = kernels if kernels is not None else (_core or _purepy)

    @property
    def name(self) -> str:
        return self.kernels.KERNEL_NAME

    def run_basic(self, test, params):
        kinds, locs, args, check = encode_test(test)
        cpu0, cpu1 = params.affinity if params.affinity else (-1, -1)
        return self.kernels.run_basic_kernel(
            kinds, locs, args, check, params.iterations,
            params.index_x, params.index_y, params.buffer_len, cpu0, cpu1)

    def run_perpetual_mp(self, params):
        cpu0, cpu1 = params.affinity if params.affinity else (-1, -1)
        return self.kernels.run_perpetual_mp_kernel(
            params.rounds, params.log_capacity,
            params.index_x, params.index_y, params.buffer_len, cpu0, cpu1)

    def run_perpetual_pair(self, test_name, params):
        cpu0, cpu1 = params.affinity if params.affinity else (-1, -1)
        return self.kernels.run_perpetual_pair_kernel(
            test_name, params.rounds,
            params.index_x, params.index_y, params.buffer_len, cpu0, cpu1)

    def memory_stress(self, *args, **kwargs):
        return self.kernels.memory_stress_kernel(*args, **kwargs)

    def thread_launch_stress(self, *args, **kwargs):
        return self.kernels.thread_launch_stress_kernel(*args, **kwargs)

    def store_offsets(self, buf, offsets, repeats=1):
        return self.kernels.store_offsets_kernel(buf, offsets, repeats)


class SequentialShimBackend:
    """Interleaves both threads' instructions inside one thread.

    Every produced final state is sequentially consistent by construction,
    so the re-order count must be zero; the runner bookkeeping is exercised
    for real.  Interleavings cycle deterministically, or are drawn from a
    seeded generator when ``seed`` is given.
    """

    name = "sequential-shim"

    def __init__(self, seed: int | None = None):
        self.seed = seed
        self._cache: dict[tuple, list[bool]] = {}

    def _flags(self, test: LitmusTest) -> list[bool]:
        key = (test.name, test.convention)
        if key not in self._cache:
            states = sorted(interleaving_outcomes(test),
                            key=lambda s: (s.x, s.y, s.v))
            self._cache[key] = [check_reorder(test, s) for s in states]
        return self._cache[key]

    def run_basic(self, test, params):
        flags = self._flags(test)
        k = len(flags)
        reorders = 0
        if self.seed is None:
            for i in range(params.iterations):
                if flags[i % k]:
                    reorders += 1
        else:
            rng = np.random.default_rng(self.seed)
            picks = rng.integers(0, k, size=params.iterations)
            hits = np.asarray(flags, dtype=bool)
            reorders = int(hits[picks].sum())
        return reorders, False


class ReplayBackend:
    """Feeds an injected stream of final states through the runner."""

    name = "replay"

    def __init__(self, states: list[FinalState]):
        self.states = list(states)

    def run_basic(self, test, params):
        if params.iterations != len(self.states):
            raise ValueError("replay stream length must equal iterations")
        reorders = sum(1 for s in self.states if check_reorder(test, s))
        return reorders, False


def default_backend() -> HardwareBackend:
    return HardwareBackend()


def get_backend(name: str = "auto"):
    if name == "auto":
        return HardwareBackend()
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled core is not available")
        return HardwareBackend(_core)
    if name == "purepy":
        return HardwareBackend(_purepy)
    raise ValueError(f"unknown backend {name!r}")
