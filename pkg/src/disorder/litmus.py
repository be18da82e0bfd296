"""Two-thread, four-instruction litmus tests and their re-order checks.

Each test runs two memory operations per thread over two shared locations
``x`` and ``y``.  Instructions are labelled a, b (thread 0) and c, d
(thread 1); a and d target ``x``, b and c target ``y``.  A final-state
predicate (the re-order check) is satisfiable only when at least one
thread's operations took effect out of program order, which the
exhaustive interleaving oracle in this module certifies.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

READ = "R"
WRITE = "W"

TEST_NAMES = ("MP", "SB", "LB", "2+2W", "S", "R")

# Canonical value scheme: every write stores a fresh value, counting
# 1, 2, ... in instruction order a, b, c, d; reads fill v0, v1, ... in
# instruction order.  The classic scheme reproduces the value labels the
# older litmus catalogs use (per-location numbering, e.g. the MP form
# where both writes store 1 and the check is v0==1 && v1==0).
CONVENTIONS = ("incrementing", "classic")

# kinds of (a, b, c, d) per test
_KINDS = {
    "MP": (WRITE, WRITE, READ, READ),
    "SB": (WRITE, READ, WRITE, READ),
    "LB": (READ, WRITE, READ, WRITE),
    "2+2W": (WRITE, WRITE, WRITE, WRITE),
    "S": (WRITE, WRITE, READ, WRITE),
    "R": (WRITE, WRITE, WRITE, READ),
}

_LOCS = ("x", "y", "y", "x")

# Classic per-instruction write values (None for reads).
_CLASSIC_VALUES = {
    "MP": (1, 1, None, None),
    "SB": (1, None, 1, None),
    "LB": (None, 1, None, 1),
    "2+2W": (1, 1, 2, 2),
    "S": (2, 1, None, 1),
    "R": (1, 1, 2, None),
}

# Re-order checks, keyed by convention.  Fields are final read slots
# (v0, v1) and final memory values (x, y); only the named fields matter.
_CHECKS = {
    "incrementing": {
        "MP": {"v0": 2, "v1": 0},
        "SB": {"v0": 0, "v1": 0},
        "LB": {"v0": 2, "v1": 1},
        "2+2W": {"x": 1, "y": 3},
        "S": {"x": 1, "v0": 2},
        "R": {"y": 3, "v0": 0},
    },
    "classic": {
        "MP": {"v0": 1, "v1": 0},
        "SB": {"v0": 0, "v1": 0},
        "LB": {"v0": 1, "v1": 1},
        "2+2W": {"x": 1, "y": 2},
        "S": {"x": 2, "v0": 1},
        "R": {"y": 2, "v0": 0},
    },
}

_ALIASES = {"TWOPLUSTWOW": "2+2W", "2+2W": "2+2W"}


def canonical_name(name: str) -> str:
    """Normalize a test name, accepting the TwoPlusTwoW spelling for 2+2W."""
    key = name.strip().upper()
    key = _ALIASES.get(key, key)
    if key not in _KINDS:
        raise ValueError(f"unknown litmus test {name!r}; expected one of {TEST_NAMES}")
    return key


@dataclass(frozen=True)
class MemoryOp:
    """One load or store: kind R/W, location x/y, and its value or slot."""

    kind: str
    location: str
    write_value: int | None = None  # stores only
    read_slot: int | None = None    # loads only

    def __post_init__(self):
        if self.kind not in (READ, WRITE):
            raise ValueError(f"bad op kind {self.kind!r}")
        if self.location not in ("x", "y"):
            raise ValueError(f"bad location {self.location!r}")
        if self.kind == WRITE and (self.write_value is None or self.write_value < 1):
            raise ValueError("writes need a positive write_value")
        if self.kind == READ and (self.read_slot is None or self.read_slot < 0):
            raise ValueError("reads need a non-negative read_slot")


@dataclass(frozen=True)
class FinalState:
    """Post-run snapshot: final memory values plus the read results."""

    x: int
    y: int
    v: tuple[int, ...] = ()

    def field(self, name: str) -> int:
        if name == "x":
            return self.x
        if name == "y":
            return self.y
        if name.startswith("v"):
            return self.v[int(name[1:])]
        raise KeyError(name)


@dataclass(frozen=True)
class LitmusTest:
    name: str
    convention: str
    ops: tuple[MemoryOp, MemoryOp, MemoryOp, MemoryOp]
    check: tuple[tuple[str, int], ...]  # conjunction of field == value

    @property
    def thread0(self) -> tuple[MemoryOp, MemoryOp]:
        return self.ops[:2]

    @property
    def thread1(self) -> tuple[MemoryOp, MemoryOp]:
        return self.ops[2:]

    @property
    def num_reads(self) -> int:
        return sum(1 for op in self.ops if op.kind == READ)


def build_test(name: str, convention: str = "incrementing") -> LitmusTest:
    """Construct one of the six tests under the given value convention."""
    key = canonical_name(name)
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    kinds = _KINDS[key]
    ops = []
    next_value = 1
    next_slot = 0
    for i, kind in enumerate(kinds):
        if kind == WRITE:
            if convention == "incrementing":
                value = next_value
                next_value += 1
            else:
                value = _CLASSIC_VALUES[key][i]
            ops.append(MemoryOp(WRITE, _LOCS[i], write_value=value))
        else:
            ops.append(MemoryOp(READ, _LOCS[i], read_slot=next_slot))
            next_slot += 1
    check = tuple(sorted(_CHECKS[convention][key].items()))
    return LitmusTest(name=key, convention=convention, ops=tuple(ops), check=check)


def build_mp_fig_preset() -> LitmusTest:
    """The MP form where both writes store 1 and the check is v0==1 && v1==0."""
    return build_test("MP", convention="classic")


def check_reorder(test: LitmusTest, state: FinalState) -> bool:
    """True iff the final state satisfies the test's re-order check."""
    if len(state.v) != test.num_reads:
        raise ValueError(
            f"state has {len(state.v)} read results, {test.name} has {test.num_reads} reads"
        )
    return all(state.field(name) == expected for name, expected in test.check)


def _execute(ops_in_order) -> FinalState:
    """Run a sequence of ops with immediately visible writes."""
    mem = {"x": 0, "y": 0}
    slots: dict[int, int] = {}
    for op in ops_in_order:
        if op.kind == WRITE:
            mem[op.location] = op.write_value
        else:
            slots[op.read_slot] = mem[op.location]
    v = tuple(slots[i] for i in sorted(slots))
    return FinalState(x=mem["x"], y=mem["y"], v=v)


def merged_program_outcomes(prog0, prog1) -> set[FinalState]:
    """Final states over every interleaving of two fixed op sequences."""
    n0, n1 = len(prog0), len(prog1)
    outcomes = set()
    for picks in itertools.combinations(range(n0 + n1), n0):
        picks = set(picks)
        i0 = i1 = 0
        order = []
        for pos in range(n0 + n1):
            if pos in picks:
                order.append(prog0[i0])
                i0 += 1
            else:
                order.append(prog1[i1])
                i1 += 1
        outcomes.add(_execute(order))
    return outcomes


def interleaving_outcomes(test: LitmusTest) -> set[FinalState]:
    """All final states reachable under sequentially consistent interleavings.

    This is the oracle behind the no-false-positive guarantee: for every
    test, ``check_reorder`` is false on every element of this set.
    """
    return merged_program_outcomes(list(test.thread0), list(test.thread1))


def reordered_outcomes(test: LitmusTest) -> set[FinalState]:
    """Final states reachable when either thread runs its two ops swapped.

    Used to certify that each check can actually fire: at least one of
    these states (and none of the sequentially consistent ones) passes it.
    """
    t0, t1 = list(test.thread0), list(test.thread1)
    out = merged_program_outcomes(t0[::-1], t1)
    out |= merged_program_outcomes(t0, t1[::-1])
    out |= merged_program_outcomes(t0[::-1], t1[::-1])
    return out


def to_descriptor(test: LitmusTest) -> dict:
    """JSON-friendly descriptor used by campaign configs and reports."""
    ops = []
    for op in test.ops:
        if op.kind == WRITE:
            ops.append({"kind": "W", "loc": op.location, "value": op.write_value})
        else:
            ops.append({"kind": "R", "loc": op.location, "slot": op.read_slot})
    return {
        "name": test.name,
        "convention": test.convention,
        "ops": ops,
        "check": {name: value for name, value in test.check},
    }


def from_descriptor(desc: dict) -> LitmusTest:
    test = build_test(desc["name"], desc.get("convention", "incrementing"))
    built = to_descriptor(test)
    for key in ("ops", "check"):
        if key in desc and desc[key] != built[key]:
            raise ValueError("descriptor does not match a known test definition")
    return test


def descriptor_json(test: LitmusTest) -> str:
    return json.dumps(to_descriptor(test), sort_keys=True)
