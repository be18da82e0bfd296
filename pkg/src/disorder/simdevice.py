"""Deterministic synthetic observation source.

Stands in for vulnerable hardware: per-condition normal profiles (optionally
zero-inflated and floored at zero) produce seeded, bit-reproducible streams
of re-ordering counts, so every downstream analysis can be tested without a
machine that actually re-orders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConditionProfile:
    mean: float
    std: float
    floor_at_zero: bool = True
    zero_inflation: float = 0.0  # extra probability mass at exactly 0

    def __post_init__(self):
        if self.mean < 0 or self.std < 0:
            raise ValueError("mean and std must be non-negative")
        if not 0.0 <= self.zero_inflation <= 1.0:
            raise ValueError("zero_inflation must be a probability")

    def sample(self, rng: np.random.Generator, n: int, integer: bool = True) -> np.ndarray:
        draws = rng.normal(self.mean, self.std, size=n)
        if self.zero_inflation > 0.0:
            draws[rng.random(n) < self.zero_inflation] = 0.0
        if integer:
            draws = np.rint(draws)
        if self.floor_at_zero:
            draws = np.maximum(draws, 0.0)
        return draws

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "floor_at_zero": self.floor_at_zero,
            "zero_inflation": self.zero_inflation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionProfile":
        return cls(
            mean=float(d["mean"]),
            std=float(d["std"]),
            floor_at_zero=bool(d.get("floor_at_zero", True)),
            zero_inflation=float(d.get("zero_inflation", 0.0)),
        )


@dataclass
class SimScript:
    """A timeline of (condition label, duration in samples) plus profiles."""

    profiles: dict[str, ConditionProfile]
    timeline: list[tuple[str, int]] = field(default_factory=list)
    seed: int = 0
    cyclic: bool = False

    def __post_init__(self):
        for label, duration in self.timeline:
            if label not in self.profiles:
                raise ValueError(f"timeline label {label!r} has no profile")
            if duration < 0:
                raise ValueError("durations must be non-negative")

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "cyclic": self.cyclic,
                "profiles": {k: v.to_dict() for k, v in sorted(self.profiles.items())},
                "timeline": [[label, int(n)] for label, n in self.timeline],
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SimScript":
        d = json.loads(text)
        return cls(
            profiles={k: ConditionProfile.from_dict(v) for k, v in d["profiles"].items()},
            timeline=[(label, int(n)) for label, n in d.get("timeline", [])],
            seed=int(d.get("seed", 0)),
            cyclic=bool(d.get("cyclic", False)),
        )

    @classmethod
    def load(cls, path) -> "SimScript":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


class EndOfStream(Exception):
    """Raised when a non-cyclic timeline has been exhausted."""


class SimDevice:
    """Seeded observation stream following a script's timeline.

    Also usable timeline-free via :meth:`sample_condition`, which is what
    the campaign and fingerprint collectors do.
    """

    def __init__(self, script: SimScript, seed: int | None = None, integer: bool = True):
        self.script = script
        self.integer = integer
        self._rng = np.random.default_rng(script.seed if seed is None else seed)
        self._segment = 0
        self._remaining = self.script.timeline[0][1] if self.script.timeline else 0

    def _advance(self):
        while self._remaining == 0:
            self._segment += 1
            if self._segment >= len(self.script.timeline):
                if not self.script.cyclic or not self.script.timeline:
                    raise EndOfStream
                self._segment = 0
            self._remaining = self.script.timeline[self._segment][1]

    def next_observation(self) -> float:
        if not self.script.timeline:
            raise EndOfStream
        self._advance()
        label = self.script.timeline[self._segment][0]
        self._remaining -= 1
        value = self.script.profiles[label].sample(self._rng, 1, integer=self.integer)[0]
        return float(value)

    def __iter__(self):
        return self

    def __next__(self) -> float:
        try:
            return self.next_observation()
        except EndOfStream:
            raise StopIteration from None

    def sample_condition(self, label: str, n: int) -> np.ndarray:
        """Draw n observations from one named condition, timeline ignored."""
        if label not in self.script.profiles:
            raise KeyError(f"no profile named {label!r}")
        return self.script.profiles[label].sample(self._rng, n, integer=self.integer)


def parse_device(descriptor: str | None):
    """Parse a --device descriptor: 'hw' (default) or 'sim:<script.json>'.

    Returns ('hw', None) or ('sim', SimScript).
    """
    if descriptor is None or descriptor == "hw":
        return "hw", None
    if descriptor.startswith("sim:"):
        return "sim", SimScript.load(descriptor[len("sim:"):])
    raise ValueError(f"bad device descriptor {descriptor!r}; use 'hw' or 'sim:script.json'")
