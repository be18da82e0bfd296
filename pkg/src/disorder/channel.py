"""Covert channel: symbol classification, receiver state machine, scoring.

The sender encodes a bit by running one of two stress configurations for a
symbol period (high = 1, low = 0) and pauses for the same period to mark a
space.  The receiver runs a litmus test, keeps a sliding window of per-run
re-ordering counts, classifies each window as high / low / space, and a
small state machine turns window symbols into bits: it waits in standby,
enters the high or low state on a matching window, and records one bit
when a space window sends it back to standby.

Classification is distribution-based (rank the per-symbol normal tail
probabilities) or cutoff-based for devices whose space counts collapse to
zero and are nowhere near normal.  Devices with flaky high onsets can
enable the tentative low state: the first low window only commits after a
confirming window.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .simdevice import ConditionProfile, SimDevice, SimScript
from .stats import edit_accuracy, t_score_single


class Symbol(Enum):
    HIGH = "high"
    LOW = "low"
    NULL = "null"


class State(Enum):
    STANDBY = "standby"
    HIGH = "high"
    LOW = "low"
    LOW_PRIME = "low-prime"


@dataclass(frozen=True)
class Dist:
    mean: float
    std: float


@dataclass
class SignalProfile:
    high: Dist
    low: Dist
    null: Dist | None = None
    cutoff: float | None = None  # mutually exclusive with null
    window_size: int = 5
    iterations_per_sample: int = 100_000
    symbol_duration: int | None = None  # samples per symbol; default window+2
    low_prime: bool = False
    test: str = "MP"
    name: str = "custom"
    high_stress: dict | None = None  # sender-side stress configs (hardware mode)
    low_stress: dict | None = None

    def __post_init__(self):
        if (self.null is None) == (self.cutoff is None):
            raise ValueError("exactly one of null distribution or cutoff is required")
        if self.window_size < 1:
            raise ValueError("window_size must be at least 1")
        if self.symbol_duration is None:
            self.symbol_duration = self.window_size + 2

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "window_size": self.window_size,
            "iterations_per_sample": self.iterations_per_sample,
            "symbol_duration": self.symbol_duration,
            "low_prime": self.low_prime,
            "test": self.test,
            "high": {"mean": self.high.mean, "std": self.high.std},
            "low": {"mean": self.low.mean, "std": self.low.std},
            "null": None if self.null is None else
                    {"mean": self.null.mean, "std": self.null.std},
            "cutoff": self.cutoff,
            "high_stress": self.high_stress,
            "low_stress": self.low_stress,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignalProfile":
        return cls(
            high=Dist(float(d["high"]["mean"]), float(d["high"]["std"])),
            low=Dist(float(d["low"]["mean"]), float(d["low"]["std"])),
            null=None if d.get("null") is None else
                 Dist(float(d["null"]["mean"]), float(d["null"]["std"])),
            cutoff=None if d.get("cutoff") is None else float(d["cutoff"]),
            window_size=int(d.get("window_size", 5)),
            iterations_per_sample=int(d.get("iterations_per_sample", 100_000)),
            symbol_duration=d.get("symbol_duration"),
            low_prime=bool(d.get("low_prime", False)),
            test=d.get("test", "MP"),
            name=d.get("name", "custom"),
            high_stress=d.get("high_stress"),
            low_stress=d.get("low_stress"),
        )

    @classmethod
    def load(cls, path) -> "SignalProfile":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


PRESET_NAMES = ("arm", "m1", "x86", "m3gpu")


def load_preset(name: str) -> SignalProfile:
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    text = resources.files("disorder.presets").joinpath(f"{name}.json").read_text()
    return SignalProfile.from_dict(json.loads(text))


def _tail_p(x: float, dist: Dist) -> float:
    if dist.std == 0:
        return 1.0 if x == dist.mean else 0.0
    return t_score_single(x, dist.mean, dist.std)


def classify_sample(x: float, profile: SignalProfile) -> Symbol:
    """Symbol whose distribution fits best; ties prefer null, then low."""
    if profile.cutoff is not None:
        if x < profile.cutoff:
            return Symbol.NULL
        p_high = _tail_p(x, profile.high)
        p_low = _tail_p(x, profile.low)
        return Symbol.LOW if p_low >= p_high else Symbol.HIGH
    scores = (
        (_tail_p(x, profile.null), 2, Symbol.NULL),
        (_tail_p(x, profile.low), 1, Symbol.LOW),
        (_tail_p(x, profile.high), 0, Symbol.HIGH),
    )
    return max(scores, key=lambda s: (s[0], s[1]))[2]


def classify_window(samples, profile: SignalProfile,
                    previous: Symbol | None = None) -> Symbol:
    """Majority vote over per-sample symbols.

    A tied vote keeps the previous window's symbol; with no previous
    window (standby at start) it reads as a space.
    """
    if len(samples) < profile.window_size:
        raise ValueError("window is not full yet")
    votes = {Symbol.HIGH: 0, Symbol.LOW: 0, Symbol.NULL: 0}
    for x in samples:
        votes[classify_sample(x, profile)] += 1
    best = max(votes.values())
    winners = [sym for sym, n in votes.items() if n == best]
    if len(winners) == 1:
        return winners[0]
    return previous if previous is not None else Symbol.NULL


@dataclass
class ReceiveResult:
    bits: str
    truncated: bool = False
    samples_seen: int = 0
    windows_seen: int = 0


class Receiver:
    """Sliding-window decoder around the standby/high/low state machine."""

    def __init__(self, profile: SignalProfile, tumbling: bool = False):
        self.profile = profile
        self.tumbling = tumbling
        self.state = State.STANDBY
        self.window: list[float] = []
        self.decoded: list[str] = []
        self.last_symbol: Symbol | None = None
        self.windows_seen = 0
        self.samples_seen = 0

    def step(self, symbol: Symbol) -> str | None:
        """Advance the state machine by one window symbol.

        Emits a bit exactly when a space returns the machine to standby.
        """
        state = self.state
        if state is State.STANDBY:
            if symbol is Symbol.HIGH:
                self.state = State.HIGH
            elif symbol is Symbol.LOW:
                self.state = State.LOW_PRIME if self.profile.low_prime else State.LOW
            return None
        if state is State.LOW_PRIME:
            if symbol is Symbol.HIGH:
                self.state = State.HIGH
            elif symbol is Symbol.LOW:
                self.state = State.LOW
            else:
                self.state = State.STANDBY
                return "0"
            return None
        if symbol is Symbol.NULL:
            self.state = State.STANDBY
            return "1" if state is State.HIGH else "0"
        return None

    def push(self, x: float) -> str | None:
        """Feed one observation; returns a decoded bit when one completes."""
        self.samples_seen += 1
        self.window.append(float(x))
        if len(self.window) < self.profile.window_size:
            return None
        if len(self.window) > self.profile.window_size:
            self.window.pop(0)
        if self.tumbling and self.samples_seen % self.profile.window_size != 0:
            return None
        symbol = classify_window(self.window, self.profile, self.last_symbol)
        self.last_symbol = symbol
        self.windows_seen += 1
        bit = self.step(symbol)
        if bit is not None:
            self.decoded.append(bit)
        return bit


def receive(stream, profile: SignalProfile, max_bits: int | None = None,
            tumbling: bool = False) -> ReceiveResult:
    """Decode a stream of observations until it ends or max_bits arrive."""
    rx = Receiver(profile, tumbling=tumbling)
    truncated = False
    for x in stream:
        rx.push(x)
        if max_bits is not None and len(rx.decoded) >= max_bits:
            break
    else:
        truncated = rx.state is not State.STANDBY
    return ReceiveResult(bits="".join(rx.decoded), truncated=truncated,
                         samples_seen=rx.samples_seen, windows_seen=rx.windows_seen)


# ---------------------------------------------------------------------
# sending
# ---------------------------------------------------------------------

class ChannelSendError(RuntimeError):
    def __init__(self, message, sent: int):
        super().__init__(message)
        self.sent = sent


def send_bits(bits: str, high_stress, low_stress, symbol_seconds: float,
              run_stress=None) -> int:
    """Drive the stress frames for a bit string (hardware transmission).

    Each bit runs its stress configuration for `symbol_seconds`, then
    pauses for the same period.  Returns the number of bits sent; a stress
    launch failure aborts with the partial count attached.
    """
    if run_stress is None:
        from .stress import run_stress_for
        run_stress = run_stress_for
    sent = 0
    for bit in bits:
        cfg = high_stress if bit == "1" else low_stress
        try:
            run_stress(cfg, symbol_seconds)
        except OSError as exc:
            raise ChannelSendError(str(exc), sent=sent) from exc
        time.sleep(symbol_seconds)
        sent += 1
    return sent


def build_sim_script(bits: str, profile: SignalProfile, seed: int = 0) -> SimScript:
    """Simulated transmission medium: one timeline segment per frame.

    High/low segments draw from the profile's distributions; spaces draw
    from the null distribution, or constant zero in cutoff mode.
    """
    null = profile.null if profile.null is not None else Dist(0.0, 0.0)
    profiles = {
        "high": ConditionProfile(profile.high.mean, profile.high.std),
        "low": ConditionProfile(profile.low.mean, profile.low.std),
        "null": ConditionProfile(null.mean, null.std),
    }
    duration = profile.symbol_duration
    timeline: list[tuple[str, int]] = []
    for bit in bits:
        timeline.append(("high" if bit == "1" else "low", duration))
        timeline.append(("null", duration))
    return SimScript(profiles=profiles, timeline=timeline, seed=seed)


def loopback(bits: str, profile: SignalProfile, seed: int = 0) -> ReceiveResult:
    """End-to-end simulated send/receive of one bit string."""
    script = build_sim_script(bits, profile, seed=seed)
    return receive(SimDevice(script), profile)


def accuracy(reference: str, decoded: str) -> float:
    """Levenshtein accuracy of a decoded string against the reference."""
    return edit_accuracy(reference, decoded)


def random_bits(n: int, rng) -> str:
    return "".join("1" if rng.random() < 0.5 else "0" for _ in range(n))


def ascii_to_bits(text: str) -> str:
    return "".join(f"{byte:08b}" for byte in text.encode("ascii"))


def bits_to_ascii(bits: str) -> str:
    chars = []
    for i in range(0, len(bits) - 7, 8):
        chars.append(chr(int(bits[i:i + 8], 2)))
    return "".join(chars)
