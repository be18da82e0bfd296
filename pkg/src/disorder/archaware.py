"""Cache-set-aware high-bandwidth channel.

One litmus instance per L1 set (minus one): evicting an instance's x line
from the receiver core's L1 drives its re-ordering rate high, so a sender
on the sibling hyperthread transmits a bit per set by writing a full
eviction set (`ways` lines mapping to the same set).  All y locations are
parked in the last set, which the sender never touches.  Channel 0 is a
virtual clock toggling every frame, delimiting frames without any timer;
the remaining channels carry data.  Tests run only a handful of
iterations per frame because the evicted/resident contrast is so strong.

An LRU set-associative cache simulation is the deterministic oracle for
all of the eviction logic; hardware mode is best-effort instrumentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CELL_BYTES = 4  # int32 test cells

# Per-iteration re-order probability in the simulated receiver: above 0.9
# when the x line was evicted, and scaled down by the observed high/low
# count ratio (48.3 : 1.1) otherwise.
SIM_P_HIGH = 0.9
SIM_P_LOW = SIM_P_HIGH * 1.1 / 48.3

DEFAULT_FRAME_ITERATIONS = 15
DEFAULT_THRESHOLD = 8  # count >= threshold reads as a 1


class DesyncError(RuntimeError):
    """The clock channel failed to toggle for several frame periods."""


@dataclass(frozen=True)
class CacheGeometry:
    size_bytes: int = 48 * 1024
    ways: int = 12
    line_bytes: int = 64

    def __post_init__(self):
        if self.size_bytes % (self.ways * self.line_bytes) != 0:
            raise ValueError("size must be a whole number of ways x lines")
        n = self.sets
        if n & (n - 1) != 0 or n == 0:
            raise ValueError("set count must be a power of two")

    @property
    def sets(self) -> int:
        return self.size_bytes // (self.ways * self.line_bytes)

    @property
    def way_stride(self) -> int:
        """Byte distance between consecutive lines of the same set."""
        return self.sets * self.line_bytes

    @classmethod
    def parse(cls, text: str) -> "CacheGeometry":
        """Parse '<size>:<ways>:<line>', size taking a k/K suffix."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("geometry format is <size>:<ways>:<line>")
        size = parts[0].strip().lower()
        size_bytes = int(size[:-1]) * 1024 if size.endswith("k") else int(size)
        return cls(size_bytes=size_bytes, ways=int(parts[1]), line_bytes=int(parts[2]))


def set_index(offset: int, geo: CacheGeometry) -> int:
    """Cache set of a byte offset: line number modulo the set count."""
    if offset < 0:
        raise ValueError("offset must be non-negative")
    return (offset // geo.line_bytes) % geo.sets


@dataclass(frozen=True)
class EvictionSet:
    target_set: int
    addresses: tuple[int, ...]  # byte offsets, one line per way


def build_eviction_set(target: int, geo: CacheGeometry, region_bytes: int) -> EvictionSet:
    """`ways` distinct same-set line offsets inside a buffer region."""
    if not 0 <= target < geo.sets:
        raise ValueError(f"target set {target} out of range")
    if region_bytes < geo.ways * geo.way_stride:
        raise ValueError("region too small to hold one line per way")
    addresses = tuple(target * geo.line_bytes + k * geo.way_stride
                      for k in range(geo.ways))
    return EvictionSet(target_set=target, addresses=addresses)


class LRUCache:
    """Set-associative LRU model over line addresses (byte-offset keyed)."""

    def __init__(self, geo: CacheGeometry):
        self.geo = geo
        self.sets: list[list[int]] = [[] for _ in range(geo.sets)]
        self.trace: list[tuple[int, int, bool]] = []  # (line, set, hit)

    def _line(self, offset: int) -> int:
        return offset // self.geo.line_bytes

    def access(self, offset: int) -> bool:
        """Touch one address; returns True on hit.  LRU on miss when full."""
        line = self._line(offset)
        idx = set_index(offset, self.geo)
        ways = self.sets[idx]
        hit = line in ways
        if hit:
            ways.remove(line)
        elif len(ways) == self.geo.ways:
            ways.pop(0)  # least recently used at the front
        ways.append(line)
        self.trace.append((line, idx, hit))
        return hit

    def resident(self, offset: int) -> bool:
        return self._line(offset) in self.sets[set_index(offset, self.geo)]

    def set_contents(self, idx: int) -> tuple[int, ...]:
        return tuple(self.sets[idx])


@dataclass(frozen=True)
class FrameLayout:
    """Channel-to-set assignment: channel i's x line sits in set i, every
    y cell sits in the last set, and channel 0 is the virtual clock."""

    geo: CacheGeometry = field(default_factory=CacheGeometry)
    frame_iterations: int = DEFAULT_FRAME_ITERATIONS
    threshold: int = DEFAULT_THRESHOLD

    @property
    def channels(self) -> int:
        return self.geo.sets - 1

    @property
    def data_bits(self) -> int:
        return self.channels - 1  # channel 0 is the clock

    @property
    def y_set(self) -> int:
        return self.geo.sets - 1

    @property
    def cells_per_line(self) -> int:
        return self.geo.line_bytes // CELL_BYTES

    def x_offset(self, channel: int) -> int:
        if not 0 <= channel < self.channels:
            raise ValueError(f"channel {channel} out of range")
        return channel * self.geo.line_bytes

    def y_offset(self, channel: int) -> int:
        """y cells pack 16 per line into successive lines of the y set."""
        if not 0 <= channel < self.channels:
            raise ValueError(f"channel {channel} out of range")
        line_block, cell = divmod(channel, self.cells_per_line)
        return (self.y_set * self.geo.line_bytes
                + line_block * self.geo.way_stride
                + cell * CELL_BYTES)

    def receiver_lines(self) -> list[int]:
        """Line-aligned offsets the receiver's tests keep resident."""
        lines = [self.x_offset(ch) for ch in range(self.channels)]
        y_lines = sorted({self.y_offset(ch) // self.geo.line_bytes * self.geo.line_bytes
                          for ch in range(self.channels)})
        return lines + y_lines

    @property
    def buffer_bytes(self) -> int:
        blocks = 1 + (self.channels - 1) // self.cells_per_line
        return blocks * self.geo.way_stride

    @property
    def sender_base(self) -> int:
        """Start of the sender's own region in model line-address space.

        The sender is a separate process with its own buffer; its lines
        share sets with the receiver's but are never the same lines.  A
        multiple of the way stride keeps the set mapping aligned.
        """
        return self.buffer_bytes


def encode_frame(bits: str, layout: FrameLayout, frame_index: int) -> list[int]:
    """Store offsets the sender issues for one frame.

    Bit i rides channel i + 1; a set bit means writing that channel's full
    eviction set.  The clock channel's eviction set is written on every
    other frame, which is what toggles it.
    """
    if len(bits) > layout.data_bits:
        raise ValueError(f"at most {layout.data_bits} bits per frame")
    region = layout.geo.ways * layout.geo.way_stride
    base = layout.sender_base
    offsets: list[int] = []
    if frame_index % 2 == 0:
        offsets.extend(base + a for a in build_eviction_set(0, layout.geo, region).addresses)
    for i, bit in enumerate(bits):
        if bit == "1":
            channel = i + 1
            offsets.extend(base + a for a in
                           build_eviction_set(channel, layout.geo, region).addresses)
    return offsets


def decode_counts(counts, layout: FrameLayout) -> str:
    """Per-channel counts (clock excluded) to bits via the threshold."""
    return "".join("1" if c >= layout.threshold else "0" for c in counts)


class SimChannel:
    """Loopback transport under the LRU cache simulation.

    The receiver's test lines start resident; each frame applies the
    sender's stores to the model, reads off which x lines got evicted,
    draws per-channel re-ordering counts (binomial over the frame's
    iterations), and re-touches the receiver lines, exactly as running
    the tests would.
    """

    def __init__(self, layout: FrameLayout, seed: int = 0,
                 p_high: float = SIM_P_HIGH, p_low: float = SIM_P_LOW):
        self.layout = layout
        self.cache = LRUCache(layout.geo)
        self.rng = np.random.default_rng(seed)
        self.p_high = p_high
        self.p_low = p_low
        self._prime()

    def _prime(self):
        for off in self.layout.receiver_lines():
            self.cache.access(off)

    def apply_stores(self, offsets):
        for off in offsets:
            self.cache.access(off)

    def poll_counts(self) -> list[int]:
        """One receiver pass: run every channel's test for the frame's
        iterations and report the re-ordering counts."""
        layout = self.layout
        counts = []
        for ch in range(layout.channels):
            evicted = not self.cache.resident(layout.x_offset(ch))
            p = self.p_high if evicted else self.p_low
            counts.append(int(self.rng.binomial(layout.frame_iterations, p)))
        self._prime()  # running the tests reloads every line
        return counts


def send_message(bits: str, channel: SimChannel,
                 polls_per_frame: int = 2) -> str:
    """Frame, transmit and decode a message over the simulated channel.

    The sender keeps re-issuing its eviction stores while a frame is live
    (evictions are one-shot once the receiver reloads its lines) and the
    receiver polls more often than frames change; the clock channel
    deduplicates repeat polls of the same frame.
    """
    layout = channel.layout
    frames = [bits[i:i + layout.data_bits]
              for i in range(0, len(bits), layout.data_bits)]
    decoder = FrameDecoder(layout, expected_bits=len(bits),
                           polls_per_frame=polls_per_frame)
    for index, frame_bits in enumerate(frames):
        stores = encode_frame(frame_bits, layout, index)
        for _ in range(polls_per_frame):
            channel.apply_stores(stores)
            decoder.offer(channel.poll_counts())
            if decoder.done:
                break
    return decoder.bits()


class FrameDecoder:
    """Clock-edge framing: a poll becomes a frame when channel 0 flips."""

    def __init__(self, layout: FrameLayout, expected_bits: int | None = None,
                 polls_per_frame: int = 1, max_stale_frames: int = 3):
        self.layout = layout
        self.expected_bits = expected_bits
        self.stale_limit = max_stale_frames * polls_per_frame
        self.frames: list[str] = []
        self._last_clock: int | None = None
        self._stale = 0

    @property
    def done(self) -> bool:
        return (self.expected_bits is not None
                and len(self.frames) * self.layout.data_bits >= self.expected_bits)

    def offer(self, counts) -> bool:
        """Consume one poll; returns True when it completed a new frame."""
        clock = 1 if counts[0] >= self.layout.threshold else 0
        if clock == self._last_clock:
            self._stale += 1
            if not self.done and self._stale >= self.stale_limit:
                raise DesyncError(f"clock channel stuck for {self._stale} polls")
            return False
        self._last_clock = clock
        self._stale = 0
        self.frames.append(decode_counts(counts[1:], self.layout))
        return True

    def bits(self) -> str:
        joined = "".join(self.frames)
        if self.expected_bits is not None:
            return joined[:self.expected_bits]
        return joined


def verify_frame_eviction(bits: str, layout: FrameLayout, frame_index: int = 0) -> bool:
    """Oracle check for one frame: exactly the 1-bit channels' x lines get
    evicted, 0-bit x lines and the whole y set stay resident."""
    cache = LRUCache(layout.geo)
    for off in layout.receiver_lines():
        cache.access(off)
    y_before = cache.set_contents(layout.y_set)
    for off in encode_frame(bits, layout, frame_index):
        if set_index(off, layout.geo) == layout.y_set:
            return False
        cache.access(off)
    if cache.set_contents(layout.y_set) != y_before:
        return False
    for i, bit in enumerate(bits):
        evicted = not cache.resident(layout.x_offset(i + 1))
        if evicted != (bit == "1"):
            return False
    clock_evicted = not cache.resident(layout.x_offset(0))
    return clock_evicted == (frame_index % 2 == 0)


# ---------------------------------------------------------------------
# hardware mode (experimental, best effort)
# ---------------------------------------------------------------------

def hw_receiver_params(layout: FrameLayout, channel: int, affinity=None):
    """BasicParams addressing one channel's x/y cells in a shared buffer."""
    from .runner import BasicParams
    return BasicParams(
        index_x=layout.x_offset(channel) // CELL_BYTES,
        index_y=layout.y_offset(channel) // CELL_BYTES,
        buffer_len=layout.buffer_bytes // CELL_BYTES,
        iterations=layout.frame_iterations,
        affinity=affinity,
    )


def hw_send_frame(buf, bits: str, layout: FrameLayout, frame_index: int,
                  backend=None, repeats: int = 1):
    """Issue one frame's eviction stores into the sender's real buffer.

    Offsets are relative to the sender's own allocation (element units);
    the model-space sender base is stripped.
    """
    from .backends import default_backend
    if backend is None:
        backend = default_backend()
    offsets = [(off - layout.sender_base) // CELL_BYTES
               for off in encode_frame(bits, layout, frame_index)]
    backend.store_offsets(buf, offsets, repeats)


def hw_poll_counts(layout: FrameLayout, affinity=None, backend=None) -> list[int]:
    """Run all channels' tests for one frame; raw counts, no assertions."""
    from .litmus import build_test
    from .runner import run_basic
    test = build_test("SB")
    counts = []
    for ch in range(layout.channels):
        params = hw_receiver_params(layout, ch, affinity=affinity)
        counts.append(run_basic(test, params, backend=backend).reorders)
    return counts
