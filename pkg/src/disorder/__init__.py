"""Memory re-ordering side-channel lab toolkit.

Litmus-test runners over relaxed atomics, cross-process stressors, a
statistical fuzzing campaign, a covert channel, application
fingerprinting, and a cache-set-aware high-bandwidth channel - plus a
deterministic synthetic device so every analysis stage runs without
vulnerable hardware.
"""

__version__ = "0.1.0"

from .litmus import build_test, check_reorder, interleaving_outcomes  # noqa: F401
