"""Counter-based random streams.

All randomness in the package flows from a single 64-bit root seed through
Philox counter-based generators.  Independent substreams are derived from
(seed, task_id) keys, so parallel work is reproducible regardless of
scheduling order.
"""

import numpy as np


def root_stream(seed: int) -> np.random.Generator:
    """Generator for single-stream use, keyed by the root seed alone."""
    return substream(seed, 0)


def substream(seed: int, task_id: int) -> np.random.Generator:
    """Independent generator keyed by (seed, task_id).

    Philox keys are 128-bit; we place the seed in the low word and the
    task id in the high word, so distinct task ids never collide.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if task_id < 0:
        raise ValueError("task_id must be nonnegative")
    key = (int(task_id) << 64) | int(seed)
    return np.random.Generator(np.random.Philox(key=key))
