"""Counter-based random streams keyed by work-unit coordinates.

Every random quantity in a run is drawn from a Philox stream whose key is
derived from the master seed plus a tuple of integers naming the work unit
(purpose, drop index, station, RRB, ...).  Streams never share state, so the
order and the process in which work units execute cannot change a result.
"""
from __future__ import annotations

import numpy as np

# Purpose tags; the first element of every key.
DROP = 1
ACTIVITY = 2
FADING = 3
MEASURE = 4
UES = 5
GEOMETRY = 6
SCHEDULE = 7


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and key components must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
