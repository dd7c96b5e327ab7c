"""Counter-based random streams.

Every stream is a Philox generator keyed by a hash of ``(seed, *path)``, so
the draws of trial ``t`` (or grid point ``i``) do not depend on how many
other streams were consumed before it or on thread scheduling.
"""

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def child_seed(seed: int, *path: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
