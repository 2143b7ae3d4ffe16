"""
Independent random streams keyed by (master seed, *path).

Every stream is a Philox counter-based generator seeded from
SeedSequence(entropy=seed, spawn_key=path), so streams for different paths
never overlap and any one of them can be rebuilt without replaying the
others. Golden values in the tests depend on this choice.
"""
import numpy as np

# Roles inside one simulated trial.
ROLE_REAL = 0
ROLE_DESIGN = 1
ROLE_BANDWIDTH = 2
ROLE_MODEL_BASE = 16


def stream(seed: int, *path: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(sequence))


def derived_seed(seed: int, *path: int) -> int:
    """A 63-bit integer seed for APIs that take a plain int."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
