"""Deterministic RNG derivation.

All randomness in the package flows from one integer master seed.  Streams
for distinct purposes (exact rows, Gibbs chains, noise sites, experiment
cells) are derived through ``SeedSequence`` spawn keys over a counter-based
bit generator (Philox), so results do not depend on thread count or on the
order in which independent streams are consumed.
"""
from __future__ import annotations

import numpy as np

# Stream namespaces.  New ones must be appended, never renumbered, or
# seeded outputs change.
EXACT_ROWS = 0
GIBBS_INIT = 1
GIBBS_CHAIN = 2
NOISE_SITE = 3
EXPERIMENT = 4
BATTERY = 5


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *key)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))


def derived_seed(seed: int, *key: int) -> int:
    """A child integer seed, for APIs that take a plain seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
