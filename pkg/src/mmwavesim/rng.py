"""Deterministic, decorrelated random substreams derived from one master seed.

Every consumer of randomness asks for a stream by purpose and run index, so a
fixed (seed, purpose, run_index) triple always reproduces the same draws and
independent Monte Carlo runs can execute in any order or in parallel.
"""

from __future__ import annotations

import numpy as np

# Stable purpose codes; renumbering would silently change every simulation.
PURPOSES = {
    "sf-map": 0,
    "los-map": 1,
    "tcsl": 2,
    "mrs-tags": 3,
    "blockage": 4,
    "o2i": 5,
    "harness": 6,
}


def substream(seed: int, purpose: str, run_index: int = 0) -> np.random.Generator:
    """Return the generator for (seed, purpose, run_index).

    Distinct labels hash to statistically independent PCG64 streams via
    numpy's SeedSequence; the same label always yields the same sequence.
    """
    if purpose not in PURPOSES:
        raise KeyError(f"unknown stream purpose {purpose!r}")
    if not (0 <= seed < 2**64):
        raise ValueError("seed out of [0,2^64)")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(PURPOSES[purpose], run_index))
    return np.random.Generator(np.random.PCG64(ss))
