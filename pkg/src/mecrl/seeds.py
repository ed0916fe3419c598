"""Deterministic random-stream derivation.

Every run draws from seven purpose-separated generators so the environment
consumes identical randomness whichever algorithm trains on it, and runs
never share a stream. The seed material for a generator is the triple
``(base_seed, run_index, purpose position)`` fed to numpy's SeedSequence.
"""

from __future__ import annotations

import numpy as np

PURPOSES = (
    "channel_init",
    "channel_evolve",
    "arrivals",
    "reward_noise",
    "net_init",
    "exploration",
    "buffer_sampling",
)


def stream(base_seed: int, run_index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (run, purpose) pair."""
    if purpose not in PURPOSES:
        raise ValueError(f"unknown stream purpose {purpose!r}")
    ss = np.random.SeedSequence([int(base_seed), int(run_index), PURPOSES.index(purpose)])
    return np.random.default_rng(ss)


def env_streams(base_seed: int, run_index: int) -> dict:
    """Keyword arguments for MecEnv's four streams."""
    return {
        "rng_channel_init": stream(base_seed, run_index, "channel_init"),
        "rng_channel": stream(base_seed, run_index, "channel_evolve"),
        "rng_arrivals": stream(base_seed, run_index, "arrivals"),
        "rng_noise": stream(base_seed, run_index, "reward_noise"),
    }
