"""Keyed random streams for reproducible trials."""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class StreamTag(IntEnum):
    PLACEMENT = 1
    COMM_CHANNEL = 2
    REFLECTION = 3
    SYMBOLS = 4
    NOISE = 5
    KMEANS = 6
    MUSIC = 7
    MUSIC_NOISE = 8


class RngStreams:
    """Derives independent generators from (master seed, trial index, tag, indices).

    Two calls with the same key return generators in the same state, so any single draw
    can be reproduced without replaying the rest of the trial.
    """

    def __init__(self, master_seed: int, trial_index: int):
        if master_seed < 0 or trial_index < 0:
            raise ValueError("seed and trial index must be non-negative")
        self.master_seed = int(master_seed)
        self.trial_index = int(trial_index)

    def rng(self, tag: StreamTag, *indices: int) -> np.random.Generator:
        entropy = [self.master_seed, self.trial_index, int(tag), *(int(i) for i in indices)]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def __repr__(self) -> str:
        return f"RngStreams(master_seed={self.master_seed}, trial_index={self.trial_index})"
