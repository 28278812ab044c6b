"""Counter-keyed random streams

Every random draw in a run is taken from a generator keyed by
(seed, agent, iteration, purpose), so the draws do not depend on the order in
which agents or runs are executed.
"""

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    """What a stream is used for; part of the stream key"""
    INIT_POINT = 0
    INIT_BATCH = 1
    BATCH = 2
    NOISE_X = 3
    NOISE_Y = 4
    OUTPUT = 5
    SHARD = 6
    DATA = 7
    CLIP = 8


# agent slot for streams that belong to the whole run
RUN_SCOPE = 2**31 - 1


def stream(seed: int, agent: int, iteration: int, purpose: Purpose) -> np.random.Generator:
    """
    Build the generator for one (seed, agent, iteration, purpose) key

    Args:
        seed: Run seed (non-negative)
        agent: Agent index, or RUN_SCOPE
        iteration: Iteration index (>= 0)
        purpose: Stream purpose

    Returns:
        Independent numpy Generator
    """
    key = np.random.SeedSequence([int(seed), int(agent), int(iteration), int(purpose)])
    return np.random.default_rng(key)
