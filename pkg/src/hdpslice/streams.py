"""Derived random streams.

Every random draw in the sampler comes from a Generator derived as a pure
function of (seed, phase tag, iteration, coordinate index).  This gives
bit-reproducible chains for any worker count, lets a restarted iteration
replay the draws of existing coordinates while fresh coordinates get fresh
randomness, and makes checkpoint resume exact: no stream cursors need to
be serialized, only the seed and the next iteration index.
"""

import numpy as np

# Phase tags.  Values are part of the reproducibility contract: changing
# them changes every chain.
INIT_GAMMA = 0
INIT_BETA = 1
INIT_ATOM = 2
INIT_U = 3
INIT_V = 4
GAMMA = 10
BETA = 11
ATOM = 12
KDRAW = 13
VDRAW = 14
TDRAW = 15
UDRAW = 16
EXTEND = 17
GEN_LABELS = 30
GEN_OBS = 31


def substream(seed, phase, iteration=0, index=0):
    """Return a fresh PCG64 Generator keyed by (seed, phase, iteration, index)."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(int(phase), int(iteration), int(index)))
    return np.random.Generator(np.random.PCG64(ss))
