"""Counter-style random substreams keyed by (master seed, stream, step).

Each draw is addressed by its key rather than by the order in which the
generator happened to be consumed, so results do not depend on how work is
scheduled.
"""
import numpy as np

# stream identifiers
INITIAL = 0
GAUSS = 1
BRIDGE = 2
SMOOTH_SHIFT = 3
FP_Z = 10
FP_GAUSS = 11


def substream(seed: int, stream: int, *counter: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream, *counter])
    return np.random.Generator(np.random.Philox(key))


def normals(seed, stream, step, size):
    return substream(seed, stream, step).standard_normal(size)


def uniforms(seed, stream, step, size):
    # open interval (0, 1]; log(U) stays finite
    return 1.0 - substream(seed, stream, step).random(size)
