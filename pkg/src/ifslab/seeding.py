"""Master seed fan-out: every stochastic stage draws from its own stream,
keyed by a stable text label, so results do not depend on call order."""
import zlib

import numpy as np


def substream(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(label.encode())])

