"""Named random substreams derived from one top-level seed."""

import zlib

import numpy as np


def substream(seed, name: str) -> np.random.Generator:
    """Independent generator for ``name`` (e.g. "walks", "init") under ``seed``.

    ``seed`` may be an int or a tuple of ints.
    """
    parts = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng([int(s) for s in parts] + [zlib.crc32(name.encode())])
