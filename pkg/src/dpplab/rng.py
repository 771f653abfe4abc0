"""Counter-based random streams: independent substreams from (seed, path).

Every stochastic routine in the package derives its randomness through
`substream`, keyed by a master seed plus integer path components (episode
index, sample index, ...). Streams are Philox counter-based, so results are
reproducible bit-for-bit regardless of execution order or thread count.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def stream_key(seed: int, *path: int) -> int:
    acc = _splitmix(int(seed) & _MASK)
    for p in path:
        acc = _splitmix(acc ^ (int(p) & _MASK))
    return acc


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent Generator for (seed, *path), stable across runs."""
    key = np.array([int(seed) & _MASK, stream_key(seed, *path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_ball(rng: np.random.Generator, n: int, epsilon: float,
                 m: int) -> np.ndarray:
    """m points uniform in the open n-ball of radius epsilon."""
    g = rng.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    r = epsilon * rng.random(m) ** (1.0 / n)
    return g / norms * r[:, None]


def uniform_disk(rng: np.random.Generator, basis: np.ndarray, epsilon: float,
                 m: int) -> np.ndarray:
    """m points uniform in the (n-1)-disk spanned by `basis` rows, radius epsilon."""
    k = basis.shape[0]
    local = uniform_ball(rng, k, epsilon, m)
    return local @ basis
