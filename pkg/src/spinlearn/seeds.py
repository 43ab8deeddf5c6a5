"""Deterministic keyed random draws for model generation.

Every random coefficient in a generated model is a pure function of
(master seed, stream tag, term id), so a model is reproducible no matter
in which order its terms are enumerated and regardless of any
parallelism in the generator.  Keys are mixed with splitmix64 and turned
into uniforms / normals by inverse transform.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# stream tags: one per logical draw family so ids never collide across uses
TAG_PAIRS = 0x51
TAG_FIELD = 0x52
TAG_CLIQUE = 0x53
TAG_PURE = 0x54
TAG_MODEL = 0x55
TAG_SAMPLES = 0x56

_C1 = np.uint64(0x9E3779B97F4A7C15)
_C2 = np.uint64(0xBF58476D1CE4E5B9)
_C3 = np.uint64(0x94D049BB133111EB)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Finalizer of the splitmix64 generator, vectorized over uint64."""
    z = (x + _C1).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _C2
    z = (z ^ (z >> np.uint64(27))) * _C3
    return z ^ (z >> np.uint64(31))


def _keys(seed: int, tag: int, ids: np.ndarray) -> np.ndarray:
    """64-bit hash of (seed, tag, id) for an array of term ids."""
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ splitmix64(np.uint64(tag)))
        # two mixing rounds so structured ids (i*n+j, base-n codes) decorrelate
        return splitmix64(splitmix64(ids ^ base) + base)


def keyed_uniforms(seed: int, tag: int, ids: np.ndarray) -> np.ndarray:
    """Uniforms in the open interval (0, 1), one per id."""
    h = _keys(seed, tag, ids)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def keyed_normals(seed: int, tag: int, ids: np.ndarray) -> np.ndarray:
    """Standard normals keyed by (seed, tag, id)."""
    return ndtri(keyed_uniforms(seed, tag, ids))


def keyed_signs(seed: int, tag: int, ids: np.ndarray) -> np.ndarray:
    """Rademacher +/-1 draws keyed by (seed, tag, id)."""
    h = _keys(seed, tag, ids)
    return (2.0 * (h & np.uint64(1)).astype(np.float64)) - 1.0


def derive_seed(seed: int, tag: int, salt: int = 0) -> int:
    """A fresh 63-bit integer seed derived from (seed, tag, salt)."""
    k = _keys(seed, tag, np.asarray([salt], dtype=np.uint64))[0]
    return int(k >> np.uint64(1))
