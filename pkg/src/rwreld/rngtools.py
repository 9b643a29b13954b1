"""Counter-based randomness shared by every stochastic component.

Two kinds of streams are needed:

* per-site environment values that stay identical when a window is extended
  (the Laplace-transform bracket deepens its recursion window and must see
  the *same* environment), and
* per-step walk uniforms that are reproducible per replica independently of
  execution order or thread count.

Both are served by the SplitMix64 finalizer applied to a counter, i.e. the
construction used by Java's SplittableRandom: ``u(seed, k)`` is a pure
function, so any subsequence can be generated in any order.  The compiled
walk kernel re-implements ``step_uniform`` in C; ``tests/test_kernels.py``
checks the two are bit-identical.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# domain-separation tags so environment sites, walk steps and derived seeds
# never share a counter stream
TAG_ENV = 0x45_4E_56
TAG_WALK = 0x57_4C_4B
TAG_SEED = 0x53_44_53

_U64 = np.uint64


def _mix64(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer (unsigned 64-bit, wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))


def _as_u64(value) -> np.uint64:
    """Map a Python int (possibly negative or huge) onto uint64."""
    return _U64(int(value) & 0xFFFFFFFFFFFFFFFF)


def subseed(master: int, *indices: int) -> int:
    """Derive an independent 64-bit seed from a master seed and an index path.

    Used for per-replica walk streams and per-try environment seeds; the
    derivation is a chained SplitMix64 mix, so distinct index paths give
    (statistically) independent streams.
    """
    with np.errstate(over="ignore"):
        h = _mix64(_as_u64(master) ^ _as_u64(TAG_SEED) * _GOLDEN)
        for ix in indices:
            h = _mix64((h + _as_u64(ix) * _GOLDEN) ^ _GOLDEN)
    return int(h)


def subseed_array(master: int, indices) -> np.ndarray:
    """Vectorized ``subseed(master, i)`` over an index array (uint64)."""
    with np.errstate(over="ignore"):
        h = _mix64(_as_u64(master) ^ _as_u64(TAG_SEED) * _GOLDEN)
        ks = np.asarray(indices, dtype=np.int64).astype(np.uint64)
        return _mix64((h + ks * _GOLDEN) ^ _GOLDEN)


def site_uniforms(seed, sites) -> np.ndarray:
    """Uniform(0,1) value of each environment site, as a pure function.

    ``seed`` may be a scalar or an array of per-environment seeds and
    ``sites`` a scalar or array of site indices (negative indices allowed);
    the two broadcast.  Extending a window re-generates identical values.
    """
    with np.errstate(over="ignore"):
        s = np.asarray(seed, dtype=np.uint64)
        idx = np.asarray(sites)
        k = idx.astype(np.int64).astype(np.uint64)  # two's-complement wrap
        z = _mix64(s + (k + _as_u64(TAG_ENV)) * _GOLDEN)
    return ((z >> _U64(11)).astype(np.float64)) * _INV53


def step_uniform(walk_seed: int, step: int) -> float:
    """Uniform(0,1) driving walk step ``step`` of the given replica stream."""
    with np.errstate(over="ignore"):
        z = _mix64(_as_u64(walk_seed) + (_as_u64(step) + _as_u64(TAG_WALK)) * _GOLDEN)
    return float(z >> _U64(11)) * _INV53


def step_uniforms(walk_seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized ``step_uniform`` for steps start..start+count-1."""
    with np.errstate(over="ignore"):
        ks = np.arange(start, start + count, dtype=np.uint64)
        z = _mix64(_as_u64(walk_seed) + (ks + _as_u64(TAG_WALK)) * _GOLDEN)
    return ((z >> _U64(11)).astype(np.float64)) * _INV53
