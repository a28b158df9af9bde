"""Counter-based Gaussian streams.

Every random number is a pure function of ``(seed, trajectory, element, draw)``
so trajectories can be generated in any order, in any batch split, on any
number of threads, and still come out bit-identical.  The generator is
Philox4x32-10 evaluated directly on numpy arrays of counters.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)
_ROUNDS = 10


def philox4x32(counter, key):
    """Philox4x32-10 block function.

    ``counter`` is a sequence of four uint32 arrays (broadcastable), ``key`` a
    pair of uint32 scalars or arrays.  Returns four uint32 arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) & _MASK for k in key)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT, p0 & _MASK
        hi1, lo1 = p1 >> _SHIFT, p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return tuple(c.astype(np.uint32) for c in (c0, c1, c2, c3))


def _split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, seed >> 32


def _to_unit(hi, lo):
    # 53-bit uniform in [0, 1)
    a = (hi >> np.uint32(5)).astype(np.float64)
    b = (lo >> np.uint32(6)).astype(np.float64)
    return (a * 67108864.0 + b) / 9007199254740992.0


def uniforms(seed: int, trajectories, element: int, block: int = 0):
    """Two independent U[0,1) arrays per trajectory for one counter block."""
    t = np.asarray(trajectories, dtype=np.uint64)
    x0, x1, x2, x3 = philox4x32(
        (t & _MASK, t >> _SHIFT, np.uint64(element), np.uint64(block)),
        _split_seed(seed),
    )
    return _to_unit(x0, x1), _to_unit(x2, x3)


def normals(seed: int, trajectories, element: int, count: int) -> np.ndarray:
    """Standard normals of shape ``(len(trajectories), count)``.

    Normal ``k`` of an element comes from Philox block ``k // 2`` through the
    Box-Muller transform, so the value of a given draw never depends on how
    many draws were requested.
    """
    t = np.atleast_1d(np.asarray(trajectories, dtype=np.uint64))
    out = np.empty((t.size, count))
    for block in range((count + 1) // 2):
        u1, u2 = uniforms(seed, t, element, block)
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        out[:, 2 * block] = radius * np.cos(angle)
        if 2 * block + 1 < count:
            out[:, 2 * block + 1] = radius * np.sin(angle)
    return out


class CounterStream:
    """Sequential view of one ``(seed, trajectory, element)`` counter.

    Quacks like the ``standard_normal`` part of :class:`numpy.random.Generator`
    so the scalar noise helpers can be driven from the same stream the batched
    engine uses.
    """

    def __init__(self, seed: int, trajectory: int = 0, element: int = 0):
        self.seed = seed
        self.trajectory = trajectory
        self.element = element
        self._used = 0

    def standard_normal(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        start = self._used
        draws = normals(self.seed, [self.trajectory], self.element, start + n)[0, start:]
        self._used += n
        if size is None:
            return float(draws[0])
        return draws.reshape(size)


def derive_seed(*keys: int) -> int:
    """64-bit seed for a sub-stream identified by a tuple of integers."""
    state = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
