"""Counter-based uniforms keyed by (seed, sample index).

Philox4x32-10 evaluated over whole arrays of counters, so sample ``n`` of a
batch always receives the same draws no matter how the batch is chunked or
which worker produced it.
"""

from __future__ import annotations

import hashlib

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def philox4x32(counter: np.ndarray, key: tuple[int, int], rounds: int = 10) -> np.ndarray:
    """Apply the Philox4x32 bijection to an ``(..., 4)`` array of uint32 counters."""
    ctr = np.asarray(counter, dtype=np.uint32)
    c0, c1, c2, c3 = (ctr[..., i].astype(np.uint64) for i in range(4))
    k0 = np.uint32(key[0] & 0xFFFFFFFF)
    k1 = np.uint32(key[1] & 0xFFFFFFFF)
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = np.uint32(k0 + _W0)
                k1 = np.uint32(k1 + _W1)
            p0 = _M0 * c0
            p1 = _M1 * c2
            hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
            hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
            c0, c1, c2, c3 = (
                hi1 ^ c1 ^ np.uint64(k0),
                lo1,
                hi0 ^ c3 ^ np.uint64(k1),
                lo0,
            )
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def derive_seed(root: int, *tags: object) -> int:
    """Namespace a root seed: distinct tag tuples give unrelated 64-bit seeds."""
    text = "/".join([str(int(root))] + [str(t) for t in tags]).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def uniforms(seed: int, start: int, stop: int, width: int, stream: int = 0) -> np.ndarray:
    """Open-interval uniforms for samples ``start..stop-1``, ``width`` per sample.

    Each double takes 52 bits from two 32-bit Philox words. Sample ``n`` uses
    counters ``(n_lo, n_hi, block, stream)`` so the result for a given sample
    depends only on ``(seed, n)``.
    """
    if stop < start:
        raise ValueError("stop must be >= start")
    n = np.arange(start, stop, dtype=np.uint64)
    nblocks = (width + 1) // 2
    ctr = np.empty((n.size, nblocks, 4), dtype=np.uint32)
    ctr[..., 0] = (n & _MASK32).astype(np.uint32)[:, None]
    ctr[..., 1] = (n >> _SHIFT32).astype(np.uint32)[:, None]
    ctr[..., 2] = np.arange(nblocks, dtype=np.uint32)[None, :]
    ctr[..., 3] = np.uint32(stream)
    words = philox4x32(ctr, (seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF))
    words = words.reshape(n.size, nblocks * 2, 2).astype(np.uint64)
    # 52 bits so that mant + 0.5 is exact and u stays strictly inside (0, 1)
    mant = (words[..., 0] >> np.uint64(6)) * np.uint64(1 << 26) + (words[..., 1] >> np.uint64(6))
    u = (mant.astype(np.float64) + 0.5) / float(1 << 52)
    return u[:, :width]
