"""Counter-based random bits and seed derivation.

The site-sampling generator is Philox4x32-10: the random word attached to a
site is a pure function of (seed, site index), so a single site's bit can be
computed without materializing the rest of the configuration.  The same
function is evaluated either vectorized over index arrays (numpy) or one
index at a time inside numba kernels; both paths produce identical bits.

Algorithm id: "philox4x32-10/v1" (recorded in run manifests).
"""

import numpy as np
import numba

RNG_ALGORITHM_ID = "philox4x32-10/v1"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def philox4x32(index, seed):
    """Philox4x32-10 keyed by ``seed``, counter = (index_lo, index_hi, 0, 0).

    ``index`` may be a scalar or ndarray of uint64.  Returns four uint32
    arrays (x0, x1, x2, x3), the standard Random123 output words.
    """
    idx = np.asarray(index, dtype=np.uint64)
    c0 = idx & _MASK32
    c1 = (idx >> np.uint64(32)) & _MASK32
    c2 = np.zeros_like(c0)
    c3 = np.zeros_like(c0)
    k0 = np.uint64(seed) & _MASK32
    k1 = (np.uint64(seed) >> np.uint64(32)) & _MASK32
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return (c0.astype(np.uint32), c1.astype(np.uint32),
            c2.astype(np.uint32), c3.astype(np.uint32))


def site_u53(index, seed):
    """53-bit uniform integer in [0, 2^53) for each site index."""
    x0, x1, _, _ = philox4x32(index, seed)
    u64 = (x0.astype(np.uint64) << np.uint64(32)) | x1.astype(np.uint64)
    return u64 >> np.uint64(11)


def open_threshold(p):
    """Integer threshold t so that P[u53 < t] = p (exact for dyadic p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return min(int(round(p * 2.0**53)), 1 << 53)


def site_bits(n_sites, seed, p):
    """Vectorized open/closed bits for site indices 0..n_sites-1."""
    thr = open_threshold(p)
    return site_u53(np.arange(n_sites, dtype=np.uint64), seed) < np.uint64(thr)


@numba.njit(numba.uint64(numba.uint64, numba.uint64), cache=True, nogil=True)
def _philox_u64(index, seed):
    c0 = index & numba.uint64(0xFFFFFFFF)
    c1 = (index >> numba.uint64(32)) & numba.uint64(0xFFFFFFFF)
    c2 = numba.uint64(0)
    c3 = numba.uint64(0)
    k0 = seed & numba.uint64(0xFFFFFFFF)
    k1 = (seed >> numba.uint64(32)) & numba.uint64(0xFFFFFFFF)
    for r in range(10):
        if r > 0:
            k0 = (k0 + numba.uint64(0x9E3779B9)) & numba.uint64(0xFFFFFFFF)
            k1 = (k1 + numba.uint64(0xBB67AE85)) & numba.uint64(0xFFFFFFFF)
        p0 = numba.uint64(0xD2511F53) * c0
        p1 = numba.uint64(0xCD9E8D57) * c2
        hi0 = p0 >> numba.uint64(32)
        lo0 = p0 & numba.uint64(0xFFFFFFFF)
        hi1 = p1 >> numba.uint64(32)
        lo1 = p1 & numba.uint64(0xFFFFFFFF)
        nc0 = hi1 ^ c1 ^ k0
        nc1 = lo1
        nc2 = hi0 ^ c3 ^ k1
        nc3 = lo0
        c0, c1, c2, c3 = nc0, nc1, nc2, nc3
    return (c0 << numba.uint64(32)) | c1


@numba.njit(numba.boolean(numba.uint64, numba.uint64, numba.uint64),
            cache=True, nogil=True, inline="always")
def site_is_open(index, seed, threshold53):
    """Scalar open/closed decision, bit-identical to the vectorized path."""
    return (_philox_u64(index, seed) >> numba.uint64(11)) < threshold53


def splitmix64(x):
    """One SplitMix64 step on a Python int, returns uint64 value as int."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def hash64(*parts):
    """Frozen seed-derivation chain: fold parts through SplitMix64.

    Used everywhere a per-sample or per-worker seed is derived, e.g.
    sample_seed = hash64(base_seed, size, sample_index).  The chain is part
    of the reproducibility contract and must not change.
    """
    h = 0
    for p in parts:
        h = splitmix64(h ^ (int(p) & 0xFFFFFFFFFFFFFFFF))
    return h
