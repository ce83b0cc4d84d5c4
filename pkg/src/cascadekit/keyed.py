"""Counter-based randomness keyed by tree position.

Each word gets a 128-bit key (two 64-bit lanes) built by a hash chain over
its symbols, starting from a fixed root key.  A draw for a node is a keyed
hash of ``(seed, depth salt, stream tag, node key)``; nothing is stored and
any node can be queried in O(|u|) without touching its neighbours.

The mixing function is the 64-bit murmur3 finaliser.  Array code relies on
numpy's wrap-around for ``uint64``; scalar code mirrors it with masked Python
ints so the two paths agree bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
_C1 = 0xFF51AFD7ED558CCD
_C2 = 0xC4CEB9FE1A85EC53
_G1 = 0x9E3779B97F4A7C15
_G2 = 0xD1B54A32D192ED03
_G3 = 0x8CB92BA72F3D8DD7
_G4 = 0xA0761D6478BD642F
ROOT_KEY = (0x243F6A8885A308D3, 0x13198A2E03707344)

_U = np.uint64
_TWO53 = 2.0**-53


def fmix64(x: int) -> int:
    x &= MASK
    x ^= x >> 33
    x = (x * _C1) & MASK
    x ^= x >> 33
    x = (x * _C2) & MASK
    x ^= x >> 33
    return x


def _fmix64_arr(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _U(33))
    x = x * _U(_C1)
    x = x ^ (x >> _U(33))
    x = x * _U(_C2)
    return x ^ (x >> _U(33))


def _rotl_arr(x: np.ndarray, r: int) -> np.ndarray:
    return (x << _U(r)) | (x >> _U(64 - r))


def child_keys(ka: np.ndarray, kb: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Keys of children ``u·j`` given parent key lanes (arrays, broadcast with ``j``)."""
    j1 = np.asarray(j, dtype=np.uint64) + _U(1)
    na = _fmix64_arr((ka + j1 * _U(_G1)) ^ _rotl_arr(kb, 29))
    nb = _fmix64_arr(kb + (na ^ (j1 * _U(_G2))))
    return na, nb


def word_key(u) -> tuple[np.ndarray, np.ndarray]:
    """Key of a single word, as length-1 arrays."""
    ka = np.array([ROOT_KEY[0]], dtype=np.uint64)
    kb = np.array([ROOT_KEY[1]], dtype=np.uint64)
    for j in u:
        ka, kb = child_keys(ka, kb, np.array([j], dtype=np.uint64))
    return ka, kb


def stream_constants(seed: int, depth: int, salt: int, tag: int) -> tuple[int, int]:
    s = fmix64(seed ^ fmix64((depth + 1) * _G3))
    s = fmix64(s ^ ((salt * _G4) & MASK))
    s1 = fmix64(s ^ ((tag + 1) * _G1 & MASK))
    s2 = fmix64(s1 + _G2)
    return s1, s2


def uniforms(ka: np.ndarray, kb: np.ndarray, consts: tuple[int, int]) -> np.ndarray:
    """Uniform variates in the open interval (0, 1), one per key."""
    r = _fmix64_arr(ka ^ _U(consts[0]))
    r = _fmix64_arr((r + kb) ^ _U(consts[1]))
    return ((r >> _U(11)).astype(np.float64) + 0.5) * _TWO53


def derive_seed(master: int, index: int) -> int:
    """64-bit child seed for trial ``index`` of a run seeded with ``master``."""
    ss = np.random.SeedSequence([int(master) & MASK, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def stream(master: int, index: int) -> np.random.Generator:
    """Independent ``numpy`` generator for stream ``index`` of ``master``."""
    return np.random.default_rng(np.random.SeedSequence([int(master) & MASK, int(index), 0x5B1E]))
