"""Privacy amplification: key-length budgeting and Toeplitz universal hashing.

The budget arithmetic is asymptotic: each session hashes its own raw key,
and the extractable-length guarantee is the usual many-session limit (a
fixed per-session security margin covers the slack).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DOMAIN_TOEPLITZ, ParameterError, substream
from .gf2 import gf2_conv

__all__ = [
    "LeakageBudget",
    "DEFAULT_SECURITY_MARGIN_NATS",
    "secret_length",
    "toeplitz_hash",
    "toeplitz_diagonal",
]

# 40 bits of fixed slack per hashing session, independent of block length.
DEFAULT_SECURITY_MARGIN_NATS = 40 * math.log(2.0)


@dataclass(frozen=True)
class LeakageBudget:
    """Everything charged against the raw key before hashing, in nats."""

    transcript_nats: float = 0.0
    eve_quantum_nats: float = 0.0
    security_margin_nats: float = DEFAULT_SECURITY_MARGIN_NATS

    def __post_init__(self) -> None:
        if min(self.transcript_nats, self.eve_quantum_nats, self.security_margin_nats) < 0.0:
            raise ParameterError("budget terms must be non-negative")

    def total(self) -> float:
        return self.transcript_nats + self.eve_quantum_nats + self.security_margin_nats


def secret_length(raw_entropy_nats: float, budget: LeakageBudget) -> float:
    """Distillable key length: max(0, raw entropy - total budget)."""
    if raw_entropy_nats < 0.0:
        raise ParameterError("raw entropy must be non-negative")
    return max(0.0, raw_entropy_nats - budget.total())


def toeplitz_diagonal(in_len: int, out_len: int, hash_seed: int) -> np.ndarray:
    """The in_len + out_len - 1 diagonal bits addressed by hash_seed."""
    rng = substream(hash_seed, DOMAIN_TOEPLITZ, 0)
    return rng.integers(0, 2, size=in_len + out_len - 1, dtype=np.uint8)


def _toeplitz_apply(diag: np.ndarray, bits: np.ndarray, out_len: int) -> np.ndarray:
    """T @ bits over GF(2) for the Toeplitz matrix T[i, j] = diag[n-1+i-j]."""
    n = bits.size
    conv = gf2_conv(diag, bits)
    return conv[n - 1 : n - 1 + out_len]


def toeplitz_hash(bits: np.ndarray, hash_seed: int, out_len_bits: int) -> np.ndarray:
    """Compress a bit string with a seeded random Toeplitz matrix over GF(2).

    The matrix is fully determined by hash_seed (publishable); the family is
    2-universal, so distinct inputs collide with probability 2^-out_len over
    the seed choice.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ParameterError("input must be a 1-D bit array")
    if out_len_bits < 0 or out_len_bits > bits.size:
        raise ParameterError(
            f"output length must be in [0, {bits.size}], got {out_len_bits}"
        )
    if out_len_bits == 0:
        return np.zeros(0, dtype=np.uint8)
    diag = toeplitz_diagonal(bits.size, out_len_bits, hash_seed)
    return _toeplitz_apply(diag, bits, out_len_bits)
