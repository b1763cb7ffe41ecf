"""Bit-packed GF(2) linear algebra helpers.

Rows are packed LSB-first into uint64 words; column j lives in word j>>6,
bit j&63.  Sizes here are a few thousand columns at most, so full
Gauss-Jordan elimination with vectorized row updates is plenty fast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["pack_rows", "get_bit_column", "AffineSolution", "solve_affine", "gf2_conv"]


def pack_rows(rows: np.ndarray) -> np.ndarray:
    """Pack a (m, n) 0/1 array into (m, ceil(n/64)) uint64 words."""
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    m, n = rows.shape
    nbytes = (n + 7) // 8
    nwords = (nbytes + 7) // 8
    packed_bytes = np.packbits(rows, axis=1, bitorder="little")
    buf = np.zeros((m, nwords * 8), dtype=np.uint8)
    buf[:, :nbytes] = packed_bytes
    return buf.view(np.uint64).reshape(m, nwords)


def get_bit_column(mat: np.ndarray, j: int) -> np.ndarray:
    """Extract column j of a packed matrix as a uint64 0/1 vector."""
    return (mat[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


@dataclass
class AffineSolution:
    """Solution set of M x = s over GF(2).

    particular is one solution (None when inconsistent); nullspace holds a
    basis of the homogeneous solutions as a (d, n) 0/1 array.
    """

    consistent: bool
    particular: np.ndarray | None
    nullspace: np.ndarray


def solve_affine(mat_packed: np.ndarray, n_cols: int, rhs: np.ndarray) -> AffineSolution:
    """Gauss-Jordan solve of M x = s for packed M (m rows, n_cols bits)."""
    aug = mat_packed.copy()
    s = np.asarray(rhs, dtype=np.uint8).copy()
    m = aug.shape[0]
    pivot_rows: list[int] = []
    pivot_cols: list[int] = []
    rank = 0
    for j in range(n_cols):
        col = get_bit_column(aug, j)
        cand = np.nonzero(col[rank:])[0]
        if cand.size == 0:
            continue
        p = rank + int(cand[0])
        if p != rank:
            aug[[rank, p]] = aug[[p, rank]]
            s[[rank, p]] = s[[p, rank]]
        sel = get_bit_column(aug, j).astype(bool)
        sel[rank] = False
        if sel.any():
            aug[sel] ^= aug[rank]
            s[sel] ^= s[rank]
        pivot_rows.append(rank)
        pivot_cols.append(j)
        rank += 1
        if rank == m:
            break
    if rank < m and np.any((s[rank:] == 1) & ~aug[rank:].any(axis=1)):
        return AffineSolution(consistent=False, particular=None, nullspace=np.zeros((0, n_cols), np.uint8))

    x = np.zeros(n_cols, dtype=np.uint8)
    for r, j in zip(pivot_rows, pivot_cols):
        x[j] = s[r]

    free_cols = sorted(set(range(n_cols)) - set(pivot_cols))
    null = np.zeros((len(free_cols), n_cols), dtype=np.uint8)
    for t, f in enumerate(free_cols):
        null[t, f] = 1
        fcol = get_bit_column(aug, f)
        for r, j in zip(pivot_rows, pivot_cols):
            null[t, j] = fcol[r]
    return AffineSolution(consistent=True, particular=x, nullspace=null)


def gf2_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Carryless convolution of two 0/1 arrays: c_t = XOR_j a_j b_{t-j}.

    Packed windowed-XOR: the longer operand is tabulated at all 8 sub-byte
    shifts (256 combinations), then one table row is XORed in per byte of
    the shorter operand.  Cost is O(len_short/8 table XORs).
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.size == 0 or b.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if a.size > b.size:
        a, b = b, a
    out_len = a.size + b.size - 1

    bb = np.packbits(b, bitorder="little")
    lb = bb.size
    shifted = np.zeros((8, lb + 1), dtype=np.uint8)
    shifted[0, :lb] = bb
    for t in range(1, 8):
        shifted[t, :lb] = bb << t
        shifted[t, 1 : lb + 1] |= bb >> (8 - t)
    table = np.zeros((256, lb + 1), dtype=np.uint8)
    for v in range(1, 256):
        low = v & -v
        table[v] = table[v ^ low] ^ shifted[low.bit_length() - 1]

    ab = np.packbits(a, bitorder="little")
    out = np.zeros(ab.size + lb + 1, dtype=np.uint8)
    for p in range(ab.size):
        v = ab[p]
        if v:
            out[p : p + lb + 1] ^= table[v]
    return np.unpackbits(out, bitorder="little")[:out_len]
