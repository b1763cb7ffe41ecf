"""Slepian-Wolf reconciliation over sparse parity checks.

One party holds a binary source block, the other a correlated side block;
the source side transmits a syndrome of its block and the receiver decodes
the source block from (syndrome, side block, correlation model).

Three decode routes live here:

* belief propagation with Z-channel likelihoods (iteration cap, early exit
  on syndrome match) — the workhorse;
* a GF(2) elimination completion for the exact-Z case, solving the
  restriction of the parity system to the side=1 positions when BP stalls
  (regular weight-3 graphs run a few percent above their iterative
  threshold at the operating margins here, so BP alone would quit on a
  stalled core that is still uniquely solvable);
* an exhaustive maximum-likelihood decoder for tiny blocks, used as the
  test oracle.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

from .analytics import ZParams, h2
from .core import DOMAIN_CODE, ParameterError, substream
from .gf2 import gf2_conv  # noqa: F401  (re-exported for privamp tests)
from .gf2 import pack_rows, solve_affine

__all__ = [
    "CorrelationModel",
    "SwCode",
    "DecodeFailure",
    "make_code",
    "sw_encode",
    "sw_decode",
    "exhaustive_decode",
    "required_rate",
    "syndrome_length_for",
]

COLUMN_WEIGHT = 3
# Sparser side-information laws get heavier columns: restricted to the
# active positions, a weight-w column structure leaves a check row empty
# (wasting its equation) with probability ~exp(-w*q*n/m), and at q ~ 1% the
# weight-3 waste eats most of the syndrome margin.
SPARSE_LAW_COLUMN_WEIGHT = 5
SPARSE_LAW_THRESHOLD = 0.05
# Short dense parity tail appended to the sparse structure.  BP never sees
# it; it exists to pin down the rare linear dependencies that low-weight
# columns develop in small-row systems (a nullity-d residue survives the
# tail with probability 2^-(tail*d)).
DENSE_TAIL = 16
LLR_SAT = 200.0
MAX_ENUM_NULLITY = 12


class DecodeFailure(RuntimeError):
    """Decoder could not produce a syndrome-consistent estimate."""


@dataclass(frozen=True)
class CorrelationModel:
    """Joint law of (source bit, side bit) as a Z channel.

    z.q is P(side=1) and z.mu is P(source=1 | side=1); a source 1 cannot
    occur against side 0 unless p_one_given_zero is set (used when the
    effective Alice-side transmissivity is below 1, e.g. dark counts).
    """

    z: ZParams
    p_one_given_zero: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_one_given_zero <= 1.0:
            raise ValueError("p_one_given_zero must be in [0, 1]")

    def conditional_entropy(self) -> float:
        """H(source | side) in nats."""
        return self.z.q * h2(self.z.mu) + (1.0 - self.z.q) * h2(self.p_one_given_zero)


@dataclass
class SwCode:
    """Sparse syndrome code: every source bit participates in w sparse checks.

    col_rows[j] lists the (distinct) sparse check rows of column j; columns
    are pairwise distinct so no two bits are structurally confusable.  The
    last `dense_len` checks are dense pilot rows (bit-packed).  Codes built
    by :func:`make_code` carry their construction seed and serialize to
    (dimensions + seed) so both endpoints rebuild identical structure.
    """

    block_len: int
    syndrome_len: int
    col_rows: np.ndarray
    dense_rows: np.ndarray | None = None
    seed: int | None = None
    _matrix: csr_matrix | None = field(default=None, repr=False, compare=False)
    _check_order: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not 0 < self.syndrome_len < self.block_len:
            raise ParameterError(
                f"need 0 < syndrome_len < block_len, got {self.syndrome_len}, {self.block_len}"
            )
        if self.col_rows.ndim != 2 or self.col_rows.shape[0] != self.block_len:
            raise ParameterError("parity structure shape mismatch")
        if self.sparse_len < self.column_weight + 1:
            raise ParameterError("too few sparse checks")

    @property
    def column_weight(self) -> int:
        return self.col_rows.shape[1]

    @property
    def dense_len(self) -> int:
        return 0 if self.dense_rows is None else self.dense_rows.shape[0]

    @property
    def sparse_len(self) -> int:
        return self.syndrome_len - self.dense_len

    @property
    def matrix(self) -> csr_matrix:
        if self._matrix is None:
            n, dv = self.col_rows.shape
            rows = self.col_rows.reshape(-1)
            cols = np.repeat(np.arange(n, dtype=np.int64), dv)
            data = np.ones(n * dv, dtype=np.int64)
            self._matrix = csr_matrix((data, (rows, cols)), shape=(self.sparse_len, n))
        return self._matrix

    def dense_bits(self) -> np.ndarray:
        """Dense pilot rows as a (dense_len, block_len) 0/1 array."""
        if self.dense_rows is None:
            return np.zeros((0, self.block_len), dtype=np.uint8)
        bits = np.unpackbits(self.dense_rows.view(np.uint8), axis=1, bitorder="little")
        return bits[:, : self.block_len]

    def dense(self) -> np.ndarray:
        """Full dense 0/1 parity matrix (small blocks only; oracle use)."""
        sparse_part = np.asarray(self.matrix.todense(), dtype=np.uint8) & 1
        return np.vstack([sparse_part, self.dense_bits()])

    def check_sorted_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(edge_var, group starts, degrees) of sparse checks, sorted by check."""
        if self._check_order is None:
            n, dv = self.col_rows.shape
            edge_check = self.col_rows.reshape(-1)
            edge_var = np.repeat(np.arange(n, dtype=np.int64), dv)
            order = np.argsort(edge_check, kind="stable")
            deg = np.bincount(edge_check, minlength=self.sparse_len)
            starts = np.concatenate(([0], np.cumsum(deg)[:-1]))
            self._check_order = (edge_var[order], starts, deg)
        return self._check_order

    def to_bytes(self) -> bytes:
        if self.seed is None:
            raise ParameterError("only seed-constructed codes serialize")
        return struct.pack(
            "<4sBIIIQ",
            b"SWC2",
            self.column_weight,
            self.block_len,
            self.syndrome_len,
            self.dense_len,
            self.seed,
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SwCode":
        magic, dv, n, m, dense_len, seed = struct.unpack("<4sBIIIQ", blob)
        if magic != b"SWC2":
            raise ParameterError("unrecognized code descriptor")
        code = make_code(n, m, seed, column_weight=dv)
        if code.dense_len != dense_len:
            raise ParameterError("descriptor does not match construction rule")
        return code

    @classmethod
    def from_columns(cls, col_rows: np.ndarray, syndrome_len: int) -> "SwCode":
        col_rows = np.asarray(col_rows, dtype=np.int64)
        return cls(block_len=col_rows.shape[0], syndrome_len=syndrome_len, col_rows=col_rows)


def _dense_tail_len(syndrome_len: int, column_weight: int) -> int:
    return min(DENSE_TAIL, max(0, syndrome_len - 2 * (column_weight + 1)))


def make_code(
    block_len: int, syndrome_len: int, seed: int, column_weight: int = COLUMN_WEIGHT
) -> SwCode:
    """Construct the regular weight-w code (plus dense pilot tail) for (dims, seed).

    Each column draws w distinct sparse rows; duplicate columns and empty
    rows are re-drawn (both make the system needlessly singular).  The
    rejection loop consumes the stream deterministically, so identical
    inputs rebuild the identical structure.
    """
    n, m, w = block_len, syndrome_len, column_weight
    if w < 2:
        raise ParameterError(f"column weight must be at least 2, got {w}")
    dense_len = _dense_tail_len(m, w)
    m_sparse = m - dense_len
    if m_sparse < w + 1:
        raise ParameterError(f"syndrome_len must be at least {w + 1}")
    if math.comb(m_sparse, w) < 2 * n:
        raise ParameterError("too few distinct columns available at this rate")
    rng = substream(seed, DOMAIN_CODE, 0)
    for _ in range(100):
        cols = rng.integers(0, m_sparse, size=(n, w), dtype=np.int64)
        for _ in range(1000):
            cols.sort(axis=1)
            bad = (cols[:, 1:] == cols[:, :-1]).any(axis=1)
            _, first = np.unique(cols, axis=0, return_index=True)
            dup = np.ones(n, dtype=bool)
            dup[first] = False
            bad |= dup
            if not bad.any():
                break
            cols[bad] = rng.integers(0, m_sparse, size=(int(bad.sum()), w), dtype=np.int64)
        else:
            continue
        if np.bincount(cols.reshape(-1), minlength=m_sparse).min() == 0:
            continue
        dense = None
        if dense_len:
            dense = pack_rows(rng.integers(0, 2, size=(dense_len, n), dtype=np.uint8))
        return SwCode(block_len=n, syndrome_len=m, col_rows=cols, dense_rows=dense, seed=seed)
    raise ParameterError("could not build a code without empty checks at these dimensions")


def column_weight_for(model: "CorrelationModel") -> int:
    """Heavier columns for sparse side-one laws (see SPARSE_LAW_COLUMN_WEIGHT)."""
    return SPARSE_LAW_COLUMN_WEIGHT if model.z.q < SPARSE_LAW_THRESHOLD else COLUMN_WEIGHT


def required_rate(model: CorrelationModel, margin: float) -> float:
    """Syndrome bits per source bit: H(source|side)/ln2 * (1 + margin)."""
    if margin < 0.0:
        raise ParameterError(f"margin must be non-negative, got {margin}")
    return model.conditional_entropy() / math.log(2.0) * (1.0 + margin)


def syndrome_length_for(model: CorrelationModel, block_len: int, margin: float) -> int:
    """Syndrome length in bits for one block at the given overhead margin."""
    return max(
        column_weight_for(model) + 1, math.ceil(required_rate(model, margin) * block_len)
    )


def sw_encode(code: SwCode, bits: np.ndarray) -> np.ndarray:
    """Syndrome of a source block: parity of each check's bits over GF(2)."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (code.block_len,):
        raise ParameterError(f"block length mismatch: {bits.shape} vs {code.block_len}")
    sparse_syn = (code.matrix @ bits % 2).astype(np.uint8)
    if code.dense_rows is None:
        return sparse_syn
    packed = pack_rows(bits.astype(np.uint8)[None, :])[0]
    dense_syn = (np.bitwise_count(code.dense_rows & packed).sum(axis=1) & 1).astype(np.uint8)
    return np.concatenate([sparse_syn, dense_syn])


def _priors(side: np.ndarray, model: CorrelationModel) -> np.ndarray:
    """Per-bit LLRs ln P(0)/P(1) given the side information."""
    mu = model.z.mu
    p10 = model.p_one_given_zero
    llr1 = LLR_SAT if mu <= 0.0 else (-LLR_SAT if mu >= 1.0 else math.log((1.0 - mu) / mu))
    llr0 = LLR_SAT if p10 <= 0.0 else (-LLR_SAT if p10 >= 1.0 else math.log((1.0 - p10) / p10))
    return np.where(side > 0, llr1, llr0)


def _bp_decode(
    code: SwCode,
    syndrome: np.ndarray,
    prior: np.ndarray,
    max_iters: int,
) -> np.ndarray | None:
    """Sum-product over the sparse checks; None when it cannot settle.

    Dense pilot rows take no part in message passing; they only gate the
    early-exit syndrome verification.
    """
    n, dv = code.col_rows.shape
    _, starts, deg = code.check_sorted_edges()
    sign_fix = 1.0 - 2.0 * syndrome[: code.sparse_len].astype(np.float64)

    # var-major edge layout mirrors col_rows: edge e = (var e//dv, check col_rows.flat[e])
    edge_check = code.col_rows.reshape(-1)
    perm = np.argsort(edge_check, kind="stable")

    msg_vc = np.repeat(prior, dv)
    msg_cv = np.zeros(n * dv)
    posterior_prev = prior.copy()
    for _ in range(max_iters):
        t = np.tanh(0.5 * np.clip(msg_vc, -LLR_SAT, LLR_SAT))
        t = np.where(np.abs(t) < 1e-30, 1e-30, t)
        t_sorted = np.append(t[perm], 1.0)
        prods = np.multiply.reduceat(t_sorted, np.minimum(starts, t_sorted.size - 1))
        prods[deg == 0] = 1.0
        excl = prods[edge_check] / t
        excl = np.clip(excl * sign_fix[edge_check], -1.0 + 1e-14, 1.0 - 1e-14)
        msg_cv = 2.0 * np.arctanh(excl)

        acc = np.add.reduceat(msg_cv, np.arange(0, n * dv, dv))
        posterior = prior + acc
        hard = (posterior < 0.0).astype(np.uint8)
        if np.array_equal(sw_encode(code, hard), syndrome):
            return hard
        if np.max(np.abs(posterior - posterior_prev)) < 1e-9:
            return None
        posterior_prev = posterior
        msg_vc = np.repeat(posterior, dv) - msg_cv
    return None


def _complete_exact_z(
    code: SwCode,
    syndrome: np.ndarray,
    side: np.ndarray,
    model: CorrelationModel,
) -> np.ndarray:
    """Solve the parity system restricted to side=1 positions over GF(2).

    Under the exact Z law every side=0 position is a known zero, so the
    syndrome pins down the remaining bits linearly; at positive margin the
    restricted system is overdetermined and almost surely has the single
    solution equal to the true block.
    """
    n = code.block_len
    m = code.syndrome_len
    unknown = np.nonzero(side > 0)[0]
    if unknown.size == 0:
        if syndrome.any():
            raise DecodeFailure("no free positions but non-zero syndrome")
        return np.zeros(n, dtype=np.uint8)

    col_of = np.full(n, -1, dtype=np.int64)
    col_of[unknown] = np.arange(unknown.size)
    edge_check = code.col_rows.reshape(-1)
    edge_var = np.repeat(np.arange(n, dtype=np.int64), code.column_weight)
    live = col_of[edge_var] >= 0
    rows = edge_check[live]
    cols = col_of[edge_var[live]]

    nwords = (unknown.size + 63) // 64
    packed = np.zeros((m, nwords), dtype=np.uint64)
    np.bitwise_xor.at(packed, (rows, cols >> 6), np.uint64(1) << (cols & 63).astype(np.uint64))
    if code.dense_len:
        packed[code.sparse_len :] = pack_rows(code.dense_bits()[:, unknown])

    sol = solve_affine(packed, unknown.size, syndrome)
    if not sol.consistent:
        raise DecodeFailure("restricted parity system is inconsistent")
    u = sol.particular
    d = sol.nullspace.shape[0]
    if d > 0:
        if d > MAX_ENUM_NULLITY:
            raise DecodeFailure(f"solution space too large to resolve (nullity {d})")
        coeffs = (
            (np.arange(1 << d)[:, None] >> np.arange(d)[None, :]) & 1
        ).astype(np.uint8)
        cands = (u[None, :] ^ (coeffs @ sol.nullspace % 2)).astype(np.uint8)
        weight_pref = math.log(model.z.mu / (1.0 - model.z.mu)) if 0.0 < model.z.mu < 1.0 else (
            LLR_SAT if model.z.mu >= 1.0 else -LLR_SAT
        )
        u = cands[int(np.argmax(cands.sum(axis=1) * weight_pref))]
    out = np.zeros(n, dtype=np.uint8)
    out[unknown] = u
    return out


def sw_decode(
    code: SwCode,
    syndrome: np.ndarray,
    side: np.ndarray,
    model: CorrelationModel,
    max_iters: int = 200,
) -> np.ndarray:
    """Decode a source block from (syndrome, side block, correlation model).

    Belief propagation first (early exit on syndrome match); if it stalls
    and the model is exactly Z, the restricted linear system is solved
    outright.  Raises :class:`DecodeFailure` when no syndrome-consistent
    estimate is reached.
    """
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    side = np.asarray(side, dtype=np.uint8)
    if side.shape != (code.block_len,):
        raise ParameterError("side-information length mismatch")
    if syndrome.shape != (code.syndrome_len,):
        raise ParameterError("syndrome length mismatch")

    hard = _bp_decode(code, syndrome, _priors(side, model), max_iters)
    if hard is not None:
        return hard
    if model.p_one_given_zero == 0.0:
        out = _complete_exact_z(code, syndrome, side, model)
        if np.array_equal(sw_encode(code, out), syndrome):
            return out
    raise DecodeFailure("belief propagation did not converge")


def exhaustive_decode(
    code: SwCode,
    syndrome: np.ndarray,
    side: np.ndarray,
    model: CorrelationModel,
) -> np.ndarray:
    """Exact MAP over all syndrome-consistent words (block_len <= 24).

    Brute force against the dense parity matrix; independent of the
    iterative path so it can serve as its oracle.
    """
    n = code.block_len
    if n > 24:
        raise ParameterError(f"exhaustive decode is limited to 24 bits, got {n}")
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    side = np.asarray(side, dtype=np.uint8)
    dense = code.dense()

    def log_or_floor(p: float) -> float:
        return math.log(p) if p > 0.0 else -1e30

    mu, p10 = model.z.mu, model.p_one_given_zero
    lw1 = np.where(side > 0, log_or_floor(mu), log_or_floor(p10))
    lw0 = np.where(side > 0, log_or_floor(1.0 - mu), log_or_floor(1.0 - p10))
    delta = lw1 - lw0

    best_score = -math.inf
    best_word: np.ndarray | None = None
    chunk = 1 << 20
    for lo in range(0, 1 << n, chunk):
        hi = min(lo + chunk, 1 << n)
        words = (
            (np.arange(lo, hi, dtype=np.uint64)[:, None] >> np.arange(n, dtype=np.uint64)[None, :])
            & np.uint64(1)
        ).astype(np.uint8)
        ok = ((words @ dense.T.astype(np.int64)) % 2 == syndrome).all(axis=1)
        if not ok.any():
            continue
        cand = words[ok]
        scores = cand @ delta
        j = int(np.argmax(scores))
        if scores[j] > best_score:
            best_score = float(scores[j])
            best_word = cand[j].copy()
    if best_word is None:
        raise DecodeFailure("no syndrome-consistent word exists")
    return best_word
