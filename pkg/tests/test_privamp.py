"""Budget arithmetic and Toeplitz hashing, incl. exhaustive universality."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonkey.core import ParameterError
from photonkey.privamp import (
    DEFAULT_SECURITY_MARGIN_NATS,
    LeakageBudget,
    _toeplitz_apply,
    secret_length,
    toeplitz_diagonal,
    toeplitz_hash,
)

LN2 = math.log(2.0)


class TestSecretLength:
    def test_zero_budget_returns_raw(self):
        budget = LeakageBudget(0.0, 0.0, 0.0)
        assert secret_length(123.4, budget) == 123.4

    def test_oversubscribed_budget_clamps(self):
        budget = LeakageBudget(transcript_nats=100.0, eve_quantum_nats=50.0)
        assert secret_length(10.0, budget) == 0.0

    def test_default_margin(self):
        assert DEFAULT_SECURITY_MARGIN_NATS == pytest.approx(40 * LN2, abs=1e-12)
        assert secret_length(100.0, LeakageBudget()) == pytest.approx(100.0 - 40 * LN2)

    def test_budget_validation(self):
        with pytest.raises(ParameterError):
            LeakageBudget(transcript_nats=-1.0)
        with pytest.raises(ParameterError):
            secret_length(-1.0, LeakageBudget())

    @given(
        raw=st.floats(0, 1e6),
        t1=st.floats(0, 1e5),
        t2=st.floats(0, 1e5),
        e1=st.floats(0, 1e5),
        delta=st.floats(0, 1e4),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_every_budget_field(self, raw, t1, t2, e1, delta):
        base = secret_length(raw, LeakageBudget(t1, e1, t2))
        assert secret_length(raw, LeakageBudget(t1 + delta, e1, t2)) <= base
        assert secret_length(raw, LeakageBudget(t1, e1 + delta, t2)) <= base
        assert secret_length(raw, LeakageBudget(t1, e1, t2 + delta)) <= base


def dense_toeplitz(diag: np.ndarray, in_len: int, out_len: int) -> np.ndarray:
    T = np.zeros((out_len, in_len), dtype=np.uint8)
    for i in range(out_len):
        for j in range(in_len):
            T[i, j] = diag[in_len - 1 + i - j]
    return T


class TestToeplitzHash:
    def test_zero_input_hashes_to_zero(self):
        out = toeplitz_hash(np.zeros(64, np.uint8), hash_seed=5, out_len_bits=16)
        assert not out.any()

    def test_out_len_bounds(self):
        with pytest.raises(ParameterError):
            toeplitz_hash(np.zeros(8, np.uint8), 1, 9)
        assert toeplitz_hash(np.ones(8, np.uint8), 1, 0).size == 0

    def test_identity_diagonal_recovers_input(self):
        # delta diagonal at position n-1 makes T the identity
        n = 33
        diag = np.zeros(2 * n - 1, dtype=np.uint8)
        diag[n - 1] = 1
        x = (np.arange(n) % 3 == 0).astype(np.uint8)
        assert np.array_equal(_toeplitz_apply(diag, x, n), x)

    def test_matches_dense_matrix_oracle(self):
        rng = np.random.default_rng(3)
        for in_len, out_len in ((12, 5), (40, 40), (130, 17), (300, 220)):
            x = rng.integers(0, 2, in_len, dtype=np.uint8)
            out = toeplitz_hash(x, hash_seed=77, out_len_bits=out_len)
            diag = toeplitz_diagonal(in_len, out_len, 77)
            oracle = dense_toeplitz(diag, in_len, out_len) @ x % 2
            assert np.array_equal(out, oracle.astype(np.uint8))

    def test_linearity(self):
        rng = np.random.default_rng(4)
        for _ in range(15):
            x = rng.integers(0, 2, 96, dtype=np.uint8)
            y = rng.integers(0, 2, 96, dtype=np.uint8)
            hx = toeplitz_hash(x, 9, 40)
            hy = toeplitz_hash(y, 9, 40)
            hxy = toeplitz_hash(x ^ y, 9, 40)
            assert np.array_equal(hxy, hx ^ hy)

    def test_collision_rate_exhaustive_12bit(self):
        # pairwise collision rate over the full 12-bit input space at 6 output
        # bits stays within twice the universal-hash target for fixed seeds
        n, out = 12, 6
        words = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
        for seed in (1, 2, 3, 4, 5):
            diag = toeplitz_diagonal(n, out, seed)
            T = dense_toeplitz(diag, n, out)
            values = (words @ T.T % 2) @ (1 << np.arange(out))
            counts = np.bincount(values, minlength=1 << out)
            collisions = (counts * (counts - 1) // 2).sum()
            pairs = (1 << n) * ((1 << n) - 1) // 2
            assert collisions / pairs <= 2.0 * 2.0 ** (-out)

    def test_two_universality_exhaustive_14bit(self):
        # average over seeds of the exhaustive pairwise collision probability
        n, out = 14, 7
        words = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
        pairs = (1 << n) * ((1 << n) - 1) // 2
        rates = []
        for seed in range(40):
            diag = toeplitz_diagonal(n, out, seed)
            T = dense_toeplitz(diag, n, out)
            values = (words @ T.T % 2) @ (1 << np.arange(out))
            counts = np.bincount(values, minlength=1 << out)
            rates.append((counts * (counts - 1) // 2).sum() / pairs)
        assert np.mean(rates) <= 2.0 ** (-out) * 1.1
