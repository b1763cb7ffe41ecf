"""Pulse-position key distribution over a lossy channel (Schemes C-1, C-2).

Both schemes cut k channel uses into frames of b slots, place one pulse per
frame at a uniform position, and key on the positions of the frames where
the receiver clicks.  C-1 sends single-photon number states (a click means
Eve's frame is empty, so no privacy amplification is needed); C-2 sends a
weak coherent pulse and pays an analytic Eve budget through privacy
amplification.

Only the pulse slot of a frame is ever non-vacuum, so sampling is one draw
per frame; the remaining slots are deterministic vacuum and never touched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .analytics import frame_length_kd, leakage_c2_bound
from .core import (
    DOMAIN_CHANNEL,
    DOMAIN_HASH_SEED,
    DOMAIN_PULSE_POSITIONS,
    ChannelParams,
    ParameterError,
    split_coherent_array,
    substream,
    thin_number_state_array,
)
from .privamp import DEFAULT_SECURITY_MARGIN_NATS, LeakageBudget, secret_length, toeplitz_hash
from .report import SessionReport, bits_to_hex

__all__ = ["FrameConfig", "BudgetError", "run_scheme_c1", "run_scheme_c2", "FRAMES_PER_BLOCK"]

FRAMES_PER_BLOCK = 1 << 18

LN2 = math.log(2.0)


class BudgetError(ParameterError):
    """The analytic Eve budget eats the whole per-frame key."""


@dataclass(frozen=True)
class FrameConfig:
    """Frame length and count; trailing uses that do not fill a frame are ignored."""

    b: int
    n_frames: int

    def __post_init__(self) -> None:
        if self.b < 2:
            raise ParameterError(f"frame length must be at least 2, got {self.b}")
        if self.n_frames < 1:
            raise ParameterError("need at least one whole frame")

    @property
    def uses_consumed(self) -> int:
        return self.b * self.n_frames


def _frame_config(k: int, b: int) -> FrameConfig:
    if k < b:
        raise ParameterError(f"k={k} is too small for one frame of length {b}")
    return FrameConfig(b=b, n_frames=k // b)


def _iter_frame_blocks(
    fc: FrameConfig, seed: int, draw, workers: int
) -> Iterator[tuple[int, tuple]]:
    n_blocks = (fc.n_frames + FRAMES_PER_BLOCK - 1) // FRAMES_PER_BLOCK

    def one(i: int) -> tuple[int, tuple]:
        count = min(FRAMES_PER_BLOCK, fc.n_frames - i * FRAMES_PER_BLOCK)
        return i, draw(i, count)

    if workers <= 1:
        for i in range(n_blocks):
            yield one(i)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(one, range(n_blocks)):
            yield result


def _symbols_to_bits(symbols: np.ndarray, width: int) -> np.ndarray:
    """Fixed-width binary representation, most significant bit first."""
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((symbols[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def _label_nats(n_selected: int, n_frames: int) -> float:
    width = max(1, math.ceil(math.log2(max(n_frames, 2))))
    return n_selected * width * LN2


def run_scheme_c1(
    cp: ChannelParams,
    k: int,
    seed: int,
    b: int | None = None,
    workers: int = 1,
    collect: bool = False,
):
    """Single-photon PPM key distribution.

    Per frame, the sender pulses |1> at a uniform slot; the receiver reports
    which frames clicked (public labels) and both sides key on the in-frame
    click positions.  A click captures the only photon of the frame, so
    Eve's state in every selected frame is vacuum and the position key is
    final as-is.
    """
    b = b if b is not None else math.ceil(1.0 / cp.eps)
    fc = _frame_config(k, b)

    def draw(i: int, count: int):
        pos_rng = substream(seed, DOMAIN_PULSE_POSITIONS, i)
        ch_rng = substream(seed, DOMAIN_CHANNEL, i)
        positions = pos_rng.integers(0, fc.b, size=count)
        bob, eve = thin_number_state_array(np.ones(count, dtype=np.int64), cp.eta, ch_rng)
        return positions, bob, eve

    pos_parts: list[np.ndarray] = []
    bob_parts: list[np.ndarray] = []
    eve_parts: list[np.ndarray] = []
    for _, (positions, bob, eve) in _iter_frame_blocks(fc, seed, draw, workers):
        pos_parts.append(positions)
        bob_parts.append(bob)
        eve_parts.append(eve)
    positions = np.concatenate(pos_parts)
    bob = np.concatenate(bob_parts)
    eve = np.concatenate(eve_parts)

    selected = bob >= 1
    n_sel = int(selected.sum())
    # the receiver's observed click position is the pulse slot of the frame
    symbols_a = positions[selected]
    symbols_b = positions[selected]
    eve_selected = eve[selected]

    width = max(1, math.ceil(math.log2(fc.b)))
    bits_a = _symbols_to_bits(symbols_a, width)
    bits_b = _symbols_to_bits(symbols_b, width)

    raw_nats = n_sel * math.log(fc.b)
    report = SessionReport(
        scheme="c1",
        params={"eta": cp.eta, "eps": cp.eps, "b": fc.b},
        seed=seed,
        uses=k,
        uses_consumed=fc.uses_consumed,
        n_frames=fc.n_frames,
        n_selected=n_sel,
        detected=n_sel,
        agreement=bool(np.array_equal(symbols_a, symbols_b)),
        raw_nats=raw_nats,
        transcript_nats=_label_nats(n_sel, fc.n_frames),
        leakage_nats=0.0,
        margin_nats=0.0,
        secret_nats=raw_nats,
        efficiency=raw_nats / n_sel if n_sel else 0.0,
        efficiency_flux=raw_nats / (fc.uses_consumed * cp.eta * cp.eps),
        key_a=bits_to_hex(bits_a),
        key_b=bits_to_hex(bits_b),
        extras={
            "selection_rate": n_sel / fc.n_frames,
            "eve_max_in_selected": int(eve_selected.max()) if n_sel else 0,
            "symbol_width_bits": width,
        },
    )
    if collect:
        return report, {
            "positions": positions,
            "selected": selected,
            "eve": eve,
            "symbols": symbols_a,
        }
    return report


def run_scheme_c2(
    cp: ChannelParams,
    k: int,
    seed: int,
    b: int | None = None,
    workers: int = 1,
    collect: bool = False,
    margin_nats: float = DEFAULT_SECURITY_MARGIN_NATS,
):
    """Coherent-pulse PPM key distribution with privacy amplification.

    Same framing as C-1 but the pulse is a coherent state of mean b*eps
    photons, so Eve keeps the beamsplitter complement and the raw position
    key must be hashed down.  Each selected frame is charged the analytic
    entropy bound on Eve's frame state.
    """
    b = b if b is not None else frame_length_kd(cp.eps)
    fc = _frame_config(k, b)
    leak_per_selected = leakage_c2_bound(cp.eta, cp.eps, fc.b)
    ln_b = math.log(fc.b)
    if leak_per_selected >= ln_b:
        raise BudgetError(
            f"Eve budget {leak_per_selected:.3f} nats >= ln b = {ln_b:.3f}: "
            "no key is extractable at these parameters"
        )

    pulse_mean = fc.b * cp.eps

    def draw(i: int, count: int):
        pos_rng = substream(seed, DOMAIN_PULSE_POSITIONS, i)
        ch_rng = substream(seed, DOMAIN_CHANNEL, i)
        positions = pos_rng.integers(0, fc.b, size=count)
        bob, eve = split_coherent_array(pulse_mean, cp.eta, count, ch_rng)
        return positions, bob, eve

    pos_parts: list[np.ndarray] = []
    bob_parts: list[np.ndarray] = []
    eve_parts: list[np.ndarray] = []
    for _, (positions, bob, eve) in _iter_frame_blocks(fc, seed, draw, workers):
        pos_parts.append(positions)
        bob_parts.append(bob)
        eve_parts.append(eve)
    positions = np.concatenate(pos_parts)
    bob = np.concatenate(bob_parts)
    eve = np.concatenate(eve_parts)

    selected = bob >= 1
    n_sel = int(selected.sum())
    symbols_a = positions[selected]
    symbols_b = positions[selected]

    width = max(1, math.ceil(math.log2(fc.b)))
    raw_bits_a = _symbols_to_bits(symbols_a, width)
    raw_bits_b = _symbols_to_bits(symbols_b, width)

    raw_nats = n_sel * ln_b
    budget = LeakageBudget(
        transcript_nats=0.0,
        eve_quantum_nats=n_sel * leak_per_selected,
        security_margin_nats=margin_nats,
    )
    secret_nats = secret_length(raw_nats, budget)
    secret_bits = int(secret_nats / LN2)

    hash_seed = int(substream(seed, DOMAIN_HASH_SEED, 0).integers(0, 1 << 62))
    if secret_bits > 0:
        key_a = toeplitz_hash(raw_bits_a, hash_seed, secret_bits)
        key_b = toeplitz_hash(raw_bits_b, hash_seed, secret_bits)
    else:
        key_a = key_b = np.zeros(0, dtype=np.uint8)

    hash_seed_nats = (raw_bits_a.size + max(secret_bits, 1) - 1) * LN2 if n_sel else 0.0
    report = SessionReport(
        scheme="c2",
        params={"eta": cp.eta, "eps": cp.eps, "b": fc.b},
        seed=seed,
        uses=k,
        uses_consumed=fc.uses_consumed,
        n_frames=fc.n_frames,
        n_selected=n_sel,
        detected=n_sel,
        agreement=bool(np.array_equal(symbols_a, symbols_b)),
        raw_nats=raw_nats,
        transcript_nats=_label_nats(n_sel, fc.n_frames) + hash_seed_nats,
        leakage_nats=budget.eve_quantum_nats,
        margin_nats=margin_nats,
        secret_nats=secret_nats,
        efficiency=secret_nats / n_sel if n_sel else 0.0,
        efficiency_flux=secret_nats / (fc.uses_consumed * cp.eta * cp.eps),
        key_a=bits_to_hex(key_a),
        key_b=bits_to_hex(key_b),
        extras={
            "selection_rate": n_sel / fc.n_frames,
            "leak_per_selected_nats": leak_per_selected,
            "frames_bob_and_eve_click": int((selected & (eve >= 1)).sum()),
            "symbol_width_bits": width,
        },
    )
    if collect:
        return report, {
            "positions": positions,
            "selected": selected,
            "bob": bob,
            "eve": eve,
            "symbols": symbols_a,
        }
    return report
