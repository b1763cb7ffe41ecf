"""Key distribution from a shared photon-pair source (Schemes S-1, S-2, S-3).

Alice and Bob both direct-detect a stream of source slots; Bob's side is
lossy, so his click sequence is a degraded copy of Alice's.  S-1 reconciles
the raw per-slot click sequence with a syndrome code.  S-2 parses slots
into frames and keys on the click position inside frames where Bob clicked
and Alice saw exactly one active slot.  S-3 additionally turns the
frame-indicator sequence itself into key material through a second
reconciliation round.

Dark counts are folded into equivalent loss parameters before sampling;
with Alice-side dark counts the click law is no longer strictly degraded
and the runs measure (rather than assume) key agreement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import ZParams, frame_length_kd, h2, joint_click_params, leakage_s2_bound
from .core import (
    DOMAIN_HASH_SEED,
    ParameterError,
    SourceParams,
    effective_dark_params,
    iter_slot_blocks,
    substream,
)
from .privamp import DEFAULT_SECURITY_MARGIN_NATS, LeakageBudget, secret_length, toeplitz_hash
from .reconcile import (
    CorrelationModel,
    DecodeFailure,
    column_weight_for,
    make_code,
    sw_decode,
    sw_encode,
    syndrome_length_for,
)
from .report import SessionReport, bits_to_hex

__all__ = [
    "DetectionSeq",
    "detect_sequences",
    "run_scheme_s1",
    "run_scheme_s2",
    "run_scheme_s3",
]

LN2 = math.log(2.0)


@dataclass
class DetectionSeq:
    """Per-slot non-PNR detection records over k source slots.

    a_bits / b_bits are 1 where the respective detector clicked; eve_counts
    are Eve's photon counts (diagnostics, not observable by the parties).
    """

    k: int
    params: SourceParams
    params_effective: SourceParams
    a_bits: np.ndarray
    b_bits: np.ndarray
    eve_counts: np.ndarray


def _effective(sp: SourceParams) -> SourceParams:
    return effective_dark_params(sp) if sp.has_dark_counts else sp


def detect_sequences(sp: SourceParams, k: int, seed: int, workers: int = 1) -> DetectionSeq:
    """Sample k slots and reduce them to click sequences.

    Dark counts are injected through the loss-parameter remap, never as
    separately sampled events.
    """
    p_eff = _effective(sp)
    a_parts: list[np.ndarray] = []
    b_parts: list[np.ndarray] = []
    e_parts: list[np.ndarray] = []
    for _, n, alice, bob, eve in iter_slot_blocks(p_eff, k, seed, workers=workers):
        if n.size and int(n.max()) > 255:
            raise ParameterError("slot photon count exceeds uint8 bookkeeping range")
        a_parts.append((alice > 0).astype(np.uint8))
        b_parts.append((bob > 0).astype(np.uint8))
        e_parts.append(eve.astype(np.uint8))
    return DetectionSeq(
        k=k,
        params=sp,
        params_effective=p_eff,
        a_bits=np.concatenate(a_parts),
        b_bits=np.concatenate(b_parts),
        eve_counts=np.concatenate(e_parts),
    )


def _slot_model(p_eff: SourceParams) -> CorrelationModel:
    q, mu, p10 = joint_click_params(p_eff.eta_a, p_eff.eta_b, p_eff.eps)
    return CorrelationModel(z=ZParams(q=q, mu=mu), p_one_given_zero=p10)


def _frame_model(p_eff: SourceParams, b: int) -> CorrelationModel:
    q, mu, p10 = joint_click_params(p_eff.eta_a, p_eff.eta_b, b * p_eff.eps)
    return CorrelationModel(z=ZParams(q=q, mu=mu), p_one_given_zero=p10)


def _frame_stats(p_eff: SourceParams, n_frames: int, b: int, seed: int, workers: int) -> dict:
    """Reduce n_frames*b slots to per-frame aggregates.

    Frames may straddle sampler blocks; leftovers are carried so the result
    is independent of the block partition (and hence of `workers`).
    """
    out = {
        "a_any": np.zeros(n_frames, dtype=np.uint8),
        "a_ones": np.zeros(n_frames, dtype=np.uint8),
        "a_pos": np.zeros(n_frames, dtype=np.int32),
        "a_photons": np.zeros(n_frames, dtype=np.uint8),
        "b_any": np.zeros(n_frames, dtype=np.uint8),
        "b_pos": np.zeros(n_frames, dtype=np.int32),
        "b_clicks": np.zeros(n_frames, dtype=np.int32),
        "eve_at_apos": np.zeros(n_frames, dtype=np.uint8),
    }
    carry: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None
    next_frame = 0
    for _, n, alice, bob, eve in iter_slot_blocks(p_eff, n_frames * b, seed, workers=workers):
        if n.size and int(n.max()) > 255:
            raise ParameterError("slot photon count exceeds uint8 bookkeeping range")
        if carry is not None:
            alice = np.concatenate([carry[0], alice])
            bob = np.concatenate([carry[1], bob])
            eve = np.concatenate([carry[2], eve])
        whole = (alice.size // b) * b
        if whole:
            f = whole // b
            a_slots = (alice[:whole] > 0).astype(np.uint8).reshape(f, b)
            b_slots = (bob[:whole] > 0).astype(np.uint8).reshape(f, b)
            e_slots = eve[:whole].reshape(f, b)
            sl = slice(next_frame, next_frame + f)
            out["a_any"][sl] = a_slots.any(axis=1)
            out["a_ones"][sl] = np.minimum(a_slots.sum(axis=1), 3)
            a_pos = np.argmax(a_slots, axis=1)
            out["a_pos"][sl] = a_pos
            out["a_photons"][sl] = np.minimum(alice[:whole].reshape(f, b).sum(axis=1), 3)
            out["b_any"][sl] = b_slots.any(axis=1)
            out["b_pos"][sl] = np.argmax(b_slots, axis=1)
            out["b_clicks"][sl] = b_slots.sum(axis=1)
            out["eve_at_apos"][sl] = np.minimum(e_slots[np.arange(f), a_pos], 255)
            next_frame += f
        rem = alice.size - whole
        carry = (alice[whole:], bob[whole:], eve[whole:]) if rem else None
    if next_frame != n_frames:
        raise RuntimeError("frame reduction lost slots")
    return out


def _symbols_to_bits(symbols: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((symbols.astype(np.int64)[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def _label_nats(count: int, universe: int) -> float:
    width = max(1, math.ceil(math.log2(max(universe, 2))))
    return count * width * LN2


def run_scheme_s1(
    sp: SourceParams,
    k: int,
    seed: int,
    codec_margin: float = 0.15,
    block_len: int = 100_000,
    workers: int = 1,
    collect: bool = False,
):
    """Reconcile Bob's raw click sequence to Alice with syndrome coding.

    Bob sends one syndrome per block; Alice decodes his bits against her own
    clicks.  Blocks whose decode fails or mis-verifies are dropped from the
    key (both count as decode failures); the secret length charges the full
    syndrome transcript against the entropy of the kept bits.  Works for any
    eta_a and with dark counts (the decoder model follows the remapped law).

    Blocks are long on purpose: the click sequence is so sparse that the
    per-block count of active positions fluctuates by ~sqrt(q*n), and the
    syndrome margin must dominate that fluctuation, not just the mean.
    """
    det = detect_sequences(sp, k, seed, workers=workers)
    p_eff = det.params_effective
    n_blocks = k // block_len
    if n_blocks < 1:
        raise ParameterError(f"k={k} is smaller than one codec block ({block_len})")
    model = _slot_model(p_eff)
    m = syndrome_length_for(model, block_len, codec_margin)
    code = make_code(block_len, m, seed, column_weight=column_weight_for(model))

    kept_truth: list[np.ndarray] = []
    kept_decoded: list[np.ndarray] = []
    failures = 0
    for t in range(n_blocks):
        lo = t * block_len
        truth = det.b_bits[lo : lo + block_len]
        side = det.a_bits[lo : lo + block_len]
        syndrome = sw_encode(code, truth)
        try:
            decoded = sw_decode(code, syndrome, side, model)
        except DecodeFailure:
            failures += 1
            continue
        if not np.array_equal(decoded, truth):
            # a mis-verified block (caught by key verification in practice)
            failures += 1
            continue
        kept_truth.append(truth)
        kept_decoded.append(decoded)

    n_ok = n_blocks - failures
    bits_b = np.concatenate(kept_truth) if kept_truth else np.zeros(0, dtype=np.uint8)
    bits_a = np.concatenate(kept_decoded) if kept_decoded else np.zeros(0, dtype=np.uint8)

    p_click_b = -math.expm1(-p_eff.eta_b * p_eff.eps)
    raw_nats = n_ok * block_len * h2(p_click_b)
    transcript_syndromes = n_blocks * m * LN2
    budget = LeakageBudget(
        transcript_nats=transcript_syndromes,
        eve_quantum_nats=0.0,
        security_margin_nats=DEFAULT_SECURITY_MARGIN_NATS,
    )
    secret_nats = secret_length(raw_nats, budget)
    secret_bits = int(secret_nats / LN2)
    hash_seed = int(substream(seed, DOMAIN_HASH_SEED, 0).integers(0, 1 << 62))
    key_a = toeplitz_hash(bits_a, hash_seed, secret_bits) if secret_bits else np.zeros(0, np.uint8)
    key_b = toeplitz_hash(bits_b, hash_seed, secret_bits) if secret_bits else np.zeros(0, np.uint8)
    hash_seed_nats = (bits_b.size + secret_bits - 1) * LN2 if secret_bits else 0.0

    consumed = n_blocks * block_len
    detected = int(det.b_bits[:consumed].sum())
    flux = consumed * sp.eta_a * sp.eta_b * sp.eps
    report = SessionReport(
        scheme="s1",
        params={
            "eta_a": sp.eta_a,
            "eta_b": sp.eta_b,
            "eps": sp.eps,
            "lambda_a": sp.lambda_a,
            "lambda_b": sp.lambda_b,
            "codec_margin": codec_margin,
            "block_len": block_len,
        },
        seed=seed,
        uses=k,
        uses_consumed=consumed,
        n_frames=n_blocks,
        n_selected=n_ok,
        detected=detected,
        agreement=bool(np.array_equal(bits_a, bits_b)),
        raw_nats=raw_nats,
        transcript_nats=transcript_syndromes + hash_seed_nats,
        leakage_nats=0.0,
        margin_nats=DEFAULT_SECURITY_MARGIN_NATS,
        secret_nats=secret_nats,
        efficiency=secret_nats / detected if detected else 0.0,
        efficiency_flux=secret_nats / flux if flux else 0.0,
        key_a=bits_to_hex(key_a),
        key_b=bits_to_hex(key_b),
        decode_failures=failures,
        decode_blocks=n_blocks,
        extras={
            "syndrome_bits_per_block": m,
            "transcript_charged_nats": transcript_syndromes,
            "p_click_bob": p_click_b,
            "model_q": model.z.q,
            "model_mu": model.z.mu,
            "model_p10": model.p_one_given_zero,
        },
    )
    if collect:
        return report, {"detections": det, "bits_a": bits_a, "bits_b": bits_b}
    return report


def _require_lossless_alice(sp: SourceParams, scheme: str) -> None:
    if sp.eta_a != 1.0:
        raise ParameterError(
            f"{scheme} requires eta_a = 1 (position agreement needs Alice to see every pair); got {sp.eta_a}"
        )


def run_scheme_s2(
    sp: SourceParams,
    k: int,
    seed: int,
    pnr: bool = False,
    b: int | None = None,
    workers: int = 1,
    collect: bool = False,
):
    """Simple frame parsing: key on click positions in doubly-selected frames.

    Bob announces the frames where he clicked; Alice keeps those in which
    she has exactly one active slot, so both end up holding the same in-frame
    position.  Every parsed frame is charged the analytic bound on Eve's
    frame-state entropy (kept or not — the conservative global charge).  In
    the PNR variant Alice instead keeps frames where she counted exactly one
    photon; Bob's click then owns that photon outright, Eve's state is
    vacuum, and no privacy amplification is applied.
    """
    _require_lossless_alice(sp, "s2")
    p_eff = _effective(sp)
    b = b if b is not None else frame_length_kd(p_eff.eps)
    n_frames = k // b
    if n_frames < 1:
        raise ParameterError(f"k={k} is too small for one frame of length {b}")
    fs = _frame_stats(p_eff, n_frames, b, seed, workers)

    alice_keep = (fs["a_photons"] == 1) if pnr else (fs["a_ones"] == 1)
    kept = (fs["b_any"] > 0) & alice_keep
    n_kept = int(kept.sum())
    symbols_a = fs["a_pos"][kept]
    symbols_b = fs["b_pos"][kept]
    width = max(1, math.ceil(math.log2(b)))
    raw_bits_a = _symbols_to_bits(symbols_a, width)
    raw_bits_b = _symbols_to_bits(symbols_b, width)

    raw_nats = n_kept * math.log(b)
    scheme = "s2-pnr" if pnr else "s2"
    if pnr:
        leak_total = 0.0
        margin = 0.0
        secret_nats = raw_nats
        key_a_bits, key_b_bits = raw_bits_a, raw_bits_b
        hash_seed_nats = 0.0
    else:
        leak_total = n_frames * leakage_s2_bound(sp.eta_b, sp.eps, b)
        margin = DEFAULT_SECURITY_MARGIN_NATS
        secret_nats = secret_length(
            raw_nats,
            LeakageBudget(0.0, eve_quantum_nats=leak_total, security_margin_nats=margin),
        )
        secret_bits = int(secret_nats / LN2)
        hash_seed = int(substream(seed, DOMAIN_HASH_SEED, 0).integers(0, 1 << 62))
        key_a_bits = toeplitz_hash(raw_bits_a, hash_seed, secret_bits) if secret_bits else np.zeros(0, np.uint8)
        key_b_bits = toeplitz_hash(raw_bits_b, hash_seed, secret_bits) if secret_bits else np.zeros(0, np.uint8)
        hash_seed_nats = (raw_bits_b.size + secret_bits - 1) * LN2 if secret_bits else 0.0

    n_bob_frames = int((fs["b_any"] > 0).sum())
    detected = int(fs["b_clicks"].sum())
    flux = n_frames * b * sp.eta_a * sp.eta_b * sp.eps
    report = SessionReport(
        scheme=scheme,
        params={
            "eta_a": sp.eta_a,
            "eta_b": sp.eta_b,
            "eps": sp.eps,
            "lambda_a": sp.lambda_a,
            "lambda_b": sp.lambda_b,
            "b": b,
            "pnr": pnr,
        },
        seed=seed,
        uses=k,
        uses_consumed=n_frames * b,
        n_frames=n_frames,
        n_selected=n_kept,
        detected=detected,
        agreement=bool(np.array_equal(symbols_a, symbols_b)),
        raw_nats=raw_nats,
        transcript_nats=_label_nats(n_bob_frames + n_kept, n_frames) + hash_seed_nats,
        leakage_nats=leak_total,
        margin_nats=margin,
        secret_nats=secret_nats,
        efficiency=secret_nats / detected if detected else 0.0,
        efficiency_flux=secret_nats / flux if flux else 0.0,
        key_a=bits_to_hex(key_a_bits),
        key_b=bits_to_hex(key_b_bits),
        extras={
            "kept_rate": n_kept / n_frames,
            "bob_frame_rate": n_bob_frames / n_frames,
            "leak_per_frame_nats": leak_total / n_frames if n_frames else 0.0,
        },
    )
    if collect:
        return report, {"frames": fs, "kept": kept, "symbols_a": symbols_a, "symbols_b": symbols_b}
    return report


def run_scheme_s3(
    sp: SourceParams,
    k: int,
    seed: int,
    codec_margin: float = 0.15,
    b: int | None = None,
    block_frames: int = 10_000,
    workers: int = 1,
    collect: bool = False,
):
    """Enhanced frame parsing: the frame-indicator sequence also makes key.

    Part 1: Bob syndrome-encodes his frame indicators; Alice decodes them
    against her own indicators, then replies one bit per active frame saying
    whether that frame is usable for position keying.  The indicator
    sequence is hashed into key, charging both messages at full length.
    Part 2 is exactly the S-2 position key on the frames both marked usable.
    """
    _require_lossless_alice(sp, "s3")
    p_eff = _effective(sp)
    b = b if b is not None else frame_length_kd(p_eff.eps)
    n_frames = k // b
    if n_frames < 1:
        raise ParameterError(f"k={k} is too small for one frame of length {b}")
    fs = _frame_stats(p_eff, n_frames, b, seed, workers)

    a_tilde = fs["a_any"]
    b_tilde = fs["b_any"]
    frame_model = _frame_model(p_eff, b)

    # Part 1: reconcile the indicator sequence block by block.
    blocks: list[tuple[int, int]] = []
    lo = 0
    while lo < n_frames:
        hi = min(lo + block_frames, n_frames)
        blocks.append((lo, hi))
        lo = hi
    codes: dict[int, object] = {}
    ok_mask = np.zeros(n_frames, dtype=bool)
    syndrome_nats = 0.0
    failures = 0
    n_coded_blocks = 0
    decoded_all = np.zeros(n_frames, dtype=np.uint8)
    for lo, hi in blocks:
        length = hi - lo
        if length not in codes:
            m = syndrome_length_for(frame_model, length, codec_margin)
            # a trailing stub too short to code is dropped outright
            codes[length] = (
                make_code(length, m, seed, column_weight=column_weight_for(frame_model))
                if m < length
                else None
            )
        code = codes[length]
        if code is None:
            continue
        n_coded_blocks += 1
        truth = b_tilde[lo:hi]
        syndrome = sw_encode(code, truth)
        syndrome_nats += code.syndrome_len * LN2
        try:
            decoded = sw_decode(code, syndrome, a_tilde[lo:hi], frame_model)
        except DecodeFailure:
            failures += 1
            continue
        if not np.array_equal(decoded, truth):
            failures += 1
            continue
        ok_mask[lo:hi] = True
        decoded_all[lo:hi] = decoded

    n_ok_frames = int(ok_mask.sum())
    b1_in_ok = int((b_tilde[ok_mask] > 0).sum())
    p_b1_frame = -math.expm1(-p_eff.eta_b * b * p_eff.eps)
    raw1_nats = n_ok_frames * h2(p_b1_frame)
    reply_nats = b1_in_ok * LN2  # one bit per recovered active frame
    budget1 = LeakageBudget(
        transcript_nats=syndrome_nats + reply_nats,
        eve_quantum_nats=0.0,
        security_margin_nats=DEFAULT_SECURITY_MARGIN_NATS,
    )
    secret1_nats = secret_length(raw1_nats, budget1)
    secret1_bits = int(secret1_nats / LN2)
    hash_seed1 = int(substream(seed, DOMAIN_HASH_SEED, 0).integers(0, 1 << 62))
    part1_b = b_tilde[ok_mask]
    part1_a = decoded_all[ok_mask]
    key1_a = toeplitz_hash(part1_a, hash_seed1, secret1_bits) if secret1_bits else np.zeros(0, np.uint8)
    key1_b = toeplitz_hash(part1_b, hash_seed1, secret1_bits) if secret1_bits else np.zeros(0, np.uint8)
    hash_seed_nats = (part1_b.size + secret1_bits - 1) * LN2 if secret1_bits else 0.0

    # Part 2: position key on frames both sides marked usable (C = 1).
    usable = ok_mask & (b_tilde > 0) & (fs["a_ones"] == 1)
    n_kept = int(usable.sum())
    symbols_a = fs["a_pos"][usable]
    symbols_b = fs["b_pos"][usable]
    width = max(1, math.ceil(math.log2(b)))
    raw2_bits_a = _symbols_to_bits(symbols_a, width)
    raw2_bits_b = _symbols_to_bits(symbols_b, width)
    raw2_nats = n_kept * math.log(b)
    leak2_total = n_ok_frames * leakage_s2_bound(sp.eta_b, sp.eps, b)
    budget2 = LeakageBudget(
        transcript_nats=0.0,
        eve_quantum_nats=leak2_total,
        security_margin_nats=DEFAULT_SECURITY_MARGIN_NATS,
    )
    secret2_nats = secret_length(raw2_nats, budget2)
    secret2_bits = int(secret2_nats / LN2)
    hash_seed2 = int(substream(seed, DOMAIN_HASH_SEED, 1).integers(0, 1 << 62))
    key2_a = toeplitz_hash(raw2_bits_a, hash_seed2, secret2_bits) if secret2_bits else np.zeros(0, np.uint8)
    key2_b = toeplitz_hash(raw2_bits_b, hash_seed2, secret2_bits) if secret2_bits else np.zeros(0, np.uint8)
    hash_seed_nats += (raw2_bits_b.size + secret2_bits - 1) * LN2 if secret2_bits else 0.0

    secret_nats = secret1_nats + secret2_nats
    raw_nats = raw1_nats + raw2_nats
    detected = int(fs["b_clicks"].sum())
    flux = n_frames * b * sp.eta_a * sp.eta_b * sp.eps
    agreement = bool(np.array_equal(part1_a, part1_b) and np.array_equal(symbols_a, symbols_b))
    report = SessionReport(
        scheme="s3",
        params={
            "eta_a": sp.eta_a,
            "eta_b": sp.eta_b,
            "eps": sp.eps,
            "lambda_a": sp.lambda_a,
            "lambda_b": sp.lambda_b,
            "b": b,
            "codec_margin": codec_margin,
            "block_frames": block_frames,
        },
        seed=seed,
        uses=k,
        uses_consumed=n_frames * b,
        n_frames=n_frames,
        n_selected=n_kept,
        detected=detected,
        agreement=agreement,
        raw_nats=raw_nats,
        transcript_nats=syndrome_nats + reply_nats + hash_seed_nats,
        leakage_nats=leak2_total,
        margin_nats=2 * DEFAULT_SECURITY_MARGIN_NATS,
        secret_nats=secret_nats,
        efficiency=secret_nats / detected if detected else 0.0,
        efficiency_flux=secret_nats / flux if flux else 0.0,
        key_a=bits_to_hex(np.concatenate([key1_a, key2_a])),
        key_b=bits_to_hex(np.concatenate([key1_b, key2_b])),
        decode_failures=failures,
        decode_blocks=n_coded_blocks,
        extras={
            "part1_secret_nats": secret1_nats,
            "part2_secret_nats": secret2_nats,
            "part1_efficiency": secret1_nats / detected if detected else 0.0,
            "part2_efficiency": secret2_nats / detected if detected else 0.0,
            "kept_rate": n_kept / n_frames,
            "indicator_rate": b1_in_ok / max(n_ok_frames, 1),
            "syndrome_nats": syndrome_nats,
            "reply_nats": reply_nats,
        },
    )
    if collect:
        return report, {
            "frames": fs,
            "usable": usable,
            "ok_mask": ok_mask,
            "symbols_a": symbols_a,
            "symbols_b": symbols_b,
            "part1_bits": part1_b,
        }
    return report
