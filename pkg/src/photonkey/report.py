"""Per-run result record shared by all schemes."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = ["SessionReport", "bits_to_hex"]


def bits_to_hex(bits: np.ndarray) -> str:
    """Hex encoding of a bit array (MSB-first within the string)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return ""
    return np.packbits(bits).tobytes().hex()


@dataclass
class SessionReport:
    """Outcome of one protocol session.

    efficiency is secret nats per photon detected by the receiver (non-PNR
    click count inside the consumed uses); efficiency_flux is the same
    secret normalized by expected arriving photons, uses * eta * eps.
    """

    scheme: str
    params: dict
    seed: int
    uses: int
    uses_consumed: int
    n_frames: int
    n_selected: int
    detected: int
    agreement: bool
    raw_nats: float
    transcript_nats: float
    leakage_nats: float
    margin_nats: float
    secret_nats: float
    efficiency: float
    efficiency_flux: float
    key_a: str
    key_b: str
    decode_failures: int = 0
    decode_blocks: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.secret_nats > self.raw_nats + 1e-9:
            raise ValueError("secret length cannot exceed raw entropy")

    @property
    def failure_rate(self) -> float:
        return self.decode_failures / self.decode_blocks if self.decode_blocks else 0.0

    @property
    def secret_bits(self) -> float:
        return self.secret_nats / math.log(2.0)

    def to_json(self) -> str:
        record = asdict(self)
        record["failure_rate"] = self.failure_rate
        record["secret_bits"] = self.secret_bits
        record["efficiency_bits"] = self.efficiency / math.log(2.0)
        return json.dumps(record, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SessionReport":
        record = json.loads(line)
        for derived in ("failure_rate", "secret_bits", "efficiency_bits"):
            record.pop(derived, None)
        return cls(**record)
