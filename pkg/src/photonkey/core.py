"""Classical sampling of the photon statistics induced by direct detection.

Everything a protocol run needs to draw is here: binomial thinning of
number states at a beamsplitter (with exact photon conservation), Poisson
splitting of coherent states into independent branches, per-slot sampling
of a Poisson pair source with two-sided loss, and the dark-count parameter
remap that folds detector dark counts into an equivalent lossy source.

All sampling is pure given (params, rng): callers that want reproducible
parallelism draw each block of slots/frames from its own addressable
substream (see :func:`substream`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "ChannelParams",
    "SourceParams",
    "SlotOutcome",
    "ParameterError",
    "UnphysicalRemapError",
    "substream",
    "thin_number_state",
    "thin_number_state_array",
    "split_coherent",
    "split_coherent_array",
    "sample_source_slot",
    "sample_source_slots",
    "effective_dark_params",
    "iter_slot_blocks",
    "BLOCK_SLOTS",
]


class ParameterError(ValueError):
    """Raised when physical parameters are outside their valid range."""


class UnphysicalRemapError(ParameterError):
    """Raised when the dark-count remap would need a transmissivity above 1."""


@dataclass(frozen=True)
class ChannelParams:
    """Lossy-channel parameters: transmissivity eta and mean photons per use eps."""

    eta: float
    eps: float

    def __post_init__(self) -> None:
        if not 0.0 < self.eta <= 1.0:
            raise ParameterError(f"eta must be in (0, 1], got {self.eta}")
        if not self.eps > 0.0:
            raise ParameterError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class SourceParams:
    """Pair-source parameters.

    eta_a / eta_b are the transmissivities from the source to Alice's and
    Bob's detectors, eps is the mean number of photon pairs per slot, and
    lambda_a / lambda_b are dark counts per slot.  Bob's side is strictly
    lossy (eta_b < 1).
    """

    eta_a: float
    eta_b: float
    eps: float
    lambda_a: float = 0.0
    lambda_b: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.eta_a <= 1.0:
            raise ParameterError(f"eta_a must be in (0, 1], got {self.eta_a}")
        if not 0.0 < self.eta_b < 1.0:
            raise ParameterError(f"eta_b must be in (0, 1), got {self.eta_b}")
        if not self.eps > 0.0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if self.lambda_a < 0.0 or self.lambda_b < 0.0:
            raise ParameterError("dark-count rates must be non-negative")

    @property
    def has_dark_counts(self) -> bool:
        return self.lambda_a > 0.0 or self.lambda_b > 0.0


@dataclass(frozen=True)
class SlotOutcome:
    """Photon counts for one source slot at the source, Alice, Bob and Eve."""

    n_source: int
    alice_count: int
    bob_count: int
    eve_count: int

    def __post_init__(self) -> None:
        if min(self.n_source, self.alice_count, self.bob_count, self.eve_count) < 0:
            raise ParameterError("photon counts must be non-negative")


# Substream domains.  Each (seed, domain, index) triple addresses one Philox
# stream, so any block of work can be redrawn independently of execution order.
DOMAIN_SOURCE = 1
DOMAIN_PULSE_POSITIONS = 2
DOMAIN_CHANNEL = 3
DOMAIN_HASH_SEED = 4
DOMAIN_CODE = 5
DOMAIN_TOEPLITZ = 6

BLOCK_SLOTS = 1 << 20


def substream(seed: int, domain: int, index: int = 0) -> np.random.Generator:
    """Return the addressable counter-based substream (seed, domain, index).

    Philox is keyed, not jumped: the same triple always yields the same
    stream no matter how many other substreams were consumed first.
    """
    if index < 0 or index >= 1 << 48:
        raise ParameterError(f"substream index out of range: {index}")
    key = np.array(
        [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((domain << 48) | index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def thin_number_state(n: int, eta: float, rng: np.random.Generator) -> tuple[int, int]:
    """Split a number state |n> at a beamsplitter of transmissivity eta.

    Returns (bob, eve) with bob ~ Binomial(n, eta) and eve = n - bob, so the
    two outcomes always sum to n exactly.
    """
    if n < 0:
        raise ParameterError(f"photon number must be non-negative, got {n}")
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must be in [0, 1], got {eta}")
    bob = int(rng.binomial(n, eta))
    return bob, n - bob


def thin_number_state_array(
    ns: np.ndarray, eta: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`thin_number_state` over an array of photon numbers."""
    ns = np.asarray(ns)
    if ns.size and ns.min() < 0:
        raise ParameterError("photon numbers must be non-negative")
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must be in [0, 1], got {eta}")
    bob = rng.binomial(ns, eta)
    return bob, ns - bob


def split_coherent(mean: float, eta: float, rng: np.random.Generator) -> tuple[int, int]:
    """Split a coherent state of mean photon number |alpha|^2 = mean.

    Direct detection on the two output arms gives two *independent* Poisson
    counts of means eta*mean and (1-eta)*mean; unlike number states there is
    no conservation constraint between the arms.
    """
    if mean < 0.0:
        raise ParameterError(f"mean photon number must be non-negative, got {mean}")
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must be in [0, 1], got {eta}")
    bob = int(rng.poisson(eta * mean))
    eve = int(rng.poisson((1.0 - eta) * mean))
    return bob, eve


def split_coherent_array(
    mean: float, eta: float, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`split_coherent`: draw `size` independent splits."""
    if mean < 0.0:
        raise ParameterError(f"mean photon number must be non-negative, got {mean}")
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must be in [0, 1], got {eta}")
    bob = rng.poisson(eta * mean, size)
    eve = rng.poisson((1.0 - eta) * mean, size)
    return bob, eve


def sample_source_slot(p: SourceParams, rng: np.random.Generator) -> SlotOutcome:
    """Draw one slot of the pair source with two-sided loss.

    The pair count is Poisson(eps); each pair independently reaches Alice
    with probability eta_a and Bob with probability eta_b, the two routings
    being independent of each other.  Photons that Bob loses belong to Eve,
    so bob_count + eve_count == n_source always.  Dark counts are not
    sampled here; fold them in first with :func:`effective_dark_params`.
    """
    n = int(rng.poisson(p.eps))
    alice = int(rng.binomial(n, p.eta_a))
    bob = int(rng.binomial(n, p.eta_b))
    return SlotOutcome(n_source=n, alice_count=alice, bob_count=bob, eve_count=n - bob)


def sample_source_slots(
    p: SourceParams, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw `count` slots at once; returns (n_source, alice, bob, eve) arrays.

    Draw order (pair counts, Alice routing, Bob routing) is fixed so a block
    redrawn from the same substream is bit-identical.
    """
    n = rng.poisson(p.eps, count)
    alice = rng.binomial(n, p.eta_a)
    bob = rng.binomial(n, p.eta_b)
    return n, alice, bob, n - bob


def effective_dark_params(p: SourceParams) -> SourceParams:
    """Fold dark counts into equivalent loss parameters.

    Returns (eta_a', eta_b', eps') with zero dark counts solving

        eta_a' * eps' = eta_a * eps + lambda_a
        eta_b' * eps' = eta_b * eps + lambda_b
        eta_a' * eta_b' * eps' = eta_a * eta_b * eps

    exactly.  A dark count at one detector is statistically a source pair
    that reached that detector only.  The remap preserves the Alice/Bob
    correlation but not Eve's optical states.
    """
    if not p.has_dark_counts:
        return p
    ra = p.eta_a * p.eps + p.lambda_a
    rb = p.eta_b * p.eps + p.lambda_b
    prod = p.eta_a * p.eta_b * p.eps
    if prod <= 0.0:
        raise ParameterError("eta_a*eps and eta_b*eps must be positive")
    eta_a_eff = prod / rb
    eta_b_eff = prod / ra
    eps_eff = ra * rb / prod
    if eta_a_eff > 1.0 or eta_b_eff > 1.0:
        raise UnphysicalRemapError(
            f"remap needs eta_a'={eta_a_eff:.6g}, eta_b'={eta_b_eff:.6g} (> 1 is unphysical)"
        )
    return SourceParams(
        eta_a=eta_a_eff, eta_b=eta_b_eff, eps=eps_eff, lambda_a=0.0, lambda_b=0.0
    )


def iter_slot_blocks(
    p: SourceParams,
    k: int,
    seed: int,
    block_slots: int = BLOCK_SLOTS,
    workers: int = 1,
) -> Iterator[tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (start, n_source, alice, bob, eve) for k slots in fixed blocks.

    Block i is drawn entirely from substream(seed, DOMAIN_SOURCE, i), so the
    concatenated stream is identical for any `workers` count and any block
    consumption order.  `p` must already have dark counts folded in.
    """
    if k < 1:
        raise ParameterError(f"slot count must be positive, got {k}")
    if p.has_dark_counts:
        raise ParameterError("fold dark counts with effective_dark_params() first")
    n_blocks = (k + block_slots - 1) // block_slots

    def draw(i: int) -> tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        start = i * block_slots
        count = min(block_slots, k - start)
        rng = substream(seed, DOMAIN_SOURCE, i)
        n, alice, bob, eve = sample_source_slots(p, count, rng)
        return start, n, alice, bob, eve

    if workers <= 1:
        for i in range(n_blocks):
            yield draw(i)
    else:
        from concurrent.futures import ThreadPoolExecutor

        # Results are re-ordered by block index, so parallel == serial.
        with ThreadPoolExecutor(max_workers=workers) as pool:
            window = max(2 * workers, 4)
            futures = {}
            next_submit = 0
            next_yield = 0
            while next_yield < n_blocks:
                while next_submit < n_blocks and next_submit - next_yield < window:
                    futures[next_submit] = pool.submit(draw, next_submit)
                    next_submit += 1
                yield futures.pop(next_yield).result()
                next_yield += 1
