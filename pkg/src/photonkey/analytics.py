"""Closed-form photon-efficiency curves, rates and leakage bounds.

All information quantities are in nats (natural logs); CSV emission adds a
bits column as value/ln2.  Exact finite-eps expressions and their small-eps
asymptotes are exposed as separate callables and never substituted for one
another.

Efficiency conventions:
  * channel-model curves take (eta, eps) of the lossy channel,
  * source-model curves take eta = Bob-side transmissivity with Alice's side
    lossless; they stay evaluable at eta = 1 (the noiseless limit) even
    though the physical sampler requires eta_b < 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

__all__ = [
    "ZParams",
    "EfficiencyPoint",
    "ExactAsym",
    "CURVES",
    "EMISSION_EPS_RANGE",
    "g",
    "h2",
    "i_z",
    "r_quantum",
    "r_quantum_asym",
    "r_num_z",
    "r_num_z_asym",
    "r_num_ppm",
    "q_star",
    "mu_coh",
    "r_coh_z",
    "r_coh_ppm",
    "frame_length_kd",
    "model_s_zparams",
    "frame_zparams",
    "joint_click_params",
    "r_s1",
    "r_s2_asym",
    "s2_selection_prob_lb",
    "leakage_s2_bound",
    "r_s3_lower",
    "s3_first_part_rate",
    "leakage_c2_bound",
    "curve_points",
]

LN2 = math.log(2.0)

CURVES = (
    "quantum",
    "num_z",
    "num_ppm",
    "coh_z_exact",
    "coh_z_asym",
    "coh_ppm",
    "s1_exact",
    "s1_asym",
    "s2_asym",
    "s3_lower",
)

# Curves are emitted only inside this mean-photon-number range; the formulas
# themselves evaluate anywhere in their mathematical domain.
EMISSION_EPS_RANGE = (1e-8, 0.2)


@dataclass(frozen=True)
class ZParams:
    """Z-channel law: input-one probability q and crossover mu = P(1|1)."""

    q: float
    mu: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must be in [0, 1], got {self.q}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must be in [0, 1], got {self.mu}")

    def __iter__(self):
        yield self.q
        yield self.mu


@dataclass(frozen=True)
class EfficiencyPoint:
    """One (curve, eps, eta) sample of a photon-efficiency curve, in nats/photon."""

    eps: float
    eta: float
    curve: str
    value: float

    def __post_init__(self) -> None:
        if self.curve not in CURVES:
            raise ValueError(f"unknown curve id {self.curve!r}")
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite efficiency for {self.curve} at eps={self.eps}")


class ExactAsym(NamedTuple):
    exact: float
    asym: float


def g(x: float) -> float:
    """Maximum entropy of a bosonic mode with mean photon number x:
    (x+1) ln(x+1) - x ln x, continuously extended to g(0) = 0."""
    if x < 0.0:
        raise ValueError(f"g is defined for x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    return (x + 1.0) * math.log1p(x) - x * math.log(x)


def h2(p: float) -> float:
    """Binary entropy in nats, with 0 ln 0 := 0 at the endpoints."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"h2 is defined on [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def i_z(q: float, mu: float) -> float:
    """Mutual information of a Z channel: H2(q mu) - q H2(mu)."""
    return h2(q * mu) - q * h2(mu)


def r_quantum(eta: float, eps: float) -> float:
    """Capacity-per-received-photon of the pure-loss channel: g(eta eps)/(eta eps)."""
    x = eta * eps
    return g(x) / x


def r_quantum_asym(eta: float, eps: float) -> float:
    """Small-eps asymptote ln(1/(eta eps)) + 1."""
    return math.log(1.0 / (eta * eps)) + 1.0


def r_num_z(eta: float, eps: float) -> float:
    """Binary number states + direct detection: I_Z(eps, eta)/(eta eps)."""
    return i_z(eps, eta) / (eta * eps)


def r_num_z_asym(eta: float, eps: float) -> float:
    """Asymptote of r_num_z: constant loss H2(eta)/eta below the quantum curve."""
    return r_quantum_asym(eta, eps) - h2(eta) / eta


def r_num_ppm(eps: float) -> float:
    """Single-photon pulse-position frames of length ceil(1/eps): ln(b)/(b eps).

    The erasure probability cancels, so the value is transmissivity-free.
    """
    b = math.ceil(1.0 / eps)
    return math.log(b) / (b * eps)


def q_star(eta: float, eps: float) -> float:
    """Near-optimal input-one probability for binary coherent signalling:
    (eta eps / 2) ln(1/eps), clamped into (0, 1)."""
    q = 0.5 * eta * eps * math.log(1.0 / eps)
    return min(max(q, 1e-300), 1.0 - 1e-12)


def mu_coh(q: float, eta: float, eps: float) -> float:
    """Click probability 1 - exp(-eta eps / q) of the non-vacuum coherent symbol."""
    if q <= 0.0:
        raise ValueError(f"q must be positive, got {q}")
    return -math.expm1(-eta * eps / q)


def r_coh_z(eta: float, eps: float) -> ExactAsym:
    """Binary coherent states + non-PNR detection, i.i.d. signalling.

    exact: I_Z(q*, mu_coh(q*))/(eta eps)
    asym : ln(1/(eta eps)) - ln ln(1/eps) + ln 2 - 1
    """
    q = q_star(eta, eps)
    exact = i_z(q, mu_coh(q, eta, eps)) / (eta * eps)
    asym = (
        math.log(1.0 / (eta * eps))
        - math.log(math.log(1.0 / eps))
        + math.log(2.0)
        - 1.0
    )
    return ExactAsym(exact, asym)


def r_coh_ppm(eta: float, eps: float) -> float:
    """Coherent-state PPM with frame length b = ceil(1/q*(eps)).

    One pulse of mean b*eps per frame; the receiver clicks with probability
    1 - exp(-eta b eps), each click carrying ln b nats.
    """
    b = math.ceil(1.0 / q_star(eta, eps))
    return -math.expm1(-eta * b * eps) * math.log(b) / (eta * b * eps)


def frame_length_kd(eps: float) -> int:
    """Key-distribution frame length b = ceil(1/(eps ln(1/eps)))."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    return math.ceil(1.0 / (eps * math.log(1.0 / eps)))


def model_s_zparams(eta: float, eps: float) -> ZParams:
    """Per-slot click law of the pair source (Alice lossless, Bob at eta):
    q = 1 - e^-eps, mu = (1 - e^-(eta eps)) / (1 - e^-eps)."""
    q = -math.expm1(-eps)
    mu = math.expm1(-eta * eps) / math.expm1(-eps)
    return ZParams(q=q, mu=min(mu, 1.0))


def frame_zparams(eta: float, eps: float, b: int) -> ZParams:
    """Frame-indicator law: the per-slot law with eps replaced by b*eps."""
    return model_s_zparams(eta, b * eps)


def joint_click_params(eta_a: float, eta_b: float, eps: float) -> tuple[float, float, float]:
    """General two-sided click law (q, mu, p10) for lossy Alice and Bob.

    q   = P(A=1) = 1 - e^-(eta_a eps)
    mu  = P(B=1 | A=1)
    p10 = P(B=1 | A=0) = 1 - e^-((1-eta_a) eta_b eps), zero when eta_a = 1.
    """
    q = -math.expm1(-eta_a * eps)
    p_b0 = math.exp(-eta_b * eps)
    p_a0b0 = math.exp(-eps * (1.0 - (1.0 - eta_a) * (1.0 - eta_b)))
    p10 = 1.0 - p_a0b0 / math.exp(-eta_a * eps)
    if q == 0.0:
        return 0.0, 1.0, max(p10, 0.0)
    mu = (1.0 - p_b0 - math.exp(-eta_a * eps) * p10) / q
    return q, min(max(mu, 0.0), 1.0), min(max(p10, 0.0), 1.0)


def r_s1(eta: float, eps: float) -> ExactAsym:
    """Source model with an optimal Slepian-Wolf step: I(A;B)/(eta eps).

    exact: I_Z on the per-slot click law
    asym : ln(1/(eta eps)) + 1 - H2(eta)/eta
    """
    zp = model_s_zparams(eta, eps)
    exact = i_z(zp.q, zp.mu) / (eta * eps)
    asym = math.log(1.0 / (eta * eps)) + 1.0 - h2(eta) / eta
    return ExactAsym(exact, asym)


def r_s2_asym(eps: float) -> float:
    """Simple frame-parsing asymptote ln(1/eps) - ln ln(1/eps) - 1."""
    return math.log(1.0 / eps) - math.log(math.log(1.0 / eps)) - 1.0


def s2_selection_prob_lb(eta: float, eps: float, b: int) -> float:
    """Lower bound on the kept-frame probability:
    (eta b eps e^-(eta b eps)) * e^-(b (1-eta) eps)."""
    x = eta * b * eps
    return x * math.exp(-x) * math.exp(-b * (1.0 - eta) * eps)


def leakage_s2_bound(eta: float, eps: float, b: int) -> float:
    """Eve-entropy bound per kept frame, b * g((1-eta) eps / b) nats.

    A kept frame holds one source-active slot, so Eve's b modes carry
    (1-eta) eps photons in total.
    """
    return b * g((1.0 - eta) * eps / b)


def r_s3_lower(eta: float, eps: float) -> float:
    """Enhanced frame-parsing lower bound ln(1/eps) - H2(eta)/eta."""
    return math.log(1.0 / eps) - h2(eta) / eta


def s3_first_part_rate(eta: float, eps: float, b: int) -> float:
    """Nats per received photon from keying on the frame indicators.

    Conservative budget: the frame-indicator mutual information minus the
    peak cost of the one-bit-per-active-frame reply, charged at its full
    length of ln2 nats per bit:

        [I(frame law) - P(indicator=1) * ln2] / (eta b eps)
    """
    zp = frame_zparams(eta, eps, b)
    p_one = -math.expm1(-eta * b * eps)
    return (i_z(zp.q, zp.mu) - p_one * LN2) / (eta * b * eps)


def leakage_c2_bound(eta: float, eps: float, b: int) -> float:
    """Eve-entropy bound per coherent PPM frame, b * g((1-eta) eps) nats.

    The pulse carries b*eps mean photons, so Eve's b modes hold
    (1-eta) b eps in total; the bound tends to (1-eta) as eps -> 0.
    """
    return b * g((1.0 - eta) * eps)


_CURVE_FUNCS = {
    "quantum": lambda eta, eps: r_quantum(eta, eps),
    "num_z": lambda eta, eps: r_num_z(eta, eps),
    "num_ppm": lambda eta, eps: r_num_ppm(eps),
    "coh_z_exact": lambda eta, eps: r_coh_z(eta, eps).exact,
    "coh_z_asym": lambda eta, eps: r_coh_z(eta, eps).asym,
    "coh_ppm": lambda eta, eps: r_coh_ppm(eta, eps),
    "s1_exact": lambda eta, eps: r_s1(eta, eps).exact,
    "s1_asym": lambda eta, eps: r_s1(eta, eps).asym,
    "s2_asym": lambda eta, eps: r_s2_asym(eps),
    "s3_lower": lambda eta, eps: r_s3_lower(eta, eps),
}


def curve_points(
    eps_values: Iterable[float],
    eta: float,
    curves: Iterable[str] = CURVES,
) -> list[EfficiencyPoint]:
    """Evaluate the requested curves on an eps grid at fixed eta.

    Points outside EMISSION_EPS_RANGE are skipped (the supported regime is
    eps << 1); everything else is evaluated exactly.
    """
    lo, hi = EMISSION_EPS_RANGE
    out: list[EfficiencyPoint] = []
    for curve in curves:
        if curve not in CURVES:
            raise ValueError(f"unknown curve id {curve!r}")
        fn = _CURVE_FUNCS[curve]
        for eps in eps_values:
            if not lo <= eps <= hi:
                continue
            out.append(EfficiencyPoint(eps=eps, eta=eta, curve=curve, value=fn(eta, eps)))
    return out
