"""photonkey: photon-efficient secret-key distribution, simulated classically.

Five protocols over classically sampled photon statistics (pulse-position
schemes over a lossy channel; raw, parsed and enhanced-parsed schemes over a
photon-pair source), the closed-form efficiency curves they are measured
against, Slepian-Wolf reconciliation, and Toeplitz privacy amplification.
"""
from .analytics import (
    CURVES,
    EfficiencyPoint,
    ZParams,
    curve_points,
    frame_length_kd,
    g,
    h2,
    i_z,
    leakage_c2_bound,
    leakage_s2_bound,
    model_s_zparams,
    frame_zparams,
    mu_coh,
    q_star,
    r_coh_ppm,
    r_coh_z,
    r_num_ppm,
    r_num_z,
    r_quantum,
    r_quantum_asym,
    r_s1,
    r_s2_asym,
    r_s3_lower,
    s2_selection_prob_lb,
    s3_first_part_rate,
)
from .core import (
    ChannelParams,
    ParameterError,
    SlotOutcome,
    SourceParams,
    UnphysicalRemapError,
    effective_dark_params,
    sample_source_slot,
    split_coherent,
    substream,
    thin_number_state,
)
from .model_c import BudgetError, FrameConfig, run_scheme_c1, run_scheme_c2
from .model_s import DetectionSeq, detect_sequences, run_scheme_s1, run_scheme_s2, run_scheme_s3
from .privamp import DEFAULT_SECURITY_MARGIN_NATS, LeakageBudget, secret_length, toeplitz_hash
from .reconcile import (
    CorrelationModel,
    DecodeFailure,
    SwCode,
    exhaustive_decode,
    make_code,
    required_rate,
    sw_decode,
    sw_encode,
)
from .report import SessionReport

__version__ = "0.1.0"
