"""Systematic polar coding and a round-based polar-coded QKD simulator."""

from .codec import (PolarCode, bhattacharyya_parameters, compute_frozen_count,
                    construct_frozen_set, encode, generator_matrix, load_code,
                    polar_transform, save_code, sc_decode, systematic_decode,
                    systematic_encode)
from .fer import FerCell, fer_csv, fer_table, measure_fer
from .protocol import (ConfigError, InsufficientKeyError, PeSampleError,
                       ProcessConfig, ProcessReport, RoundResult,
                       RoundStreams, RoundTranscript, bsc_transmit,
                       intercept_resend, load_config, run_bb84_round,
                       run_polar_round, run_polar_round_alt_pe, run_process,
                       toeplitz_pa)
from .rates import (NOT_OPERATING, RateCurve, binary_entropy, rate_asymptotic,
                    rate_bb84, rate_ebb84, rate_finite, rate_polar_process,
                    rate_polar_round, sweep)

__version__ = "0.1.0"
