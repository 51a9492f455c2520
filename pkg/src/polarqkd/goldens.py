"""Regenerable golden outputs used for regression testing.

Every entry is produced by deterministic seeded library calls, so unchanged
code must reproduce the committed files byte for byte.
"""

import hashlib

import numpy as np

from . import fer
from .protocol import ProcessConfig, run_process

__all__ = ["build_golden_set", "key_digest"]


def key_digest(bits: np.ndarray) -> str:
    """Stable short digest of a bit sequence."""
    return hashlib.sha256(np.packbits(bits).tobytes()).hexdigest()[:16]


def _process_golden(config: ProcessConfig) -> str:
    report = run_process(config)
    secure = [r.alice_key_secure for r in report.rounds if r.alice_key_secure.size]
    joined = np.concatenate(secure) if secure else np.zeros(0, dtype=np.uint8)
    lines = [report.summary_line(),
             f"secure_key_digest {key_digest(joined)}",
             report.format_table().rstrip("\n")]
    return "\n".join(lines) + "\n"


def _bsc_golden(block_len: int, flip_prob: float, seed: int) -> str:
    from .protocol import bsc_transmit
    rng = np.random.default_rng(seed)
    bits = np.zeros(block_len, dtype=np.uint8)
    out = bsc_transmit(bits, flip_prob, rng)
    return np.packbits(out).tobytes().hex() + "\n"


def build_golden_set() -> dict:
    """Map of fixture file name to freshly generated content."""
    goldens = {}

    cells = fer.fer_table([8, 10, 12], [0.005, 0.01, 0.02],
                          threshold_e=0.04, trials=300, seed=7)
    goldens["fer_table_t300_s7.csv"] = fer.fer_csv(cells)

    cell = fer.fer_table([10], [0.02], threshold_e=0.04, trials=2000, seed=42)
    goldens["fer_n1024_e0.02_t2000_s42.csv"] = fer.fer_csv(cell)

    goldens["bsc_n4096_e0.02_s7.hex"] = _bsc_golden(4096, 0.02, 7)

    goldens["process_noiseless.txt"] = _process_golden(ProcessConfig(
        N=4096, M=8, E=0.04, channel_e=0.0, master_seed=11))
    goldens["process_noisy.txt"] = _process_golden(ProcessConfig(
        N=4096, M=8, E=0.04, channel_e=0.01, master_seed=11))
    goldens["process_alt_pe.txt"] = _process_golden(ProcessConfig(
        N=4096, M=4, E=0.04, channel_e=0.01, master_seed=13,
        pe_variant="random-basis"))
    return goldens
