"""Seeded Monte Carlo frame-error-rate measurement for the polar codec.

Each trial owns an independent PRNG stream spawned from (seed, trial index),
so cell results are reproducible regardless of batching; decoding is batched
across trials because the successive-cancellation schedule is data
independent.
"""

from dataclasses import dataclass

import numpy as np

from .codec import PolarCode, polar_transform, _sc_recurse

__all__ = ["FerCell", "fer_csv", "fer_table", "measure_fer"]


@dataclass(frozen=True)
class FerCell:
    """One measured (N, e) cell of a frame-error-rate table."""

    block_len: int
    channel_e: float
    threshold_e: float
    trials: int
    frame_errors: int
    seed: int

    @property
    def rate(self) -> float:
        return self.frame_errors / self.trials


def measure_fer(code: PolarCode, channel_e: float, trials: int, seed: int,
                batch_size: int = 500) -> int:
    """Count decoding failures of random systematic codewords over a binary
    symmetric channel.  A frame errs when any decoded data bit differs."""
    if trials <= 0:
        raise ValueError(f"trials must be positive, got {trials}")
    if not 0.0 <= channel_e < 0.5:
        raise ValueError(f"channel error rate must lie in [0, 0.5), got {channel_e}")
    size, k = code.N, code.K
    mask = code.frozen_mask
    streams = np.random.SeedSequence(seed).spawn(trials)
    # e = 0 never flips a bit and the noiseless round trip is exact; decode
    # LLRs still need a proper channel parameter.
    llr_e = max(channel_e, 1e-3)
    scale = np.log((1.0 - llr_e) / llr_e)
    errors = 0
    for lo in range(0, trials, batch_size):
        chunk = streams[lo:lo + batch_size]
        n_rows = len(chunk)
        data = np.empty((n_rows, k), dtype=np.uint8)
        flips = np.empty((n_rows, size), dtype=np.uint8)
        for row, child in enumerate(chunk):
            rng = np.random.default_rng(child)
            data[row] = rng.integers(0, 2, k, dtype=np.uint8)
            flips[row] = rng.random(size) < channel_e
        word = np.zeros((n_rows, size), dtype=np.uint8)
        word[:, code.data_idx] = data
        mid = polar_transform(word)
        mid[:, code.frozen_idx] = 0
        sent = polar_transform(mid)
        received = sent ^ flips
        llr = (1.0 - 2.0 * received.astype(np.float64)) * scale
        u_hat, _ = _sc_recurse(llr, mask)
        decoded = polar_transform(u_hat)[:, code.data_idx]
        errors += int(np.any(decoded != data, axis=1).sum())
    return errors


def fer_table(n_exponents, e_list, threshold_e, trials, seed,
              batch_size: int = 500) -> list:
    """Measure every (N, e) cell; deterministic for fixed inputs.

    The per-cell seed folds the cell coordinates in so adding or reordering
    cells never changes another cell's result.
    """
    cells = []
    for n in n_exponents:
        code = PolarCode.from_design(threshold_e, 1 << n)
        for e in e_list:
            cell_seed = int(seed) * 1000003 + n * 101 + int(round(e * 1e6))
            errs = measure_fer(code, e, trials, cell_seed, batch_size)
            cells.append(FerCell(block_len=1 << n, channel_e=e,
                                 threshold_e=threshold_e, trials=trials,
                                 frame_errors=errs, seed=seed))
    return cells


def fer_csv(cells) -> str:
    """CSV rendering with the fixture schema N,e,E,trials,frame_errors,seed."""
    lines = ["N,e,E,trials,frame_errors,seed"]
    for c in cells:
        lines.append(f"{c.block_len},{c.channel_e:g},{c.threshold_e:g},"
                     f"{c.trials},{c.frame_errors},{c.seed}")
    return "\n".join(lines) + "\n"
