"""Closed-form key-rate model: polar-coded QKD vs BB84 and efficient BB84.

All rates are fractions of the block length (secure key bits per transmitted
qubit).  The polar protocol pays no sifting penalty but discards the frozen
fraction H(E) twice per round: once for the frozen bits themselves and once
for the key part reserved to encrypt the next round's frozen bits.

A polar rate above the operating threshold (e > E) is reported as the
not-operating marker ``math.nan``, never as 0, so downstream tables and plots
preserve the hard cutoff of the curve.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NOT_OPERATING",
    "RateCurve",
    "binary_entropy",
    "rate_asymptotic",
    "rate_bb84",
    "rate_ebb84",
    "rate_finite",
    "rate_polar_process",
    "rate_polar_round",
    "sweep",
]

#: Marker value for "the polar protocol does not operate at this error rate".
NOT_OPERATING = math.nan

_BETA_MODES = ("paper-rounded", "exact")


def binary_entropy(x):
    """Binary Shannon entropy in bits, with H(0) = H(1) = 0 taken exactly.

    Accepts a float or an ndarray and returns the matching kind.
    Raises ValueError outside [0, 1].
    """
    if np.ndim(x) == 0:
        xf = float(x)
        if not 0.0 <= xf <= 1.0:
            raise ValueError(f"entropy argument must lie in [0, 1], got {xf}")
        if xf == 0.0 or xf == 1.0:
            return 0.0
        return -xf * math.log2(xf) - (1.0 - xf) * math.log2(1.0 - xf)
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("entropy argument must lie in [0, 1]")
    out = np.zeros_like(arr)
    inner = (arr > 0.0) & (arr < 1.0)
    v = arr[inner]
    out[inner] = -v * np.log2(v) - (1.0 - v) * np.log2(1.0 - v)
    return out


def rate_asymptotic(s, e, f_ec):
    """Asymptotic round key rate s*(1 - H(e) - f_ec*H(e)).

    May be negative; callers clamp for display if they care.
    """
    h = binary_entropy(e)
    return s * (1.0 - h - f_ec * h)


def rate_finite(s, e, f_ec, beta):
    """Finite-size round key rate: rate_asymptotic minus the sacrificed
    parameter-estimation fraction beta inside the sifting factor."""
    h = binary_entropy(e)
    return s * (1.0 - h - f_ec * h - beta)


def rate_polar_round(e, threshold_e):
    """Per-round rate of a polar round: 1 - H(e) - 2*H(E), no sifting.

    One H(E) pays for the discarded frozen fraction, the other for the key
    part reserved to bootstrap the next round.  Returns NOT_OPERATING for
    e > threshold_e (the code is only designed to correct up to E).
    """
    if e > threshold_e:
        return NOT_OPERATING
    return 1.0 - binary_entropy(e) - 2.0 * binary_entropy(threshold_e)


def rate_polar_process(e, threshold_e, rounds, rate_init):
    """Average rate of the full process: (-R1 + (M-1)*R') / M.

    The initialization round's key is consumed to encrypt round 2's frozen
    bits, so it enters negatively.  Tends to rate_polar_round as M grows.
    """
    if rounds < 2:
        raise ValueError(f"process needs at least 2 rounds, got {rounds}")
    per_round = rate_polar_round(e, threshold_e)
    if math.isnan(per_round):
        return NOT_OPERATING
    return (-rate_init + (rounds - 1) * per_round) / rounds


def rate_bb84(e, f_ec, beta):
    """Round-wise BB84 rate: rate_finite with sifting coefficient 0.5."""
    return rate_finite(0.5, e, f_ec, beta)


def rate_ebb84(e, f_ec, p):
    """Round-wise efficient-BB84 rate with Hadamard-basis bias probability p.

    Sifting keeps same-basis pairs, s = 1 - 2p(1-p); the parameter-estimation
    fraction is the both-Hadamard fraction beta = p^2.
    """
    s = 1.0 - 2.0 * p * (1.0 - p)
    return rate_finite(s, e, f_ec, p * p)


@dataclass(frozen=True)
class RateCurve:
    """Tabulated key-rate comparison over an error-rate grid.

    ``polar`` maps each design threshold E to its rate column; entries are
    NOT_OPERATING (NaN) where e > E and render as empty CSV cells.
    """

    e_grid: np.ndarray
    r_bb84: np.ndarray
    r_ebb84: np.ndarray
    polar: dict = field(default_factory=dict)
    block_len: int = 0
    beta: float = 0.0
    beta_mode: str = "paper-rounded"
    p: float = 0.0
    f_ec: float = 1.1
    pe_budget: int = 5000

    @property
    def threshold_list(self):
        return list(self.polar.keys())

    def to_csv(self) -> str:
        """Deterministic CSV rendering, 6 significant digits, NaN as empty."""
        header = ["e", "r_bb84", "r_ebb84"]
        header += [f"r_polar_E{_fmt(E)}" for E in self.polar]
        lines = [",".join(header)]
        columns = [self.r_bb84, self.r_ebb84] + list(self.polar.values())
        for i, e in enumerate(self.e_grid):
            row = [_fmt(e)] + [_fmt(col[i]) for col in columns]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float) and math.isnan(value):
        return ""
    return format(float(value), ".6g")


def sweep(e_grid, threshold_list, block_len, f_ec=1.1, pe_budget=5000,
          beta_mode="paper-rounded") -> RateCurve:
    """Build the rate-comparison table for one block length.

    beta is the parameter-estimation fraction implied by spending
    ``pe_budget`` bits out of ``block_len``; ``paper-rounded`` keeps the
    two-decimal value commonly quoted (0.08 at 2^16, 0.04 at 2^17),
    ``exact`` uses pe_budget/block_len as-is.  The bias probability for
    efficient BB84 is p = sqrt(beta).  Polar columns use the many-round
    limit of the process rate.
    """
    e = np.asarray(list(e_grid), dtype=np.float64)
    if e.size == 0:
        raise ValueError("empty error-rate grid")
    if np.any(np.diff(e) <= 0.0):
        raise ValueError("error-rate grid must be strictly ascending")
    if e[0] < 0.0 or e[-1] > 0.5:
        raise ValueError("error-rate grid must lie within [0, 0.5]")
    if block_len <= 0 or block_len & (block_len - 1):
        raise ValueError(f"block length must be a power of 2, got {block_len}")
    if beta_mode not in _BETA_MODES:
        raise ValueError(f"beta_mode must be one of {_BETA_MODES}, got {beta_mode!r}")
    thresholds = list(threshold_list)
    if not thresholds:
        raise ValueError("need at least one design threshold")

    beta = pe_budget / block_len
    if beta_mode == "paper-rounded":
        beta = round(beta, 2)
    p = math.sqrt(beta)

    h = binary_entropy(e)
    bb84 = 0.5 * (1.0 - h - f_ec * h - beta)
    s = 1.0 - 2.0 * p * (1.0 - p)
    ebb84 = s * (1.0 - h - f_ec * h - p * p)
    polar = {}
    for E in thresholds:
        col = 1.0 - h - 2.0 * binary_entropy(E)
        col = np.where(e > E, np.nan, col)
        polar[E] = col
    return RateCurve(e_grid=e, r_bb84=bb84, r_ebb84=ebb84, polar=polar,
                     block_len=block_len, beta=beta, beta_mode=beta_mode,
                     p=p, f_ec=f_ec, pe_budget=pe_budget)
