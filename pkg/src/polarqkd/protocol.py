"""Round-based QKD process built on systematic polar coding.

Round 1 runs plain BB84 to bootstrap a key; each later round systematically
polar-codes K fresh key bits, one-time-pad encrypts the F frozen-position
codeword bits with the previous round's reserved key part, transmits through
a noisy channel, estimates the error rate from disclosed frozen positions,
decodes, compresses via Toeplitz hashing, and splits the result into the
next round's encryption key and the secure output.

The quantum layer is modeled classically: Bob measures each qubit in the
basis Alice announces, so every position is an independent flip event and a
binary symmetric channel is exact, not an approximation.  Bases are still
drawn and recorded in the transcript.  An intercept-resend adversary is
available to exercise the abort path.
"""

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .codec import PolarCode, as_bit_array, polar_transform, sc_decode
from .rates import binary_entropy, rate_bb84, rate_polar_process

__all__ = [
    "ConfigError",
    "InsufficientKeyError",
    "PeSampleError",
    "ProcessConfig",
    "ProcessReport",
    "RoundResult",
    "RoundStreams",
    "RoundTranscript",
    "bsc_transmit",
    "intercept_resend",
    "load_config",
    "run_bb84_round",
    "run_polar_round",
    "run_polar_round_alt_pe",
    "run_process",
    "toeplitz_pa",
]

# Flip-probability floor handed to the decoder: parties may estimate a QBER
# of exactly 0, which would degenerate the channel LLRs.
DECODER_MIN_E = 1e-3

PE_VARIANTS = ("announced-basis", "random-basis")

_REQUIRED_CONFIG_FIELDS = ("N", "M", "E", "channel_e", "f_ec", "master_seed")
_OPTIONAL_CONFIG_FIELDS = ("pe_sample", "eavesdrop_fraction", "pe_variant",
                           "bb84_batches", "min_pe_survivors")


class ConfigError(ValueError):
    """Invalid or inconsistent process configuration."""


class InsufficientKeyError(RuntimeError):
    """A round produced fewer key bits than the chain requires."""


class PeSampleError(RuntimeError):
    """Parameter estimation survived on fewer comparisons than allowed."""


@dataclass(frozen=True)
class ProcessConfig:
    """All tunables of one M-round process run."""

    N: int
    M: int
    E: float
    channel_e: float
    master_seed: int
    f_ec: float = 1.1
    pe_sample: int | None = None
    eavesdrop_fraction: float = 0.0
    pe_variant: str = "announced-basis"
    bb84_batches: int = 1
    min_pe_survivors: int = 1

    def frozen_count(self) -> int:
        return math.ceil(binary_entropy(self.E) * self.N)

    def resolved_pe_sample(self) -> int:
        """Default rule: disclose at most 5000 frozen positions, all of them
        when fewer exist."""
        if self.pe_sample is not None:
            return self.pe_sample
        return min(self.frozen_count(), 5000)

    def validate(self) -> list:
        """Return a list of field-named problems; empty when runnable."""
        problems = []
        if self.N <= 0 or self.N & (self.N - 1):
            problems.append(f"N: must be a power of 2, got {self.N}")
        if self.M < 2:
            problems.append(f"M: need at least 2 rounds, got {self.M}")
        if not 0.0 < self.E < 0.5:
            problems.append(f"E: must lie in (0, 0.5), got {self.E}")
        if not 0.0 <= self.channel_e < 0.5:
            problems.append(f"channel_e: must lie in [0, 0.5), got {self.channel_e}")
        if self.f_ec < 1.0:
            problems.append(f"f_ec: reconciliation efficiency is >= 1, got {self.f_ec}")
        if not 0.0 <= self.eavesdrop_fraction <= 1.0:
            problems.append(
                f"eavesdrop_fraction: must lie in [0, 1], got {self.eavesdrop_fraction}")
        if self.pe_variant not in PE_VARIANTS:
            problems.append(
                f"pe_variant: must be one of {PE_VARIANTS}, got {self.pe_variant!r}")
        if self.bb84_batches < 1:
            problems.append(f"bb84_batches: must be >= 1, got {self.bb84_batches}")
        if self.min_pe_survivors < 1:
            problems.append(
                f"min_pe_survivors: must be >= 1, got {self.min_pe_survivors}")
        if problems:
            return problems

        frozen = self.frozen_count()
        if frozen < 1:
            problems.append(f"E: threshold {self.E} freezes no positions")
            return problems
        if self.pe_sample is not None and not 1 <= self.pe_sample <= frozen:
            problems.append(
                f"pe_sample: must lie in [1, {frozen}] for N={self.N}, E={self.E}, "
                f"got {self.pe_sample}")
        if self.N < 3 * frozen:
            problems.append(
                f"E: threshold {self.E} needs N >= 3*ceil(H(E)N) = {3 * frozen}; "
                f"the hash output could not cover the next round's key")
        # Expected initialization yield (only meaningful when the process is
        # not going to abort at parameter estimation anyway).
        if self.channel_e <= self.E:
            h = binary_entropy(self.channel_e)
            beta = self.resolved_pe_sample() / self.N
            expected = self.bb84_batches * 0.5 * self.N * (
                1.0 - (1.0 + self.f_ec) * h - beta)
            if expected < frozen:
                problems.append(
                    "N: expected initialization-round key "
                    f"({expected:.0f} bits) is below the {frozen} bits needed to "
                    "encrypt round 2; raise N or bb84_batches")
        return problems

    def to_json(self) -> str:
        payload = {k: getattr(self, k)
                   for k in _REQUIRED_CONFIG_FIELDS + _OPTIONAL_CONFIG_FIELDS}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def load_config(path) -> ProcessConfig:
    """Parse a JSON config file, reporting every bad field by name."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    problems = [f"{k}: required field missing" for k in _REQUIRED_CONFIG_FIELDS
                if k not in payload]
    known = set(_REQUIRED_CONFIG_FIELDS) | set(_OPTIONAL_CONFIG_FIELDS)
    problems += [f"{k}: unknown field" for k in sorted(set(payload) - known)]
    if problems:
        raise ConfigError("; ".join(problems))
    config = ProcessConfig(**payload)
    problems = config.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return config


class RoundStreams(NamedTuple):
    """Independent PRNG streams of one round, split by owner."""

    alice: np.random.Generator
    bob: np.random.Generator
    channel: np.random.Generator
    public: np.random.Generator

    @classmethod
    def from_seed_sequence(cls, seq: np.random.SeedSequence) -> "RoundStreams":
        return cls(*(np.random.default_rng(child) for child in seq.spawn(4)))


@dataclass(frozen=True)
class RoundTranscript:
    """Public announcements of one round, kept for replay tests."""

    round_index: int
    kind: str
    permutation: np.ndarray | None
    bases: np.ndarray | None
    frozen_positions: np.ndarray | None
    pe_positions: np.ndarray
    pe_alice: np.ndarray
    pe_bob: np.ndarray
    toeplitz_seed: np.ndarray | None
    abort: bool

    def to_json_dict(self) -> dict:
        """1-based, JSON-serializable rendering for transcript dumps."""
        def one_based(arr):
            return None if arr is None else [int(i) + 1 for i in arr]

        def bits(arr):
            return None if arr is None else [int(b) for b in arr]

        return {
            "round": self.round_index,
            "kind": self.kind,
            "permutation": one_based(self.permutation),
            "bases": bits(self.bases),
            "frozen_positions": one_based(self.frozen_positions),
            "pe_positions": one_based(self.pe_positions),
            "pe_alice": bits(self.pe_alice),
            "pe_bob": bits(self.pe_bob),
            "toeplitz_seed": bits(self.toeplitz_seed),
            "abort": self.abort,
        }


@dataclass(frozen=True)
class RoundResult:
    """Key accounting of one round; both parties' keys are kept so tests can
    verify agreement directly."""

    round_index: int
    kind: str
    qber_est: float
    aborted: bool
    decode_failed: bool
    alice_key_next: np.ndarray
    alice_key_secure: np.ndarray
    bob_key_next: np.ndarray
    bob_key_secure: np.ndarray
    pa_leak: int = 0

    @property
    def key_next(self) -> np.ndarray:
        return self.alice_key_next

    @property
    def key_secure(self) -> np.ndarray:
        return self.alice_key_secure

    @property
    def keys_match(self) -> bool:
        return (np.array_equal(self.alice_key_next, self.bob_key_next)
                and np.array_equal(self.alice_key_secure, self.bob_key_secure))


@dataclass(frozen=True)
class ProcessReport:
    """Aggregate outcome of one process run."""

    config: ProcessConfig
    rounds: list
    transcripts: list
    measured_rate: float
    analytic_rate: float
    analytic_rate_estimated: float
    key_mismatch_count: int
    decode_failures: int
    aborted: bool
    abort_round: int | None

    @property
    def rounds_completed(self) -> int:
        return sum(1 for r in self.rounds if not r.aborted)

    def summary_line(self) -> str:
        """Machine-readable one-liner:
        measured_rate,analytic_rate,rounds_completed,decode_failures,aborted"""
        return (f"{self.measured_rate:.9f},{self.analytic_rate:.9f},"
                f"{self.rounds_completed},{self.decode_failures},{int(self.aborted)}")

    def format_table(self) -> str:
        lines = ["round kind  qber_est  key_next key_secure flags"]
        for r in self.rounds:
            flags = []
            if r.aborted:
                flags.append("ABORT")
            if r.decode_failed:
                flags.append("DECODE-FAIL")
            lines.append(
                f"{r.round_index:>5} {r.kind:<5} {r.qber_est:8.6f} "
                f"{len(r.alice_key_next):>8} {len(r.alice_key_secure):>10} "
                f"{','.join(flags) or '-'}")
        lines.append(f"measured_rate  {self.measured_rate:.9f}")
        lines.append(f"analytic_rate  {self.analytic_rate:.9f}")
        lines.append(f"analytic_rate_estimated  {self.analytic_rate_estimated:.9f}")
        lines.append(f"key_mismatch_count  {self.key_mismatch_count}")
        return "\n".join(lines) + "\n"


def bsc_transmit(bits, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``flip_prob``."""
    if not 0.0 <= flip_prob < 0.5:
        raise ValueError(f"flip probability must lie in [0, 0.5), got {flip_prob}")
    arr = as_bit_array(bits)
    flips = (rng.random(arr.shape) < flip_prob).astype(np.uint8)
    return arr ^ flips


def intercept_resend(bits, bases, fraction: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Measure-and-resend adversary on a fraction of positions.

    Eve measures each intercepted qubit in a uniformly random basis and
    re-prepares it; when her basis disagrees with the preparation basis the
    bit Bob later reads in the announced basis is uniform.  Net effect:
    an extra independent flip probability of 0.25 * fraction per position.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"intercept fraction must lie in [0, 1], got {fraction}")
    arr = as_bit_array(bits)
    basis_arr = as_bit_array(bases, length=arr.shape[-1], name="bases")
    intercepted = rng.random(arr.shape) < fraction
    eve_bases = rng.integers(0, 2, arr.shape, dtype=np.uint8)
    collapse = rng.random(arr.shape) < 0.5
    flips = (intercepted & (eve_bases != basis_arr) & collapse).astype(np.uint8)
    return arr ^ flips


def _xor_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """GF(2) convolution of two 0/1 vectors."""
    out_len = a.size + b.size - 1
    if a.size * b.size <= (1 << 24):
        conv = np.convolve(a.astype(np.int64), b.astype(np.int64))
    else:
        size = 1 << (out_len - 1).bit_length()
        spec = np.fft.rfft(a, size) * np.fft.rfft(b, size)
        approx = np.fft.irfft(spec, size)[:out_len]
        conv = np.rint(approx).astype(np.int64)
        # Counts are integers well below 2^53; rounding must be unambiguous.
        if np.max(np.abs(approx - conv)) > 0.25:
            raise FloatingPointError("convolution lost integer precision")
    return (conv & 1).astype(np.uint8)


def toeplitz_pa(bits, seed_bits, out_len: int) -> np.ndarray:
    """Toeplitz-hash privacy amplification over GF(2).

    The hash matrix T (out_len x len(bits)) is read off the seed as
    T[i][j] = seed[i-j] on and below the main diagonal and
    T[i][j] = seed[out_len-1 + (j-i)] above it, i.e. the first column is
    seed[0:out_len] top to bottom.  A seed of a single 1 followed by zeros
    is the identity map; an all-zero seed maps everything to zero.
    """
    if out_len <= 0:
        raise ValueError(f"output length must be positive, got {out_len}")
    arr = as_bit_array(bits, name="hash input")
    if out_len > arr.size:
        raise ValueError(
            f"output length {out_len} exceeds input length {arr.size}")
    seed = as_bit_array(seed_bits, name="seed bits")
    want = arr.size + out_len - 1
    if seed.size != want:
        raise ValueError(f"seed must have length {want}, got {seed.size}")
    diag = np.arange(arr.size + out_len - 1) - (arr.size - 1)
    t_by_diag = np.where(diag >= 0, diag, out_len - 1 - diag)
    t_full = seed[t_by_diag]
    conv = _xor_convolve(t_full, arr)
    return conv[arr.size - 1:arr.size - 1 + out_len]


def _bb84_batch(config: ProcessConfig, streams: RoundStreams):
    """One BB84 block: returns (kept alice bits, qber sample counts)."""
    size = config.N
    bits_a = streams.alice.integers(0, 2, size, dtype=np.uint8)
    bases_a = streams.alice.integers(0, 2, size, dtype=np.uint8)
    bases_b = streams.bob.integers(0, 2, size, dtype=np.uint8)
    sent = bits_a
    if config.eavesdrop_fraction > 0.0:
        sent = intercept_resend(sent, bases_a, config.eavesdrop_fraction,
                                streams.channel)
    arrived = bsc_transmit(sent, config.channel_e, streams.channel)
    wrong_basis = streams.bob.integers(0, 2, size, dtype=np.uint8)
    matched = bases_a == bases_b
    results_b = np.where(matched, arrived, wrong_basis).astype(np.uint8)

    sift_a = bits_a[matched]
    sift_b = results_b[matched]
    n_sift = int(sift_a.size)
    beta = config.resolved_pe_sample() / size
    n_pe = min(int(round(beta * n_sift)), n_sift)
    pe_local = np.sort(streams.public.choice(n_sift, size=n_pe, replace=False))
    mismatches = int(np.count_nonzero(sift_a[pe_local] != sift_b[pe_local]))

    keep = np.ones(n_sift, dtype=bool)
    keep[pe_local] = False
    sift_positions = np.flatnonzero(matched)
    return {
        "kept_alice": sift_a[keep],
        "n_sift": n_sift,
        "n_pe": n_pe,
        "mismatches": mismatches,
        "bases": bases_a,
        "pe_positions": sift_positions[pe_local],
        "pe_alice": sift_a[pe_local],
        "pe_bob": sift_b[pe_local],
    }


def run_bb84_round(config: ProcessConfig, code: PolarCode,
                   streams: RoundStreams):
    """Initialization round: plain BB84 with idealized reconciliation.

    Sifting keeps matched-basis positions (expected half), a beta-sized
    sample of the sifted bits is disclosed for the error estimate, and the
    key budget is charged ceil(f_ec*H(q)*n_sift) bits for error correction
    plus ceil(H(q)*n_sift) for privacy amplification.  Reconciliation itself
    is out of scope, so Bob's key is Alice's by construction; the Toeplitz
    compression to the charged length is real.  Aborts when the estimate
    exceeds the threshold; raises InsufficientKeyError when the surviving
    key cannot cover the next round's frozen encryption.
    """
    needed = code.F
    key_parts = []
    mism_total = 0
    pe_total = 0
    last = None
    for _ in range(config.bb84_batches):
        batch = _bb84_batch(config, streams)
        last = batch
        mism_total += batch["mismatches"]
        pe_total += batch["n_pe"]
        qber_batch = batch["mismatches"] / batch["n_pe"] if batch["n_pe"] else 0.0
        if qber_batch > config.E:
            qber = mism_total / pe_total if pe_total else 0.0
            result = RoundResult(
                round_index=1, kind="bb84", qber_est=qber, aborted=True,
                decode_failed=False,
                alice_key_next=_EMPTY, alice_key_secure=_EMPTY,
                bob_key_next=_EMPTY, bob_key_secure=_EMPTY)
            return result, _bb84_transcript(batch, aborted=True)
        kept = batch["kept_alice"]
        n_keep = kept.size
        h = binary_entropy(qber_batch)
        charge = (math.ceil(config.f_ec * h * batch["n_sift"])
                  + math.ceil(h * batch["n_sift"]))
        key_len = n_keep - charge
        if key_len > 0:
            seed = streams.public.integers(0, 2, n_keep + key_len - 1,
                                           dtype=np.uint8)
            key_parts.append(toeplitz_pa(kept, seed, key_len))
        if sum(part.size for part in key_parts) >= needed:
            break
    key = np.concatenate(key_parts) if key_parts else _EMPTY
    if key.size < needed:
        raise InsufficientKeyError(
            f"initialization round yielded {key.size} key bits, "
            f"{needed} needed to encrypt the next round")
    qber = mism_total / pe_total if pe_total else 0.0
    # The whole established key is reported; the chain consumes its first
    # F bits and the remainder is sacrificed with the round.
    result = RoundResult(
        round_index=1, kind="bb84", qber_est=qber, aborted=False,
        decode_failed=False,
        alice_key_next=key, alice_key_secure=_EMPTY,
        bob_key_next=key, bob_key_secure=_EMPTY)
    return result, _bb84_transcript(last, aborted=False)


def _bb84_transcript(batch, aborted: bool) -> RoundTranscript:
    return RoundTranscript(
        round_index=1, kind="bb84", permutation=None, bases=batch["bases"],
        frozen_positions=None, pe_positions=batch["pe_positions"],
        pe_alice=batch["pe_alice"], pe_bob=batch["pe_bob"],
        toeplitz_seed=None, abort=aborted)


_EMPTY = np.zeros(0, dtype=np.uint8)


def _polar_round(prev_key_next, config: ProcessConfig, code: PolarCode,
                 streams: RoundStreams, round_index: int, variant: str,
                 bob_prev_key=None):
    prev_key = as_bit_array(prev_key_next, length=code.F,
                            name="previous round key")
    # Bob normally holds the same chained key; tests can hand him a
    # desynchronized copy to exercise the detection paths.
    bob_key = prev_key if bob_prev_key is None else as_bit_array(
        bob_prev_key, length=code.F, name="receiver round key")
    size, k_data = code.N, code.K
    frozen_idx = code.frozen_idx

    # Alice: fresh key bits, systematic encoding, frozen-part encryption.
    data = streams.alice.integers(0, 2, k_data, dtype=np.uint8)
    word = np.zeros(size, dtype=np.uint8)
    word[code.data_idx] = data
    mid = polar_transform(word)
    mid[frozen_idx] = 0
    codeword = polar_transform(mid)
    encrypted = codeword.copy()
    encrypted[frozen_idx] ^= prev_key

    # Permuted transmission; Bob measures in the announced bases, so the
    # channel acts as independent flips on the permuted block.
    perm = streams.alice.permutation(size)
    bases = streams.alice.integers(0, 2, size, dtype=np.uint8)
    tx = encrypted[perm]
    if config.eavesdrop_fraction > 0.0:
        tx = intercept_resend(tx, bases, config.eavesdrop_fraction,
                              streams.channel)
    rx = bsc_transmit(tx, config.channel_e, streams.channel)
    received = np.empty(size, dtype=np.uint8)
    received[perm] = rx

    pe_count = min(config.resolved_pe_sample(), code.F)
    pe_positions = np.sort(streams.public.choice(frozen_idx, size=pe_count,
                                                 replace=False))
    key_slot = np.searchsorted(frozen_idx, pe_positions)

    if variant == "announced-basis":
        # Bob decrypts the sampled frozen positions and the parties compare
        # them against Alice's unencrypted codeword bits.
        bob_pe = received[pe_positions] ^ bob_key[key_slot]
        alice_pe = codeword[pe_positions]
        mismatches = int(np.count_nonzero(bob_pe != alice_pe))
        qber_est = mismatches / pe_count
        substitute = False
    else:
        # Bob measured the sampled frozen qubits in his own random bases
        # before the announcement; only matched-basis results survive, and
        # Alice's announced encrypted frozen bits replace his block values.
        inv_perm = np.empty(size, dtype=np.intp)
        inv_perm[perm] = np.arange(size)
        bob_bases = streams.bob.integers(0, 2, pe_count, dtype=np.uint8)
        random_outcomes = streams.bob.integers(0, 2, pe_count, dtype=np.uint8)
        matched = bob_bases == bases[inv_perm[pe_positions]]
        measured = np.where(matched, received[pe_positions],
                            random_outcomes).astype(np.uint8)
        survivors = int(np.count_nonzero(matched))
        if survivors < config.min_pe_survivors:
            raise PeSampleError(
                f"only {survivors} matched-basis comparisons survive, "
                f"{config.min_pe_survivors} required")
        alice_pe = encrypted[pe_positions]
        mismatches = int(np.count_nonzero(
            measured[matched] != alice_pe[matched]))
        qber_est = mismatches / survivors
        bob_pe = measured
        substitute = True

    if qber_est > config.E:
        transcript = RoundTranscript(
            round_index=round_index, kind="polar", permutation=perm,
            bases=bases, frozen_positions=frozen_idx,
            pe_positions=pe_positions, pe_alice=alice_pe, pe_bob=bob_pe,
            toeplitz_seed=None, abort=True)
        result = RoundResult(
            round_index=round_index, kind="polar", qber_est=qber_est,
            aborted=True, decode_failed=False,
            alice_key_next=_EMPTY, alice_key_secure=_EMPTY,
            bob_key_next=_EMPTY, bob_key_secure=_EMPTY)
        return result, transcript

    block = received.copy()
    if substitute:
        block[frozen_idx] = encrypted[frozen_idx]
    block[frozen_idx] ^= bob_key
    decoder_e = min(max(qber_est, DECODER_MIN_E), 0.499)
    u_hat = sc_decode(block, decoder_e, code)
    data_bob = polar_transform(u_hat)[code.data_idx]
    decode_failed = not np.array_equal(data_bob, data)

    pa_leak = math.ceil(binary_entropy(qber_est) * size)
    out_len = k_data - pa_leak
    if out_len < code.F:
        raise InsufficientKeyError(
            f"hash output of {out_len} bits cannot cover the {code.F}-bit "
            "key needed for the next round")
    seed = streams.public.integers(0, 2, k_data + out_len - 1, dtype=np.uint8)
    pa_alice = toeplitz_pa(data, seed, out_len)
    pa_bob = toeplitz_pa(data_bob, seed, out_len)

    transcript = RoundTranscript(
        round_index=round_index, kind="polar", permutation=perm, bases=bases,
        frozen_positions=frozen_idx, pe_positions=pe_positions,
        pe_alice=alice_pe, pe_bob=bob_pe, toeplitz_seed=seed, abort=False)
    result = RoundResult(
        round_index=round_index, kind="polar", qber_est=qber_est,
        aborted=False, decode_failed=decode_failed,
        alice_key_next=pa_alice[:code.F], alice_key_secure=pa_alice[code.F:],
        bob_key_next=pa_bob[:code.F], bob_key_secure=pa_bob[code.F:],
        pa_leak=pa_leak)
    return result, transcript


def run_polar_round(prev_key_next, config: ProcessConfig, code: PolarCode,
                    streams: RoundStreams, round_index: int = 2,
                    bob_prev_key=None):
    """One polar round with parameter estimation in the announced bases."""
    return _polar_round(prev_key_next, config, code, streams, round_index,
                        "announced-basis", bob_prev_key)


def run_polar_round_alt_pe(prev_key_next, config: ProcessConfig,
                           code: PolarCode, streams: RoundStreams,
                           round_index: int = 2, bob_prev_key=None):
    """Variant round: Bob measures the disclosed frozen positions in his own
    random bases, keeps the matched-basis half for the error estimate, and
    substitutes Alice's announced encrypted frozen bits before decoding."""
    return _polar_round(prev_key_next, config, code, streams, round_index,
                        "random-basis", bob_prev_key)


def run_process(config: ProcessConfig) -> ProcessReport:
    """Run the full M-round process.

    The initialization key is consumed to encrypt round 2's frozen bits and
    contributes no secure output.  A failed decode excludes that round's
    secure bits; the chain continues on Alice's key part, standing in for
    the out-of-scope key-verification step that would catch the failure.
    An error estimate above the threshold aborts the whole process.
    """
    problems = config.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    code = PolarCode.from_design(config.E, config.N)
    children = np.random.SeedSequence(config.master_seed).spawn(config.M)

    rounds = []
    transcripts = []
    aborted = False
    abort_round = None

    result, transcript = run_bb84_round(
        config, code, RoundStreams.from_seed_sequence(children[0]))
    rounds.append(result)
    transcripts.append(transcript)
    if result.aborted:
        aborted = True
        abort_round = 1
    else:
        prev_key = result.alice_key_next[:code.F]
        runner = (run_polar_round if config.pe_variant == "announced-basis"
                  else run_polar_round_alt_pe)
        for index in range(2, config.M + 1):
            result, transcript = runner(
                prev_key, config, code,
                RoundStreams.from_seed_sequence(children[index - 1]), index)
            rounds.append(result)
            transcripts.append(transcript)
            if result.aborted:
                aborted = True
                abort_round = index
                break
            prev_key = result.alice_key_next

    polar_rounds = [r for r in rounds if r.kind == "polar" and not r.aborted]
    secure_bits = sum(r.alice_key_secure.size for r in polar_rounds
                      if not r.decode_failed)
    measured = secure_bits / (config.M * config.N)
    decode_failures = sum(1 for r in polar_rounds if r.decode_failed)
    mismatches = sum(1 for r in rounds if not r.aborted and not r.keys_match)

    beta = config.resolved_pe_sample() / config.N
    init_rate = rate_bb84(config.channel_e, config.f_ec, beta)
    analytic = rate_polar_process(config.channel_e, config.E, config.M,
                                  init_rate)
    if polar_rounds:
        mean_qber = sum(r.qber_est for r in polar_rounds) / len(polar_rounds)
        analytic_est = rate_polar_process(mean_qber, config.E, config.M,
                                          init_rate)
    else:
        analytic_est = math.nan

    return ProcessReport(
        config=config, rounds=rounds, transcripts=transcripts,
        measured_rate=measured, analytic_rate=analytic,
        analytic_rate_estimated=analytic_est,
        key_mismatch_count=mismatches, decode_failures=decode_failures,
        aborted=aborted, abort_round=abort_round)
