"""Binary polar codes: construction, encoding, systematic encoding, and
successive-cancellation decoding.

The transform is the plain Kronecker power of [[1,0],[1,1]] with no
bit-reversal permutation, so ``polar_transform(u)`` is bit-identical to
``u @ generator_matrix(n)`` over GF(2).  The transform is an involution,
which the systematic encoder exploits.

Index convention: Python APIs are 0-based; the on-disk code descriptor
(and every other file format) is 1-based.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .rates import binary_entropy

__all__ = [
    "PolarCode",
    "bhattacharyya_parameters",
    "compute_frozen_count",
    "construct_frozen_set",
    "encode",
    "generator_matrix",
    "load_code",
    "polar_transform",
    "save_code",
    "sc_decode",
    "systematic_decode",
    "systematic_encode",
]

# Largest n for which the dense generator matrix may be materialized; it is a
# test oracle, production encoding goes through the butterfly transform.
_GENERATOR_MATRIX_MAX_N = 12


def _check_block_len(block_len: int) -> int:
    if block_len <= 0 or block_len & (block_len - 1):
        raise ValueError(f"block length must be a power of 2, got {block_len}")
    return int(block_len).bit_length() - 1


def as_bit_array(bits, length=None, name="bits") -> np.ndarray:
    """Validate and convert a bit sequence to a uint8 ndarray of 0/1."""
    arr = np.asarray(bits)
    if arr.ndim == 0:
        raise ValueError(f"{name} must be a sequence of bits")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    if length is not None and arr.shape[-1] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[-1]}")
    return arr.astype(np.uint8)


def compute_frozen_count(threshold_e: float, block_len: int) -> int:
    """Frozen-position count ceil(H(e) * N) for a length-N code sized so the
    data part matches the channel capacity at error rate ``threshold_e``."""
    if not 0.0 <= threshold_e <= 0.5:
        raise ValueError(f"threshold must lie in [0, 0.5], got {threshold_e}")
    _check_block_len(block_len)
    return math.ceil(binary_entropy(threshold_e) * block_len)


def bhattacharyya_parameters(design_e: float, n: int) -> np.ndarray:
    """Bhattacharyya parameters of the 2^n synthesized bit-channels of a
    binary symmetric channel with flip probability ``design_e``.

    Starts from Z0 = 2*sqrt(e(1-e)) and applies the channel-splitting
    recursion Z -> 2Z - Z^2 (worse half) and Z -> Z^2 (better half) once per
    polarization level, in the natural (non-bit-reversed) index order of the
    transform used here.
    """
    if not 0.0 < design_e < 0.5:
        raise ValueError(f"design error rate must lie in (0, 0.5), got {design_e}")
    z = np.array([2.0 * math.sqrt(design_e * (1.0 - design_e))])
    for _ in range(n):
        nxt = np.empty(2 * z.size)
        nxt[0::2] = 2.0 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


def construct_frozen_set(design_e: float, block_len: int, frozen_count: int):
    """Pick the ``frozen_count`` least reliable positions (largest
    Bhattacharyya parameter), ties broken toward the lower index.

    Returns a sorted tuple of 0-based positions; deterministic for fixed
    inputs.
    """
    n = _check_block_len(block_len)
    if not 0 <= frozen_count <= block_len:
        raise ValueError(f"frozen count must lie in [0, {block_len}], got {frozen_count}")
    if frozen_count == 0:
        return ()
    if frozen_count == block_len:
        return tuple(range(block_len))
    z = bhattacharyya_parameters(design_e, n)
    order = np.argsort(-z, kind="stable")
    return tuple(sorted(int(i) for i in order[:frozen_count]))


def generator_matrix(n: int) -> np.ndarray:
    """Dense N x N transform matrix, the n-fold Kronecker power of
    [[1,0],[1,1]].  Lower-triangular with unit diagonal.

    Refused above n=12: this is an equivalence oracle for tests, not an
    encoder.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n > _GENERATOR_MATRIX_MAX_N:
        raise ValueError(
            f"generator matrix is oracle-only, refusing n={n} > {_GENERATOR_MATRIX_MAX_N}")
    kernel = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    g = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        g = np.kron(kernel, g)
    return g


def polar_transform(bits) -> np.ndarray:
    """Apply the polar transform in place of the dense matrix product.

    Accepts shape (N,) or any batch shape (..., N); O(N log N) per row and
    bit-identical to multiplication by ``generator_matrix``.  The transform
    is its own inverse over GF(2).
    """
    x = np.array(bits, dtype=np.uint8)
    shape = x.shape
    size = shape[-1]
    _check_block_len(size)
    x = x.reshape(-1, size)
    m = 1
    while m < size:
        x = x.reshape(-1, 2 * m)
        x[:, :m] ^= x[:, m:]
        m *= 2
    return x.reshape(shape)


@dataclass(frozen=True)
class PolarCode:
    """Descriptor of one polar code: log-size ``n`` and the frozen positions.

    Instances are immutable and safe to share across threads; the cached
    index arrays are marked read-only.
    """

    n: int
    frozen: tuple
    design_e: float | None = None
    _frozen_idx: np.ndarray = field(init=False, repr=False, compare=False)
    _data_idx: np.ndarray = field(init=False, repr=False, compare=False)
    _frozen_mask: np.ndarray = field(init=False, repr=False, compare=False)
    _down_closed: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        size = 1 << self.n
        frozen = tuple(sorted(int(i) for i in self.frozen))
        if len(set(frozen)) != len(frozen):
            raise ValueError("frozen set contains duplicate positions")
        if frozen and (frozen[0] < 0 or frozen[-1] >= size):
            raise ValueError(f"frozen positions must lie in [0, {size})")
        object.__setattr__(self, "frozen", frozen)
        mask = np.zeros(size, dtype=bool)
        fro = np.asarray(frozen, dtype=np.intp)
        mask[fro] = True
        dat = np.flatnonzero(~mask)
        for arr in (mask, fro, dat):
            arr.flags.writeable = False
        object.__setattr__(self, "_frozen_idx", fro)
        object.__setattr__(self, "_data_idx", dat)
        object.__setattr__(self, "_frozen_mask", mask)
        fset = set(frozen)
        closed = all(
            (i & ~(1 << b)) in fset
            for i in frozen for b in range(self.n) if i >> b & 1)
        object.__setattr__(self, "_down_closed", closed)

    @classmethod
    def from_design(cls, threshold_e: float, block_len: int,
                    design_e: float | None = None) -> "PolarCode":
        """Construct a code sized by ``threshold_e`` (the worst channel the
        code must survive) with reliability order evaluated at ``design_e``
        (defaults to the threshold itself)."""
        n = _check_block_len(block_len)
        count = compute_frozen_count(threshold_e, block_len)
        e_for_order = threshold_e if design_e is None else design_e
        frozen = construct_frozen_set(e_for_order, block_len, count) if count else ()
        return cls(n=n, frozen=frozen, design_e=e_for_order)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def F(self) -> int:
        return len(self.frozen)

    @property
    def K(self) -> int:
        return self.N - self.F

    @property
    def data(self) -> tuple:
        return tuple(int(i) for i in self._data_idx)

    @property
    def frozen_mask(self) -> np.ndarray:
        return self._frozen_mask

    @property
    def frozen_idx(self) -> np.ndarray:
        return self._frozen_idx

    @property
    def data_idx(self) -> np.ndarray:
        return self._data_idx

    @property
    def frozen_1based(self) -> list:
        """Frozen positions in the 1-based convention used by file formats."""
        return [i + 1 for i in self.frozen]


def encode(u, code: PolarCode) -> np.ndarray:
    """Non-systematic encoding of a full-length source word: x = u G."""
    arr = as_bit_array(u, length=code.N, name="source word")
    return polar_transform(arr)


def systematic_encode(d, code: PolarCode) -> np.ndarray:
    """Systematic codeword carrying ``d`` in plain form at the data positions.

    The result x' satisfies x'[data] == d and encode(x')[frozen] == 0 (frozen
    bits fixed to 0).  Computed as transform -> zero the frozen positions ->
    transform, which solves those constraints exactly when the frozen set is
    closed under clearing index bits -- true of every reliability-ordered
    construction, because masking an index bit only degrades the channel.
    Accepts a batch shape (..., K).
    """
    if not code._down_closed:
        raise ValueError(
            "systematic encoding requires a frozen set closed under clearing "
            "index bits; this one is not")
    arr = as_bit_array(d, length=code.K, name="data bits")
    word = np.zeros(arr.shape[:-1] + (code.N,), dtype=np.uint8)
    word[..., code._data_idx] = arr
    mid = polar_transform(word)
    mid[..., code._frozen_idx] = 0
    return polar_transform(mid)


def _check_node(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Exact tanh-domain combine in a form stable for any magnitude:
    # sign(a)sign(b)min(|a|,|b|) plus the Jacobian correction.
    sg = np.sign(a) * np.sign(b)
    aa = np.abs(a)
    ab = np.abs(b)
    lo = np.minimum(aa, ab)
    hi = np.maximum(aa, ab)
    return sg * lo + np.log1p(np.exp(-(lo + hi))) - np.log1p(np.exp(-(hi - lo)))


def _sc_recurse(llr: np.ndarray, mask: np.ndarray):
    """Decode one subtree.  llr is (batch, L); returns (decisions, partial
    re-encoding) so parents can fold decisions back in O(N log N) total."""
    width = llr.shape[1]
    if width == 1:
        if mask[0]:
            u = np.zeros((llr.shape[0], 1), dtype=np.uint8)
        else:
            u = (llr[:, :1] < 0.0).astype(np.uint8)  # tie (exactly 0) -> 0
        return u, u
    half = width // 2
    first, second = llr[:, :half], llr[:, half:]
    u_left, x_left = _sc_recurse(_check_node(first, second), mask[:half])
    shifted = second + (1.0 - 2.0 * x_left) * first
    u_right, x_right = _sc_recurse(shifted, mask[half:])
    return (np.hstack([u_left, u_right]),
            np.hstack([x_left ^ x_right, x_right]))


def sc_decode(y, channel_e: float, code: PolarCode) -> np.ndarray:
    """Successive-cancellation decoding over a binary symmetric channel.

    Parameters
    ----------
    y : array-like
        Received hard bits, shape (N,) or batch (..., N).
    channel_e : float
        Channel flip probability, strictly inside (0, 0.5); the endpoints
        make every log-likelihood ratio infinite or zero.
    code : PolarCode

    Returns
    -------
    ndarray
        Estimated source word(s) with frozen positions forced to 0, same
        shape as the input.  LLR ties decide toward bit 0.
    """
    if not 0.0 < channel_e < 0.5:
        raise ValueError(
            f"channel error rate must lie strictly in (0, 0.5), got {channel_e}")
    arr = as_bit_array(y, length=code.N, name="received block")
    shape = arr.shape
    flat = arr.reshape(-1, code.N)
    llr = (1.0 - 2.0 * flat.astype(np.float64)) * math.log((1.0 - channel_e) / channel_e)
    u_hat, _ = _sc_recurse(llr, code._frozen_mask)
    return u_hat.reshape(shape)


def systematic_decode(y, channel_e: float, code: PolarCode) -> np.ndarray:
    """Decode a noisy systematic codeword to its K data bits.

    Runs sc_decode, re-encodes the estimate, and reads the data positions;
    the frozen fraction is discarded.
    """
    u_hat = sc_decode(y, channel_e, code)
    x_hat = polar_transform(u_hat)
    return x_hat[..., code._data_idx]


def save_code(code: PolarCode, path) -> None:
    """Write the canonical descriptor: {n, E, frozen_set} with 1-based,
    sorted positions.  Byte-stable for fixture diffing."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(descriptor_text(code))


def descriptor_text(code: PolarCode) -> str:
    payload = {
        "E": code.design_e,
        "frozen_set": code.frozen_1based,
        "n": code.n,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def load_code(path) -> PolarCode:
    """Read a descriptor written by save_code."""
    with open(path, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    for key in ("n", "frozen_set"):
        if key not in payload:
            raise ValueError(f"code descriptor missing field {key!r}")
    frozen = tuple(int(i) - 1 for i in payload["frozen_set"])
    return PolarCode(n=int(payload["n"]), frozen=frozen,
                     design_e=payload.get("E"))
