"""Quantum-proof strong randomness extraction.

Trevisan-style construction: a weak design assigns each output bit a subset
of the seed, and a one-bit extractor turns (source, seed subset) into one
output bit.  The one-bit extractor is Reed-Solomon-Hadamard: the source is
read as coefficients of a polynomial over GF(2^s), evaluated at the seed
point alpha, and the result is inner-product-hashed with the seed point
beta.  Because the extractor is strong, one seed serves every block of a
long raw stream.

The parameter calculator fixes the output length

    m = floor((h_min * n - 4*log2(1/epsilon) - 6) / r)

and the field width s as the smallest power of two with
s >= log2(n) + log2(2*m/epsilon), giving the one-bit seed length t = 2s.
The weak design partitions its sets into groups of lines over GF(t); each
group occupies a fresh t^2-bit seed block, so the total seed length is
d = (number of groups) * t^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf2

__all__ = [
    "BitString",
    "ExtractorParams",
    "WeakDesign",
    "BlockExtractionResult",
    "output_length",
    "field_width",
    "weak_design",
    "rsh_bit",
    "extract",
    "block_extract",
    "generate_seed",
    "save_bits",
    "load_bits",
    "ingest_seed",
    "params_report",
]


class BitString:
    """An immutable-by-convention sequence of bits stored as a uint8 array."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        self.bits = arr

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_string(cls, text: str) -> "BitString":
        return cls(np.array([int(c) for c in text], dtype=np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return int(self.bits[index])
        return BitString(self.bits[index])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.all(self.bits == other.bits))

    def __xor__(self, other: "BitString") -> "BitString":
        if len(self) != len(other):
            raise ValueError("length mismatch in bitwise xor")
        return BitString(np.bitwise_xor(self.bits, other.bits))

    def __repr__(self) -> str:
        if len(self) <= 64:
            return f"BitString({self.to01()!r})"
        return f"BitString(<{len(self)} bits>)"

    def to01(self) -> str:
        return "".join("01"[b] for b in self.bits)

    @staticmethod
    def concatenate(parts) -> "BitString":
        arrays = [p.bits for p in parts]
        if not arrays:
            return BitString.zeros(0)
        return BitString(np.concatenate(arrays))


def output_length(n: int, h_min: float, epsilon: float, r: float = 1.0) -> int:
    """Extractable output length; clamps negative results to 0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= h_min <= 1.0:
        raise ValueError(f"h_min must lie in [0, 1], got {h_min}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if r < 1.0:
        raise ValueError("r must be at least 1")
    value = (h_min * n - 4.0 * math.log2(1.0 / epsilon) - 6.0) / r
    return max(0, math.floor(value))


def field_width(n: int, m: int, epsilon: float) -> int:
    """Smallest power-of-two field width with 2^s covering both the number
    of polynomial coefficients and the one-bit error budget 2m/epsilon."""
    required = math.log2(max(n, 2)) + math.log2(2.0 * max(m, 1) / epsilon)
    s = 1
    while s < required:
        s *= 2
    return s


@dataclass(frozen=True)
class ExtractorParams:
    """Resolved extraction parameters for one source block."""

    n: int
    h_min: float
    epsilon: float
    r: float
    m: int
    s: int
    t: int
    d: int

    @property
    def k(self) -> float:
        """Total min-entropy of the source in bits."""
        return self.h_min * self.n

    @property
    def passes(self) -> bool:
        return self.m >= 1

    @classmethod
    def for_source(
        cls,
        n: int,
        h_min: float,
        epsilon: float,
        r: float = 1.0,
        s: int | None = None,
    ) -> "ExtractorParams":
        """Compute the full parameter set for an (n, h_min*n) source.

        ``s`` overrides the automatic field width (must be a power of two
        that is at least the automatic minimum).
        """
        m = output_length(n, h_min, epsilon, r)
        if m == 0:
            return cls(n=n, h_min=h_min, epsilon=epsilon, r=r, m=0, s=0, t=0, d=0)
        auto = field_width(n, m, epsilon)
        if s is None:
            s = auto
        else:
            if s & (s - 1) or s < auto:
                raise ValueError(
                    f"field width {s} invalid: must be a power of two >= {auto}"
                )
        t = 2 * s
        d = len(_design_group_sizes(m, t)) * t * t if m > 1 else t
        return cls(n=n, h_min=h_min, epsilon=epsilon, r=r, m=m, s=s, t=t, d=d)


def _design_group_sizes(m: int, t: int) -> list[int]:
    """Partition m output bits into line-design groups.

    Each group lives in its own t^2-bit seed block and holds at most
    min(half the remaining bits, t^2) sets; the final group of at most t
    sets uses constant polynomials only.  This schedule is what makes the
    pairwise overlap bound sum to at most m - 1.
    """
    sizes = []
    rem = m
    while rem > t:
        g = min(rem // 2, t * t)
        sizes.append(g)
        rem -= g
    sizes.append(rem)
    return sizes


@dataclass(frozen=True)
class WeakDesign:
    """Family of seed-index sets, one per output bit.

    ``sets`` has shape (m, t): row i lists the d-domain indices feeding
    output bit i.  ``group_sizes`` records the block partition.
    """

    sets: np.ndarray
    m: int
    t: int
    d: int
    group_sizes: tuple

    def as_sets(self) -> list:
        return [frozenset(int(v) for v in row) for row in self.sets]


def weak_design(m: int, t: int, r: float = 1.0) -> WeakDesign:
    """Build the block design of polynomial-line sets over GF(t).

    Within a group, set q (with slope b = q // t and offset a = q % t)
    contains the points {(e, b*e + a) : e in GF(t)} of its seed block, laid
    out as index e*t + value.  Same-slope lines are disjoint and
    different-slope lines meet in exactly one point, which bounds the
    overlap weight sum by m - 1 < r*m.
    """
    if r != 1.0:
        raise ValueError("only overlap parameter r = 1 is supported")
    if m < 1:
        raise ValueError("m must be at least 1")
    if t < 1 or (t & (t - 1)):
        raise ValueError(f"t must be a positive power of two, got {t}")
    if m == 1:
        sets = np.arange(t, dtype=np.int64).reshape(1, t)
        return WeakDesign(sets=sets, m=1, t=t, d=t, group_sizes=(1,))

    width = t.bit_length() - 1  # t = 2^width, GF(t) elements are 0..t-1
    sizes = _design_group_sizes(m, t)
    e = np.arange(t, dtype=np.uint64)
    rows = []
    for group, g in enumerate(sizes):
        offset = group * t * t
        q = np.arange(g, dtype=np.int64)
        slopes = (q // t).astype(np.uint64)
        consts = (q % t).astype(np.uint64)
        if width:
            values = gf2.gf_mul_vec(slopes[:, None], e[None, :], width)
        else:
            values = np.zeros((g, t), dtype=np.uint64)
        values ^= consts[:, None]
        rows.append(offset + (e[None, :] * np.uint64(t) + values).astype(np.int64))
    sets = np.concatenate(rows, axis=0)
    d = len(sizes) * t * t
    return WeakDesign(sets=sets, m=m, t=t, d=d, group_sizes=tuple(sizes))


def _pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack the rows of a (rows, s) 0/1 array into uint64, MSB first."""
    rows, s = bits.shape
    if s > 64:
        raise ValueError("rows wider than 64 bits cannot be packed")
    out = np.zeros(rows, dtype=np.uint64)
    for j in range(s):
        out = (out << np.uint64(1)) | bits[:, j].astype(np.uint64)
    return out


def _source_coefficients(bits: np.ndarray, s: int) -> np.ndarray:
    """Zero-pad the source to a multiple of s and pack s-bit chunks."""
    n = bits.size
    n_chunks = -(-n // s)
    padded = np.zeros(n_chunks * s, dtype=np.uint8)
    padded[:n] = bits
    return _pack_rows(padded.reshape(n_chunks, s))


def rsh_bit(source: "BitString", seed: "BitString") -> int:
    """One output bit: Reed-Solomon evaluation then Hadamard hash.

    The seed's first half is the evaluation point alpha, the second half the
    mask beta, both s-bit field elements read MSB first.  The source is read
    as ceil(n/s) consecutive s-bit coefficients (MSB first, zero-padded at
    the end) of a polynomial evaluated at alpha by Horner's rule.
    """
    t = len(seed)
    if t == 0 or t % 2:
        raise ValueError(f"seed length must be positive and even, got {t}")
    s = t // 2
    n = len(source)
    if n < 1:
        raise ValueError("source must contain at least one bit")
    if (1 << s) < n:
        raise ValueError(f"field width {s} too small for {n} source bits")

    def pack(bits) -> int:
        value = 0
        for b in bits:
            value = (value << 1) | int(b)
        return value

    alpha = pack(seed.bits[:s])
    beta = pack(seed.bits[s:])
    poly = gf2.modulus(s)
    y = 0
    for i in range(-(-n // s) - 1, -1, -1):
        chunk = source.bits[i * s : (i + 1) * s]
        c = pack(chunk) << (s - chunk.size)  # zero-pad the trailing chunk
        y = gf2.gf_mul(y, alpha, s, poly) ^ c
    return (y & beta).bit_count() & 1


def _seed_points(seed_bits: np.ndarray, design: WeakDesign, s: int):
    """Per-output-bit (alpha, beta) field elements gathered from the seed."""
    gathered = seed_bits[design.sets]  # (m, t)
    alpha = _pack_rows(gathered[:, :s])
    beta = _pack_rows(gathered[:, s:])
    return alpha, beta


def _extract_blocks(coeffs: np.ndarray, alpha: np.ndarray, beta: np.ndarray, s: int) -> np.ndarray:
    """Vectorized Horner evaluation + Hadamard bit for stacked blocks.

    ``coeffs`` has shape (blocks, chunks); ``alpha``/``beta`` have shape
    (m,).  Returns a (blocks, m) 0/1 array.
    """
    n_blocks, n_chunks = coeffs.shape
    acc = np.zeros((n_blocks, alpha.size), dtype=np.uint64)
    for i in range(n_chunks - 1, -1, -1):
        acc = gf2.gf_mul_vec(acc, alpha[None, :], s)
        acc ^= coeffs[:, i][:, None]
    return (np.bitwise_count(acc & beta[None, :]) & np.uint64(1)).astype(np.uint8)


def extract(source: "BitString", seed: "BitString", params: ExtractorParams) -> "BitString":
    """Full Trevisan extraction of one source block.

    Output bit i is ``rsh_bit(source, seed restricted to set i)`` of the
    weak design; the computation below is the vectorized equivalent.  The
    seed is only read, never consumed.
    """
    if not params.passes:
        raise ValueError("parameters do not pass (m < 1); nothing to extract")
    if len(source) != params.n:
        raise ValueError(f"source has {len(source)} bits, expected n = {params.n}")
    if len(seed) != params.d:
        raise ValueError(f"seed has {len(seed)} bits, expected d = {params.d}")
    design = weak_design(params.m, params.t)
    if params.s <= 64:
        alpha, beta = _seed_points(seed.bits, design, params.s)
        coeffs = _source_coefficients(source.bits, params.s)
        out = _extract_blocks(coeffs[None, :], alpha, beta, params.s)
        return BitString(out[0])
    # Wide-field fallback: per-bit scalar evaluation.
    bits = [rsh_bit(source, seed[design.sets[i]]) for i in range(params.m)]
    return BitString(np.array(bits, dtype=np.uint8))


@dataclass(frozen=True)
class BlockExtractionResult:
    bits: "BitString"
    params: ExtractorParams
    n_blocks: int
    discarded_bits: int


def block_extract(
    raw: "BitString",
    seed: "BitString",
    h_min: float,
    epsilon: float,
    block_bits: int = 160_000,
    r: float = 1.0,
    s: int | None = None,
) -> BlockExtractionResult:
    """Extract a long raw stream in fixed-size blocks with one reused seed.

    The raw string is cut into ``floor(len(raw) / block_bits)`` full blocks;
    a trailing partial block is discarded (padding would dilute the entropy
    rate).  Every block uses the same parameters and the same seed — the
    strong-extractor property is what makes seed reuse sound.
    """
    if block_bits < 1:
        raise ValueError("block_bits must be positive")
    n_blocks = len(raw) // block_bits
    if n_blocks == 0:
        raise ValueError(
            f"raw stream of {len(raw)} bits is shorter than one {block_bits}-bit block"
        )
    params = ExtractorParams.for_source(block_bits, h_min, epsilon, r=r, s=s)
    if not params.passes:
        raise ValueError(
            "parameters do not pass (m < 1) at "
            f"block_bits={block_bits}, h_min={h_min}, epsilon={epsilon}"
        )
    if len(seed) != params.d:
        raise ValueError(f"seed has {len(seed)} bits, expected d = {params.d}")
    discarded = len(raw) - n_blocks * block_bits
    used = raw.bits[: n_blocks * block_bits].reshape(n_blocks, block_bits)

    if params.s <= 64:
        design = weak_design(params.m, params.t)
        alpha, beta = _seed_points(seed.bits, design, params.s)
        n_chunks = -(-block_bits // params.s)
        coeffs = np.zeros((n_blocks, n_chunks), dtype=np.uint64)
        for b in range(n_blocks):
            coeffs[b] = _source_coefficients(used[b], params.s)
        out = _extract_blocks(coeffs, alpha, beta, params.s).ravel()
        bits = BitString(out)
    else:
        parts = [extract(BitString(row), seed, params) for row in used]
        bits = BitString.concatenate(parts)
    return BlockExtractionResult(
        bits=bits, params=params, n_blocks=n_blocks, discarded_bits=discarded
    )


def generate_seed(d: int, rng_seed: int) -> "BitString":
    """Pseudorandom seed for simulation runs.

    A deployed protocol needs genuinely uniform seed bits from an
    independent source; this helper exists so simulated pipelines are
    self-contained and reproducible.
    """
    rng = np.random.default_rng([rng_seed, 3])
    return BitString(rng.integers(0, 2, size=d, dtype=np.uint8))


# ---------------------------------------------------------------------------
# Bit files: 8-byte little-endian bit count, then packed bytes MSB-first.


def save_bits(bits: "BitString", path):
    with open(path, "wb") as fh:
        fh.write(len(bits).to_bytes(8, "little"))
        fh.write(np.packbits(bits.bits).tobytes())


def load_bits(path) -> "BitString":
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated bit-count header")
        count = int.from_bytes(header, "little")
        body = fh.read()
    expected = -(-count // 8)
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, found {len(body)}")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8))[:count]
    return BitString(bits)


def ingest_seed(path, d: int) -> "BitString":
    """Read seed material from a bit file; requires at least d bits."""
    bits = load_bits(path)
    if len(bits) < d:
        raise ValueError(f"{path}: seed file holds {len(bits)} bits, need {d}")
    return bits[:d]


def params_report(params: ExtractorParams) -> str:
    """Plain-text echo of the resolved parameter set."""
    lines = [
        f"n {params.n}",
        f"k {params.k:.6g}",
        f"h_min {params.h_min:.17g}",
        f"epsilon {params.epsilon:.17g}",
        f"r {params.r:.17g}",
        f"s {params.s}",
        f"t {params.t}",
        f"d {params.d}",
        f"m {params.m}",
        f"passes {'yes' if params.passes else 'no'}",
    ]
    return "\n".join(lines) + "\n"
