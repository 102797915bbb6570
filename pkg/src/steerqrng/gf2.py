"""Arithmetic in the binary fields GF(2^w).

Field elements are integers whose bits are the coefficients of a polynomial
over GF(2); addition is XOR and multiplication is carry-less polynomial
multiplication reduced by a fixed irreducible polynomial.  The moduli for
common widths come from the table below (standard low-weight choices, e.g.
x^8 + x^4 + x^3 + x + 1 for w = 8); ``is_irreducible`` can verify any entry
and ``find_irreducible`` searches for trinomials/pentanomials at widths the
table does not cover.

Two multiplication paths exist: a scalar shift-and-xor on Python ints (any
width) and a vectorized numpy ``uint64`` path (width <= 64) used by the
extractor's batched polynomial evaluation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

#: Irreducible polynomial (including the x^w term) per field width.
IRREDUCIBLE = {
    1: 0b11,              # x + 1
    2: 0b111,             # x^2 + x + 1
    3: 0b1011,            # x^3 + x + 1
    4: 0b10011,           # x^4 + x + 1
    5: 0b100101,          # x^5 + x^2 + 1
    6: 0b1000011,         # x^6 + x + 1
    7: 0b10000011,        # x^7 + x + 1
    8: 0b100011011,       # x^8 + x^4 + x^3 + x + 1
    16: (1 << 16) | 0b101011,             # x^16 + x^5 + x^3 + x + 1
    32: (1 << 32) | 0b10001101,           # x^32 + x^7 + x^3 + x^2 + 1
    64: (1 << 64) | 0b11011,              # x^64 + x^4 + x^3 + x + 1
}


def _clmul(a: int, b: int) -> int:
    """Carry-less product of two polynomials over GF(2)."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        a <<= 1
        b >>= 1
    return result


def _polymod(a: int, modulus: int) -> int:
    """Remainder of polynomial division over GF(2)."""
    deg_m = modulus.bit_length() - 1
    while a.bit_length() - 1 >= deg_m:
        a ^= modulus << (a.bit_length() - 1 - deg_m)
    return a


def _polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _polymod(a, b)
    return a


def _poly_sqr_mod(a: int, modulus: int) -> int:
    return _polymod(_clmul(a, a), modulus)


def _prime_factors(n: int) -> list[int]:
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            factors.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        factors.append(n)
    return factors


def is_irreducible(poly: int, width: int) -> bool:
    """Rabin's test: poly of degree ``width`` is irreducible over GF(2) iff
    x^(2^width) == x (mod poly) and gcd(x^(2^(width/q)) - x, poly) = 1 for
    every prime divisor q of width."""
    if poly.bit_length() - 1 != width:
        return False
    x = _polymod(0b10, poly)
    # x^(2^k) mod poly by repeated squaring of x.
    powers = [x]
    acc = x
    for _ in range(width):
        acc = _poly_sqr_mod(acc, poly)
        powers.append(acc)
    if powers[width] != x:
        return False
    for q in _prime_factors(width):
        if _polygcd(powers[width // q] ^ x, poly) != 1:
            return False
    return True


def find_irreducible(width: int) -> int:
    """Search for a low-weight irreducible polynomial of the given degree."""
    if width < 1:
        raise ValueError("width must be positive")
    if width == 1:
        return 0b11  # x + 1: degree-1 polynomials have no middle term
    top = 1 << width
    # Trinomials x^w + x^k + 1 first, then pentanomials.
    for k in range(1, width):
        cand = top | (1 << k) | 1
        if is_irreducible(cand, width):
            return cand
    for k3 in range(3, width):
        for k2 in range(2, k3):
            for k1 in range(1, k2):
                cand = top | (1 << k3) | (1 << k2) | (1 << k1) | 1
                if is_irreducible(cand, width):
                    return cand
    raise ValueError(f"no low-weight irreducible polynomial found for width {width}")


@lru_cache(maxsize=None)
def modulus(width: int) -> int:
    """The module's irreducible polynomial for GF(2^width)."""
    if width in IRREDUCIBLE:
        return IRREDUCIBLE[width]
    return find_irreducible(width)


def gf_mul(a: int, b: int, width: int, poly: int | None = None) -> int:
    """Product in GF(2^width)."""
    if poly is None:
        poly = modulus(width)
    return _polymod(_clmul(a, b), poly)


def gf_pow(a: int, exponent: int, width: int, poly: int | None = None) -> int:
    """Power in GF(2^width) by square-and-multiply."""
    if exponent < 0:
        raise ValueError("exponent must be non-negative")
    if poly is None:
        poly = modulus(width)
    result = 1
    base = a
    while exponent:
        if exponent & 1:
            result = gf_mul(result, base, width, poly)
        base = gf_mul(base, base, width, poly)
        exponent >>= 1
    return result


def gf_inv(a: int, width: int, poly: int | None = None) -> int:
    """Multiplicative inverse via a^(2^width - 2)."""
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(2^w)")
    return gf_pow(a, (1 << width) - 2, width, poly)


def gf_mul_vec(a: np.ndarray, b: np.ndarray, width: int, poly: int | None = None) -> np.ndarray:
    """Element-wise GF(2^width) product of uint64 arrays (width <= 64).

    Shift-and-xor over the ``width`` bit positions of ``b``; each doubling of
    the accumulated multiplicand is reduced immediately, so intermediate
    values stay inside ``width`` bits (modulo the natural uint64 wrap when
    width = 64, where the dropped bit is exactly the one being reduced).
    """
    if width > 64:
        raise ValueError("vectorized path supports widths up to 64")
    if poly is None:
        poly = modulus(width)
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    mask = np.uint64((1 << width) - 1) if width < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    # Low part of the modulus: poly - x^width, which is what gets XORed in
    # when a shifted value overflows the field.
    poly_low = np.uint64(poly ^ (1 << width))
    top_bit = np.uint64(1 << (width - 1))
    one = np.uint64(1)

    result = np.zeros(np.broadcast(a, b).shape, dtype=np.uint64)
    shifted = np.broadcast_to(a, result.shape).copy()
    bb = np.broadcast_to(b, result.shape).copy()
    for _ in range(width):
        np.bitwise_xor(result, np.where(bb & one != 0, shifted, np.uint64(0)), out=result)
        carry = (shifted & top_bit) != 0
        shifted = (shifted << one) & mask
        np.bitwise_xor(shifted, np.where(carry, poly_low, np.uint64(0)), out=shifted)
        bb >>= one
    return result
