"""Arithmetic over GF(2^8), the coefficient field for all coded packets.

Field elements are integers in [0, 255]. Addition is XOR; multiplication is
carry-less polynomial multiplication reduced modulo

    x^8 + x^4 + x^3 + x^2 + 1   (0x11D)

with 2 as generator. The polynomial is a project-wide constant: any
irreducible degree-8 polynomial yields a valid field, but interoperating
implementations must agree on this one.

Scalar functions use log/antilog tables. Bulk helpers operate on numpy uint8
arrays through a precomputed 256x256 product table, which is what the encoder
and decoder use for payload-sized operands.
"""

import numpy as np

#: Reduction polynomial, including the x^8 term.
POLYNOMIAL = 0x11D

_EXP = np.zeros(512, dtype=np.uint8)  # doubled so log sums need no modulo
_LOG = np.zeros(256, dtype=np.int32)

_x = 1
for _i in range(255):
    _EXP[_i] = _x
    _LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= POLYNOMIAL
_EXP[255:510] = _EXP[:255]

#: MUL_TABLE[a, b] == product of a and b. 64 KiB, stays cache-resident.
MUL_TABLE = np.zeros((256, 256), dtype=np.uint8)
_nz = np.arange(1, 256)
MUL_TABLE[1:, 1:] = _EXP[_LOG[_nz][:, None] + _LOG[_nz][None, :]]

_INV = np.zeros(256, dtype=np.uint8)
_INV[1:] = _EXP[255 - _LOG[_nz]]

del _x, _i, _nz


def gf_add(a: int, b: int) -> int:
    """Field addition (identical to subtraction): bitwise XOR."""
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    """Field multiplication of two scalars."""
    return int(MUL_TABLE[a, b])


def gf_inv(a: int) -> int:
    """Multiplicative inverse. Zero has none."""
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse in GF(2^8)")
    return int(_INV[a])


def gf_mul_bytes(c: int, v: np.ndarray) -> np.ndarray:
    """Multiply every byte of ``v`` by the scalar ``c``. Returns a new array."""
    return MUL_TABLE[c][v]


def gf_combine(coeffs: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Linear combination sum_i coeffs[i] * block[i] over the field.

    ``coeffs`` has shape (k,), ``block`` shape (k, n); the result has shape
    (n,). One table gather plus an XOR reduction, no Python-level loop.
    """
    prods = MUL_TABLE[coeffs[:, None], block]
    return np.bitwise_xor.reduce(prods, axis=0)
