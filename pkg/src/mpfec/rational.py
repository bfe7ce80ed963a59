"""Exact rational handling for configuration numbers.

Code rates and buffer formulas must be reproducible bit-for-bit, so values
that arrive as decimal text or Python floats ("0.78", 0.01) are interpreted
as the decimal the user wrote rather than the underlying binary float.
"""

import math
from fractions import Fraction


def as_fraction(x) -> Fraction:
    """Convert a number to an exact Fraction.

    Floats go through their shortest decimal repr, so as_fraction(0.78)
    is 39/50, not the 56-bit binary neighbour.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite number: {x!r}")
        return Fraction(str(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


def exact_ceil(x) -> int:
    return math.ceil(as_fraction(x))


def exact_floor(x) -> int:
    return math.floor(as_fraction(x))
