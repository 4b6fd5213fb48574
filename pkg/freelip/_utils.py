"""Utils used across freelip."""

import math


def floor_exponent(value: float) -> int:
    """
    Return the integer m with 2^m <= value < 2^(m+1).
    """
    if value <= 0:
        raise ValueError(f"expected a positive value, got {value!r}")
    _, exponent = math.frexp(value)
    return exponent - 1


def ceil_exponent(value: float) -> int:
    """
    Return the integer m with 2^(m-1) < value <= 2^m.
    """
    if value <= 0:
        raise ValueError(f"expected a positive value, got {value!r}")
    mantissa, exponent = math.frexp(value)
    return exponent - 1 if mantissa == 0.5 else exponent


def format_float(value: float) -> str:
    """
    Shortest representation that round-trips to the same 64-bit float (never more than 17 significant digits).
    """
    return repr(float(value))
