"""Number formatting shared by the CLI and the bench CSVs."""
from __future__ import annotations

from fractions import Fraction

SIG_DIGITS = 12


def real(x) -> str:
    """Twelve significant digits, `inf` for infinity."""
    x = float(x)
    if x == float("inf"):
        return "inf"
    out = format(x, f".{SIG_DIGITS}g")
    return "0" if out == "-0" else out


def exact(x) -> str:
    """Decimal rendering, followed by p/q when the value is a non-integer rational."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{real(x)} ({x.numerator}/{x.denominator})"
    if isinstance(x, int):
        return str(x)
    return real(x)
