"""Exact rational literals: parsing, bounds checking and rendering.

Probabilities and values are :class:`fractions.Fraction` throughout; this
module only deals with getting them in and out of text.
"""

from __future__ import annotations

import re
from decimal import Decimal, localcontext
from fractions import Fraction

DEFAULT_MAX_BITS = 64
MAX_FRACTION_DIGITS = 9

_LITERAL_RE = re.compile(
    r"""^(?P<sign>[+-])?
        (?:
            (?P<num>\d+)/(?P<den>\d+)
          | (?P<int>\d+)(?:\.(?P<frac>\d*))?
          | \.(?P<frac_only>\d+)
        )$""",
    re.VERBOSE,
)


def parse_rational(text: str, max_bits: int = DEFAULT_MAX_BITS, signed: bool = False) -> Fraction:
    """Convert an integer, ``a/b`` or bounded decimal literal to a Fraction.

    Raises ValueError on malformed literals, zero denominators, more than
    nine fractional digits, a sign when ``signed`` is false, or when the
    reduced numerator or denominator needs more than ``max_bits`` bits.
    """
    m = _LITERAL_RE.match(text.strip())
    if m is None:
        raise ValueError(f"malformed rational literal {text!r}")
    if m.group("sign") and not signed:
        raise ValueError(f"signed literal {text!r} not allowed here")
    if m.group("num") is not None:
        den = int(m.group("den"))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        value = Fraction(int(m.group("num")), den)
    else:
        whole = m.group("int") or "0"
        frac = m.group("frac") if m.group("int") is not None else m.group("frac_only")
        frac = frac or ""
        if len(frac) > MAX_FRACTION_DIGITS:
            raise ValueError(
                f"decimal literal {text!r} has more than {MAX_FRACTION_DIGITS} fractional digits"
            )
        value = Fraction(int(whole + frac), 10 ** len(frac))
    if m.group("sign") == "-":
        value = -value
    bits = max(abs(value.numerator).bit_length(), value.denominator.bit_length())
    if bits > max_bits:
        raise ValueError(f"literal {text!r} exceeds the {max_bits}-bit bound")
    return value


def parse_probability(text: str, max_bits: int = DEFAULT_MAX_BITS) -> Fraction:
    value = parse_rational(text, max_bits=max_bits, signed=True)
    if not 0 <= value <= 1:
        raise ValueError(f"probability out of range: {text}")
    return value


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_decimal(q: Fraction, precision: int = 6) -> str:
    """Round ``q`` half-to-even at ``precision`` digits. Cosmetic only."""
    q = Fraction(q)
    digits = len(str(abs(q.numerator) // q.denominator)) + precision + 5
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(q.numerator) / Decimal(q.denominator)
        return str(d.quantize(Decimal(1).scaleb(-precision)))
