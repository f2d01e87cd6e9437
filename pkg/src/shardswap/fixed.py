"""Fixed-point amounts backed by Python ints.

Every quantity in the engine is an ``int`` counting units of 10**-12 of an
asset. Decimal is only used at the I/O boundary (parsing scenario files,
printing, serialising traces).
"""
from __future__ import annotations

from decimal import MAX_PREC, ROUND_DOWN, ROUND_HALF_UP, Context, Decimal, InvalidOperation, localcontext

DIGITS = 12
SCALE = 10**DIGITS

Amount = int  # units of 10**-12

_QUANT = Decimal(1).scaleb(-DIGITS)
# exact arithmetic: the default 28-digit context would round large amounts
_EXACT = Context(prec=MAX_PREC, Emax=MAX_PREC, Emin=-MAX_PREC)


def to_units(value: str | int | Decimal) -> Amount:
    """Parse a decimal quantity into integer units, truncating extra digits toward zero.

    Ints are whole asset quantities (``to_units(20) == 20 * SCALE``). Floats are
    refused: they would silently inject binary noise into exact state.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"refusing {type(value).__name__} amount {value!r}; pass a str or Decimal")
    try:
        d = Decimal(value) if not isinstance(value, Decimal) else value
    except InvalidOperation as exc:
        raise ValueError(f"not a decimal amount: {value!r}") from exc
    if not d.is_finite():
        raise ValueError(f"not a finite amount: {value!r}")
    with localcontext(_EXACT):
        return int(d.quantize(_QUANT, rounding=ROUND_DOWN).scaleb(DIGITS))


def to_decimal(units: Amount) -> Decimal:
    return Decimal(units).scaleb(-DIGITS)


def fmt(units: Amount) -> str:
    """Canonical string with exactly 12 fractional digits (used in traces)."""
    sign = "-" if units < 0 else ""
    q, r = divmod(abs(units), SCALE)
    return f"{sign}{q}.{r:0{DIGITS}d}"


def fmt2(units: Amount, places: int = 2) -> str:
    """Display rounding, half-up, for human summaries."""
    with localcontext(_EXACT):
        return str(to_decimal(units).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def mul_frac(units: Amount, num: int, den: int = SCALE) -> Amount:
    """``units * num / den`` rounded toward zero (all operands non-negative)."""
    return units * num // den
