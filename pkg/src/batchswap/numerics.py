"""Exact rational arithmetic and directed-rounding square roots.

Every quantity in the engine is a rational number. The type used is
``gmpy2.mpq`` when gmpy2 is importable and :class:`fractions.Fraction`
otherwise; both compare and hash consistently with each other and with
``int``. The only irrational operation the engine needs is the square root
used for rate-capped execution, and it is always rounded in a stated
direction with a bounded error.
"""

from __future__ import annotations

import math
import os
import re
from fractions import Fraction
from typing import Union

try:  # pragma: no cover - exercised implicitly by whichever branch is active
    if os.environ.get("BATCHSWAP_PURE_RATIONAL"):
        raise ImportError
    import gmpy2

    Q = gmpy2.mpq
    _isqrt = gmpy2.isqrt
    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover
    gmpy2 = None
    Q = Fraction
    _isqrt = math.isqrt
    HAVE_GMPY2 = False

Rational = Union[int, Fraction, "Q"]

DEFAULT_EPS = Q(1, 2**64)

_DECIMAL_RE = re.compile(r"^\s*([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?\s*$")


class DomainError(ValueError):
    """Raised when an operation is applied outside its mathematical domain."""


def to_q(value) -> Q:
    """Convert ``int``, ``Fraction``, ``mpq`` or a string to the engine rational.

    Strings may be ``"p/q"`` or decimal (``"1.25"``, ``"3e-2"``). Floats are
    rejected: a float almost never denotes the value its author meant.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Q):
        return value
    if isinstance(value, int):
        return Q(value)
    if isinstance(value, Fraction):
        return Q(value.numerator, value.denominator)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a string or Fraction")
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return Q(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def parse_rational(text: str) -> Q:
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            n, d = int(num), int(den)
        except ValueError:
            raise ValueError(f"malformed rational {text!r}") from None
        if d == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        return Q(n, d)
    m = _DECIMAL_RE.match(text)
    if m is None or (not m.group(2) and not m.group(3)):
        raise ValueError(f"malformed rational {text!r}")
    sign, whole, frac, exp = m.groups()
    frac = frac or ""
    n = int((whole or "0") + frac)
    e = (int(exp) if exp else 0) - len(frac)
    value = Q(n * 10**e) if e >= 0 else Q(n, 10**-e)
    return -value if sign == "-" else value


def format_rational(q) -> str:
    """Render as ``"p"`` for integers and ``"p/q"`` otherwise."""
    q = to_q(q)
    num, den = int(q.numerator), int(q.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


def format_decimal(q, digits: int = 18) -> str:
    """Display-only decimal rendering, truncated toward zero."""
    q = to_q(q)
    num, den = int(q.numerator), int(q.denominator)
    sign = "-" if num < 0 else ""
    num = abs(num)
    whole, rem = divmod(num, den)
    frac = (rem * 10**digits) // den
    text = f"{sign}{whole}.{frac:0{digits}d}".rstrip("0")
    return text[:-1] if text.endswith(".") else text


def precision_bits(eps) -> int:
    """Smallest k with 2**-k <= eps."""
    eps = to_q(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    num, den = int(eps.numerator), int(eps.denominator)
    # 2**k >= den/num
    k = max(0, (den // num).bit_length() - 1)
    while Q(1, 2**k) > eps:
        k += 1
    return k


def _scaled_isqrt(q: Q, k: int) -> tuple[int, bool]:
    num, den = int(q.numerator), int(q.denominator)
    scaled, rem = divmod(num << (2 * k), den)
    root = int(_isqrt(scaled))
    return root, rem == 0 and root * root == scaled


def _exact_sqrt(q: Q):
    num, den = int(q.numerator), int(q.denominator)
    rn, rd = int(_isqrt(num)), int(_isqrt(den))
    if rn * rn == num and rd * rd == den:
        return Q(rn, rd)
    return None


def sqrt_lower(q, eps=DEFAULT_EPS) -> Q:
    """Rational s with s <= sqrt(q) < s + eps; exact for rational squares."""
    q = to_q(q)
    if q < 0:
        raise DomainError(f"square root of negative value {q}")
    exact = _exact_sqrt(q)
    if exact is not None:
        return exact
    k = precision_bits(eps)
    root, _ = _scaled_isqrt(q, k)
    return Q(root, 2**k)


def sqrt_upper(q, eps=DEFAULT_EPS) -> Q:
    """Rational s with s - eps < sqrt(q) <= s; exact for rational squares."""
    q = to_q(q)
    if q < 0:
        raise DomainError(f"square root of negative value {q}")
    exact = _exact_sqrt(q)
    if exact is not None:
        return exact
    k = precision_bits(eps)
    root, _ = _scaled_isqrt(q, k)
    return Q(root + 1, 2**k)
