"""Exact rational weights with a first-order infinitesimal part.

A :class:`Weight` is the value ``a + b*eps`` in the limit ``eps -> 0+``.
Both parts are :class:`fractions.Fraction`.  Ordering is lexicographic on
``(a, b)``, arithmetic follows dual-number rules truncated after the first
order term.  The infinitesimal part is what lets a group of hypotheses hold
back its level until every member is rejected, without a magic constant.
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
import math
from numbers import Rational

__all__ = ["Weight", "to_fraction", "format_weight", "parse_weight", "ZERO", "ONE", "EPS"]


def to_fraction(value) -> Fraction:
    """Convert ``value`` to a Fraction without going through binary floats.

    Strings are parsed as ``"p/q"`` or decimal literals (``"0.0031"``,
    ``"6.5e-6"``).  Floats go through their shortest round-trip decimal
    form, so ``0.05`` becomes ``1/20`` rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty number")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational: {value!r}") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


class Weight:
    """``a + b*eps`` with exact rational parts, ``eps`` infinitesimal."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = a if type(a) is Fraction else to_fraction(a)
        self.b = b if type(b) is Fraction else to_fraction(b)

    @classmethod
    def _raw(cls, a: Fraction, b: Fraction) -> "Weight":
        obj = object.__new__(cls)
        obj.a = a
        obj.b = b
        return obj

    @classmethod
    def coerce(cls, value) -> "Weight":
        if isinstance(value, Weight):
            return value
        return cls._raw(to_fraction(value), _F0)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Weight):
            if isinstance(other, (int, Fraction)):
                return Weight._raw(self.a + other, self.b)
            return NotImplemented
        return Weight._raw(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Weight):
            if isinstance(other, (int, Fraction)):
                return Weight._raw(self.a - other, self.b)
            return NotImplemented
        return Weight._raw(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return Weight._raw(other - self.a, -self.b)
        return NotImplemented

    def __neg__(self):
        return Weight._raw(-self.a, -self.b)

    def __mul__(self, other):
        if not isinstance(other, Weight):
            if isinstance(other, (int, Fraction)):
                return Weight._raw(self.a * other, self.b * other)
            return NotImplemented
        if not self.b and not other.b:
            return Weight._raw(self.a * other.a, _F0)
        return Weight._raw(self.a * other.a, self.a * other.b + self.b * other.a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Weight):
            if isinstance(other, (int, Fraction)):
                if other == 0:
                    raise ZeroDivisionError("Weight division by zero")
                return Weight._raw(self.a / other, self.b / other)
            return NotImplemented
        if other.a:
            if not self.b and not other.b:
                return Weight._raw(self.a / other.a, _F0)
            return Weight._raw(
                self.a / other.a,
                (self.b * other.a - self.a * other.b) / (other.a * other.a),
            )
        if other.b:
            # purely infinitesimal divisor: only an infinitesimal numerator
            # has a finite limit; its own eps-term would need second order
            if self.a:
                raise ZeroDivisionError("finite / infinitesimal is unbounded")
            return Weight._raw(self.b / other.b, _F0)
        raise ZeroDivisionError("Weight division by zero")

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Weight._raw(Fraction(other), _F0) / self
        return NotImplemented

    # -- ordering ---------------------------------------------------------

    def _key(self, other):
        if isinstance(other, Weight):
            return other.a, other.b
        if isinstance(other, (int, Fraction)):
            return other, 0
        if isinstance(other, float):
            return Fraction(other), 0
        return None

    def __eq__(self, other):
        k = self._key(other)
        if k is None:
            return NotImplemented
        return self.a == k[0] and self.b == k[1]

    def __lt__(self, other):
        k = self._key(other)
        if k is None:
            return NotImplemented
        return self.a < k[0] or (self.a == k[0] and self.b < k[1])

    def __le__(self, other):
        k = self._key(other)
        if k is None:
            return NotImplemented
        return self.a < k[0] or (self.a == k[0] and self.b <= k[1])

    def __gt__(self, other):
        k = self._key(other)
        if k is None:
            return NotImplemented
        return self.a > k[0] or (self.a == k[0] and self.b > k[1])

    def __ge__(self, other):
        k = self._key(other)
        if k is None:
            return NotImplemented
        return self.a > k[0] or (self.a == k[0] and self.b >= k[1])

    def __hash__(self):
        if not self.b:
            return hash(self.a)
        return hash((self.a, self.b))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __float__(self):
        return float(self.a)

    # -- misc -------------------------------------------------------------

    @property
    def limit(self) -> Fraction:
        """The ``eps -> 0`` value."""
        return self.a

    @property
    def is_finite_part_zero(self) -> bool:
        return not self.a

    def __repr__(self):
        if not self.b:
            return f"Weight({str(self.a)!r})"
        return f"Weight({str(self.a)!r}, {str(self.b)!r})"

    def __str__(self):
        return format_weight(self)


_F0 = Fraction(0)
ZERO = Weight._raw(Fraction(0), Fraction(0))
ONE = Weight._raw(Fraction(1), Fraction(0))
EPS = Weight._raw(Fraction(0), Fraction(1))


def format_weight(w: Weight) -> str:
    """Render as ``"p/q"``, ``"p/q+r/sε"`` or ``"r/sε"``."""
    if not w.b:
        return str(w.a)
    if abs(w.b) == 1:
        eps = "ε"
    else:
        eps = f"{abs(w.b)}ε"
    if not w.a:
        return eps if w.b > 0 else "-" + eps
    sign = "+" if w.b > 0 else "-"
    return f"{w.a}{sign}{eps}"


def parse_weight(text) -> Weight:
    """Parse the output of ``str(Weight)`` or any exact rational literal."""
    if isinstance(text, Weight):
        return text
    if not isinstance(text, str):
        return Weight.coerce(text)
    s = text.strip().replace("eps", "ε")
    if "ε" not in s:
        return Weight._raw(to_fraction(s), _F0)
    body = s[: s.index("ε")]
    if s[s.index("ε") + 1:].strip():
        raise ValueError(f"not a weight: {text!r}")
    # split the eps coefficient from the finite part at the last +/- that
    # is not an exponent sign
    cut = -1
    for i in range(len(body) - 1, 0, -1):
        if body[i] in "+-" and body[i - 1] not in "eE":
            cut = i
            break
    if cut == -1:
        a_txt, b_txt = "", body
    else:
        a_txt, b_txt = body[:cut], body[cut:]
    b_txt = b_txt.strip()
    if b_txt in ("", "+"):
        b = Fraction(1)
    elif b_txt == "-":
        b = Fraction(-1)
    else:
        b = to_fraction(b_txt.replace(" ", ""))
    a = to_fraction(a_txt) if a_txt.strip() else _F0
    return Weight._raw(a, b)
