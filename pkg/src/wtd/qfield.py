"""Exact arithmetic in a real quadratic field ``Q(sqrt(D))``.

Self-similar IETs have lengths in such a field; exact arithmetic keeps the
Rauzy-Veech induction on its periodic path, which floats cannot do for long.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational

_PATTERN = re.compile(
    r"^\s*(?P<a>[+-]?\s*\d+(?:/\d+)?)?\s*"
    r"(?:(?P<sign>[+-])?\s*(?:(?P<b>\d+(?:/\d+)?)\s*\*\s*)?sqrt\(\s*(?P<D>\d+)\s*\))?\s*$"
)


class Quad:
    """``a + b*sqrt(D)`` with rational ``a``, ``b`` and square-free ``D > 1``."""

    __slots__ = ("a", "b", "D")

    def __init__(self, a, b=0, D: int = 2):
        D = int(D)
        if D < 2:
            raise ValueError("D must be >= 2")
        b = Fraction(b)
        # pull square factors out of D
        f = 2
        while f * f <= D:
            while D % (f * f) == 0:
                D //= f * f
                b *= f
            f += 1
        if D == 1:
            a, b, D = Fraction(a) + b, Fraction(0), 2
        self.a = Fraction(a)
        self.b = b
        self.D = D

    @classmethod
    def parse(cls, text: str) -> "Quad":
        """Parse ``"a+b*sqrt(D)"``; ``a``, ``b`` are integers or ``p/q``."""
        m = _PATTERN.match(text)
        if not m or (m.group("a") is None and m.group("D") is None):
            raise ValueError(f"not a quadratic number: {text!r}")
        a = Fraction(m.group("a").replace(" ", "")) if m.group("a") else Fraction(0)
        if m.group("D") is None:
            return cls(a, 0)
        b = Fraction(m.group("b")) if m.group("b") else Fraction(1)
        if m.group("sign") == "-":
            b = -b
        elif m.group("sign") is None and m.group("a") is not None:
            raise ValueError(f"missing sign before sqrt in {text!r}")
        return cls(a, b, int(m.group("D")))

    def _lift(self, other) -> "Quad | None":
        if isinstance(other, Quad):
            if other.b and self.b and other.D != self.D:
                raise ValueError("mixed quadratic fields")
            return other
        if isinstance(other, (int, Rational)):
            return Quad(other, 0, self.D)
        return None

    def _field(self, other: "Quad") -> int:
        return self.D if self.b else other.D

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) + other
        return Quad(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self):
        return Quad(-self.a, -self.b, self.D)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) - other
        return Quad(self.a - o.a, self.b - o.b, self._field(o))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) * other
        D = self._field(o)
        return Quad(self.a * o.a + self.b * o.b * D, self.a * o.b + self.b * o.a, D)

    __rmul__ = __mul__

    def conjugate(self) -> "Quad":
        return Quad(self.a, -self.b, self.D)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.D

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) / other
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero")
        c = o.conjugate()
        num = self * c
        return Quad(num.a / n, num.b / n, num.D)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return other / float(self)
        return o / self

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        # opposite signs: compare a^2 with b^2 D
        d = self.a * self.a - self.b * self.b * self.D
        return sa if d > 0 else -sa

    def __floor__(self) -> int:
        # isqrt gives an exact floor of b*sqrt(D) after scaling
        q = self.a.denominator * self.b.denominator
        num_a = self.a * q
        num_b = self.b * q
        s = math.isqrt(int(num_b * num_b * self.D))
        s = s if num_b >= 0 else -s
        guess = (int(num_a) + s) // int(q)
        # correct the estimate by exact comparison
        while self - guess < 0:
            guess -= 1
        while self - (guess + 1) >= 0:
            guess += 1
        return guess

    def __floordiv__(self, other):
        return math.floor(self / other)

    def __rfloordiv__(self, other):
        return math.floor(other / self)

    def _cmp(self, other) -> int:
        o = self._lift(other)
        if o is None:
            f = float(self)
            return (f > other) - (f < other)
        return (self - o).sign()

    def __eq__(self, other):
        o = self._lift(other) if not isinstance(other, float) else None
        if o is None:
            return NotImplemented if not isinstance(other, float) else float(self) == other
        return self.a == o.a and (self.b == o.b) and (self.b == 0 or self.D == o.D)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self.a) if self.b == 0 else hash((self.a, self.b, self.D))

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.D)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        s = "-" if self.b < 0 else "+"
        b = abs(self.b)
        bs = "" if b == 1 else f"{b}*"
        head = "" if self.a == 0 and s == "+" else str(self.a) if self.a else ""
        return f"{head}{s if head or s == '-' else ''}{bs}sqrt({self.D})"

    def __repr__(self):
        return f"Quad({str(self)!r})"
