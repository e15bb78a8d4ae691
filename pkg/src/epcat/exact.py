"""Exact scalars: rationals via :class:`fractions.Fraction` and Gaussian rationals.

Arithmetic between the two is closed; any result whose imaginary part is
zero collapses back to a plain ``Fraction`` so that real polynomials stay
real without extra bookkeeping.
"""

from __future__ import annotations

import numbers
from fractions import Fraction


class GaussRat:
    """Complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _coerce(x):
        if isinstance(x, GaussRat):
            return x.re, x.im
        if isinstance(x, (int, Fraction)):
            return Fraction(x), Fraction(0)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return make_complex(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return make_complex(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return make_complex(o[0] - self.re, o[1] - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = o
        return make_complex(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        c, d = o
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("GaussRat division by zero")
        a, b = self.re, self.im
        return make_complex((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussRat(*o) / self

    def __neg__(self):
        return make_complex(-self.re, -self.im)

    def __pos__(self):
        return self

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Complex):
                return complex(self) == other
            return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return make_complex(self.re, -self.im)

    def __repr__(self):
        return f"GaussRat({self.re}, {self.im})"

    def __str__(self):
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


I = GaussRat(0, 1)


def make_complex(re, im):
    """Gaussian rational, or a ``Fraction`` when ``im`` vanishes."""
    if im == 0:
        return Fraction(re)
    return GaussRat(re, im)


def to_exact(x):
    """Convert ``x`` to an exact scalar.

    Floats go through their shortest decimal repr, so ``0.28`` becomes
    ``7/25`` rather than the binary expansion.
    """
    if isinstance(x, (Fraction, GaussRat)):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a numeric parameter")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, complex):
        return make_complex(to_exact(x.real), to_exact(x.imag))
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, numbers.Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, numbers.Real):
        return to_exact(float(x))
    if isinstance(x, numbers.Complex):
        return to_exact(complex(x))
    raise TypeError(f"cannot make {x!r} exact")


def is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction, GaussRat)) and not isinstance(x, bool)


def to_complex(x) -> complex:
    return complex(x) if not isinstance(x, Fraction) else complex(float(x))


def conj(x):
    if isinstance(x, GaussRat):
        return x.conjugate()
    if isinstance(x, (int, Fraction)):
        return x
    return complex(x).conjugate()
