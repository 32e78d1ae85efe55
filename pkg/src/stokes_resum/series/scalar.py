"""Exact Gaussian rationals."""

from fractions import Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)


def to_fraction(x):
    """Convert an exact real value (int, Fraction, or "p/q" string) to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def fraction_str(q):
    return f"{q.numerator}/{q.denominator}"


class Scalar:
    """A number re + i*im with re, im exact rationals.

    Instances are treated as immutable. Arithmetic with ints and Fractions coerces
    them to Scalars with zero imaginary part; floats are rejected so that
    inexact values never leak into exact computations.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, Scalar):
            if im != 0:
                raise TypeError("Scalar real part cannot itself be a Scalar with im")
            self.re = re.re
            self.im = re.im
            return
        self.re = to_fraction(re)
        self.im = to_fraction(im)

    @classmethod
    def _make(cls, re, im):
        s = object.__new__(cls)
        s.re = re
        s.im = im
        return s

    @classmethod
    def coerce(cls, x):
        if isinstance(x, Scalar):
            return x
        if isinstance(x, complex):
            raise TypeError("complex floats are not exact scalars")
        return cls._make(to_fraction(x), _ZERO)

    @classmethod
    def parse(cls, re, im="0"):
        return cls._make(Fraction(re), Fraction(im))

    # -- predicates -------------------------------------------------------
    def is_zero(self):
        return not self.re and not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self):
        return not self.im

    def is_gaussian_integer(self):
        return self.re.denominator == 1 and self.im.denominator == 1

    # -- arithmetic -------------------------------------------------------
    def __neg__(self):
        return Scalar._make(-self.re, -self.im)

    def __pos__(self):
        return self

    def __add__(self, other):
        try:
            o = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return Scalar._make(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return Scalar._make(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        try:
            o = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        try:
            o = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b:
            if not d:
                return Scalar._make(a * c, _ZERO)
            return Scalar._make(a * c, a * d)
        if not d:
            return Scalar._make(a * c, b * c)
        return Scalar._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self):
        return Scalar._make(self.re, -self.im)

    def norm(self):
        """Return re^2 + im^2 as a Fraction."""
        return self.re * self.re + self.im * self.im

    def reciprocal(self):
        if not self:
            raise ZeroDivisionError("reciprocal of zero scalar")
        if not self.im:
            return Scalar._make(1 / self.re, _ZERO)
        n = self.norm()
        return Scalar._make(self.re / n, -self.im / n)

    def __truediv__(self, other):
        try:
            o = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        try:
            o = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.reciprocal() ** (-n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison / hashing ---------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return not self.im and self.re == other
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    # -- conversion -------------------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_json(self):
        return [fraction_str(self.re), fraction_str(self.im)]

    @classmethod
    def from_json(cls, pair):
        if isinstance(pair, (list, tuple)):
            if len(pair) == 1:
                return cls.parse(pair[0])
            if len(pair) != 2:
                raise ValueError(f"expected [re, im], got {pair!r}")
            return cls.parse(pair[0], pair[1])
        return cls.parse(str(pair))

    def __repr__(self):
        if not self.im:
            return f"Scalar({str(self.re)!r})"
        return f"Scalar({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


ZERO = Scalar._make(_ZERO, _ZERO)
ONE = Scalar._make(_ONE, _ZERO)
I = Scalar._make(_ZERO, _ONE)
