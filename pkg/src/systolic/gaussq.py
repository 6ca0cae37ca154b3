"""Exact Gaussian rationals ``re + i*im`` with ``Fraction`` parts."""

from fractions import Fraction


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # exact binary value of the float
        return Fraction(x)
    return Fraction(x)


class GQ:
    """A Gaussian rational. Immutable; supports ``+ - * /`` and ``conj``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, name, value):
        raise AttributeError("GQ is immutable")

    @classmethod
    def coerce(cls, x):
        if isinstance(x, GQ):
            return x
        if isinstance(x, complex):
            return cls(x.real, x.imag)
        return cls(x)

    def conj(self):
        return GQ(self.re, -self.im)

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def is_real(self):
        return self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __add__(self, other):
        o = GQ.coerce(other)
        return GQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GQ.coerce(other)
        return GQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GQ.coerce(other) - self

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def __mul__(self, other):
        o = GQ.coerce(other)
        return GQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GQ.coerce(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GQ((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        return GQ.coerce(other) / self

    def __eq__(self, other):
        try:
            o = GQ.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GQ({self.re}, {self.im})"

    def abs_bound(self):
        """``|re| + |im|``, an exact upper bound for the modulus."""
        return abs(self.re) + abs(self.im)


I = GQ(0, 1)
ZERO = GQ(0)
ONE = GQ(1)
