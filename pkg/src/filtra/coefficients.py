"""Exact rational functions of the base coordinates.

Every coefficient appearing in a transition rule lives in the field
``QQ(x^1, ..., x^n)`` of rational functions in the base coordinates.  The
field arithmetic itself is delegated to sympy's sparse fraction fields, which
keep elements gcd-reduced with a positive leading denominator coefficient
under the graded lexicographic order, so structural equality decides
semantic equality.
"""

from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm

from sympy import QQ
from sympy.polys.fields import FracElement, field
from sympy.polys.orderings import grlex

from .errors import DenominatorVanishesIdentically, DivisionByZero, UnknownCoordinate

BaseFunction = FracElement

__all__ = [
    "BaseField", "BaseFunction", "base_field", "constant_value", "free_names", "is_constant", "fadd", "fmul",
    "as_ground_poly", "finv", "from_ground_poly",
]


class BaseField:
    """The field of rational functions in an ordered tuple of base coordinates.

    Instances are interned by :func:`base_field`, so two frames sharing base
    coordinate names share one field object and their coefficients mix freely.
    """

    def __init__(self, names):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate base coordinate names in {self.names}")
        self.field, *gens = field(",".join(self.names), QQ, grlex)
        self._gens = dict(zip(self.names, gens))
        self._index = {n: i for i, n in enumerate(self.names)}
        self.zero = self.field.zero
        self.one = self.field.one

    def __repr__(self):
        return f"BaseField({', '.join(self.names)})"

    def __reduce__(self):
        return (base_field, (self.names,))

    def gen(self, name):
        try:
            return self._gens[name]
        except KeyError:
            raise UnknownCoordinate(f"unknown base coordinate {name!r}") from None

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise UnknownCoordinate(f"unknown base coordinate {name!r}") from None

    def const(self, value):
        if isinstance(value, FracElement):
            return self.convert(value)
        value = Fraction(value)
        if not value:
            return self.field.zero
        ring = self.field.ring
        return self.field.raw_new(
            _constant_poly(ring, value.numerator), _constant_poly(ring, value.denominator)
        )

    def convert(self, f):
        """Reinterpret ``f`` (a constant, or an element of this field) in this field."""
        if isinstance(f, FracElement):
            if f.field == self.field:
                return f
            if is_constant(f):
                return self.const(constant_value(f))
            return self.substitute(f, {n: self.gen(n) for n in free_names(f)})
        return self.const(f)

    # -- field operations -------------------------------------------------

    def add(self, f, g):
        return f + g

    def sub(self, f, g):
        return f - g

    def mul(self, f, g):
        return f * g

    def div(self, f, g):
        if not g:
            raise DivisionByZero("division by the zero rational function")
        return f / g

    def arith(self, op, f, g):
        try:
            return getattr(self, op)(f, g)
        except AttributeError:
            raise ValueError(f"unknown operation {op!r}") from None

    def partial(self, f, name):
        """Exact partial derivative of ``f`` with respect to the base coordinate ``name``."""
        idx = self.index(name)
        if not f:
            return f
        if f.denom.is_ground:
            return _normalised(self.field, f.numer.diff(self.field.ring.gens[idx]), _ground_int(f.denom))
        return f.diff(self.field.gens[idx])

    def substitute(self, f, assignment, target=None):
        """Compose ``f`` with ``assignment``: base name -> element of ``target``.

        ``target`` defaults to this field.  Names of ``f`` missing from the
        assignment are an error only if ``f`` actually depends on them.
        """
        target = self if target is None else target
        names = field_names(f)
        used = free_names(f)
        values = {}
        for name in used:
            try:
                values[name] = target.convert(assignment[name])
            except KeyError:
                raise UnknownCoordinate(f"no substitution given for {name!r}") from None
        if all(v.denom.is_ground for v in values.values()):
            return self._substitute_polynomial(f, names, values, target)
        cache = {}

        def power(name, e):
            key = (name, e)
            if key not in cache:
                cache[key] = values[name] ** e
            return cache[key]

        def evaluate(poly):
            total = target.zero
            for monom, coeff in poly.items():
                term = target.field.ground_new(coeff)
                for name, e in zip(names, monom):
                    if e:
                        term = term * power(name, e)
                total = total + term
            return total

        num = evaluate(f.numer)
        den = evaluate(f.denom)
        if not den:
            raise DenominatorVanishesIdentically(
                f"substitution makes the denominator of {f} vanish identically"
            )
        return num / den

    @staticmethod
    def _substitute_polynomial(f, names, values, target):
        # polynomial values: stay in the polynomial ring, cancel once at the end
        R = target.field.ring
        powers, monomials = {}, {}

        def monomial(monom):
            if monom not in monomials:
                term = None
                for name, e in zip(names, monom):
                    if e:
                        key = (name, e)
                        if key not in powers:
                            v = values[name]
                            powers[key] = v.numer.quo_ground(v.denom.LC) ** e
                        term = powers[key] if term is None else term * powers[key]
                monomials[monom] = term
            return monomials[monom]

        def evaluate(poly):
            total = R.zero
            for monom, coeff in poly.items():
                m = monomial(monom)
                total += R.ground_new(coeff) if m is None else m.mul_ground(coeff)
            return total

        num = evaluate(f.numer)
        den = evaluate(f.denom) if f.denom != 1 else R.one
        if not den:
            raise DenominatorVanishesIdentically(
                f"substitution makes the denominator of {f} vanish identically"
            )
        if den.is_ground:
            return _over_constant(target.field, num, den.LC)
        return target.field.new(num, den)

    def free(self, f):
        return free_names(f)


def base_field(names):
    return _interned(tuple(names))


@lru_cache(maxsize=None)
def _interned(names):
    return BaseField(names)


def field_names(f):
    return _symbol_names(f.field)


@lru_cache(maxsize=None)
def _symbol_names(field_):
    return tuple(str(s) for s in field_.symbols)


def free_names(f):
    """Base coordinate names that ``f`` actually depends on, in declared order."""
    used = set()
    for poly in (f.numer, f.denom):
        for monom in poly.monoms():
            used.update(i for i, e in enumerate(monom) if e)
    names = field_names(f)
    return tuple(names[i] for i in sorted(used))


def is_constant(f):
    return f.numer.is_ground and f.denom.is_ground


def constant_value(f):
    """The rational value of a constant function as a ``Fraction``."""
    if not is_constant(f):
        raise ValueError(f"{f} is not constant")
    n = f.numer.LC if f.numer else 0
    d = f.denom.LC
    q = Fraction(int(QQ.numer(n)), int(QQ.denom(n))) if n else Fraction(0)
    return q / Fraction(int(QQ.numer(d)), int(QQ.denom(d)))


# Fast paths for the common case of constant denominators.  A canonical element
# with a ground denominator has an integer-coefficient numerator over a
# positive integer sharing no common factor with the numerator's content, so
# sums and products only need an integer gcd instead of a polynomial one.


def _ground_int(q):
    # q is a constant polynomial, so its only key is the zero monomial
    for c in q.values():
        return int(c.numerator)
    return 0


def _ground(q):
    for c in q.values():
        return c
    return q.ring.domain.zero


@lru_cache(maxsize=4096)
def _constant_poly(ring, n):
    return ring.ground_new(ring.domain(n))


def _normalised(field_, num, den):
    if not num:
        return field_.zero
    g = den
    for c in num.itercoeffs():
        g = gcd(g, int(c.numerator))
        if g == 1:
            break
    if g != 1:
        num = num.quo_ground(num.ring.domain(g))
        den //= g
    return field_.raw_new(num, _constant_poly(field_.ring, den))


def fmul(a, b):
    """``a * b``, skipping the polynomial gcd when both denominators are constants.

    ``b`` may also be a plain int.
    """
    if isinstance(b, int):
        if a.denom.is_ground:
            return _normalised(a.field, a.numer.mul_ground(a.field.ring.domain(b)), _ground_int(a.denom))
        return a * b
    if a.denom.is_ground and b.denom.is_ground and a.field is b.field:
        den = _ground_int(a.denom) * _ground_int(b.denom)
        if b.numer.is_ground:
            return _normalised(a.field, a.numer.mul_ground(_ground(b.numer)), den)
        if a.numer.is_ground:
            return _normalised(a.field, b.numer.mul_ground(_ground(a.numer)), den)
        return _normalised(a.field, a.numer * b.numer, den)
    return a * b


def fadd(a, b):
    """``a + b``, with the same fast path as :func:`fmul`."""
    if a.denom.is_ground and b.denom.is_ground and a.field is b.field:
        da, db = _ground_int(a.denom), _ground_int(b.denom)
        if da == db:
            return _normalised(a.field, a.numer + b.numer, da)
        return _normalised(a.field, a.numer.mul_ground(db) + b.numer.mul_ground(da), da * db)
    return a + b


def finv(f):
    """``1 / f``, without a gcd when ``f`` is a nonzero constant."""
    if f.numer.is_ground and f.denom.is_ground and f:
        q = _ground(f.denom) / _ground(f.numer)
        p, d = int(q.numerator), int(q.denominator)
        ring = f.field.ring
        return f.field.raw_new(_constant_poly(ring, p), _constant_poly(ring, d))
    return 1 / f


def _over_constant(field_, num, c):
    # num / c in canonical form, in one pass over the coefficients
    if not num:
        return field_.zero
    if c == 1 and all(v.denominator == 1 for v in num.values()):
        return field_.raw_new(num, field_.ring.one)
    scaled = num.items() if c == 1 else [(m, v / c) for m, v in num.items()]
    den = lcm(*(int(v.denominator) for _, v in scaled))
    ints = [(m, int(v.numerator) * (den // int(v.denominator))) for m, v in scaled]
    g = den
    for _, n in ints:
        g = gcd(g, n)
        if g == 1:
            break
    make = num.ring.domain.dtype
    poly = num.new([(m, make(n // g)) for m, n in ints])
    return field_.raw_new(poly, _constant_poly(field_.ring, den // g))


def as_ground_poly(f):
    """``f`` as a polynomial over QQ when its denominator is constant, else None."""
    if not f.denom.is_ground:
        return None
    d = _ground(f.denom)
    return f.numer if d == 1 else f.numer.quo_ground(d)


def from_ground_poly(field_, poly):
    """Inverse of :func:`as_ground_poly`: the canonical field element of ``poly``."""
    return _over_constant(field_, poly, field_.ring.domain.one)
