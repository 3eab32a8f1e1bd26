"""Weighted polynomials in fiber indeterminates over the base coefficient field.

A weight is a tuple of non-negative integers, one entry per weight axis.  The
zero polynomial has no weight at all (``BOTTOM``, represented by ``None``),
which sits below every weight so that 0 belongs to every filtration level.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import groupby

from .coefficients import as_ground_poly, base_field, fadd, fmul, from_ground_poly
from .errors import FrameMismatch, UnknownCoordinate

BOTTOM = None


def weight_add(u, v):
    return tuple(a + b for a, b in zip(u, v, strict=True))


def weight_sub(u, v):
    return tuple(a - b for a, b in zip(u, v, strict=True))


def weight_le(u, v):
    """Componentwise ``u <= v``; ``BOTTOM`` is below everything."""
    if u is BOTTOM:
        return True
    if v is BOTTOM:
        return False
    return all(a <= b for a, b in zip(u, v, strict=True))


def weight_max(u, v):
    if u is BOTTOM:
        return v
    if v is BOTTOM:
        return u
    return tuple(max(a, b) for a, b in zip(u, v, strict=True))


def weight_scale(u, n):
    return tuple(a * n for a in u)


def total(w):
    return sum(w)


@dataclass(frozen=True)
class Indeterminate:
    name: str
    weight: tuple

    def __post_init__(self):
        object.__setattr__(self, "weight", tuple(int(a) for a in self.weight))
        if any(a < 0 for a in self.weight):
            raise ValueError(f"negative weight on {self.name}")
        if not any(self.weight):
            raise ValueError(f"fiber indeterminate {self.name} needs a nonzero weight")


@dataclass(frozen=True)
class CoordinateFrame:
    """Base coordinates (weight zero) plus weighted fiber indeterminates.

    ``vertical`` lists the base coordinates that are themselves fiber
    coordinates of a fibred base ``E -> M``; jet prolongation differentiates
    only along the remaining (horizontal) base coordinates.  ``degree``
    defaults to the componentwise maximum of the fiber weights.
    """

    base: tuple
    fibers: tuple
    axes: int = 1
    degree: tuple = None
    vertical: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "vertical", tuple(self.vertical))
        fibers = tuple(
            f if isinstance(f, Indeterminate) else Indeterminate(*f) for f in self.fibers
        )
        object.__setattr__(self, "fibers", fibers)
        names = list(self.base) + [f.name for f in fibers]
        if len(set(names)) != len(names):
            raise ValueError(f"coordinate names are not distinct: {names}")
        if any(v not in self.base for v in self.vertical):
            raise UnknownCoordinate(f"vertical coordinates {self.vertical} must be base coordinates")
        for f in fibers:
            if len(f.weight) != self.axes:
                raise ValueError(f"{f.name} has {len(f.weight)} weight axes, frame has {self.axes}")
        top = (0,) * self.axes
        for f in fibers:
            top = weight_max(top, f.weight)
        if self.degree is None:
            object.__setattr__(self, "degree", top)
        else:
            object.__setattr__(self, "degree", tuple(int(a) for a in self.degree))
            if len(self.degree) != self.axes:
                raise ValueError("degree vector length differs from the number of axes")
            if not weight_le(top, self.degree):
                raise ValueError(f"fiber weights {top} exceed declared degree {self.degree}")

    @cached_property
    def field(self):
        return base_field(self.base)

    @cached_property
    def _weights(self):
        return {f.name: f.weight for f in self.fibers}

    @property
    def fiber_names(self):
        return tuple(f.name for f in self.fibers)

    @property
    def horizontal(self):
        return tuple(b for b in self.base if b not in self.vertical)

    @property
    def zero_weight(self):
        return (0,) * self.axes

    @property
    def rank(self):
        """Number of fiber coordinates of each total weight 1..total(degree)."""
        counts = [0] * total(self.degree)
        for f in self.fibers:
            counts[total(f.weight) - 1] += 1
        return tuple(counts)

    def weight(self, name):
        try:
            return self._weights[name]
        except KeyError:
            if name in self.base:
                return self.zero_weight
            raise UnknownCoordinate(f"unknown coordinate {name!r}") from None

    def has_fiber(self, name):
        return name in self._weights

    def order(self, name):
        return self.fiber_names.index(name)

    def var(self, name):
        """The coordinate ``name`` as a polynomial: a fiber monomial or a base generator."""
        if name in self._weights:
            return WeightedPolynomial(self, {((name, 1),): self.field.one})
        return WeightedPolynomial.constant(self, self.field.gen(name))

    def replace(self, **changes):
        data = dict(
            base=self.base, fibers=self.fibers, axes=self.axes, degree=self.degree,
            vertical=self.vertical,
        )
        data.update(changes)
        if ("fibers" in changes or "axes" in changes) and "degree" not in changes:
            data["degree"] = None
        return CoordinateFrame(**data)


def monomial_weight(frame, monomial):
    w = frame.zero_weight
    for name, e in monomial:
        w = weight_add(w, weight_scale(frame.weight(name), e))
    return w


def monomial_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for name, e in m2:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items()))


class WeightedPolynomial:
    """A finite sum of fiber monomials with base-function coefficients.

    Monomials are tuples of ``(name, exponent)`` pairs sorted by name; the
    unit monomial is ``()``.  Instances are immutable.
    """

    __slots__ = ("frame", "terms", "_hash")

    def __init__(self, frame, terms=None):
        self.frame = frame
        K = frame.field
        clean = {}
        for m, c in (terms or {}).items():
            c = K.convert(c)
            if c:
                clean[tuple(sorted(m))] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, frame, terms):
        p = cls.__new__(cls)
        p.frame = frame
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, frame):
        return cls._raw(frame, {})

    @classmethod
    def constant(cls, frame, c):
        c = frame.field.convert(c)
        return cls._raw(frame, {(): c} if c else {})

    # -- basic protocol ---------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, WeightedPolynomial):
            return self.terms == other.terms and (
                self.frame is other.frame or self.frame == other.frame
            )
        if not self.terms or (len(self.terms) == 1 and () in self.terms):
            try:
                return self.terms.get((), 0) == other
            except TypeError:
                return False
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        from .dsl import format_polynomial

        return f"WeightedPolynomial({format_polynomial(self)})"

    def __str__(self):
        from .dsl import format_polynomial

        return format_polynomial(self)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, WeightedPolynomial):
            if other.frame is not self.frame and other.frame != self.frame:
                raise FrameMismatch("polynomials live over different coordinate frames")
            return other
        return WeightedPolynomial.constant(self.frame, other)

    def __add__(self, other):
        other = self._coerce(other)
        res = dict(self.terms)
        for m, c in other.terms.items():
            s = res.get(m)
            s = c if s is None else fadd(s, c)
            if s:
                res[m] = s
            else:
                res.pop(m, None)
        return WeightedPolynomial._raw(self.frame, res)

    __radd__ = __add__

    def __neg__(self):
        return WeightedPolynomial._raw(self.frame, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        res = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = monomial_mul(m1, m2)
                s = res.get(m)
                p = fmul(c1, c2)
                res[m] = p if s is None else fadd(s, p)
        return WeightedPolynomial._raw(self.frame, {m: c for m, c in res.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative powers are not weighted polynomials")
        result = WeightedPolynomial.constant(self.frame, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, c):
        """Multiply every coefficient by the base function ``c``."""
        c = self.frame.field.convert(c)
        if not c:
            return WeightedPolynomial.zero(self.frame)
        return WeightedPolynomial._raw(self.frame, {m: fmul(v, c) for m, v in self.terms.items()})

    # -- structure --------------------------------------------------------

    def degree(self):
        d = BOTTOM
        for m in self.terms:
            d = weight_max(d, monomial_weight(self.frame, m))
        return d

    def weights(self):
        """Distinct monomial weights occurring in the polynomial."""
        return {monomial_weight(self.frame, m) for m in self.terms}

    def homogeneous_component(self, w):
        w = tuple(w)
        return WeightedPolynomial._raw(
            self.frame,
            {m: c for m, c in self.terms.items() if monomial_weight(self.frame, m) == w},
        )

    def coefficient(self, monomial):
        return self.terms.get(tuple(sorted(monomial)), self.frame.field.zero)

    def linear_coefficient(self, name):
        return self.coefficient(((name, 1),))

    def constant_term(self):
        return self.coefficient(())

    def is_constant(self):
        return all(not m for m in self.terms)

    def fiber_variables(self):
        return {name for m in self.terms for name, _ in m}

    def base_variables(self):
        K = self.frame.field
        used = set()
        for c in self.terms.values():
            used.update(K.free(c))
        return used

    def sorted_terms(self):
        """Terms in the canonical order: total weight, then names, then exponents."""
        frame = self.frame
        order = {n: i for i, n in enumerate(frame.fiber_names)}

        def key(item):
            m = item[0]
            w = monomial_weight(frame, m)
            flat = []
            for name, e in sorted(m, key=lambda p: order.get(p[0], len(order))):
                flat.append((order.get(name, len(order)), name, -e))
            return (-total(w), tuple(-a for a in w), tuple(flat))

        return sorted(self.terms.items(), key=key)

    # -- calculus and substitution ---------------------------------------

    def fiber_partial(self, name):
        if not self.frame.has_fiber(name):
            raise UnknownCoordinate(f"{name!r} is not a fiber indeterminate of this frame")
        res = {}
        for m, c in self.terms.items():
            exps = dict(m)
            e = exps.get(name)
            if not e:
                continue
            if e == 1:
                del exps[name]
            else:
                exps[name] = e - 1
            key = tuple(sorted(exps.items()))
            res[key] = fadd(res.get(key, self.frame.field.zero), fmul(c, e))
        return WeightedPolynomial._raw(self.frame, {m: c for m, c in res.items() if c})

    def base_partial(self, name):
        K = self.frame.field
        res = {}
        for m, c in self.terms.items():
            d = K.partial(c, name)
            if d:
                res[m] = d
        return WeightedPolynomial._raw(self.frame, res)

    def partial(self, name):
        """Partial derivative along any coordinate, fiber or base."""
        if self.frame.has_fiber(name):
            return self.fiber_partial(name)
        return self.base_partial(name)

    def map_coefficients(self, fn, frame=None):
        frame = self.frame if frame is None else frame
        K = frame.field
        res = {}
        for m, c in self.terms.items():
            v = K.convert(fn(c))
            if v:
                res[m] = v
        return WeightedPolynomial._raw(frame, res)

    def embed(self, frame):
        """The same polynomial viewed over a frame that contains all its coordinates."""
        if frame is self.frame or frame == self.frame:
            return self
        for name in self.fiber_variables():
            if not frame.has_fiber(name):
                raise FrameMismatch(f"{name!r} is not a fiber coordinate of the target frame")
        if frame.field is self.frame.field:
            return WeightedPolynomial._raw(frame, dict(self.terms))
        return self.map_coefficients(lambda c: c, frame)

    def substitute(self, fiber_assignment, base_assignment=None, frame=None, cache=None):
        """Simultaneous substitution into fiber monomials and coefficients.

        ``fiber_assignment`` maps fiber names to polynomials over ``frame``;
        ``base_assignment`` maps base names to base functions of ``frame``'s
        field (``None`` keeps coefficients unchanged, requiring a shared field).
        A dict passed as ``cache`` is reused across calls with the same
        assignments, which pays off when substituting into many polynomials.
        """
        cache = {} if cache is None else cache
        if frame is None:
            if fiber_assignment:
                frame = next(iter(fiber_assignment.values())).frame
            else:
                frame = self.frame
        K = frame.field
        if base_assignment is None:
            coeff = K.convert
        else:
            src = self.frame.field
            memo = cache.setdefault("coefficients", {})

            def coeff(c):
                r = memo.get(c)
                if r is None:
                    r = memo[c] = src.substitute(c, base_assignment, K)
                return r

        powers = cache.setdefault("powers", {})
        monomials = cache.setdefault("monomials", {})
        ground = cache.setdefault("ground", {})

        def power(name, e):
            key = (name, e)
            if key not in powers:
                try:
                    q = fiber_assignment[name]
                except KeyError:
                    raise UnknownCoordinate(f"no substitution given for {name!r}") from None
                if not isinstance(q, WeightedPolynomial):
                    q = WeightedPolynomial.constant(frame, q)
                elif q.frame is not frame and q.frame != frame:
                    raise FrameMismatch(f"substitution for {name!r} is over a different frame")
                powers[key] = q if e == 1 else q ** e
            return powers[key]

        # constant-denominator coefficients are summed as plain polynomials and
        # normalised once per output monomial
        lazy, exact = {}, {}
        unit = [((), K.one, K.field.ring.one)]
        for m, c in self.terms.items():
            c = coeff(c)
            if not c:
                continue
            entries = monomials.get(m) if m else unit
            if entries is None:
                term = None
                for name, e in m:
                    q = power(name, e)
                    term = q if term is None else term * q
                entries = [(tm, tc, as_ground_poly(tc)) for tm, tc in term.terms.items()]
                monomials[m] = entries
            cp = ground.get(c) if c in ground else ground.setdefault(c, as_ground_poly(c))
            for tm, tc, tp in entries:
                if cp is not None and tp is not None:
                    if cp.is_ground:
                        v = tp.mul_ground(cp.LC)
                    elif tp.is_ground:
                        v = cp.mul_ground(tp.LC)
                    else:
                        v = tp * cp
                    old = lazy.get(tm)
                    lazy[tm] = v if old is None else old + v
                else:
                    exact[tm] = fadd(exact.get(tm, K.zero), fmul(tc, c))
        out = {tm: from_ground_poly(K.field, v) for tm, v in lazy.items() if v}
        for tm, v in exact.items():
            out[tm] = fadd(out[tm], v) if tm in out else v
        return WeightedPolynomial._raw(frame, {m: c for m, c in out.items() if c})


# Functional spellings of the core operations.

def wp_arith(op, p, q):
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown operation {op!r}")


def wp_degree(p):
    return p.degree()


def homogeneous_component(p, w):
    return p.homogeneous_component(w)


def wp_substitute(p, base_assignment, fiber_assignment, frame=None):
    return p.substitute(fiber_assignment, base_assignment, frame)


def fiber_partial(p, name):
    return p.fiber_partial(name)


def homogeneous_decomposition(p):
    """Map from weight to homogeneous component, in canonical weight order."""
    by_weight = sorted(
        ((monomial_weight(p.frame, m), m, c) for m, c in p.terms.items()), key=lambda t: t[0]
    )
    return {
        w: WeightedPolynomial._raw(p.frame, {m: c for _, m, c in grp})
        for w, grp in groupby(by_weight, key=lambda t: t[0])
    }
