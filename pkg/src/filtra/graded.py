"""Rank and homogeneous generators of connected filtrations of polynomial algebras.

A filtration is presented level by level: level ``i`` is a finite list of
polynomials whose span is the degree-bounded part of ``A_i``.  Everything
reduces to exact rank computations on monomial-coefficient vectors.
"""

from dataclasses import dataclass

from sympy import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import ring

from .errors import DegreeBoundExceeded, NotConnected, NotMultiplicative, NotNested
from .linalg import EchelonBasis


@dataclass(frozen=True)
class FiltrationPresentation:
    name: str
    variables: tuple
    levels: tuple
    bound: int

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        R = self.ring_for(self.variables)
        object.__setattr__(self, "levels", tuple(tuple(R(g) for g in lvl) for lvl in self.levels))

    @staticmethod
    def ring_for(variables):
        if not variables:
            raise ValueError("a filtration needs at least one ambient variable")
        return ring(",".join(variables), QQ, grlex)[0]

    @property
    def ring(self):
        return self.ring_for(self.variables)

    @property
    def height(self):
        return len(self.levels) - 1


def _monomial_key(monom):
    # grlex-largest monomial leads
    return (-sum(monom), tuple(-e for e in monom))


def _vector(p):
    return dict(p.items())


def _span(polys):
    basis = EchelonBasis(_monomial_key)
    for p in polys:
        basis.add(_vector(p))
    return basis


def _degree(p):
    return max((sum(m) for m in p.monoms()), default=0)


def _check(P):
    if not P.levels:
        raise NotConnected("a filtration needs at least level 0")
    for i, level in enumerate(P.levels):
        for g in level:
            if _degree(g) > P.bound:
                raise DegreeBoundExceeded(f"level {i} generator {g.as_expr()} exceeds degree bound {P.bound}")
    R = P.ring
    level0 = _span(P.levels[0])
    if len(level0) != 1 or not level0.contains(_vector(R.one)):
        raise NotConnected("level 0 must span exactly the constants")
    for i in range(len(P.levels) - 1):
        upper = _span(P.levels[i + 1])
        for g in P.levels[i]:
            if not upper.contains(_vector(g)):
                raise NotNested(f"level {i} generator {g.as_expr()} is not in the span of level {i + 1}")


def _products(generators, limit, one):
    """All products of ``(poly, weight)`` generators with total weight <= ``limit``."""
    out = [one]

    def extend(start, poly, weight):
        for j in range(start, len(generators)):
            g, w = generators[j]
            if weight + w <= limit:
                q = poly * g
                out.append(q)
                extend(j, q, weight + w)

    extend(0, one, 0)
    return out


def _bounded_products(generators, bound, one):
    """Every product of the generators with total degree <= ``bound``."""
    out = [one]
    degrees = [_degree(g) for g, _ in generators]

    def extend(start, poly, degree):
        for j in range(start, len(generators)):
            if degree + degrees[j] <= bound:
                q = poly * generators[j][0]
                out.append(q)
                extend(j, q, degree + degrees[j])

    extend(0, one, 0)
    return out


def _analyse(P):
    _check(P)
    R = P.ring
    chosen = []
    rank = []
    for i in range(1, len(P.levels)):
        # the weight <= i products must fit under the bound and stay inside level i
        weighted = _products(chosen, i, R.one)
        for q in weighted:
            if _degree(q) > P.bound:
                raise DegreeBoundExceeded(
                    f"product {q.as_expr()} of generators of weight <= {i} exceeds degree bound {P.bound}"
                )
        V = _span(P.levels[i])
        for q in weighted:
            if not V.contains(_vector(q)):
                raise NotMultiplicative(
                    f"product {q.as_expr()} of lower generators is not in the span of level {i}"
                )
        # the subalgebra generated so far, truncated at the bound
        S = _span(_bounded_products(chosen, P.bound, R.one))
        count = 0
        for row in V.sorted_rows():
            if S.add(row):
                chosen.append((R.from_dict(row), i))
                count += 1
        rank.append(count)
    return tuple(rank), chosen


def compute_rank(P):
    """The vector ``(d_1, ..., d_k)`` of new generators needed at each weight."""
    return _analyse(P)[0]


def extract_homogeneous_generators(P):
    """``[(polynomial, weight), ...]`` with weights ascending, chosen by echelon pivots."""
    return _analyse(P)[1]


def standard_presentation(rank, name="standard", prefix="z"):
    """The filtration of the graded algebra with ``rank[i]`` generators of weight ``i + 1``."""
    variables, weights = [], []
    for w, d in enumerate(rank, start=1):
        for j in range(d):
            variables.append(f"{prefix}{w}_{j + 1}")
            weights.append(w)
    k = len(rank)
    if not variables:
        variables, weights = [f"{prefix}0"], [k + 1]
    R = FiltrationPresentation.ring_for(variables)
    levels = []
    for i in range(k + 1):
        levels.append(tuple(_products(list(zip(R.gens, weights)), i, R.one)))
    return FiltrationPresentation(name, tuple(variables), tuple(levels), max(k, 1))
