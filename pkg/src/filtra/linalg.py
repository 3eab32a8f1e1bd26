"""Exact linear algebra over a field.

Dense routines work over any exact field whose elements support ``+ - * /``
and truthiness (``Fraction``, sympy rational functions, ...).  The sparse
routines work on vectors stored as ``{key: coefficient}`` dicts and are used
for span computations over QQ.
"""

from fractions import Fraction

from sympy.polys.fields import FracElement
from sympy.polys.matrices import DomainMatrix

from .coefficients import fadd, finv, fmul, from_ground_poly
from .errors import SingularLinearPart


def _complexity(e):
    # constants first, then short entries; keeps intermediate growth small
    if isinstance(e, FracElement):
        ground = e.numer.is_ground and e.denom.is_ground
        return (not ground, len(e.numer) + len(e.denom))
    return (False, 0)


def _ops(one):
    if isinstance(one, FracElement):
        return fadd, fmul, finv
    return (lambda a, b: a + b), (lambda a, b: a * b), (lambda a: one / a)


def _choose_pivot(a, rows, cols):
    best = None
    for r in rows:
        row = a[r]
        for c in cols:
            e = row[c]
            if e:
                k = _complexity(e)
                if best is None or k < best[0]:
                    best = (k, r, c)
                    if k == (False, 1) or k == (False, 0):
                        return r, c
    return None if best is None else best[1:]


def _polynomial_matrix(rows, one):
    """The matrix over the polynomial ring when every denominator is constant, else None."""
    if not isinstance(one, FracElement):
        return None
    if not all(e.denom.is_ground for row in rows for e in row):
        return None
    ring = one.field.ring
    lifted = [[e.numer.quo_ground(e.denom.LC) for e in row] for row in rows]
    return DomainMatrix(lifted, (len(rows), len(rows[0]) if rows else 0), ring.to_domain())


def det(matrix, one=1):
    """Determinant by elimination with full pivoting on the simplest entry.

    ``one`` fixes the field, which matters for the empty matrix.
    """
    add, mul, inv_of = _ops(one)
    a = [list(row) for row in matrix]
    rows = list(range(len(a)))
    cols = list(range(len(a)))
    result = one
    negate = False
    while rows:
        found = _choose_pivot(a, rows, cols)
        if found is None:
            return one - one
        r, c = found
        if _complexity(a[r][c])[0]:
            # no constant pivot left: fraction-free elimination beats field gcds
            M = _polynomial_matrix([[a[i][j] for j in cols] for i in rows], one)
            if M is not None:
                result = mul(result, from_ground_poly(one.field, M.det()))
                return -result if negate else result
        negate ^= (rows.index(r) + cols.index(c)) % 2 == 1
        rows.remove(r)
        cols.remove(c)
        pivot = a[r][c]
        result = mul(result, pivot)
        inv = inv_of(pivot)
        prow = a[r]
        for i in rows:
            e = a[i][c]
            if e:
                f = -mul(e, inv)
                row = a[i]
                for j in cols:
                    if prow[j]:
                        row[j] = add(row[j], mul(f, prow[j]))
    return -result if negate else result


def inverse(matrix, one=1):
    """Gauss-Jordan inverse with the same pivoting as :func:`det`.

    Raises :class:`SingularLinearPart` on singular input.
    """
    add, mul, inv_of = _ops(one)
    n = len(matrix)
    zero = one - one
    a = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(matrix)]
    rows = list(range(n))
    cols = list(range(n))
    owner = {}
    while rows:
        found = _choose_pivot(a, rows, cols)
        if found is None:
            raise SingularLinearPart("matrix is singular over the coefficient field")
        r, c = found
        if _complexity(a[r][c])[0]:
            M = _polynomial_matrix(matrix, one)
            if M is not None:
                return _ring_inverse(M, one)
        rows.remove(r)
        cols.remove(c)
        owner[c] = r
        inv = inv_of(a[r][c])
        a[r] = [mul(x, inv) if x else x for x in a[r]]
        prow = a[r]
        for i in range(n):
            e = a[i][c]
            if i != r and e:
                f = -e
                a[i] = [add(x, mul(f, y)) if y else x for x, y in zip(a[i], prow)]
    return [a[owner[c]][n:] for c in range(n)]


def _ring_inverse(M, one):
    if not M.det():
        raise SingularLinearPart("matrix is singular over the coefficient field")
    adj, den = M.inv_den()
    return [[one.field.new(e, den) for e in row] for row in adj.to_list()]


def matmul(a, b):
    return [[sum((x * y for x, y in zip(row, col)), start=row[0] * 0) for col in zip(*b)] for row in a]


# -- sparse vectors -------------------------------------------------------


def _leading(vec, order):
    return min(vec, key=order)


def reduce_vector(vec, basis, order):
    """Reduce ``vec`` against an echelon ``basis`` (dict pivot -> normalized row)."""
    vec = dict(vec)
    while vec:
        pivots = [k for k in vec if k in basis]
        if not pivots:
            break
        k = min(pivots, key=order)
        f = vec[k]
        for key, val in basis[k].items():
            nv = vec.get(key, 0) - f * val
            if nv:
                vec[key] = nv
            else:
                vec.pop(key, None)
    return vec


class EchelonBasis:
    """Incrementally maintained reduced echelon basis of a span of sparse vectors.

    ``order`` maps a coordinate key to a sort key; smaller means more leading.
    """

    def __init__(self, order):
        self.order = order
        self.rows = {}

    def __len__(self):
        return len(self.rows)

    def reduce(self, vec):
        return reduce_vector(vec, self.rows, self.order)

    def add(self, vec):
        """Insert ``vec``; returns True when it enlarged the span."""
        r = self.reduce(vec)
        if not r:
            return False
        k = _leading(r, self.order)
        lead = r[k]
        r = {key: val / lead for key, val in r.items()}
        for pk, row in self.rows.items():
            f = row.get(k)
            if f:
                for key, val in r.items():
                    nv = row.get(key, 0) - f * val
                    if nv:
                        row[key] = nv
                    else:
                        row.pop(key, None)
        self.rows[k] = r
        return True

    def contains(self, vec):
        return not self.reduce(vec)

    def sorted_rows(self):
        return [self.rows[k] for k in sorted(self.rows, key=self.order)]


def sparse_rank(vectors, order=None):
    basis = EchelonBasis(order or (lambda k: k))
    for v in vectors:
        basis.add({k: Fraction(c) for k, c in v.items() if c})
    return len(basis)
