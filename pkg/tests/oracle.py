"""Independent reference computations in sympy.

Nothing here calls filtra's arithmetic.  Most helpers flatten polynomials to
sympy expressions and check with ``expand`` / ``diff`` / ``Matrix.rank``.
The pairing check works in a flat sympy polynomial ring over QQ in all base
and fiber names, which is much faster on large rules.
"""

import itertools

import sympy as sp
from sympy import QQ
from sympy.polys.rings import ring as poly_ring


def sym(name):
    return sp.Symbol(name)


def to_expr(p):
    """A weighted polynomial as an ordinary sympy expression."""
    total = sp.Integer(0)
    for mono, coeff in p.terms.items():
        term = coeff.as_expr()
        for name, e in mono:
            term *= sym(name) ** e
        total += term
    return total


def base_expr(f):
    return f.as_expr()


def map_exprs(m):
    """All rules of a local map as ``{target name: expression}``."""
    out = {b: base_expr(f) for b, f in m.base_rules.items()}
    out.update({n: to_expr(p) for n, p in m.fiber_rules.items()})
    return out


def equal(a, b):
    # a - b is a rational function; it vanishes iff its combined numerator expands to 0
    return sp.expand(sp.numer(sp.together(sp.sympify(a - b)))) == 0


def compose_exprs(first, second):
    """Rules of ``second`` after ``first`` by simultaneous sympy substitution."""
    subs = {sym(k): v for k, v in first.items()}
    return {k: sp.expand(sp.sympify(v).xreplace(subs)) for k, v in second.items()}


def total_differential(expr, names):
    return sum(sp.diff(expr, sym(n)) * sym("d" + n) for n in names)


def total_derivative(expr, b, horizontal, vertical, fiber_names):
    """``D_b`` on jet-coordinate expressions, with names ``root;h.h``."""
    def raise_name(name):
        root, _, suffix = name.partition(";")
        idx = [horizontal.index(h) for h in suffix.split(".")] if suffix else []
        idx = sorted(idx + [b])
        return f"{root};" + ".".join(horizontal[i] for i in idx)

    out = sp.diff(expr, sym(horizontal[b]))
    for y in vertical:
        out += sp.diff(expr, sym(y)) * sym(f"{y};{horizontal[b]}")
    for name in fiber_names:
        d = sp.diff(expr, sym(name))
        if d != 0:
            out += d * sym(raise_name(name))
    return sp.expand(out)


def monomial_matrix(polys, gens):
    """Rows: coefficient vectors of ``polys`` over the union of their monomials."""
    ps = [sp.Poly(p, *gens) for p in polys]
    monos = sorted({m for p in ps for m in p.monoms()})
    if not monos:
        return sp.zeros(len(ps), 1), monos
    return sp.Matrix([[p.coeff_monomial(m) for m in monos] for p in ps]), monos


def span_dim(polys, gens):
    polys = [p for p in polys if sp.expand(p) != 0]
    if not polys:
        return 0
    return monomial_matrix(polys, gens)[0].rank()


def brute_force_rank(levels, gens, bound):
    """Rank vector of a presented filtration from first principles.

    For each level ``i`` the subalgebra generated by level ``i - 1`` is
    truncated at total degree ``bound``; the new weight-``i`` dimension is
    ``dim(A_i) - dim(A_i intersect <A_{i-1}>)`` with the intersection
    dimension obtained as ``dim A + dim B - dim(A + B)``.
    """
    gens = list(gens)
    out = []
    for i in range(1, len(levels)):
        prev = [sp.expand(p) for p in levels[i - 1]]
        prev = [p for p in prev if p != 0 and sp.Poly(p, *gens).total_degree() > 0]
        sub = [
            q for q in all_products(prev, bound)
            if q == 1 or sp.Poly(q, *gens).total_degree() <= bound
        ]
        cur = [sp.expand(p) for p in levels[i]]
        a, b = span_dim(cur, gens), span_dim(sub, gens)
        both = span_dim(cur + sub, gens)
        out.append(a - (a + b - both))
    return tuple(out)


def all_products(polys, max_factors):
    out = [sp.Integer(1)]
    for n in range(1, max_factors + 1):
        for combo in itertools.combinations_with_replacement(polys, n):
            out.append(sp.expand(sp.Mul(*combo)))
    return out


def lift(p, R, index):
    """A weighted polynomial with constant-denominator coefficients as an element of ``R``.

    ``index`` maps every base and fiber name to its generator position in ``R``.
    """
    out = {}
    for mono, c in p.terms.items():
        if not c.denom.is_ground:
            raise ValueError("lift needs polynomial coefficients")
        scale = QQ(c.denom.LC)
        fiber = [0] * len(R.gens)
        for name, e in mono:
            fiber[index[name]] += e
        base_names = [str(s) for s in c.field.symbols]
        for base_mono, value in c.numer.terms():
            m = list(fiber)
            for name, e in zip(base_names, base_mono):
                m[index[name]] += e
            m = tuple(m)
            out[m] = out.get(m, QQ.zero) + QQ(value) / scale
    return R.from_dict({m: v for m, v in out.items() if v})


def pairing_invariant(bundle, dual):
    """Does every dual rule make sum_i dX_i * Psi_i invariant?

    Writing dX' = A dX with A = dX'/dX and Psi' = B Psi, the pairing is
    invariant iff Psi' is linear in Psi and A^T B is the identity.
    """
    names = list(bundle.frame.fiber_names)
    covars = ["p" + n for n in names]
    allnames = list(bundle.frame.base) + names + covars
    R, *gens = poly_ring(allnames, QQ)
    index = {n: i for i, n in enumerate(allnames)}
    g = dict(zip(allnames, gens))
    for t in bundle.transitions():
        d = dual.atlas.transition(t.source_chart, t.target_chart)
        rules = {n: lift(t.fiber_rules[n], R, index) for n in names}
        psi = {n: lift(d.fiber_rules["p" + n], R, index) for n in names}
        B = {(i, k): psi[i].diff(g["p" + k]) for i in names for k in names}
        # Euler: sum_k Psi_k dPsi'/dPsi_k == Psi' iff Psi' is linear in Psi
        for i in names:
            if psi[i] != sum((B[i, k] * g["p" + k] for k in names), R.zero):
                return False
        for j in names:
            for k in names:
                entry = sum((rules[i].diff(g[j]) * B[i, k] for i in names), R.zero)
                if entry != (R.one if j == k else R.zero):
                    return False
    return True
