"""Seeded random generators of valid bundles, atlases and morphisms.

Base maps are affine-linear with integer matrices of determinant +-1 or a
small scalar, so inverses stay polynomial.  Each diagonal weight block of a
transition is a constant permutation-and-scaling times a unit-triangular
matrix with polynomial entries, so block inverses stay polynomial too.
Coefficient polynomials have total degree at most 2.
"""

import itertools
import random
from fractions import Fraction

from filtra.algebra import CoordinateFrame, WeightedPolynomial, monomial_weight, weight_le
from filtra.bundles import (
    Atlas,
    BundleMap,
    FilteredBundleSpec,
    FilteredMorphism,
    TransitionMap,
    compose_transitions,
    inverse_transition,
)
from filtra.coefficients import fadd, fmul

SMALL = [Fraction(n) for n in (-2, -1, 1, 2, 3)] + [Fraction(1, 2), Fraction(-1, 3)]


def base_poly(rng, K, names, max_degree=2, terms=2):
    """A random polynomial of total degree <= max_degree in ``names``."""
    monos = [()]
    for d in range(1, max_degree + 1):
        monos += list(itertools.combinations_with_replacement(names, d))
    acc = K.zero
    for mono in rng.sample(monos, min(terms, len(monos))):
        term = K.const(rng.choice(SMALL))
        for n in mono:
            term = fmul(term, K.gen(n))
        acc = fadd(acc, term)
    return acc


def random_frame(rng, axes=1, max_base=3, max_fibers=4, max_degree=3, prefix="", min_base=1, n_base=None):
    nb = n_base if n_base is not None else rng.randint(min_base, max_base)
    base = [f"{prefix}x{i + 1}" for i in range(nb)]
    nf = rng.randint(1, max_fibers)
    if axes == 1:
        k = rng.randint(1, max_degree)
        weights = sorted([k] + [rng.randint(1, k) for _ in range(nf - 1)])
        fibers = [(f"{prefix}Y{i + 1}", (w,)) for i, w in enumerate(weights)]
    else:
        pool = [w for w in itertools.product(range(2), repeat=axes) if any(w)]
        ws = sorted(rng.choice(pool) for _ in range(nf))
        fibers = [(f"{prefix}Y{i + 1}", w) for i, w in enumerate(ws)]
    return CoordinateFrame(tuple(base), tuple(fibers), axes)


def affine_base_map(rng, src, tgt):
    """An invertible affine map: returns rules {target base name: function of src base}."""
    n = len(src.base)
    K = src.field
    perm = list(range(n))
    rng.shuffle(perm)
    # unit upper triangular times a permutation, then a diagonal scaling
    rules = {}
    for i, a in enumerate(tgt.base):
        j = perm[i]
        expr = K.gen(src.base[j]) * K.const(rng.choice([1, 1, -1, 2]))
        for jj in range(j + 1, n):
            if rng.random() < 0.4:
                expr = expr + K.gen(src.base[jj]) * K.const(rng.choice(SMALL))
        expr = expr + K.const(rng.choice([0, 0, 1, -1]))
        rules[a] = expr
    return rules


def _lower_monomials(frame, w, exclude):
    """Fiber monomials of weight <= w (componentwise), at most cubic, without ``exclude`` linear terms."""
    names = frame.fiber_names
    out = [()]
    for d in (1, 2, 3):
        for combo in itertools.combinations_with_replacement(names, d):
            m = tuple(sorted((n, combo.count(n)) for n in set(combo)))
            if d == 1 and combo[0] in exclude:
                continue
            if weight_le(monomial_weight(frame, m), w):
                out.append(m)
    return out


def fiber_rules(rng, src, tgt, invertible=True, extra_terms=2):
    """Random degree-respecting rules for every fiber of ``tgt`` over ``src``."""
    Ks = src.field
    rules = {}
    weights = sorted({f.weight for f in tgt.fibers})
    for w in weights:
        rows = [f.name for f in tgt.fibers if f.weight == w]
        cols = [f.name for f in src.fibers if f.weight == w]
        block = {}
        if invertible:
            assert len(rows) == len(cols)
            perm = list(range(len(cols)))
            rng.shuffle(perm)
            for i, r in enumerate(rows):
                j = perm[i]
                expr = src.var(cols[j]).scale(Ks.const(rng.choice([1, -1, 2, Fraction(1, 2)])))
                for jj in range(j + 1, len(cols)):
                    if rng.random() < 0.5:
                        expr = expr + src.var(cols[jj]).scale(base_poly(rng, Ks, src.base))
                block[r] = expr
        else:
            for r in rows:
                expr = WeightedPolynomial.zero(src)
                for c in cols:
                    if rng.random() < 0.6:
                        expr = expr + src.var(c).scale(base_poly(rng, Ks, src.base))
                block[r] = expr
        monos = _lower_monomials(src, w, set(cols))
        for r in rows:
            expr = block[r]
            for m in rng.sample(monos, min(extra_terms, len(monos))):
                expr = expr + WeightedPolynomial(src, {m: base_poly(rng, Ks, src.base)})
            rules[r] = expr
    return rules


def random_transition(rng, frame, u, v):
    base = affine_base_map(rng, frame, frame)
    return TransitionMap(u, v, frame, base, fiber_rules(rng, frame, frame))


def random_bundle(rng, frame=None, charts=2, name="F", **frame_kw):
    """A validated bundle with 2 or 3 charts; the third transition is a composition."""
    frame = frame or random_frame(rng, **frame_kw)
    t_uv = random_transition(rng, frame, "U", "V")
    ts = [t_uv, inverse_transition(t_uv)]
    names = ["U", "V"]
    pairs = [("U", "V")]
    triples = []
    if charts == 3:
        t_vw = random_transition(rng, frame, "V", "W")
        t_uw = compose_transitions(t_uv, t_vw)
        ts += [t_vw, inverse_transition(t_vw), t_uw, inverse_transition(t_uw)]
        names.append("W")
        pairs += [("V", "W"), ("U", "W")]
        triples = [("U", "V", "W")]
    return FilteredBundleSpec(name, frame, Atlas(names, ts, pairs, triples or None))


def random_morphism(rng, source, target, name="phi", source_name="F", target_name="G", diffeo=True):
    """A degree-respecting morphism; over an invertible affine base map when ``diffeo``."""
    if diffeo:
        base = affine_base_map(rng, source, target)
    else:
        base = {a: base_poly(rng, source.field, source.base) for a in target.base}
    fibers = fiber_rules(rng, source, target, invertible=False)
    return FilteredMorphism(source, target, base, fibers, name=name, source_name=source_name, target_name=target_name)


def same_shape_frame(rng, frame, prefix):
    """A frame with the same weights as ``frame`` but fresh coordinate names."""
    base = tuple(f"{prefix}{b}" for b in frame.base)
    fibers = tuple((f"{prefix}{f.name}", f.weight) for f in frame.fibers)
    return CoordinateFrame(base, fibers, frame.axes, frame.degree)


def random_chain(rng, **frame_kw):
    """Frames F, G, H of equal shape and morphisms phi: F -> G, psi: G -> H."""
    F = random_frame(rng, **frame_kw)
    G = same_shape_frame(rng, F, "g")
    H = same_shape_frame(rng, F, "h")
    phi = random_morphism(rng, F, G, "phi", "F", "G")
    psi = random_morphism(rng, G, H, "psi", "G", "H")
    return F, G, H, phi, psi


def plain_map(m):
    return BundleMap(m.source, m.target, m.base_rules, m.fiber_rules)
