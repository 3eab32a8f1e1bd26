import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filtra.algebra import (
    BOTTOM,
    CoordinateFrame,
    WeightedPolynomial,
    fiber_partial,
    homogeneous_component,
    homogeneous_decomposition,
    monomial_weight,
    weight_add,
    weight_le,
    wp_arith,
    wp_degree,
    wp_substitute,
)
from filtra.errors import FrameMismatch, UnknownCoordinate

from . import oracle

F = CoordinateFrame(("x",), (("Y", (1,)), ("Z", (2,))))
Y, Z, x = F.var("Y"), F.var("Z"), F.var("x")

P = CoordinateFrame((), (("X1", (1,)), ("X2", (2,))))
X1, X2 = P.var("X1"), P.var("X2")


def test_monomial_weight_adds():
    assert wp_degree(wp_arith("mul", X1, X2)) == (3,)


def test_degree_is_max_weight():
    assert wp_degree(wp_arith("add", X1 * X1 * X2, X1 * X2)) == (4,)


def test_zero_has_bottom_degree():
    p = Y * Z + x
    assert wp_degree(p - p) is BOTTOM
    assert not (p - p)
    assert weight_le(BOTTOM, (0,))


def test_base_coefficient_has_weight_zero():
    assert wp_degree(x * Y) == (1,)
    assert wp_degree(x) == (0,)


def test_frame_mismatch():
    with pytest.raises(FrameMismatch):
        wp_arith("add", Y, X1)


def test_homogeneous_components():
    p = Z + Y + Y**2
    assert homogeneous_component(p, (2,)) == Z + Y**2
    assert homogeneous_component(p, (1,)) == Y
    assert homogeneous_component(p, (3,)) == 0


def test_substitute_examples():
    p = Z + Y**2
    assert wp_substitute(p, None, {"Y": Y, "Z": Z + Y}) == Z + Y + Y**2
    assert wp_substitute(p, None, {"Y": Y, "Z": Z}) == p
    assert wp_substitute(Y, None, {"Y": Y + 1}) == Y + 1


def test_substitute_base_assignment():
    K = F.field
    p = x * Y
    out = p.substitute({"Y": Y, "Z": Z}, {"x": K.gen("x") + 1}, F)
    assert out == (x + 1) * Y


def test_substitute_missing_fiber():
    with pytest.raises(UnknownCoordinate):
        wp_substitute(Y * Z, None, {"Y": Y})


def test_fiber_partial_examples():
    assert fiber_partial(Y**2 * Z, "Y") == 2 * Y * Z
    assert fiber_partial(Z, "Y") == 0
    assert fiber_partial(x * Y, "Y") == x
    with pytest.raises(UnknownCoordinate):
        fiber_partial(Y, "x")


def test_frame_rank_and_degree():
    G = CoordinateFrame(("x",), (("a", (1,)), ("b", (1,)), ("c", (3,))))
    assert G.degree == (3,)
    assert G.rank == (2, 0, 1)


def test_frame_rejects_bad_declarations():
    with pytest.raises(ValueError):
        CoordinateFrame(("x",), (("x", (1,)),))
    with pytest.raises(ValueError):
        CoordinateFrame(("x",), (("Y", (2,)),), degree=(1,))
    with pytest.raises(ValueError):
        CoordinateFrame(("x",), (("Y", (0,)),))


def test_canonical_term_order():
    p = Y + Z + 3 + Y**2
    weights = [monomial_weight(F, m) for m, _ in p.sorted_terms()]
    assert weights == sorted(weights, reverse=True)


# -- properties -------------------------------------------------------------

M = CoordinateFrame(("x1", "x2"), (("A", (1, 0)), ("B", (0, 1)), ("C", (1, 1))), axes=2)


def random_poly(rng, frame, terms=4):
    K = frame.field
    acc = WeightedPolynomial.zero(frame)
    names = frame.fiber_names
    for _ in range(terms):
        mono = WeightedPolynomial.constant(frame, K.const(rng.choice([-2, -1, 1, 3])) * (K.gen(rng.choice(frame.base)) ** rng.randint(0, 2)))
        for _ in range(rng.randint(0, 3)):
            mono = mono * frame.var(rng.choice(names))
        acc = acc + mono
    return acc


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_degree_of_product_is_sum(seed):
    rng = random.Random(seed)
    p, q = random_poly(rng, M), random_poly(rng, M)
    if p and q:
        # top components multiply without cancellation: no zero divisors
        assert weight_le(wp_degree(p * q), weight_add(wp_degree(p), wp_degree(q)))
    for frame in (F, M):
        a, b = random_poly(rng, frame), random_poly(rng, frame)
        if a and b and frame.axes == 1:
            assert wp_degree(a * b) == weight_add(wp_degree(a), wp_degree(b))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_decomposition_sums_back(seed):
    rng = random.Random(seed)
    p = random_poly(rng, M, terms=6)
    parts = homogeneous_decomposition(p)
    total = WeightedPolynomial.zero(M)
    for w, comp in parts.items():
        assert comp == homogeneous_component(p, w)
        assert homogeneous_component(comp, w) == comp
        total = total + comp
    assert total == p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_substitution_respects_filtration(seed):
    rng = random.Random(seed)
    p = random_poly(rng, F, terms=5)
    sigma = {}
    for f in F.fibers:
        q = random_poly(rng, F, terms=4)
        # keep only terms of weight <= weight(f)
        sigma[f.name] = sum(
            (homogeneous_component(q, (w,)) for w in range(f.weight[0] + 1)),
            WeightedPolynomial.zero(F),
        )
    out = wp_substitute(p, None, sigma)
    assert weight_le(wp_degree(out), wp_degree(p))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_substitution_matches_sympy(seed):
    rng = random.Random(seed)
    p = random_poly(rng, M)
    sigma = {n: random_poly(rng, M, terms=2) for n in M.fiber_names}
    out = wp_substitute(p, None, sigma)
    expected = oracle.compose_exprs({n: oracle.to_expr(q) for n, q in sigma.items()}, {"p": oracle.to_expr(p)})["p"]
    assert oracle.equal(oracle.to_expr(out), expected)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_partials_match_sympy(seed):
    rng = random.Random(seed)
    p = random_poly(rng, M)
    for name in M.fiber_names + M.base:
        d = p.partial(name)
        assert oracle.equal(oracle.to_expr(d), oracle.to_expr(p).diff(oracle.sym(name)))
