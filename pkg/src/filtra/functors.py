"""Constructions on filtered bundles and their morphisms.

Every construction is first defined on a single local map (a transition or a
morphism in a pair of charts) and then applied chart-wise.  Bundle outputs are
re-validated; a failure there is a defect of this module and is raised as
:class:`InternalInvariantBroken`.

Generated coordinate names are fixed: ``d<name>`` for differentials,
``p<name>`` for the dual covariables and ``<name>;<h1>.<h2>...`` for jet
coordinates, where the suffix lists horizontal base coordinates with
repetition in declared order.
"""

from itertools import combinations_with_replacement

from . import linalg
from .algebra import CoordinateFrame, Indeterminate, WeightedPolynomial, total
from .bundles import (
    FilteredBundleSpec,
    FilteredMorphism,
    validate_bundle,
    validate_morphism,
)
from .coefficients import as_ground_poly, fadd, fmul, from_ground_poly
from .errors import (
    DanglingReference,
    FrameMismatch,
    InternalInvariantBroken,
    NotOverDiffeomorphism,
    SingularJacobian,
)


def _checked_bundle(bundle, check):
    if check:
        report = validate_bundle(bundle)
        if not report.passed:
            failures = "; ".join(f"{v.subject}: {v.failure}" for v in report.failures[:5])
            raise InternalInvariantBroken(f"{bundle.name} failed validation: {failures}")
    return bundle


def _checked_morphism(phi, check):
    if check:
        report = validate_morphism(phi)
        if not report.passed:
            failures = "; ".join(f"{v.subject}: {v.failure}" for v in report.failures[:5])
            raise InternalInvariantBroken(f"{phi.name or 'morphism'} failed validation: {failures}")
    return phi


def _apply_bundle(bundle, frame_fn, map_fn, prefix, name, check):
    frame = frame_fn(bundle.frame)
    out = bundle.map_transitions(
        lambda t: map_fn(t, frame, frame), frame=frame, name=name or f"{prefix}_{bundle.name}"
    )
    return _checked_bundle(out, check)


def _apply_morphism(phi, frame_fn, map_fn, prefix, name, check):
    out = map_fn(phi, frame_fn(phi.source), frame_fn(phi.target))
    out.name = name or (f"{prefix}_{phi.name}" if phi.name else "")
    out.source_name = f"{prefix}_{phi.source_name}" if phi.source_name else ""
    out.target_name = f"{prefix}_{phi.target_name}" if phi.target_name else ""
    return _checked_morphism(out, check)


def _retag(p, frame):
    """The same terms read over ``frame`` (which must name every fiber variable)."""
    return WeightedPolynomial._raw(frame, dict(p.terms))


# -- Gr ----------------------------------------------------------------------


def gr_map(m, source=None, target=None):
    rules = {f.name: m.fiber_rules[f.name].homogeneous_component(f.weight) for f in m.target.fibers}
    return m._rebuild(m.source, m.target, m.base_rules, rules)


def gr_bundle(bundle, name=None, check=True):
    """Keep, in every fiber rule, only the component of the target coordinate's weight."""
    return _apply_bundle(bundle, lambda f: f, gr_map, "Gr", name, check)


def gr_morphism(phi, name=None, check=True):
    return _apply_morphism(phi, lambda f: f, gr_map, "Gr", name, check)


# -- tangent and vertical lifts ------------------------------------------------


def diff_name(name):
    return f"d{name}"


def tangent_frame(frame, vertical=False):
    """Append an axis; ``d<x>`` at weight (0,...,0,1), ``d<X>`` at (w, 1)."""
    z = frame.zero_weight
    fibers = [Indeterminate(f.name, f.weight + (0,)) for f in frame.fibers]
    if not vertical:
        fibers += [Indeterminate(diff_name(b), z + (1,)) for b in frame.base]
    fibers += [Indeterminate(diff_name(f.name), f.weight + (1,)) for f in frame.fibers]
    return CoordinateFrame(frame.base, fibers, frame.axes + 1, frame.degree + (1,), frame.vertical)


def differential(p, lift, with_base=True):
    """Formal total differential of ``p`` read over the lifted frame ``lift``."""
    acc = WeightedPolynomial.zero(lift)
    for name in sorted(p.fiber_variables(), key=p.frame.order):
        acc = acc + _retag(p.fiber_partial(name), lift) * lift.var(diff_name(name))
    if with_base:
        for b in p.frame.base:
            d = p.base_partial(b)
            if d:
                acc = acc + _retag(d, lift) * lift.var(diff_name(b))
    return acc


def _lift_map(m, source, target, vertical):
    rules = {n: _retag(p, source) for n, p in m.fiber_rules.items()}
    if not vertical:
        for a in m.target.base:
            const = WeightedPolynomial.constant(m.source, m.base_rules[a])
            rules[diff_name(a)] = differential(const, source)
    for n, p in m.fiber_rules.items():
        rules[diff_name(n)] = differential(p, source, with_base=not vertical)
    return m._rebuild(source, target, m.base_rules, rules)


def tangent_map(m, source, target):
    return _lift_map(m, source, target, vertical=False)


def vertical_map(m, source, target):
    return _lift_map(m, source, target, vertical=True)


def tangent_lift(bundle, name=None, check=True):
    return _apply_bundle(bundle, tangent_frame, tangent_map, "T", name, check)


def tangent_lift_morphism(phi, name=None, check=True):
    return _apply_morphism(phi, tangent_frame, tangent_map, "T", name, check)


def _vertical_frame(frame):
    return tangent_frame(frame, vertical=True)


def vertical_lift(bundle, name=None, check=True):
    """The tangent lift with every ``d<x>`` coordinate set to zero and dropped."""
    return _apply_bundle(bundle, _vertical_frame, vertical_map, "V", name, check)


def vertical_lift_morphism(phi, name=None, check=True):
    return _apply_morphism(phi, _vertical_frame, vertical_map, "V", name, check)


# -- dual vertical lift ----------------------------------------------------------


def dual_name(name):
    return f"p{name}"


def _single_axis(frame, what):
    if frame.axes != 1:
        raise FrameMismatch(f"{what} is defined for single-axis bundles only")


def dual_vertical_frame(frame):
    _single_axis(frame, "the dual vertical lift")
    k = frame.degree[0]
    fibers = [Indeterminate(f.name, f.weight + (0,)) for f in frame.fibers]
    fibers += [Indeterminate(dual_name(f.name), (k - f.weight[0] + 1, 1)) for f in frame.fibers]
    return CoordinateFrame(frame.base, fibers, 2, (k, 1), frame.vertical)


def _weight_blocks(frame):
    weights = sorted({f.weight for f in frame.fibers})
    return [[f.name for f in frame.fibers if f.weight == w] for w in weights]


def inverse_fiber_jacobian(m):
    """``B = A^-1`` for ``A[I'][J] = dX'^I'/dX^J``, as ``{(J, I'): polynomial}``.

    ``A`` is block lower triangular by weight with base-only diagonal blocks,
    so ``B`` follows by block forward substitution.
    """
    src = m.source
    K = src.field
    blocks = _weight_blocks(src)
    zero = WeightedPolynomial.zero(src)

    def A(i, j):
        return {(r, c): m.fiber_rules[r].fiber_partial(c) for r in blocks[i] for c in blocks[j]}

    B = {}
    for i, rows in enumerate(blocks):
        _, _, diag = m.linear_block(m.target.weight(rows[0]))
        inv = linalg.inverse(diag, K.one)
        diag_inv = {
            (c, r): WeightedPolynomial.constant(src, inv[a][b])
            for a, c in enumerate(rows) for b, r in enumerate(rows)
        }
        B.update(diag_inv)
        for j in range(i - 1, -1, -1):
            # sum_{j <= l < i} A_il B_lj
            acc = {(r, c): zero for r in rows for c in blocks[j]}
            for l in range(j, i):
                a_il = A(i, l)
                for r in rows:
                    for mid in blocks[l]:
                        coef = a_il[(r, mid)]
                        if not coef:
                            continue
                        for c in blocks[j]:
                            b = B.get((mid, c))
                            if b:
                                acc[(r, c)] = acc[(r, c)] + coef * b
            for r in rows:
                for c in blocks[j]:
                    total_ = zero
                    for r2 in rows:
                        if acc[(r2, c)]:
                            total_ = total_ + diag_inv[(r, r2)] * acc[(r2, c)]
                    B[(r, c)] = -total_
    return B


def dual_vertical_map(m, source, target):
    B = inverse_fiber_jacobian(m)
    rules = {n: _retag(p, source) for n, p in m.fiber_rules.items()}
    for tgt in m.target.fiber_names:
        acc = WeightedPolynomial.zero(source)
        for src in m.source.fiber_names:
            b = B.get((src, tgt))
            if b:
                acc = acc + _retag(b, source) * source.var(dual_name(src))
        rules[dual_name(tgt)] = acc
    return m._rebuild(source, target, m.base_rules, rules)


def dual_vertical_lift(bundle, name=None, check=True):
    """Adjoin covariables ``p<X>`` that make ``sum dX * pX`` invariant."""
    return _apply_bundle(bundle, dual_vertical_frame, dual_vertical_map, "Vstar", name, check)


# -- linearisation ----------------------------------------------------------------


def linearised_frame(frame):
    """Vertical lift with differentials shifted down one step and top-weight coordinates dropped."""
    _single_axis(frame, "linearisation")
    k = frame.degree[0]
    if k < 1:
        raise FrameMismatch("linearisation needs degree at least 1")
    fibers = [Indeterminate(f.name, f.weight + (0,)) for f in frame.fibers if f.weight[0] < k]
    fibers += [Indeterminate(diff_name(f.name), (f.weight[0] - 1, 1)) for f in frame.fibers]
    return CoordinateFrame(frame.base, fibers, 2, (k - 1, 1), frame.vertical)


def linearise_map(m, source, target):
    v = vertical_map(m, _vertical_frame(m.source), _vertical_frame(m.target))
    rules = {}
    for name in target.fiber_names:
        p = v.fiber_rules[name]
        dangling = sorted(n for n in p.fiber_variables() if not source.has_fiber(n))
        if dangling:
            raise DanglingReference(f"rule for {name!r} mentions deleted coordinates {dangling}")
        rules[name] = _retag(p, source)
    return m._rebuild(source, target, m.base_rules, rules)


def linearise(bundle, name=None, check=True):
    return _apply_bundle(bundle, linearised_frame, linearise_map, "Lin", name, check)


def linearise_morphism(phi, name=None, check=True):
    if phi.source.degree != phi.target.degree:
        raise FrameMismatch("linearisation of a morphism needs bundles of equal degree")
    return _apply_morphism(phi, linearised_frame, linearise_map, "Lin", name, check)


# -- total weight ----------------------------------------------------------------------


def total_weight_frame(frame):
    fibers = [Indeterminate(f.name, (total(f.weight),)) for f in frame.fibers]
    return CoordinateFrame(frame.base, fibers, 1, (total(frame.degree),), frame.vertical)


def total_weight_map(m, source, target):
    rules = {n: _retag(p, source) for n, p in m.fiber_rules.items()}
    return m._rebuild(source, target, m.base_rules, rules)


def total_weight(bundle, name=None, check=True):
    """Collapse every weight vector to the sum of its components."""
    return _apply_bundle(bundle, total_weight_frame, total_weight_map, "Totw", name, check)


def total_weight_morphism(phi, name=None, check=True):
    return _apply_morphism(phi, total_weight_frame, total_weight_map, "Totw", name, check)


# -- jets --------------------------------------------------------------------------------


def multi_indices(n_horizontal, order):
    """Multi-indices of length 1..order as sorted index tuples, by length then lexicographically."""
    return [
        beta
        for n in range(1, order + 1)
        for beta in combinations_with_replacement(range(n_horizontal), n)
    ]


def jet_name(root, beta, horizontal):
    return f"{root};" + ".".join(horizontal[i] for i in beta)


def split_jet_name(name, horizontal):
    root, _, suffix = name.partition(";")
    if not suffix:
        return root, ()
    return root, tuple(sorted(horizontal.index(h) for h in suffix.split(".")))


def jet_frame(frame, order):
    if order < 1:
        raise ValueError("jet order must be positive")
    H = frame.horizontal
    z = frame.zero_weight
    fibers = [Indeterminate(f.name, f.weight + (0,)) for f in frame.fibers]
    for beta in multi_indices(len(H), order):
        n = len(beta)
        fibers += [Indeterminate(jet_name(y, beta, H), z + (n,)) for y in frame.vertical]
        fibers += [Indeterminate(jet_name(f.name, beta, H), f.weight + (n,)) for f in frame.fibers]
    return CoordinateFrame(frame.base, fibers, frame.axes + 1, frame.degree + (order,), frame.vertical)


def _shift(mono, lower, raise_, e=1):
    """``mono`` with one power of ``lower`` traded for ``raise_`` (either may be None)."""
    exps = dict(mono)
    if lower is not None:
        if exps[lower] == 1:
            del exps[lower]
        else:
            exps[lower] -= 1
    exps[raise_] = exps.get(raise_, 0) + e
    return tuple(sorted(exps.items()))


def _raised(frame, u, b, H):
    root, beta = split_jet_name(u, H)
    name = jet_name(root, tuple(sorted(beta + (b,))), H)
    if not frame.has_fiber(name):
        raise ValueError(f"jet order exceeded while differentiating {u!r}")
    return name


def _ground_terms(p):
    # coefficients as QQ polynomials, or None if some denominator is not constant
    out = {}
    for m, c in p.terms.items():
        q = as_ground_poly(c)
        if q is None:
            return None
        out[m] = q
    return out


def _ground_total_derivative(terms, frame, b):
    # total_derivative on QQ-polynomial coefficients, without normalising
    K = frame.field
    gens = K.field.ring.gens
    H = frame.horizontal
    x = gens[K.index(H[b])]
    vertical = [(gens[K.index(y)], jet_name(y, (b,), H)) for y in frame.vertical]
    raised = {}
    acc = {}

    def add(m, c):
        old = acc.get(m)
        acc[m] = c if old is None else old + c

    for mono, c in terms.items():
        d = c.diff(x)
        if d:
            add(mono, d)
        for y, yb in vertical:
            d = c.diff(y)
            if d:
                add(_shift(mono, None, yb), d)
        for u, e in mono:
            if u not in raised:
                raised[u] = _raised(frame, u, b, H)
            add(_shift(mono, u, raised[u]), c if e == 1 else c.mul_ground(e))
    return acc


def total_derivative(p, b):
    """``D_b p`` over a jet frame: the derivative along horizontal coordinate ``b``."""
    frame = p.frame
    K = frame.field
    H = frame.horizontal
    vertical = [(y, jet_name(y, (b,), H)) for y in frame.vertical]
    raised = {}
    acc = {}

    def add(m, c):
        old = acc.get(m)
        acc[m] = c if old is None else fadd(old, c)

    for mono, c in p.terms.items():
        d = K.partial(c, H[b])
        if d:
            add(mono, d)
        for y, yb in vertical:
            d = K.partial(c, y)
            if d:
                add(_shift(mono, None, yb), d)
        for u, e in mono:
            if u not in raised:
                raised[u] = _raised(frame, u, b, H)
            add(_shift(mono, u, raised[u]), fmul(c, e))
    return WeightedPolynomial._raw(frame, {m: c for m, c in acc.items() if c})


def _inverse_horizontal_jacobian(m):
    if len(m.source.horizontal) != len(m.target.horizontal):
        raise NotOverDiffeomorphism("base map changes the number of horizontal coordinates")
    K = m.source.field
    J = m.base_jacobian(horizontal_only=True)
    if not linalg.det(J, K.one):
        raise SingularJacobian("the base Jacobian determinant vanishes identically")
    return linalg.inverse(J, K.one)


def jet_map(m, source, target):
    order = source.degree[-1]
    H = m.source.horizontal
    Ht = m.target.horizontal
    jinv = _inverse_horizontal_jacobian(m)
    cache = {}

    def D(p, b):
        key = (id(p), b)
        if key not in cache:
            cache[key] = (p, total_derivative(p, b))
        return cache[key][1]

    def D_prime(p, a):
        acc = {}
        for b in range(len(H)):
            c = jinv[b][a]
            if not c:
                continue
            for m, v in D(p, b).terms.items():
                v = v if c == 1 else fmul(v, c)
                old = acc.get(m)
                acc[m] = v if old is None else fadd(old, v)
        return WeightedPolynomial._raw(source, {m: v for m, v in acc.items() if v})

    rules = {n: _retag(p, source) for n, p in m.fiber_rules.items()}
    roots = {y: WeightedPolynomial.constant(source, m.base_rules[y]) for y in m.target.vertical}
    roots.update(rules)
    lazy = _ground_jets(m, source, roots, jinv, order)
    if lazy is not None:
        rules.update(lazy)
        return m._rebuild(source, target, m.base_rules, rules)
    jets = {(root, ()): p for root, p in roots.items()}
    for beta in multi_indices(len(Ht), order):
        for root in list(m.target.vertical) + list(m.target.fiber_names):
            p = D_prime(jets[(root, beta[1:])], beta[0])
            jets[(root, beta)] = p
            rules[jet_name(root, beta, Ht)] = p
    return m._rebuild(source, target, m.base_rules, rules)


def _ground_jets(m, source, roots, jinv, order):
    # the jet rules with every coefficient kept as a QQ polynomial until the end
    H = m.source.horizontal
    Ht = m.target.horizontal
    jinv = [[as_ground_poly(c) for c in row] for row in jinv]
    if any(c is None for row in jinv for c in row):
        return None
    jets = {}
    for root, p in roots.items():
        jets[(root, ())] = _ground_terms(p)
        if jets[(root, ())] is None:
            return None
    K = source.field.field
    rules = {}
    derivatives = {}
    for beta in multi_indices(len(Ht), order):
        a = beta[0]
        for root in list(m.target.vertical) + list(m.target.fiber_names):
            acc = {}
            for b in range(len(H)):
                c = jinv[b][a]
                if not c:
                    continue
                key = (root, beta[1:], b)
                if key not in derivatives:
                    derivatives[key] = _ground_total_derivative(jets[key[:2]], source, b)
                for mono, v in derivatives[key].items():
                    if c != 1:
                        v = v.mul_ground(c.LC) if c.is_ground else v * c
                    old = acc.get(mono)
                    acc[mono] = v if old is None else old + v
            acc = {mono: v for mono, v in acc.items() if v}
            jets[(root, beta)] = acc
            rules[jet_name(root, beta, Ht)] = WeightedPolynomial._raw(
                source, {mono: from_ground_poly(K, v) for mono, v in acc.items()}
            )
    return rules


def jet_prolong(bundle, order, name=None, check=True):
    """``J^order`` of a bundle: a double filtered bundle of bi-degree ``(degree, order)``."""
    return _apply_bundle(
        bundle, lambda f: jet_frame(f, order), jet_map, f"J{order}", name, check
    )


def jet_prolong_morphism(phi, order, name=None, check=True):
    return _apply_morphism(phi, lambda f: jet_frame(f, order), jet_map, f"J{order}", name, check)


__all__ = [
    "differential",
    "dual_vertical_lift",
    "gr_bundle",
    "gr_morphism",
    "jet_prolong",
    "jet_prolong_morphism",
    "linearise",
    "linearise_morphism",
    "tangent_lift",
    "tangent_lift_morphism",
    "total_derivative",
    "total_weight",
    "total_weight_morphism",
    "vertical_lift",
    "vertical_lift_morphism",
]
