"""Charts, transition maps, atlases and morphisms of (multi-)filtered bundles."""

from dataclasses import dataclass, field
from itertools import permutations

from .algebra import (
    CoordinateFrame,
    WeightedPolynomial,
    monomial_weight,
    total,
    weight_le,
)
from .errors import FrameMismatch, MissingRule, MissingTransition, SingularLinearPart
from . import linalg


class BundleMap:
    """A local map between two frames given by pulled-back coordinates.

    ``base_rules`` sends each target base coordinate to a base function of the
    source; ``fiber_rules`` sends each target fiber coordinate to a weighted
    polynomial over the source frame.
    """

    def __init__(self, source, target, base_rules, fiber_rules):
        self.source = source
        self.target = target
        K = source.field
        self.base_rules = {b: K.convert(f) for b, f in base_rules.items()}
        self.fiber_rules = {}
        for name, p in fiber_rules.items():
            if not isinstance(p, WeightedPolynomial):
                p = WeightedPolynomial.constant(source, p)
            self.fiber_rules[name] = p.embed(source)

    def _same_rules(self, other):
        return (
            self.source == other.source
            and self.target == other.target
            and self.base_rules == other.base_rules
            and self.fiber_rules == other.fiber_rules
        )

    def __eq__(self, other):
        if not isinstance(other, BundleMap):
            return NotImplemented
        return self._same_rules(other)

    __hash__ = None

    def rule(self, name):
        if name in self.fiber_rules:
            return self.fiber_rules[name]
        if name in self.base_rules:
            return WeightedPolynomial.constant(self.source, self.base_rules[name])
        raise MissingRule(f"no rule for target coordinate {name!r}")

    def check_complete(self):
        for b in self.target.base:
            if b not in self.base_rules:
                raise MissingRule(f"no rule for base coordinate {b!r}")
        for f in self.target.fiber_names:
            if f not in self.fiber_rules:
                raise MissingRule(f"no rule for fiber coordinate {f!r}")
        extra = set(self.base_rules) - set(self.target.base)
        extra |= set(self.fiber_rules) - set(self.target.fiber_names)
        if extra:
            raise MissingRule(f"rules given for undeclared coordinates {sorted(extra)}")

    def is_base_identity(self):
        if self.source.base != self.target.base:
            return False
        K = self.source.field
        return all(self.base_rules.get(b) == K.gen(b) for b in self.target.base)

    def linear_block(self, weight):
        """Rows: target fibers of ``weight``; columns: source fibers of ``weight``."""
        rows = [f.name for f in self.target.fibers if f.weight == weight]
        cols = [f.name for f in self.source.fibers if f.weight == weight]
        return rows, cols, [[self.fiber_rules[r].linear_coefficient(c) for c in cols] for r in rows]

    def base_jacobian(self, horizontal_only=False):
        src = self.source.horizontal if horizontal_only else self.source.base
        tgt = self.target.horizontal if horizontal_only else self.target.base
        K = self.source.field
        return [[K.partial(self.base_rules[a], b) for b in src] for a in tgt]

    def with_frames(self, source, target, **kwargs):
        return self._rebuild(source, target, self.base_rules, self.fiber_rules, **kwargs)

    def _rebuild(self, source, target, base_rules, fiber_rules, **_):
        return BundleMap(source, target, base_rules, fiber_rules)

    def __repr__(self):
        rules = ", ".join(f"{k}'={v}" for k, v in {**self.base_rules, **self.fiber_rules}.items())
        return f"{type(self).__name__}({rules})"


class TransitionMap(BundleMap):
    """A change of coordinates between two charts of one bundle."""

    def __init__(self, source_chart, target_chart, frame, base_rules, fiber_rules):
        super().__init__(frame, frame, base_rules, fiber_rules)
        self.source_chart = source_chart
        self.target_chart = target_chart

    @property
    def frame(self):
        return self.source

    def __eq__(self, other):
        if not isinstance(other, BundleMap):
            return NotImplemented
        charts = (
            (self.source_chart, self.target_chart) == (other.source_chart, other.target_chart)
            if isinstance(other, TransitionMap)
            else True
        )
        return charts and self._same_rules(other)

    __hash__ = None

    def _rebuild(self, source, target, base_rules, fiber_rules, **kw):
        if source != target:
            raise FrameMismatch("a transition map must keep the frame")
        return TransitionMap(
            kw.get("source_chart", self.source_chart),
            kw.get("target_chart", self.target_chart),
            source, base_rules, fiber_rules,
        )


class FilteredMorphism(BundleMap):
    """A morphism between filtered bundles, written in one pair of charts."""

    def __init__(self, source, target, base_rules, fiber_rules, name="", source_name="", target_name=""):
        super().__init__(source, target, base_rules, fiber_rules)
        self.name = name
        self.source_name = source_name
        self.target_name = target_name

    def _rebuild(self, source, target, base_rules, fiber_rules, **kw):
        return FilteredMorphism(
            source, target, base_rules, fiber_rules,
            name=kw.get("name", self.name),
            source_name=kw.get("source_name", self.source_name),
            target_name=kw.get("target_name", self.target_name),
        )


def identity_map(frame, cls=BundleMap, **kwargs):
    K = frame.field
    base = {b: K.gen(b) for b in frame.base}
    fibers = {f: frame.var(f) for f in frame.fiber_names}
    if cls is TransitionMap:
        return TransitionMap(kwargs.get("source_chart"), kwargs.get("target_chart"), frame, base, fibers)
    if cls is FilteredMorphism:
        return FilteredMorphism(frame, frame, base, fibers, **kwargs)
    return BundleMap(frame, frame, base, fibers)


def compose_rules(first, second):
    """Rules of ``second`` after ``first`` (first: U -> V, second: V -> W), over U."""
    if first.target is not second.source and first.target != second.source:
        raise FrameMismatch("target frame of the first map differs from source of the second")
    first.check_complete()
    src = first.source
    base_sub = None if first.is_base_identity() else first.base_rules
    mid = second.source.field
    if base_sub is None:
        base = {b: src.field.convert(f) for b, f in second.base_rules.items()}
    else:
        base = {b: mid.substitute(f, base_sub, src.field) for b, f in second.base_rules.items()}
    cache = {}
    fiber = {
        n: p.substitute(first.fiber_rules, base_sub, src, cache)
        for n, p in second.fiber_rules.items()
    }
    return base, fiber


def compose_transitions(first, second):
    base, fiber = compose_rules(first, second)
    return TransitionMap(first.source_chart, second.target_chart, first.source, base, fiber)


def compose_morphisms(first, second):
    """``second`` after ``first`` for first: F -> G and second: G -> H."""
    base, fiber = compose_rules(first, second)
    name = f"{second.name}.{first.name}" if first.name and second.name else ""
    return FilteredMorphism(
        first.source, second.target, base, fiber,
        name=name, source_name=first.source_name, target_name=second.target_name,
    )


def compose(first, second):
    base, fiber = compose_rules(first, second)
    return BundleMap(first.source, second.target, base, fiber)


# -- reports ---------------------------------------------------------------


@dataclass
class Verdict:
    check: str
    subject: str
    passed: bool
    failure: str = ""
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "check": self.check,
            "subject": self.subject,
            "passed": self.passed,
            "failure": self.failure or None,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    subject: str
    verdicts: list = field(default_factory=list)

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    @property
    def failures(self):
        return [v for v in self.verdicts if not v.passed]

    def add(self, verdict):
        self.verdicts.append(verdict)

    def extend(self, report, prefix=""):
        for v in report.verdicts:
            subject = f"{prefix}{v.subject}" if prefix else v.subject
            self.verdicts.append(Verdict(v.check, subject, v.passed, v.failure, v.detail))

    def find(self, check=None, subject=None):
        return [
            v for v in self.verdicts
            if (check is None or v.check == check) and (subject is None or v.subject == subject)
        ]

    def to_dict(self):
        return {
            "kind": "validation_report",
            "subject": self.subject,
            "passed": self.passed,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def _fmt(x):
    from .dsl import format_base, format_polynomial

    if isinstance(x, WeightedPolynomial):
        return format_polynomial(x)
    return format_base(x)


def degree_verdicts(m):
    """Per target fiber coordinate: every monomial has weight <= the coordinate's weight."""
    out = []
    for f in m.target.fibers:
        p = m.fiber_rules[f.name]
        bad = [mono for mono in p.terms if not weight_le(monomial_weight(p.frame, mono), f.weight)]
        if bad:
            worst = bad[0]
            out.append(Verdict(
                "degree", f.name, False, "DegreeViolation",
                {
                    "allowed": list(f.weight),
                    "monomial": _fmt(WeightedPolynomial._raw(p.frame, {worst: p.frame.field.one})),
                    "weight": list(monomial_weight(p.frame, worst)),
                    "offending": len(bad),
                },
            ))
        else:
            out.append(Verdict("degree", f.name, True, detail={"allowed": list(f.weight)}))
    return out


def base_dependency_verdicts(m):
    """Horizontal base rules may depend on horizontal source coordinates only."""
    K = m.source.field
    vertical = set(m.source.vertical)
    out = []
    for b in m.target.horizontal:
        used = set(K.free(m.base_rules[b])) & vertical
        if used:
            out.append(Verdict(
                "base_dependency", b, False, "VerticalDependence",
                {"depends_on": sorted(used)},
            ))
    return out


def _check_axes(m):
    if m.source.axes != m.target.axes:
        raise FrameMismatch("source and target frames have different numbers of weight axes")


def validate_transition(tau, frame=None):
    frame = tau.source if frame is None else frame
    if tau.source != frame or tau.target != frame:
        raise FrameMismatch("transition is not over the given frame")
    tau.check_complete()
    label = f"{tau.source_chart}->{tau.target_chart}" if isinstance(tau, TransitionMap) else "map"
    report = ValidationReport(label)
    for v in degree_verdicts(tau):
        report.add(v)
    for v in base_dependency_verdicts(tau):
        report.add(v)
    K = frame.field
    blocks = [("base", frame.base, tau.base_jacobian())]
    for w in sorted({f.weight for f in frame.fibers}, key=lambda w: (total(w), w)):
        _, _, mat = tau.linear_block(w)
        blocks.append((w, None, mat))
    for w, _, mat in blocks:
        d = linalg.det(mat, K.one)
        subject = "base" if w == "base" else ",".join(map(str, w))
        detail = {"determinant": _fmt(d), "size": len(mat)}
        if w != "base":
            detail["weight"] = list(w)
        if d:
            report.add(Verdict("linear_block", subject, True, detail=detail))
        else:
            report.add(Verdict("linear_block", subject, False, "SingularLinearPart", detail))
    return report


def validate_morphism(phi):
    _check_axes(phi)
    phi.check_complete()
    report = ValidationReport(getattr(phi, "name", "") or "morphism")
    for v in degree_verdicts(phi):
        report.add(v)
    for v in base_dependency_verdicts(phi):
        report.add(v)
    return report


def map_residual(m, reference):
    """Coordinates on which ``m`` and ``reference`` disagree, rendered as text."""
    diff = {}
    for b, f in reference.base_rules.items():
        g = m.base_rules.get(b)
        if g != f:
            diff[b] = {"found": _fmt(g) if g is not None else None, "expected": _fmt(f)}
    for n, p in reference.fiber_rules.items():
        q = m.fiber_rules.get(n)
        if q != p:
            diff[n] = {"found": _fmt(q) if q is not None else None, "expected": _fmt(p)}
    return diff


# -- atlases ---------------------------------------------------------------


class Atlas:
    """Charts sharing one frame, transitions between them, declared overlaps.

    When no overlaps are declared, pairs are inferred from transitions present
    in both directions and triples from every chain U->V->W whose shortcut
    U->W is also present.
    """

    def __init__(self, charts, transitions, pairs=None, triples=None):
        self.charts = tuple(charts)
        self.transitions = {}
        for t in transitions:
            key = (t.source_chart, t.target_chart)
            if key in self.transitions:
                raise ValueError(f"duplicate transition {key[0]} -> {key[1]}")
            self.transitions[key] = t
        self.pairs = None if pairs is None else tuple(tuple(p) for p in pairs)
        self.triples = None if triples is None else tuple(tuple(t) for t in triples)
        unknown = {c for key in self.transitions for c in key} - set(self.charts)
        for group in (self.pairs or ()) + (self.triples or ()):
            unknown |= set(group) - set(self.charts)
        if unknown:
            raise MissingTransition(f"undeclared charts {sorted(unknown)}")

    def __eq__(self, other):
        if not isinstance(other, Atlas):
            return NotImplemented
        return (
            self.charts == other.charts
            and self.transitions == other.transitions
            and self.pairs == other.pairs
            and self.triples == other.triples
        )

    __hash__ = None

    def transition(self, u, v):
        try:
            return self.transitions[(u, v)]
        except KeyError:
            raise MissingTransition(f"no transition {u} -> {v}") from None

    def overlap_pairs(self):
        if self.pairs is not None:
            return self.pairs
        out = []
        for i, u in enumerate(self.charts):
            for v in self.charts[i + 1:]:
                if (u, v) in self.transitions and (v, u) in self.transitions:
                    out.append((u, v))
        return tuple(out)

    def overlap_triples(self):
        if self.triples is not None:
            return self.triples
        t = self.transitions
        return tuple(
            (u, v, w) for u, v, w in permutations(self.charts, 3)
            if (u, v) in t and (v, w) in t and (u, w) in t
        )

    def map_transitions(self, fn):
        return Atlas(self.charts, [fn(t) for t in self.transitions.values()], self.pairs, self.triples)


@dataclass(eq=True)
class FilteredBundleSpec:
    name: str
    frame: CoordinateFrame
    atlas: Atlas

    @property
    def degree(self):
        return self.frame.degree

    @property
    def rank(self):
        return self.frame.rank

    def transitions(self):
        return list(self.atlas.transitions.values())

    def map_transitions(self, fn, frame=None, name=None):
        return FilteredBundleSpec(
            self.name if name is None else name,
            self.frame if frame is None else frame,
            self.atlas.map_transitions(fn),
        )


def check_inverse_pairs(atlas):
    report = ValidationReport("inverse_pairs")
    for u, v in atlas.overlap_pairs():
        t_uv = atlas.transition(u, v)
        t_vu = atlas.transition(v, u)
        detail = {}
        for a, b, there in ((t_uv, t_vu, u), (t_vu, t_uv, v)):
            comp = compose_transitions(a, b)
            res = map_residual(comp, identity_map(comp.source))
            if res:
                detail[f"{there}->{there}"] = res
        if detail:
            report.add(Verdict("inverse", f"{u}<->{v}", False, "NotInverse", {"residual": detail}))
        else:
            report.add(Verdict("inverse", f"{u}<->{v}", True))
    return report


def check_cocycle(atlas):
    report = ValidationReport("cocycle")
    for u, v, w in atlas.overlap_triples():
        comp = compose_transitions(atlas.transition(u, v), atlas.transition(v, w))
        res = map_residual(comp, atlas.transition(u, w))
        subject = f"{u}->{v}->{w}"
        if res:
            report.add(Verdict("cocycle", subject, False, "CocycleViolation", {"discrepancy": res}))
        else:
            report.add(Verdict("cocycle", subject, True))
    return report


def validate_bundle(bundle):
    """Every transition, every declared inverse pair and every declared triple."""
    report = ValidationReport(bundle.name)
    for t in bundle.atlas.transitions.values():
        if t.source != bundle.frame:
            raise FrameMismatch(f"transition {t.source_chart}->{t.target_chart} is not over the bundle frame")
        report.extend(validate_transition(t, bundle.frame), prefix=f"{t.source_chart}->{t.target_chart}:")
    report.extend(check_inverse_pairs(bundle.atlas))
    report.extend(check_cocycle(bundle.atlas))
    return report


# -- inverses ----------------------------------------------------------------


def _affine_base_inverse(m):
    """Invert a base map that is affine-linear with constant coefficients."""
    from .coefficients import is_constant

    K_src, K_tgt = m.source.field, m.target.field
    src, tgt = m.source.base, m.target.base
    if len(src) != len(tgt):
        raise ValueError("base map between spaces of different dimension")
    jac = m.base_jacobian()
    if not all(is_constant(e) for row in jac for e in row):
        raise ValueError("base map is not affine-linear; pass base_inverse explicitly")
    offset = [K_src.substitute(m.base_rules[a], {b: K_tgt.zero for b in src}, K_tgt) for a in tgt]
    inv = linalg.inverse([[K_tgt.convert(e) for e in row] for row in jac], K_tgt.one)
    shifted = [K_tgt.gen(a) - off for a, off in zip(tgt, offset)]
    return {
        b: sum((inv[i][j] * shifted[j] for j in range(len(tgt))), K_tgt.zero)
        for i, b in enumerate(src)
    }


def invert_map(m, base_inverse=None):
    """The inverse of an invertible graded-affine map, as a map target -> source.

    Fiber coordinates are solved weight block by weight block.  The base
    inverse is computed when the base map is affine-linear; otherwise it must
    be supplied as ``{source base name: function of the target base}``.
    """
    m.check_complete()
    if base_inverse is None:
        base_inverse = _affine_base_inverse(m)
    src, tgt = m.source, m.target
    K = tgt.field
    inv_rules = {}
    for w in sorted({f.weight for f in tgt.fibers}, key=lambda w: (total(w), w)):
        rows, cols, block = m.linear_block(w)
        if len(rows) != len(cols):
            raise SingularLinearPart(f"weight block {w} is not square")
        block_inv = linalg.inverse(block, src.field.one)
        pieces = []
        for r in rows:
            p = m.fiber_rules[r]
            rest = p - sum(
                (WeightedPolynomial.constant(src, p.linear_coefficient(c)) * src.var(c) for c in cols),
                WeightedPolynomial.zero(src),
            )
            rest = rest.substitute(inv_rules, base_inverse, tgt)
            pieces.append(tgt.var(r) - rest)
        for i, c in enumerate(cols):
            acc = WeightedPolynomial.zero(tgt)
            for j in range(len(rows)):
                coeff = src.field.substitute(block_inv[i][j], base_inverse, K)
                acc = acc + pieces[j].scale(coeff)
            inv_rules[c] = acc
    return BundleMap(tgt, src, base_inverse, inv_rules)


def inverse_transition(tau, base_inverse=None):
    inv = invert_map(tau, base_inverse)
    return TransitionMap(tau.target_chart, tau.source_chart, tau.source, inv.base_rules, inv.fiber_rules)
