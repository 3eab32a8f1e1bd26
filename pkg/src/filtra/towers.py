"""Affine towers and the atlas-level filterability diagnostic.

A tower stacks affine fibrations: the rule of a level-``i`` coordinate is
affine in the level-``i`` coordinates, with a linear part ``L_i`` and a shift
``c_i`` that may depend on the base and on every lower level.  The presented
atlas is filterable when each ``L_i`` depends on the base alone and each
``c_i`` has weighted degree at most ``i`` once level ``j`` carries weight
``j``.  Coordinate changes that might make a failing atlas filterable are not
searched for.
"""

from dataclasses import dataclass, field

from .algebra import CoordinateFrame, WeightedPolynomial, monomial_weight
from .bundles import (
    Atlas,
    FilteredBundleSpec,
    TransitionMap,
    ValidationReport,
    Verdict,
    _fmt,
    validate_bundle,
)
from .errors import FrameMismatch, SingularLinearPart


@dataclass(eq=True)
class AffineTowerSpec:
    name: str
    frame: CoordinateFrame
    levels: tuple
    atlas: Atlas

    @staticmethod
    def frame_for(base, levels, vertical=()):
        fibers = [(n, (i,)) for i, level in enumerate(levels, start=1) for n in level]
        return CoordinateFrame(tuple(base), fibers, 1, (len(levels),), tuple(vertical))

    @property
    def height(self):
        return len(self.levels)

    def level_of(self, name):
        for i, level in enumerate(self.levels, start=1):
            if name in level:
                return i
        raise KeyError(name)


def tower_of(bundle):
    """Stratify a single-axis filtered bundle by weight."""
    frame = bundle.frame
    if frame.axes != 1:
        raise FrameMismatch("towers are built from single-axis bundles")
    k = frame.degree[0]
    levels = tuple(tuple(f.name for f in frame.fibers if f.weight == (i,)) for i in range(1, k + 1))
    tframe = AffineTowerSpec.frame_for(frame.base, levels, frame.vertical)
    atlas = bundle.atlas.map_transitions(
        lambda t: TransitionMap(
            t.source_chart, t.target_chart, tframe,
            t.base_rules, {n: p.embed(tframe) for n, p in t.fiber_rules.items()},
        )
    )
    return AffineTowerSpec(bundle.name, tframe, levels, atlas)


def split_affine(rule, level_names):
    """Split ``rule`` as ``sum_c L[c] * c + shift`` over the coordinates ``level_names``.

    Returns ``(L, shift)`` or raises ``ValueError`` when the rule is not affine
    in those coordinates.
    """
    frame = rule.frame
    names = set(level_names)
    linear = {c: {} for c in level_names}
    shift = {}
    for m, coeff in rule.terms.items():
        hits = [(n, e) for n, e in m if n in names]
        if not hits:
            shift[m] = coeff
            continue
        if len(hits) > 1 or hits[0][1] > 1:
            raise ValueError("rule is not affine in its own level")
        c = hits[0][0]
        rest = tuple((n, e) for n, e in m if n != c)
        linear[c][rest] = coeff
    return (
        {c: WeightedPolynomial._raw(frame, t) for c, t in linear.items()},
        WeightedPolynomial._raw(frame, shift),
    )


def _poly_det(mat, one):
    n = len(mat)
    if n == 0:
        return one
    if n == 1:
        return mat[0][0]
    total = one - one
    for j in range(n):
        if not mat[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * _poly_det(minor, one)
        total = total - term if j % 2 else total + term
    return total


def validate_tower(tower):
    """Structural tower axioms: every level rule is affine over strictly lower levels."""
    report = ValidationReport(tower.name)
    frame = tower.frame
    one = WeightedPolynomial.constant(frame, 1)
    for t in tower.atlas.transitions.values():
        t.check_complete()
        subject = f"{t.source_chart}->{t.target_chart}"
        for i, level in enumerate(tower.levels, start=1):
            if not level:
                continue
            rows = []
            ok = True
            for r in level:
                rule = t.fiber_rules[r]
                higher = {n for n in rule.fiber_variables() if tower.level_of(n) > i}
                if higher:
                    report.add(Verdict("tower_level", f"{subject}:{r}", False, "HigherLevelReference",
                                       {"depends_on": sorted(higher)}))
                    ok = False
                    continue
                try:
                    L, _ = split_affine(rule, level)
                except ValueError:
                    report.add(Verdict("tower_level", f"{subject}:{r}", False, "NotAffine", {"level": i}))
                    ok = False
                    continue
                rows.append([L[c] for c in level])
            if not ok:
                continue
            d = _poly_det(rows, one)
            detail = {"level": i, "determinant": _fmt(d)}
            if d:
                report.add(Verdict("tower_linear_part", f"{subject}:level{i}", True, detail=detail))
            else:
                report.add(Verdict("tower_linear_part", f"{subject}:level{i}", False,
                                   SingularLinearPart.__name__, detail))
    return report


@dataclass
class FilterabilityReport:
    subject: str
    verdicts: list = field(default_factory=list)
    bundle: FilteredBundleSpec = None
    bundle_report: ValidationReport = None

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts) and (
            self.bundle_report is not None and self.bundle_report.passed
        )

    @property
    def failures(self):
        out = [v for v in self.verdicts if not v.passed]
        if self.bundle_report is not None:
            out += self.bundle_report.failures
        return out

    def offenders(self):
        return [v for v in self.verdicts if v.check == "tower_linear_dependence" and not v.passed]

    def to_dict(self):
        from .machine import bundle_to_machine

        return {
            "kind": "filterability_report",
            "subject": self.subject,
            "passed": self.passed,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "bundle": bundle_to_machine(self.bundle) if self.bundle is not None else None,
            "bundle_report": self.bundle_report.to_dict() if self.bundle_report is not None else None,
        }


def check_filterable_atlas(tower):
    """Decide whether the presented tower atlas is a filtered atlas.

    On success the report carries the induced filtered bundle (weight equals
    level) together with its full validation.
    """
    report = FilterabilityReport(tower.name)
    structural = validate_tower(tower)
    report.verdicts.extend(structural.verdicts)
    if not structural.passed:
        return report
    frame = tower.frame
    for t in tower.atlas.transitions.values():
        subject = f"{t.source_chart}->{t.target_chart}"
        for i, level in enumerate(tower.levels, start=1):
            for r in level:
                L, shift = split_affine(t.fiber_rules[r], level)
                clean = True
                if i >= 2:
                    for c in level:
                        deps = sorted(L[c].fiber_variables(), key=frame.order)
                        if deps:
                            clean = False
                            report.verdicts.append(Verdict(
                                "tower_linear_dependence", f"{subject}:{r}", False, "FiberDependentLinearPart",
                                {"level": i, "entry": [r, c], "value": _fmt(L[c]), "depends_on": deps},
                            ))
                bad = [m for m in shift.terms if monomial_weight(frame, m)[0] > i]
                if bad:
                    clean = False
                    worst = max(bad, key=lambda m: monomial_weight(frame, m))
                    report.verdicts.append(Verdict(
                        "tower_shift_degree", f"{subject}:{r}", False, "DegreeViolation",
                        {
                            "level": i,
                            "monomial": _fmt(WeightedPolynomial._raw(frame, {worst: frame.field.one})),
                            "weight": list(monomial_weight(frame, worst)),
                        },
                    ))
                if clean:
                    report.verdicts.append(Verdict("tower_filterable", f"{subject}:{r}", True, detail={"level": i}))
    if all(v.passed for v in report.verdicts):
        report.bundle = FilteredBundleSpec(tower.name, frame, tower.atlas)
        report.bundle_report = validate_bundle(report.bundle)
    return report
