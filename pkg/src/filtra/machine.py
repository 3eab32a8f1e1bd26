"""Structured (JSON-ready) rendering of documents and reports.

Field names are frozen by ``schemas/machine-v1.json``.  Expressions are
rendered in the DSL's expression syntax so they can be re-parsed.
"""

import json
from importlib import resources

FORMAT = "filtra-machine"
VERSION = 1


def _rules(m):
    from .dsl import format_base, format_polynomial

    out = [
        {"coordinate": b, "expression": format_base(m.base_rules[b])}
        for b in m.target.base if b in m.base_rules
    ]
    out += [
        {"coordinate": f, "expression": format_polynomial(m.fiber_rules[f])}
        for f in m.target.fiber_names if f in m.fiber_rules
    ]
    return out


def _atlas(atlas):
    return {
        "charts": list(atlas.charts),
        "overlaps": {
            "pairs": None if atlas.pairs is None else [list(p) for p in atlas.pairs],
            "triples": None if atlas.triples is None else [list(t) for t in atlas.triples],
        },
        "transitions": [
            {"source": t.source_chart, "target": t.target_chart, "rules": _rules(t)}
            for t in atlas.transitions.values()
        ],
    }


def _horizontal(frame):
    return [b for b in frame.base if b not in frame.vertical]


def bundle_to_machine(b):
    f = b.frame
    return {
        "kind": "bundle",
        "name": b.name,
        "axes": f.axes,
        "degree": list(f.degree),
        "rank": list(f.rank),
        "base": _horizontal(f),
        "vertical": list(f.vertical),
        "fibers": [{"name": x.name, "weight": list(x.weight)} for x in f.fibers],
        **_atlas(b.atlas),
    }


def morphism_to_machine(m):
    return {
        "kind": "morphism",
        "name": m.name,
        "source": m.source_name,
        "target": m.target_name,
        "rules": _rules(m),
    }


def tower_to_machine(t):
    return {
        "kind": "tower",
        "name": t.name,
        "base": _horizontal(t.frame),
        "vertical": list(t.frame.vertical),
        "levels": [list(level) for level in t.levels],
        **_atlas(t.atlas),
    }


def filtration_to_machine(p):
    from .dsl import format_base_polynomial

    return {
        "kind": "filtration",
        "name": p.name,
        "variables": list(p.variables),
        "bound": p.bound,
        "levels": [[format_base_polynomial(g, list(p.variables)) for g in lvl] for lvl in p.levels],
    }


def declaration_to_machine(d):
    from .bundles import FilteredBundleSpec, FilteredMorphism
    from .graded import FiltrationPresentation
    from .towers import AffineTowerSpec

    if isinstance(d, FilteredBundleSpec):
        return bundle_to_machine(d)
    if isinstance(d, FilteredMorphism):
        return morphism_to_machine(d)
    if isinstance(d, AffineTowerSpec):
        return tower_to_machine(d)
    if isinstance(d, FiltrationPresentation):
        return filtration_to_machine(d)
    raise TypeError(f"cannot render {type(d).__name__}")


def document_to_machine(doc):
    return envelope([declaration_to_machine(d) for d in doc.declarations])


def rank_to_machine(name, rank):
    return {"kind": "rank", "name": name, "rank": list(rank)}


def generators_to_machine(presentation, generators):
    from .dsl import format_base_polynomial

    names = list(presentation.variables)
    return {
        "kind": "generators",
        "name": presentation.name,
        "generators": [
            {"polynomial": format_base_polynomial(g, names), "weight": w} for g, w in generators
        ],
    }


def envelope(items):
    return {"format": FORMAT, "version": VERSION, "items": items}


def dumps(payload):
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def schema():
    text = resources.files("filtra").joinpath("schemas/machine-v1.json").read_text()
    return json.loads(text)
