"""Command-line driver.

Exit status: 0 on success or a passing check, 1 when a check fails or the
input does not satisfy a construction's requirements, 2 on usage and parse
errors.
"""

import argparse
import sys

from . import functors, machine
from .bundles import FilteredBundleSpec, FilteredMorphism, validate_bundle, validate_morphism
from .dsl import BundleDocument, format_base_polynomial, parse, serialize
from .errors import DSLError, FiltraError, FrameMismatch
from .graded import FiltrationPresentation, compute_rank, extract_homogeneous_generators
from .towers import AffineTowerSpec, check_filterable_atlas, tower_of

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# name -> (bundle functor, morphism functor or None)
FUNCTORS = {
    "gr": (functors.gr_bundle, functors.gr_morphism),
    "tangent": (functors.tangent_lift, functors.tangent_lift_morphism),
    "vertical": (functors.vertical_lift, functors.vertical_lift_morphism),
    "dualvert": (functors.dual_vertical_lift, None),
    "lin": (functors.linearise, functors.linearise_morphism),
    "totw": (functors.total_weight, functors.total_weight_morphism),
    "jet": (functors.jet_prolong, functors.jet_prolong_morphism),
}


def build_parser():
    p = argparse.ArgumentParser(prog="filtra", description="Exact computations with filtered bundles.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "check": "validate bundles and morphisms",
        "gr": "associated graded bundle or morphism",
        "tangent": "tangent lift",
        "vertical": "vertical lift",
        "dualvert": "dual vertical lift",
        "lin": "linearisation",
        "totw": "collapse to total weight",
        "jet": "jet prolongation (use --order)",
        "rank": "rank of a filtration presentation",
        "gens": "homogeneous generators of a filtration presentation",
        "tower-check": "filterability of a tower atlas",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("file", help="input document, or - for standard input")
        s.add_argument("--object", help="name of the declaration to act on")
        s.add_argument("--format", choices=("dsl", "machine"), default="dsl")
        s.add_argument("-o", "--output", help="write the result here instead of standard output")
        if name == "jet":
            s.add_argument("--order", type=int, default=1)
    return p


def _read(path):
    if path == "-":
        return sys.stdin.read(), "<stdin>"
    with open(path, encoding="utf-8") as fh:
        return fh.read(), path


def _select(doc, name, kinds, command):
    if name is not None:
        try:
            obj = doc.get(name)
        except KeyError:
            raise UsageError(f"no declaration named {name!r}") from None
        if not isinstance(obj, kinds):
            raise UsageError(f"{command} cannot act on {name!r} ({type(obj).__name__})")
        return obj
    for d in doc:
        if isinstance(d, kinds):
            return d
    raise UsageError(f"the document has no declaration {command} can act on")


def format_report(report):
    head = "PASS" if report.passed else "FAIL"
    lines = [f"{head} {report.subject}"]
    for v in report.verdicts:
        mark = "ok  " if v.passed else "FAIL"
        extra = f" {v.failure}" if v.failure else ""
        detail = ", ".join(f"{k}={v.detail[k]}" for k in v.detail)
        lines.append(f"  {mark} {v.check} {v.subject}{extra}" + (f" [{detail}]" if detail else ""))
    return "\n".join(lines) + "\n"


def _emit_reports(reports, fmt):
    if fmt == "machine":
        return machine.dumps(machine.envelope([r.to_dict() for r in reports]))
    return "".join(format_report(r) for r in reports)


def _require_valid(obj):
    report = validate_morphism(obj) if isinstance(obj, FilteredMorphism) else validate_bundle(obj)
    if not report.passed:
        return report
    return None


def cmd_check(doc, args):
    if args.object is not None:
        targets = [_select(doc, args.object, (FilteredBundleSpec, FilteredMorphism), "check")]
    else:
        targets = [d for d in doc if isinstance(d, (FilteredBundleSpec, FilteredMorphism))]
    reports = [
        validate_morphism(t) if isinstance(t, FilteredMorphism) else validate_bundle(t) for t in targets
    ]
    ok = all(r.passed for r in reports)
    return _emit_reports(reports, args.format), EXIT_OK if ok else EXIT_FAIL


def cmd_functor(doc, args):
    bundle_fn, morphism_fn = FUNCTORS[args.command]
    kinds = (FilteredBundleSpec, FilteredMorphism) if morphism_fn else (FilteredBundleSpec,)
    obj = _select(doc, args.object, kinds, args.command)
    extra = (args.order,) if args.command == "jet" else ()
    if args.command == "jet" and args.order < 1:
        raise UsageError("--order must be positive")
    inputs = [obj]
    if isinstance(obj, FilteredMorphism):
        names = dict.fromkeys([obj.source_name, obj.target_name])
        inputs = [doc.get(n) for n in names] + [obj]
    for item in inputs:
        bad = _require_valid(item)
        if bad is not None:
            return _emit_reports([bad], args.format), EXIT_FAIL
    out = BundleDocument()
    for item in inputs:
        fn = morphism_fn if isinstance(item, FilteredMorphism) else bundle_fn
        out.declarations.append(fn(item, *extra))
    return serialize(out, args.format), EXIT_OK


def cmd_graded(doc, args):
    P = _select(doc, args.object, (FiltrationPresentation,), args.command)
    if args.command == "rank":
        d = compute_rank(P)
        if args.format == "machine":
            return machine.dumps(machine.envelope([machine.rank_to_machine(P.name, d)])), EXIT_OK
        return f"rank {P.name} ({', '.join(map(str, d))})\n", EXIT_OK
    gens = extract_homogeneous_generators(P)
    if args.format == "machine":
        return machine.dumps(machine.envelope([machine.generators_to_machine(P, gens)])), EXIT_OK
    names = list(P.variables)
    lines = [f"generators {P.name}"] + [f"  weight {w}: {format_base_polynomial(g, names)}" for g, w in gens]
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_tower(doc, args):
    obj = _select(doc, args.object, (AffineTowerSpec, FilteredBundleSpec), args.command)
    tower = tower_of(obj) if isinstance(obj, FilteredBundleSpec) else obj
    report = check_filterable_atlas(tower)
    code = EXIT_OK if report.passed else EXIT_FAIL
    if args.format == "machine":
        return machine.dumps(machine.envelope([report.to_dict()])), code
    text = format_report(report)
    if report.bundle_report is not None:
        text += format_report(report.bundle_report)
    if report.passed:
        text += "\n" + serialize(report.bundle)
    return text, code


def run_command(argv=None, stdout=None, stderr=None):
    """Run the CLI; returns the exit status instead of exiting."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        text, source = _read(args.file)
    except OSError as e:
        print(f"filtra: {e}", file=stderr)
        return EXIT_USAGE
    try:
        doc = parse(text)
        if args.command == "check":
            out, code = cmd_check(doc, args)
        elif args.command in FUNCTORS:
            out, code = cmd_functor(doc, args)
        elif args.command in ("rank", "gens"):
            out, code = cmd_graded(doc, args)
        else:
            out, code = cmd_tower(doc, args)
    except DSLError as e:
        print(f"{source}:{e}", file=stderr)
        return EXIT_USAGE
    except (UsageError, FrameMismatch) as e:
        print(f"filtra: {e}", file=stderr)
        return EXIT_USAGE
    except FiltraError as e:
        print(f"filtra: {type(e).__name__}: {e}", file=stderr)
        return EXIT_FAIL
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        stdout.write(out)
    return code


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
