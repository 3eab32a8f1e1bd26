"""The bundle-definition language: lexer, parser, pretty-printer and documents.

A document is a sequence of blocks::

    bundle F
      axes 1
      degree (2)
      base x
      coord Y weight (1)
      coord Z weight (2)
      chart U
      chart V
      overlap U V
      transition U -> V {
        x' = x;
        Y' = 2*Y + x;
        Z' = Z + Y^2;
      }

    morphism phi : F -> G { x' = x; Y' = Y; }

    tower T base x level y level z chart U chart V transition U -> V { ... }

    filtration P vars z1 z2 bound 2 level 0 { 1 } level 1 { 1, z1 } ...

Expressions use rationals, declared symbols, ``+ - * /``, ``^`` with a
non-negative integer exponent, and parentheses.  Denominators must not
involve fiber coordinates.  ``#`` starts a comment.  Jet coordinates carry a
multi-index suffix written ``name;x.x.t`` (no blank before the ``;``).
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import QQ

from .algebra import CoordinateFrame, Indeterminate, WeightedPolynomial
from .bundles import Atlas, FilteredBundleSpec, FilteredMorphism, TransitionMap
from .errors import DSLError, DSLSyntaxError, FiberDenominator, UndeclaredSymbol

KEYWORDS = {
    "bundle", "morphism", "tower", "filtration", "axes", "degree", "base", "vertical",
    "coord", "weight", "chart", "overlap", "transition", "level", "vars", "bound",
}
BLOCK_KEYWORDS = ("bundle", "morphism", "tower", "filtration")

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:;[A-Za-z0-9_.]+)?)
  | (?P<int>[0-9]+)
  | (?P<arrow>->)
  | (?P<op>[(){},;:'=+\-*/^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- expression trees -------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


def evaluate(tree, symbol, constant, divide):
    """Fold an expression tree with the given leaf and division handlers."""
    if isinstance(tree, Num):
        return constant(tree.value)
    if isinstance(tree, Sym):
        return symbol(tree)
    if isinstance(tree, Neg):
        return -evaluate(tree.operand, symbol, constant, divide)
    if isinstance(tree, Pow):
        return evaluate(tree.base, symbol, constant, divide) ** tree.exponent
    a = evaluate(tree.left, symbol, constant, divide)
    b = evaluate(tree.right, symbol, constant, divide)
    if tree.op == "+":
        return a + b
    if tree.op == "-":
        return a - b
    if tree.op == "*":
        return a * b
    return divide(a, b, tree)


def polynomial_from_tree(tree, frame):
    """Evaluate an expression to a weighted polynomial over ``frame``."""
    K = frame.field

    def symbol(s):
        if s.name in frame.base or frame.has_fiber(s.name):
            return frame.var(s.name)
        raise UndeclaredSymbol(f"undeclared symbol {s.name!r}", s.line, s.column)

    def constant(q):
        return WeightedPolynomial.constant(frame, q)

    def divide(a, b, node):
        if not b.is_constant():
            raise FiberDenominator(
                "division by an expression involving fiber coordinates", node.line, node.column
            )
        c = b.constant_term()
        if not c:
            raise DSLError("division by zero", node.line, node.column)
        return a.scale(K.one / c)

    return evaluate(tree, symbol, constant, divide)


# -- parser ------------------------------------------------------------------


@dataclass
class BundleDocument:
    declarations: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.declarations)

    def __len__(self):
        return len(self.declarations)

    def get(self, name):
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    def names(self):
        return [d.name for d in self.declarations]

    def __eq__(self, other):
        if not isinstance(other, BundleDocument):
            return NotImplemented
        return [_decl_key(d) for d in self.declarations] == [_decl_key(d) for d in other.declarations]


def _decl_key(d):
    if isinstance(d, FilteredMorphism):
        return ("morphism", d.name, d.source_name, d.target_name, _MapKey(d))
    return (type(d).__name__, d)


class _MapKey:
    def __init__(self, m):
        self.m = m

    def __eq__(self, other):
        return self.m == other.m


class Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0
        self.bundles = {}

    # token helpers

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, expected=()):
        t = self.tok
        found = t.text or "end of input"
        raise DSLSyntaxError(f"{message}, found {found!r}", t.line, t.column, expected)

    def at(self, kind, text=None):
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_keyword(self, *words):
        return self.tok.kind == "name" and self.tok.text in words

    def take(self, kind, text=None, what=None):
        if not self.at(kind, text):
            self.error(f"expected {what or text or kind}", [repr(text) if text else kind])
        t = self.tok
        self.i += 1
        return t

    def keyword(self, word):
        if not self.at_keyword(word):
            self.error(f"expected keyword {word!r}", [repr(word)])
        self.i += 1

    def name(self, what="name"):
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.error(f"expected {what}", [what])
        self.i += 1
        return t.text

    def names(self, what="name"):
        out = []
        while self.tok.kind == "name" and self.tok.text not in KEYWORDS:
            out.append(self.name(what))
        return out

    def integer(self):
        return int(self.take("int", what="integer").text)

    def weight(self):
        self.take("op", "(")
        vals = [self.integer()]
        while self.at("op", ","):
            self.i += 1
            vals.append(self.integer())
        self.take("op", ")")
        return tuple(vals)

    # expressions

    def expr(self):
        tree = self.term()
        while self.at("op", "+") or self.at("op", "-"):
            t = self.tok
            self.i += 1
            tree = BinOp(t.text, tree, self.term(), t.line, t.column)
        return tree

    def term(self):
        tree = self.unary()
        while self.at("op", "*") or self.at("op", "/"):
            t = self.tok
            self.i += 1
            tree = BinOp(t.text, tree, self.unary(), t.line, t.column)
        return tree

    def unary(self):
        if self.at("op", "-"):
            self.i += 1
            return Neg(self.unary())
        if self.at("op", "+"):
            self.i += 1
            return self.unary()
        return self.power()

    def power(self):
        tree = self.atom()
        if self.at("op", "^"):
            self.i += 1
            tree = Pow(tree, self.integer())
        return tree

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Num(Fraction(int(t.text)))
        if t.kind == "name" and t.text not in KEYWORDS:
            self.i += 1
            return Sym(t.text, t.line, t.column)
        if self.at("op", "("):
            self.i += 1
            tree = self.expr()
            self.take("op", ")")
            return tree
        self.error("expected an expression", ["number", "symbol", "'('"])

    # blocks

    def document(self):
        doc = BundleDocument()
        seen = set()
        while not self.at("eof"):
            t = self.tok
            if self.at_keyword("bundle"):
                d = self.bundle()
                self.bundles[d.name] = d
            elif self.at_keyword("morphism"):
                d = self.morphism()
            elif self.at_keyword("tower"):
                d = self.tower()
            elif self.at_keyword("filtration"):
                d = self.filtration()
            else:
                self.error("expected a block", [repr(k) for k in BLOCK_KEYWORDS])
            if d.name in seen:
                raise DSLError(f"duplicate declaration {d.name!r}", t.line, t.column)
            seen.add(d.name)
            doc.declarations.append(d)
        return doc

    def base_section(self):
        self.keyword("base")
        base = self.names("base coordinate")
        vertical = []
        if self.at_keyword("vertical"):
            self.i += 1
            vertical = self.names("vertical coordinate")
            for v in vertical:
                if v not in base:
                    base.append(v)
        return base, vertical

    def charts_section(self):
        charts = []
        while self.at_keyword("chart"):
            self.i += 1
            charts.append(self.name("chart name"))
        if not charts:
            self.error("expected at least one chart", ["'chart'"])
        pairs, triples = [], []
        while self.at_keyword("overlap"):
            t = self.tok
            self.i += 1
            group = self.names("chart name")
            if len(group) == 2:
                pairs.append(tuple(group))
            elif len(group) == 3:
                triples.append(tuple(group))
            else:
                raise DSLSyntaxError("an overlap names two or three charts", t.line, t.column)
            for c in group:
                if c not in charts:
                    raise UndeclaredSymbol(f"undeclared chart {c!r}", t.line, t.column)
        declared = bool(pairs or triples)
        return charts, (pairs if declared else None), (triples if declared else None)

    def rules(self, source, target):
        opening = self.tok
        self.take("op", "{")
        base, fibers = {}, {}
        while not self.at("op", "}"):
            t = self.tok
            lhs = self.name("coordinate")
            if lhs in base or lhs in fibers:
                raise DSLError(f"duplicate rule for {lhs!r}", t.line, t.column)
            self.take("op", "'", what="prime")
            self.take("op", "=")
            tree = self.expr()
            self.take("op", ";")
            value = polynomial_from_tree(tree, source)
            if lhs in target.base:
                if not value.is_constant():
                    raise DSLError(f"base rule for {lhs!r} involves fiber coordinates", t.line, t.column)
                base[lhs] = value.constant_term()
            elif target.has_fiber(lhs):
                fibers[lhs] = value
            else:
                raise UndeclaredSymbol(f"undeclared target coordinate {lhs!r}", t.line, t.column)
        missing = [c for c in target.base + target.fiber_names if c not in base and c not in fibers]
        if missing:
            raise DSLError(f"no rule for {', '.join(missing)}", opening.line, opening.column)
        self.take("op", "}")
        return base, fibers

    def transitions(self, frame, charts):
        out = []
        while self.at_keyword("transition"):
            t = self.tok
            self.i += 1
            u = self.name("chart name")
            self.take("arrow", what="'->'")
            v = self.name("chart name")
            for c in (u, v):
                if c not in charts:
                    raise UndeclaredSymbol(f"undeclared chart {c!r}", t.line, t.column)
            base, fibers = self.rules(frame, frame)
            out.append(TransitionMap(u, v, frame, base, fibers))
        return out

    def bundle(self):
        start = self.tok
        self.keyword("bundle")
        name = self.name("bundle name")
        self.keyword("axes")
        axes = self.integer()
        self.keyword("degree")
        degree = self.weight()
        base, vertical = self.base_section()
        fibers = []
        while self.at_keyword("coord"):
            t = self.tok
            self.i += 1
            cname = self.name("coordinate name")
            self.keyword("weight")
            w = self.weight()
            try:
                fibers.append(Indeterminate(cname, w))
            except ValueError as e:
                raise DSLError(str(e), t.line, t.column) from None
        try:
            frame = CoordinateFrame(tuple(base), tuple(fibers), axes, degree, tuple(vertical))
        except (ValueError, KeyError) as e:
            raise DSLError(str(e), start.line, start.column) from None
        charts, pairs, triples = self.charts_section()
        transitions = self.transitions(frame, charts)
        try:
            atlas = Atlas(charts, transitions, pairs, triples)
        except (ValueError, KeyError) as e:
            raise DSLError(str(e), start.line, start.column) from None
        return FilteredBundleSpec(name, frame, atlas)

    def morphism(self):
        t0 = self.tok
        self.keyword("morphism")
        name = self.name("morphism name")
        self.take("op", ":")
        src_t = self.tok
        src = self.name("bundle name")
        self.take("arrow", what="'->'")
        tgt = self.name("bundle name")
        for b in (src, tgt):
            if b not in self.bundles:
                raise UndeclaredSymbol(f"undeclared bundle {b!r}", src_t.line, src_t.column)
        source, target = self.bundles[src].frame, self.bundles[tgt].frame
        if source.axes != target.axes:
            raise DSLError("morphism between bundles with different weight axes", t0.line, t0.column)
        base, fibers = self.rules(source, target)
        return FilteredMorphism(source, target, base, fibers, name=name, source_name=src, target_name=tgt)

    def tower(self):
        from .towers import AffineTowerSpec

        start = self.tok
        self.keyword("tower")
        name = self.name("tower name")
        base, vertical = self.base_section()
        levels = []
        while self.at_keyword("level"):
            self.i += 1
            levels.append(tuple(self.names("coordinate name")))
        try:
            frame = AffineTowerSpec.frame_for(base, levels, vertical)
        except (ValueError, KeyError) as e:
            raise DSLError(str(e), start.line, start.column) from None
        charts, pairs, triples = self.charts_section()
        transitions = self.transitions(frame, charts)
        return AffineTowerSpec(name, frame, tuple(levels), Atlas(charts, transitions, pairs, triples))

    def filtration(self):
        from .graded import FiltrationPresentation

        self.keyword("filtration")
        name = self.name("filtration name")
        self.keyword("vars")
        variables = self.names("variable")
        self.keyword("bound")
        bound = self.integer()
        ring = FiltrationPresentation.ring_for(variables)
        gens = dict(zip(variables, ring.gens))
        levels = []
        while self.at_keyword("level"):
            t = self.tok
            self.i += 1
            idx = self.integer()
            if idx != len(levels):
                raise DSLError(f"levels must be listed in order, expected level {len(levels)}", t.line, t.column)
            self.take("op", "{")
            polys = []
            while not self.at("op", "}"):
                polys.append(self._ring_value(self.expr(), ring, gens))
                if not self.at("op", "}"):
                    self.take("op", ",")
            self.take("op", "}")
            levels.append(tuple(polys))
        return FiltrationPresentation(name, tuple(variables), tuple(levels), bound)

    @staticmethod
    def _ring_value(tree, ring, gens):
        def symbol(s):
            if s.name in gens:
                return gens[s.name]
            raise UndeclaredSymbol(f"undeclared symbol {s.name!r}", s.line, s.column)

        def constant(q):
            return ring(QQ(q.numerator, q.denominator))

        def divide(a, b, node):
            if not b.is_ground:
                raise DSLError("filtration generators may only be divided by constants", node.line, node.column)
            if not b:
                raise DSLError("division by zero", node.line, node.column)
            return a * ring(1 / b.LC)

        return evaluate(tree, symbol, constant, divide)


def parse(text):
    return Parser(text).document()


def parse_expression(text, frame):
    p = Parser(text)
    tree = p.expr()
    p.take("eof", what="end of expression")
    return polynomial_from_tree(tree, frame)


# -- printing ------------------------------------------------------------------


def _fraction(q):
    q = Fraction(int(QQ.numer(q)), int(QQ.denom(q))) if not isinstance(q, (int, Fraction)) else Fraction(q)
    return q


def _monomial_text(pairs):
    return "*".join(name if e == 1 else f"{name}^{e}" for name, e in pairs)


def _join(terms):
    """Join ``(coefficient, monomial text)`` pairs into a sum."""
    out = ""
    for coeff, body in terms:
        if isinstance(coeff, str):
            piece, neg = (f"{_wrap(coeff)}*{body}" if body else coeff), False
        else:
            neg = coeff < 0
            a = abs(coeff)
            if not body:
                piece = str(a)
            elif a == 1:
                piece = body
            else:
                piece = f"{a}*{body}"
        if not out:
            out = f"-{piece}" if neg else piece
        else:
            out += f" - {piece}" if neg else f" + {piece}"
    return out or "0"


def format_base_polynomial(poly, names=None):
    names = names or [str(s) for s in poly.ring.symbols]
    terms = []
    for monom, coeff in poly.terms():
        pairs = [(n, e) for n, e in zip(names, monom) if e]
        terms.append((_fraction(coeff), _monomial_text(pairs)))
    return _join(terms)


def _wrap(text):
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+", text):
        return text
    return f"({text})"


def format_base(f):
    num = format_base_polynomial(f.numer)
    if f.denom == 1:
        return num
    return f"{_wrap(num)}/{_wrap(format_base_polynomial(f.denom))}"


def format_polynomial(p):
    from .coefficients import constant_value, is_constant

    frame = p.frame
    order = {n: i for i, n in enumerate(frame.fiber_names)}
    terms = []
    for m, c in p.sorted_terms():
        body = _monomial_text(sorted(m, key=lambda t: (order.get(t[0], len(order)), t[0])))
        if is_constant(c):
            terms.append((constant_value(c), body))
        else:
            terms.append((format_base(c), body))
    return _join(terms)


def _weight(w):
    return "(" + ", ".join(str(a) for a in w) + ")"


def _rules_text(m, indent="  "):
    lines = []
    for b in m.target.base:
        if b in m.base_rules:
            lines.append(f"{indent}  {b}' = {format_base(m.base_rules[b])};")
    for f in m.target.fiber_names:
        if f in m.fiber_rules:
            lines.append(f"{indent}  {f}' = {format_polynomial(m.fiber_rules[f])};")
    return "{\n" + "\n".join(lines) + ("\n" if lines else "") + indent + "}"


def _base_line(frame):
    horizontal = [b for b in frame.base if b not in frame.vertical]
    line = "  base" + "".join(f" {b}" for b in horizontal)
    if frame.vertical:
        line += " vertical" + "".join(f" {v}" for v in frame.vertical)
    return line


def _atlas_lines(atlas):
    lines = [f"  chart {c}" for c in atlas.charts]
    for group in (atlas.pairs or ()) + (atlas.triples or ()):
        lines.append("  overlap " + " ".join(group))
    for t in atlas.transitions.values():
        lines.append(f"  transition {t.source_chart} -> {t.target_chart} " + _rules_text(t))
    return lines


def format_bundle(b):
    f = b.frame
    lines = [f"bundle {b.name}", f"  axes {f.axes}", f"  degree {_weight(f.degree)}", _base_line(f)]
    lines += [f"  coord {x.name} weight {_weight(x.weight)}" for x in f.fibers]
    lines += _atlas_lines(b.atlas)
    return "\n".join(lines)


def format_morphism(m):
    return f"morphism {m.name} : {m.source_name} -> {m.target_name} " + _rules_text(m, "")


def format_tower(t):
    lines = [f"tower {t.name}", _base_line(t.frame)]
    lines += ["  level" + "".join(f" {n}" for n in level) for level in t.levels]
    lines += _atlas_lines(t.atlas)
    return "\n".join(lines)


def format_filtration(p):
    lines = [f"filtration {p.name}", "  vars " + " ".join(p.variables), f"  bound {p.bound}"]
    for i, level in enumerate(p.levels):
        body = ", ".join(format_base_polynomial(g, list(p.variables)) for g in level)
        lines.append(f"  level {i} {{ {body} }}")
    return "\n".join(lines)


def format_declaration(d):
    from .graded import FiltrationPresentation
    from .towers import AffineTowerSpec

    if isinstance(d, FilteredBundleSpec):
        return format_bundle(d)
    if isinstance(d, FilteredMorphism):
        return format_morphism(d)
    if isinstance(d, AffineTowerSpec):
        return format_tower(d)
    if isinstance(d, FiltrationPresentation):
        return format_filtration(d)
    raise TypeError(f"cannot serialize {type(d).__name__}")


def _as_document(doc):
    if isinstance(doc, BundleDocument):
        return doc
    return BundleDocument(list(doc) if isinstance(doc, (list, tuple)) else [doc])


def serialize(doc, format="dsl"):
    if format == "machine":
        from .machine import document_to_machine, dumps

        return dumps(document_to_machine(_as_document(doc)))
    if format != "dsl":
        raise ValueError(f"unknown format {format!r}")
    doc = _as_document(doc)
    return "".join(format_declaration(d) + "\n\n" for d in doc.declarations).rstrip("\n") + (
        "\n" if doc.declarations else ""
    )
