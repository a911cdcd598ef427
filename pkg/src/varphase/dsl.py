"""Text format for theories.

    theory robin {
      dim 2
      coords t x
      fields phi
      params m b=2
      L: 1/2*(dt(phi)^2 - dx(phi)^2 - m^2*phi^2)
      l[x1]: 1/2*b*phi^2
    }

``L`` is the density of the bulk Lagrangian against dt^dx^...; ``l[FACE]`` is
the density of the boundary Lagrangian against the ascending basis of the
face (dt for n = 2).  Derivative atoms ``d<coord>(expr)`` are total
derivatives and may wrap any expression.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .biform import BiForm, ChartContext
from .symbolic import (
    Expression,
    JetOrderError,
    format_expression,
    jet,
    total_derivative_index,
)
from .variational import Theory

MAX_EXPONENT = 32
KEYWORDS = {"theory", "dim", "coords", "fields", "params", "L", "l"}


class DSLError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass(frozen=True)
class TheoryDocument:
    source: str
    theory: Theory
    spans: dict = field(default_factory=dict, compare=False)  # section -> (line, col)


_TOKEN = re.compile(r"\s+|#[^\n]*|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[{}()\[\]:+\-*/^=])")


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, id, sym, end
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind:
            toks.append(_Tok(kind, m.group(), line, col))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    toks.append(_Tok("end", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.spans: dict = {}

    # -- token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return DSLError(msg, tok.line, tok.col)

    def accept(self, text):
        if self.tok.kind in ("sym", "id") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def ident(self, what="identifier"):
        tok = self.tok
        if tok.kind != "id":
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok.text

    def integer(self):
        tok = self.tok
        if tok.kind != "num":
            raise self.error(f"expected integer, found {tok.text or 'end of input'!r}")
        self.i += 1
        return int(tok.text)

    def rational(self):
        sign = -1 if self.accept("-") else 1
        value = Fraction(self.integer())
        if self.accept("/"):
            tok = self.tok
            den = self.integer()
            if den == 0:
                raise self.error("division by zero", tok)
            value /= den
        return sign * value

    def names(self):
        out = []
        while self.tok.kind == "id" and self.tok.text not in KEYWORDS:
            out.append(self.tok)
            self.i += 1
        return out

    # -- document
    def document(self) -> Theory:
        self.expect("theory")
        name_tok = self.tok
        name = self.ident("theory name")
        if name in KEYWORDS:
            raise self.error(f"reserved word {name!r}", name_tok)
        self.expect("{")
        self.expect("dim")
        dim_tok = self.tok
        dim = self.integer()
        self.expect("coords")
        coord_tok = self.tok
        coord_toks = self.names()
        coords = [t.text for t in coord_toks]
        if dim < 1 or len(coords) != dim:
            raise self.error(f"dim {dim} does not match {len(coords)} coordinates", dim_tok)
        self.expect("fields")
        field_tok = self.tok
        field_toks = self.names()
        fields = [t.text for t in field_toks]
        if not fields:
            raise self.error("at least one field required", field_tok)
        params, values, param_toks = [], {}, []
        if self.accept("params"):
            while self.tok.kind == "id" and self.tok.text not in KEYWORDS:
                param_toks.append(self.tok)
                p = self.ident()
                params.append(p)
                if self.accept("="):
                    values[p] = self.rational()
        self.check_names(coord_toks + field_toks + param_toks, coords)
        try:
            self.chart = ChartContext.box(coords)
        except ValueError as exc:
            raise self.error(str(exc), coord_tok) from None
        self.coords = coords
        self.fields = fields
        self.params = params
        self.spans["L"] = (self.tok.line, self.tok.col)
        self.expect("L")
        self.expect(":")
        density = self.expression()
        boundary = {}
        while self.tok.kind == "id" and self.tok.text == "l":
            tok = self.tok
            self.i += 1
            self.expect("[")
            face_tok = self.tok
            face_name = self.ident("face name")
            try:
                face = self.chart.face(face_name)
            except KeyError:
                raise self.error(f"unknown face {face_name!r}", face_tok) from None
            if face_name in boundary:
                raise self.error(f"duplicate boundary Lagrangian for {face_name}", face_tok)
            self.expect("]")
            self.expect(":")
            self.spans[f"l[{face_name}]"] = (tok.line, tok.col)
            f = self.expression()
            boundary[face_name] = BiForm.scalar(self.chart, f, self.chart.face_top(face))
        self.expect("}")
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r} after theory")
        bulk = BiForm.scalar(self.chart, density, tuple(range(dim)))
        return Theory(name, self.chart, tuple(fields), tuple(params), bulk,
                      {k: v for k, v in boundary.items() if v}, values)

    def check_names(self, toks, coords):
        seen = set()
        derivative_atoms = {"d" + c for c in coords}
        for tok in toks:
            if tok.text in seen:
                raise self.error(f"duplicate name {tok.text!r}", tok)
            if tok.text in derivative_atoms:
                raise self.error(f"name {tok.text!r} clashes with a derivative operator", tok)
            seen.add(tok.text)

    # -- expressions
    def expression(self) -> Expression:
        out = self.term()
        while True:
            if self.accept("+"):
                out = out + self.term()
            elif self.accept("-"):
                out = out - self.term()
            else:
                return out

    def term(self) -> Expression:
        out = self.unary()
        while True:
            if self.accept("*"):
                out = out * self.unary()
            elif self.tok.text == "/" and self.tok.kind == "sym":
                tok = self.tok
                self.i += 1
                den = self.unary()
                if not den.is_constant():
                    raise self.error("division by a non-constant expression", tok)
                if not den:
                    raise self.error("division by zero", tok)
                out = out * Expression.const(1 / den.constant_value())
            else:
                return out

    def unary(self) -> Expression:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.accept("^"):
            tok = self.tok
            k = self.integer()
            if k > MAX_EXPONENT:
                raise self.error(f"exponent {k} exceeds {MAX_EXPONENT}", tok)
            return base ** k
        return base

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Expression.const(int(tok.text))
        if self.accept("("):
            e = self.expression()
            self.expect(")")
            return e
        if tok.kind == "id":
            self.i += 1
            name = tok.text
            if name[:1] == "d" and name[1:] in self.coords and self.tok.text == "(":
                self.expect("(")
                inner = self.expression()
                self.expect(")")
                try:
                    return total_derivative_index(inner, self.coords.index(name[1:]), tuple(self.coords), self.chart.max_order)
                except JetOrderError as exc:
                    raise self.error(str(exc), tok) from None
            if name in self.fields:
                return Expression.var(jet(self.fields.index(name), (0,) * len(self.coords)))
            if name in self.params:
                return Expression.var(("p", name))
            if name in self.coords:
                return Expression.var(("c", name))
            raise self.error(f"undeclared name {name!r}", tok)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_theory(text) -> TheoryDocument:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DSLError(f"input is not UTF-8: {exc}") from None
    parser = _Parser(text)
    try:
        theory = parser.document()
    except RecursionError:
        tok = parser.tok
        raise DSLError("expression nested too deeply", tok.line, tok.col) from None
    return TheoryDocument(text, theory, parser.spans)


def _dsl_namer(theory: Theory):
    coords = theory.chart.coords

    def name(v):
        if v[0] in ("c", "p"):
            return v[1]
        if v[0] != "j":
            raise ValueError("slice variables have no text form")
        out = theory.fields[v[1]]
        for c, k in reversed(list(zip(coords, v[2]))):
            for _ in range(k):
                out = f"d{c}({out})"
        return out

    return name


def print_theory(theory: Theory) -> str:
    chart = theory.chart
    namer = _dsl_namer(theory)
    params = " ".join(
        f"{p}={_fraction(theory.param_values[p])}" if p in theory.param_values else p for p in theory.params
    )
    lines = [
        f"theory {theory.name} {{",
        f"  dim {chart.n}",
        f"  coords {' '.join(chart.coords)}",
        f"  fields {' '.join(theory.fields)}",
    ]
    if theory.params:
        lines.append(f"  params {params}")
    lines.append(f"  L: {format_expression(theory.density, namer)}")
    for face in chart.faces:
        lbar = theory.boundary.get(face.name)
        if lbar:
            lines.append(f"  l[{face.name}]: {format_expression(lbar.coefficient(chart.face_top(face)), namer)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _fraction(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
