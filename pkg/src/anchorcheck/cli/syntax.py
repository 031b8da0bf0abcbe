"""Problem-file syntax: tokens, AST, parser and printer.

A file is a sequence of statements, each terminated by ``;``::

    KEYWORD NAME [index, ...]? (for TARGET)? (= EXPR)? (key=value | flag)* ;

``#`` starts a comment. Expressions use ``+ - * / ^``, rational literals,
the imaginary unit ``i``, ``conj(e)``, ``d[a,ad](e)``, ``sym(a,b)(e)``,
calls ``f(x, key=v)``, tuples and ``{key: value}`` maps. Index names may
carry ``^`` (upper) or ``_`` (lower); ``1``/``2`` pin an index value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

KEYWORDS = (
    "field", "tensor", "system", "anchor", "current", "characteristic",
    "evolution", "ode", "bivector", "task",
)
RESERVED = {"i", "d", "sym", "conj", "for"}


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Loc:
    line: int
    col: int


def _loc():
    return field(default=None, compare=False, repr=False)


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class IndexRef:
    name: str
    position: str | None = None  # "^", "_" or None
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Number:
    value: int
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Imag:
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Ref:
    name: str
    indices: tuple | None = None
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class ConjExpr:
    arg: object
    indices: tuple | None = None
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class DerivExpr:
    undotted: IndexRef
    dotted: IndexRef
    arg: object
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class SymExpr:
    names: tuple
    arg: object
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    kwargs: tuple = ()  # ((key, expr), ...)
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Neg:
    arg: object
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class TupleExpr:
    items: tuple
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class MapExpr:
    items: tuple  # ((key, value), ...)
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Statement:
    keyword: str
    name: str
    indices: tuple | None = None
    target: str | None = None
    value: object = None
    options: tuple = ()  # ((key, expr or None), ...)
    loc: Loc | None = _loc()

    def option(self, key: str, default=None):
        for k, v in self.options:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class ProblemFile:
    statements: tuple

    @property
    def tasks(self) -> tuple:
        return tuple(s for s in self.statements if s.keyword == "task")


# -- lexer ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^=;:,()\[\]{}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# -- parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def loc(self) -> Loc:
        return Loc(self.tok.line, self.tok.col)

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = tok.text or "end of file"
        raise ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self, what: str = "identifier") -> str:
        if self.tok.kind != "name":
            self.error(f"expected {what}")
        t = self.tok.text
        self.i += 1
        return t

    # statements

    def file(self) -> ProblemFile:
        stmts = []
        while self.tok.kind != "eof":
            stmts.append(self.statement())
        return ProblemFile(tuple(stmts))

    def statement(self) -> Statement:
        loc = self.loc()
        if self.tok.kind != "name" or self.tok.text not in KEYWORDS:
            self.error("expected a statement keyword (" + ", ".join(KEYWORDS) + ")")
        keyword = self.name()
        if self.tok.kind != "name" or self.tok.text in RESERVED:
            self.error("expected a name")
        name = self.name()
        indices = self.index_list() if self.at("[") else None
        target = None
        if self.accept("for"):
            target = self.name("system name")
        value = None
        if self.accept("="):
            value = self.expr()
        options = []
        while not self.at(";"):
            if self.tok.kind != "name" or self.tok.text in KEYWORDS:
                self.error("expected an option or ';'")
            key = self.name()
            if self.accept("="):
                options.append((key, self.term()))
            else:
                options.append((key, None))
        self.expect(";")
        return Statement(keyword, name, indices, target, value, tuple(options), loc)

    def index(self) -> IndexRef:
        loc = self.loc()
        pos = None
        if self.at("^") or self.at("_"):
            pos = self.tok.text
            self.i += 1
        if self.tok.kind == "num" and self.tok.text in ("1", "2"):
            name = self.tok.text
            self.i += 1
        elif self.tok.kind == "name" and self.tok.text.startswith("_") and pos is None:
            # the lexer folds "_a" into one identifier
            pos, name = "_", self.tok.text[1:]
            self.i += 1
            if not name:
                self.error("expected an index name")
        elif self.tok.kind == "name":
            name = self.name()
        else:
            self.error("expected an index")
        return IndexRef(name, pos, loc)

    def index_list(self) -> tuple:
        self.expect("[")
        out = []
        if not self.at("]"):
            out.append(self.index())
            while self.accept(","):
                out.append(self.index())
        self.expect("]")
        return tuple(out)

    # expressions

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            loc = self.loc()
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term(), loc)
        return left

    def term(self):
        left = self.unary()
        while self.at("*") or self.at("/"):
            loc = self.loc()
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.unary(), loc)
        return left

    def unary(self):
        if self.at("-"):
            loc = self.loc()
            self.i += 1
            return Neg(self.unary(), loc)
        return self.power()

    def power(self):
        base = self.primary()
        if self.at("^"):
            loc = self.loc()
            self.i += 1
            if self.tok.kind != "num":
                self.error("expected an integer exponent")
            n = int(self.tok.text)
            self.i += 1
            return Pow(base, n, loc)
        return base

    def primary(self):
        t = self.tok
        loc = self.loc()
        if t.kind == "num":
            self.i += 1
            return Number(int(t.text), loc)
        if t.kind == "name":
            if t.text == "i":
                self.i += 1
                return Imag(loc)
            if t.text == "d" and self.peek().text == "[":
                self.i += 1
                idx = self.index_list()
                if len(idx) != 2:
                    self.error("a derivative takes one undotted and one dotted index")
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return DerivExpr(idx[0], idx[1], arg, loc)
            if t.text == "sym" and self.peek().text == "(":
                self.i += 1
                self.expect("(")
                names = [self.name("index name")]
                while self.accept(","):
                    names.append(self.name("index name"))
                self.expect(")")
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return SymExpr(tuple(names), arg, loc)
            if t.text == "conj" and self.peek().text == "(":
                self.i += 1
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                indices = self.index_list() if self.at("[") else None
                return ConjExpr(arg, indices, loc)
            if t.text in RESERVED:
                self.error(f"{t.text!r} is reserved")
            self.i += 1
            if self.at("("):
                return self.call(t.text, loc)
            indices = self.index_list() if self.at("[") else None
            return Ref(t.text, indices, loc)
        if self.at("("):
            self.i += 1
            if self.accept(")"):
                return TupleExpr((), loc)
            first = self.expr()
            if self.accept(")"):
                return first
            items = [first]
            while self.accept(","):
                if self.at(")"):
                    break
                items.append(self.expr())
            self.expect(")")
            return TupleExpr(tuple(items), loc)
        if self.at("{"):
            self.i += 1
            items = []
            if not self.at("}"):
                items.append(self.map_item())
                while self.accept(","):
                    items.append(self.map_item())
            self.expect("}")
            return MapExpr(tuple(items), loc)
        self.error("expected an expression")

    def map_item(self):
        key = self.expr()
        self.expect(":")
        return (key, self.expr())

    def call(self, name: str, loc: Loc) -> Call:
        self.expect("(")
        args, kwargs = [], []
        if not self.at(")"):
            while True:
                if self.tok.kind == "name" and self.peek().text == "=":
                    key = self.name()
                    self.expect("=")
                    kwargs.append((key, self.expr()))
                else:
                    if kwargs:
                        self.error("positional argument after keyword argument")
                    args.append(self.expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return Call(name, tuple(args), tuple(kwargs), loc)


def parse(text: str) -> ProblemFile:
    return _Parser(text).file()


def parse_expression(text: str):
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("trailing input")
    return e


# -- printer -------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _index(ix: IndexRef) -> str:
    return (ix.position or "") + ix.name


def _indices(ixs) -> str:
    return "[" + ", ".join(_index(x) for x in ixs) + "]"


def print_expr(e, prec: int = 0) -> str:
    if isinstance(e, Number):
        return str(e.value)
    if isinstance(e, Imag):
        return "i"
    if isinstance(e, Ref):
        return e.name + (_indices(e.indices) if e.indices is not None else "")
    if isinstance(e, ConjExpr):
        return f"conj({print_expr(e.arg)})" + (_indices(e.indices) if e.indices is not None else "")
    if isinstance(e, DerivExpr):
        return f"d[{_index(e.undotted)}, {_index(e.dotted)}]({print_expr(e.arg)})"
    if isinstance(e, SymExpr):
        return f"sym({', '.join(e.names)})({print_expr(e.arg)})"
    if isinstance(e, Call):
        parts = [print_expr(a) for a in e.args] + [f"{k}={print_expr(v)}" for k, v in e.kwargs]
        return f"{e.name}({', '.join(parts)})"
    if isinstance(e, TupleExpr):
        inner = ", ".join(print_expr(x) for x in e.items)
        return f"({inner},)" if len(e.items) == 1 else f"({inner})"
    if isinstance(e, MapExpr):
        return "{" + ", ".join(f"{print_expr(k)}: {print_expr(v)}" for k, v in e.items) + "}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{print_expr(e.left, p)} {e.op} {print_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, Neg):
        s = "-" + print_expr(e.arg, 3)
        return f"({s})" if prec > 3 else s
    if isinstance(e, Pow):
        base = print_expr(e.base, 4)
        if isinstance(e.base, Pow):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    raise TypeError(f"cannot print {e!r}")


def print_statement(s: Statement) -> str:
    out = [s.keyword, " ", s.name]
    if s.indices is not None:
        out.append(_indices(s.indices))
    if s.target is not None:
        out.append(f" for {s.target}")
    if s.value is not None:
        out.append(" = " + print_expr(s.value))
    for k, v in s.options:
        out.append(f" {k}" if v is None else f" {k}={print_expr(v, 2)}")
    out.append(";")
    return "".join(out)


def print_file(pf: ProblemFile) -> str:
    return "".join(print_statement(s) + "\n" for s in pf.statements)
