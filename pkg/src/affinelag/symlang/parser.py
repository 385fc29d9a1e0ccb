"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

Unary minus binds looser than ``^`` so that ``-x^2`` is ``-(x^2)``.
Decimal literals become exact rationals.
"""

import re
from dataclasses import dataclass

import sympy as sp

from ..errors import ParseError, UnknownFunctionError

ELEMENTARY = {
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "sqrt": sp.sqrt,
}

# Extensions beyond the elementary set, needed so that every tree the
# library produces can be rendered and read back.
STRUCTURAL = ("integral", "diff")

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?|\.\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "ident", "op", "end"
    text: str
    offset: int


def tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while True:
        while pos < n and source[pos].isspace():
            pos += 1
        if pos >= n:
            tokens.append(Token("end", "", len(source.encode("utf-8"))))
            return tokens
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(
                f"unexpected character {source[pos]!r}",
                offset=len(source[:pos].encode("utf-8")),
                expected=("NUMBER", "IDENT", "operator"),
            )
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(Token(kind, m.group(kind), len(source[:start].encode("utf-8"))))
        pos = m.end()


_ATOM_START = ("NUMBER", "IDENT", "'('", "'-'")


class _Parser:
    def __init__(self, source, functions):
        self.tokens = tokenize(source)
        self.i = 0
        self.functions = dict(functions or {})

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            self.fail(expected=(repr(text),))
        return self.advance()

    def fail(self, expected):
        t = self.tok
        what = "end of input" if t.kind == "end" else f"token {t.text!r}"
        raise ParseError(f"unexpected {what}", offset=t.offset, expected=expected)

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            self.fail(expected=("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"))
        return e

    def expr(self):
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.factor()
            e = e * rhs if op == "*" else e / rhs
        return e

    def factor(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return -self.factor()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return sp.Pow(base, self.factor())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return sp.Rational(t.text) if "." in t.text else sp.Integer(t.text)
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            return sp.Symbol(t.text)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail(expected=_ATOM_START)

    def call(self, name_tok):
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        name = name_tok.text
        if name in ELEMENTARY:
            if len(args) != 1:
                raise ParseError(f"{name} takes one argument", offset=name_tok.offset)
            return ELEMENTARY[name](args[0])
        if name == "integral":
            return _integral(args, name_tok.offset)
        if name == "diff":
            if len(args) < 2 or not all(isinstance(a, sp.Symbol) for a in args[1:]):
                raise ParseError("diff(expr, var, ...) needs variables", offset=name_tok.offset)
            return sp.Derivative(args[0], *args[1:])
        if name in self.functions:
            arity = self.functions[name]
            if arity is not None and arity != len(args):
                raise ParseError(
                    f"{name} takes {arity} argument(s), got {len(args)}", offset=name_tok.offset
                )
            return sp.Function(name)(*args)
        raise UnknownFunctionError(
            f"unknown function name {name!r}",
            offset=name_tok.offset,
            expected=tuple(ELEMENTARY) + tuple(self.functions),
        )


def _integral(args, offset):
    if len(args) not in (3, 4) or not isinstance(args[1], sp.Symbol):
        raise ParseError(
            "integral(integrand, var, upper) or integral(integrand, var, lower, upper)",
            offset=offset,
        )
    f, z = args[0], args[1]
    if len(args) == 3:
        return sp.Integral(f, (z, args[2]))
    return sp.Integral(f, (z, args[2], args[3]))


def parse(source, functions=None):
    """Parse ``source`` into a normalized sympy expression.

    ``functions`` maps placeholder function names (``F``, ``phi``, ...) to
    their arity (or ``None`` for any arity); any other call to a name outside
    the reserved set raises :class:`UnknownFunctionError`.
    """
    if not isinstance(source, str):
        raise TypeError("parse() expects a string")
    return _Parser(source, functions).parse()
