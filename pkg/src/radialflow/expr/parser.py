"""Recursive-descent parser for the ASCII expression grammar.

Grammar (whitespace insensitive):

    expr    :=  term (('+' | '-') term)*
    term    :=  power (('*' | '/') power)*
    power   :=  unary ('^' power)?            # right associative
    unary   :=  '-' unary | primary
    primary :=  INT | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

Reserved identifiers: t r U rho S p n q k eps.  t and r are the independent
variables; U rho S p are fields; n q k eps are parameters.  diff(e, s, ...)
takes the total derivative for s in {t, r} and the partial derivative with
respect to a field for s a field name.  Other identifiers are parameters
when bare and opaque function symbols when applied; name__i_j(args) denotes
the opaque symbol differentiated i, j, ... times in its argument slots.
"""
from __future__ import annotations

from fractions import Fraction

from . import kernel as K
from .kernel import Expr, ExpQ, ExprError


class ParseError(ExprError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at offset {pos}")
        self.pos = pos


FIELDS = ("U", "rho", "S", "p")
VARS = ("t", "r")
PARAMS = ("n", "q", "k", "eps")


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.i = 0

    def _scan(self):
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                self.tokens.append(("int", text[i:j], i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            if c in "+-*/^(),":
                self.tokens.append((c, c, i))
                i += 1
                continue
            raise ParseError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", "", n))

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok


def parse(text: str) -> Expr:
    """Parse text to a normalized Expression."""
    tz = _Tokenizer(text)
    e = _expr(tz)
    tok = tz.peek()
    if tok[0] != "end":
        raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
    return e.canonical()


def _expr(tz) -> Expr:
    e = _term(tz)
    while tz.peek()[0] in ("+", "-"):
        op = tz.next()[0]
        rhs = _term(tz)
        e = e + rhs if op == "+" else e - rhs
    return e


def _term(tz) -> Expr:
    e = _power(tz)
    while tz.peek()[0] in ("*", "/"):
        op = tz.next()[0]
        rhs = _power(tz)
        e = e * rhs if op == "*" else K.ediv(e, rhs)
    return e


def _power(tz) -> Expr:
    base = _unary(tz)
    if tz.peek()[0] == "^":
        tz.next()
        expo_tok = tz.peek()
        expo = _power(tz)  # right associative
        return K.epow(base, _as_exponent(expo, expo_tok[2]))
    return base


def _unary(tz) -> Expr:
    if tz.peek()[0] == "-":
        tz.next()
        return -_unary(tz)
    return _primary(tz)


def _primary(tz) -> Expr:
    tok = tz.next()
    kind, text, pos = tok
    if kind == "int":
        return Expr.const(int(text))
    if kind == "(":
        e = _expr(tz)
        tz.expect(")")
        return e
    if kind == "ident":
        if tz.peek()[0] == "(":
            tz.next()
            args = [_expr(tz)]
            while tz.peek()[0] == ",":
                tz.next()
                args.append(_expr(tz))
            tz.expect(")")
            return _apply(text, args, pos)
        return _bare(text, pos)
    raise ParseError(f"unexpected token {text!r}", pos)


def _bare(name: str, pos: int) -> Expr:
    if name in VARS:
        return Expr.atom(K.var_atom(name))
    if name in FIELDS:
        return K.jet(name)
    # every other bare identifier is a named parameter
    return K.param(name)


def _apply(name: str, args, pos: int) -> Expr:
    if name == "diff":
        if len(args) < 2:
            raise ParseError("diff needs an expression and at least one variable", pos)
        e = args[0]
        for v in args[1:]:
            sym = _sym_name(v, pos)
            if sym in VARS:
                e = K.total_derivative(e, sym)
            else:
                e = K.partial(e, K.jet_atom(sym, 0, 0))
        return e
    if name == "ln":
        _arity(args, 1, name, pos)
        return K.ln(args[0])
    if name == "exp":
        _arity(args, 1, name, pos)
        return K.exp_fn(args[0])
    if name == "sqrt":
        _arity(args, 1, name, pos)
        return K.sqrt(args[0])
    if "__" in name:
        base, _, tag = name.partition("__")
        try:
            dmi = tuple(int(x) for x in tag.split("_"))
        except ValueError:
            raise ParseError(f"bad derivative tag in {name!r}", pos)
        if len(dmi) != len(args):
            raise ParseError(f"derivative tag arity mismatch in {name!r}", pos)
        return K.opaque(base, *args, dmi=dmi)
    return K.opaque(name, *args)


def _arity(args, n, name, pos):
    if len(args) != n:
        raise ParseError(f"{name} takes {n} argument(s)", pos)


def _sym_name(e: Expr, pos: int) -> str:
    for m, c in e.terms.items():
        if c == 1 and len(m) == 1:
            a, x = m[0]
            if x == 1:
                if a.kind == "var":
                    return a.name
                if a.kind == "jet" and a.it == 0 and a.ir == 0:
                    return a.field
    raise ParseError("diff variable must be t, r, or a field name", pos)


def _as_exponent(e: Expr, pos: int):
    """Convert a parsed exponent expression to an exact exponent in (n, q)."""
    out = ExpQ.const(0)
    for m, c in e.terms.items():
        piece = ExpQ.const(c)
        for a, x in m:
            if a.kind == "param" and a.name in K._EXP_SYMS and isinstance(x, int):
                s = ExpQ.sym(a.name)
                if x < 0:
                    s = ExpQ(s.den, s.num)
                    x = -x
                for _ in range(x):
                    piece = piece.mul(s)
            else:
                raise ParseError("exponents may only involve rationals, n, and q", pos)
        out = out.add(piece)
    return K._exp_canon(out)
