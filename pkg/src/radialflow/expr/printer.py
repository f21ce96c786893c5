"""Pretty-printer emitting the same ASCII grammar the parser accepts.

Round-trip contract: parse(expr_str(e)) normalizes equal to e.
"""
from __future__ import annotations

from fractions import Fraction

from .kernel import Atom, ExpQ, Expr, _EXP_SYMS


def _frac_str(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _poly_str(p: dict) -> str:
    if not p:
        return "0"
    parts = []
    for (dn, dq), c in sorted(p.items()):
        factors = []
        sign = ""
        if c == -1 and (dn or dq):
            sign = "-"
        elif c != 1 or (dn == 0 and dq == 0):
            factors.append(_frac_str(c) if c.denominator == 1 else f"({_frac_str(c)})")
        if dn:
            factors.append("n" if dn == 1 else f"n^{dn}")
        if dq:
            factors.append("q" if dq == 1 else f"q^{dq}")
        parts.append(sign + "*".join(factors))
    return " + ".join(parts).replace("+ -", "- ")


def expq_str(x: ExpQ) -> str:
    num = _poly_str(x.num)
    if x.den == {(0, 0): Fraction(1)}:
        return num
    return f"({num})/({_poly_str(x.den)})"


def atom_str(a: Atom) -> str:
    if a.kind == "var":
        return a.name
    if a.kind == "param":
        return a.name
    if a.kind == "jet":
        if a.it == 0 and a.ir == 0:
            return a.field
        vars_ = ["t"] * a.it + ["r"] * a.ir
        return f"diff({a.field},{','.join(vars_)})"
    if a.kind == "fn":
        return f"{a.name}({expr_str(a.args[0])})"
    if a.kind == "opq":
        args = ",".join(expr_str(x) for x in a.args)
        if all(d == 0 for d in a.dmi):
            return f"{a.name}({args})"
        # derivative markers: each argument that is a bare (0,0) jet of a
        # field can use diff(...) syntax; otherwise use the name__i_j form
        if all(d >= 0 for d in a.dmi):
            inner = f"{a.name}({args})"
            diffable = []
            ok = True
            for slot, d in enumerate(a.dmi):
                if d == 0:
                    continue
                arg = a.args[slot]
                fa = _bare_field(arg)
                if fa is None:
                    ok = False
                    break
                diffable.extend([fa] * d)
            if ok:
                return f"diff({inner},{','.join(diffable)})"
        tag = "_".join(str(d) for d in a.dmi)
        return f"{a.name}__{tag}({args})"
    if a.kind == "pows":
        return f"({expr_str(a.base)})"
    raise AssertionError(a.kind)


def _bare_field(e: Expr):
    if len(e.terms) != 1:
        return None
    (m, c), = e.terms.items()
    if c != 1 or len(m) != 1:
        return None
    a, x = m[0]
    if a.kind == "jet" and a.it == 0 and a.ir == 0 and x == 1:
        return a.field
    return None


def _exp_str(x) -> str:
    if isinstance(x, int):
        return str(x) if x >= 0 else f"({x})"
    return f"({expq_str(x)})"


def _mono_str(m, c: Fraction) -> str:
    factors = []
    if not m:
        return _frac_str(c)
    if c == -1:
        sign = "-"
    elif c != 1:
        sign = ""
        factors.append(_frac_str(c) if c.denominator == 1 and c >= 0 else f"({_frac_str(c)})")
    else:
        sign = ""
    for a, x in m:
        s = atom_str(a)
        if a.kind != "pows" and ("+" in s or " " in s):
            s = f"({s})"
        if x == 1:
            factors.append(s)
        else:
            factors.append(f"{s}^{_exp_str(x)}")
    return sign + "*".join(factors)


def expr_str(e: Expr) -> str:
    if not e.terms:
        return "0"
    parts = [
        _mono_str(m, c)
        for m, c in sorted(e.terms.items(), key=lambda mc: tuple((a.key, str(x)) for a, x in mc[0]))
    ]
    out = parts[0]
    for p in parts[1:]:
        if p.startswith("-"):
            out += " - " + p[1:]
        else:
            out += " + " + p
    return out
