"""Euler-operator identities (generalized product rules) on randomized data.

With E^(i) the higher Euler operators over r, f an opaque unary symbol, and
b1 = (D_r b)/a, the three identities are

  (I)   E(a f(b))  = sum_i E^(i)(b) (-D)^i (a f'(b)) + E^(i)(a) (-D)^i f(b)

  (II)  E(a f(b1)) = sum_i E^(i)(b) (-D)^(i+1) f'(b1)
                     + E^(i)(a) (-D)^i (f(b1) - b1 f'(b1))

  (III) sum_i E^(i)(b1) (-D)^(i+1) f(b1)
          = -sum_i E^(i)(b) (-D)^(i+1) ((D_r f(b1))/a)
            + sum_{i,j} C(i+j, j) E^(i+j)(a) ((-D)^j b1) (-D)^i ((D_r f(b1))/a)

(III) is stated here in the form that actually holds; the corresponding
source display is garbled (its right side vanishes identically on a = 1,
b = v while the left side does not).  The sums truncate at the maximal jet
order present.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from .kernel import D_r, Expr, R, ediv, euler_operator, jet, jet_atom, opaque, opq_atom
from .sampling import numeric_zero

FIELD = "S"


def _max_euler_order(e: Expr, field: str = FIELD) -> int:
    m = -1
    for a in e.jet_atoms():
        if a.field == field:
            m = max(m, a.ir)
    return m


def _neg_D_pow(e: Expr, i: int) -> Expr:
    for _ in range(i):
        e = -D_r(e)
    return e


def _f(e: Expr, order: int = 0) -> Expr:
    return Expr.atom(opq_atom("f", (e.canonical(),), (order,)))


def identity_residuals(a: Expr, b: Expr) -> List[Expr]:
    """Residuals of (I), (II), (III) for one (a, b) pair."""
    v = FIELD
    fb = _f(b)
    fpb = _f(b, 1)
    lhs1 = euler_operator(a * fb, v)
    rhs1 = Expr.zero()
    imax = max(_max_euler_order(a), _max_euler_order(b)) + 1
    for i in range(imax + 1):
        rhs1 = rhs1 + euler_operator(b, v, i) * _neg_D_pow(a * fpb, i)
        rhs1 = rhs1 + euler_operator(a, v, i) * _neg_D_pow(fb, i)
    out = [(lhs1 - rhs1).canonical()]

    b1 = ediv(D_r(b), a).canonical()
    fb1 = _f(b1)
    fpb1 = _f(b1, 1)
    lhs2 = euler_operator(a * fb1, v)
    rhs2 = Expr.zero()
    for i in range(imax + 1):
        rhs2 = rhs2 + euler_operator(b, v, i) * _neg_D_pow(fpb1, i + 1)
        rhs2 = rhs2 + euler_operator(a, v, i) * _neg_D_pow(fb1 - b1 * fpb1, i)
    out.append((lhs2 - rhs2).canonical())

    w = ediv(D_r(fb1), a)
    lhs3 = Expr.zero()
    imax3 = _max_euler_order(b1) + 1
    for i in range(imax3 + 1):
        lhs3 = lhs3 + euler_operator(b1, v, i) * _neg_D_pow(fb1, i + 1)
    rhs3 = Expr.zero()
    for i in range(imax + 1):
        rhs3 = rhs3 - euler_operator(b, v, i) * _neg_D_pow(w, i + 1)
    for i in range(imax + 1):
        for j in range(imax + 1 - i):
            ea = euler_operator(a, v, i + j)
            if not ea.terms:
                continue
            rhs3 = rhs3 + Expr.const(math.comb(i + j, j)) * ea * _neg_D_pow(b1, j) * _neg_D_pow(w, i)
    out.append((lhs3 - rhs3).canonical())
    return out


def _random_poly(rng: np.random.Generator, atoms: List[Expr], n_terms: int,
                 max_pow: int = 2, max_deg: int = 3) -> Expr:
    e = Expr.zero()
    for _ in range(n_terms):
        c = int(rng.integers(1, 3)) * int(rng.choice([-1, 1]))
        m = Expr.const(c)
        deg = 0
        for at in atoms:
            p = int(rng.integers(0, max_pow + 1))
            p = min(p, max_deg - deg)
            if p > 0:
                m = m * at**p
                deg += p
        e = e + m
    if not e.terms:
        e = Expr.const(1)
    return e


def random_pair(rng: np.random.Generator) -> Tuple[Expr, Expr]:
    """Random (a, b) with jets of order <= 2; a is kept a monomial or a short
    sum so that (D_r b)/a stays tractable."""
    v, vr, vrr = jet(FIELD), jet(FIELD, 0, 1), jet(FIELD, 0, 2)
    pool = [v, vr, vrr, R]
    picks = list(rng.choice(len(pool), size=2, replace=False))
    atoms = [pool[i] for i in picks]
    b = _random_poly(rng, atoms, n_terms=int(rng.integers(1, 3)))
    u = rng.random()
    if u < 0.4:
        a = _random_poly(rng, [pool[int(rng.integers(0, 4))]], n_terms=1, max_pow=2)
    elif u < 0.75:
        a = _random_poly(rng, atoms, n_terms=1)
    else:
        a = _random_poly(rng, [v, R], n_terms=2, max_pow=1)
    if not a.terms or a.canonical().is_zero():
        a = v
    return a, b


def run_identity_suite(count: int = 25, seed: int = 7042, numeric_check: bool = True) -> dict:
    """Residuals of (I)-(III) on `count` random pairs; symbolic zero is the
    verdict, randomized evaluation is the cross-check."""
    rng = np.random.default_rng(seed)
    report = {"count": count, "seed": seed, "failures": [], "passed": True}
    for k in range(count):
        a, b = random_pair(rng)
        residuals = identity_residuals(a, b)
        for name, res in zip(("I", "II", "III"), residuals):
            ok = res.is_zero()
            if ok and numeric_check and k < 5:
                ok = numeric_zero(res, seed=seed + k, n_samples=8, tol=1e-6)
            if not ok:
                report["failures"].append({"pair": k, "identity": name, "a": str(a), "b": str(b)})
                report["passed"] = False
    return report
