"""Entropic-EOS advected hierarchy, the A quadrature, and the higher
Hamiltonian symmetries it generates.

The scalars

    J_{1,l} = R^(l-1) (U^2 + (2/n) r p_r / rho)
    J_{2,l} = R^(l-1) (A(r, U, p_r/rho) - t)

are advected for an entropic EOS p = kappa(S).  A is kept as an opaque
three-argument symbol; its defining quadrature enters only at numeric
evaluation.  Symbolic work on the J2 branch additionally uses the advection
identity

    U A_r - w A_U + (n-1) (U w / r) A_w = 1,

which encodes that A - t is advected.  The identity (and hence the J2-branch
advection) holds on the outgoing chart U > 0: A is even in U, so on U < 0 the
advected combination is A + t instead.  The tests validate the identity
numerically against the quadrature before the symbolic checks rely on it,
and all J2-branch flows are run with U > 0 data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .expr import (
    D_r,
    Expr,
    ExprError,
    R,
    SystemContext,
    T,
    ediv,
    epow,
    euler_operator,
    jet,
    jet_atom,
    opaque,
    param,
    partial,
)
from .expr.kernel import (
    EXP_N,
    chain_derive,
    exp_add,
    expq_to_expr,
    opq_atom,
    param_atom,
    substitute_atoms,
)
from .fields import RadialSlice, RadialSolution
from .model import EOS, make_context, r_weights
from .symmetry import Characteristic, determining_residuals
from .casimir import recursion_apply
from .hamiltonian import Density, hamiltonian_symmetry

U = jet("U")
RHO = jet("rho")
S = jet("S")
S_R = jet("S", 0, 1)


class QuadratureError(ExprError):
    pass


# ---------------------------------------------------------------------------
# Numeric evaluation of A(r, U, w) = int_0^1 r dy / sqrt(U^2 + (2/n)(1-y^n) r w)
# ---------------------------------------------------------------------------


def _radicand_min(r: float, Uv: float, w: float, n: float) -> float:
    ends = [Uv * Uv + (2.0 / n) * r * w, Uv * Uv]
    return min(ends)


def eval_A(r: float, Uv: float, w: float, n: float, tol: float = 1e-10) -> float:
    """Adaptive quadrature of the defining y-integral to absolute tolerance
    tol.  Handles the integrable endpoint singularity at y = 1 when U = 0."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if _radicand_min(r, Uv, w, n) < 0 or (Uv == 0.0 and w <= 0.0):
        raise QuadratureError("radicand not positive on (0, 1)")
    if w == 0.0:
        return r / abs(Uv)
    c = (2.0 / n) * r * w

    def f(y):
        return r / math.sqrt(Uv * Uv + c * (1.0 - y**n))

    val, err = integrate.quad(f, 0.0, 1.0, epsabs=tol, epsrel=max(tol, 1e-13), limit=300)
    if err > 10 * max(tol, 1e-13) * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature error estimate {err:g} exceeds tolerance")
    return val


def eval_A_partials(r: float, Uv: float, w: float, n: float, tol: float = 1e-10) -> dict:
    """A and its first partials (A_r, A_U, A_w) by differentiated integrands."""
    if _radicand_min(r, Uv, w, n) <= 0:
        raise QuadratureError("radicand not positive on (0, 1); partials unavailable")
    c2n = 2.0 / n

    def Q(y):
        return Uv * Uv + c2n * (1.0 - y**n) * r * w

    def f_A(y):
        return r / math.sqrt(Q(y))

    def f_Ar(y):
        q = Q(y)
        return 1.0 / math.sqrt(q) - c2n * (1.0 - y**n) * w * r / (2.0 * q ** 1.5)

    def f_AU(y):
        return -r * Uv / Q(y) ** 1.5

    def f_Aw(y):
        return -r * c2n * (1.0 - y**n) * r / (2.0 * Q(y) ** 1.5)

    out = {}
    for name, fn in (("A", f_A), ("A_r", f_Ar), ("A_U", f_AU), ("A_w", f_Aw)):
        val, err = integrate.quad(fn, 0.0, 1.0, epsabs=tol, epsrel=max(tol, 1e-12), limit=300)
        if err > 100 * max(tol, 1e-12) * max(1.0, abs(val)):
            raise QuadratureError(f"{name} quadrature did not converge")
        out[name] = val
    return out


def A_numeric_hook(n: float, tol: float = 1e-10) -> Callable:
    """Numeric-environment hook for opaque A atoms (first partials only)."""

    def hook(argvals, dmi):
        r, Uv, w = argvals
        if dmi == (0, 0, 0):
            return eval_A(r, Uv, w, n, tol)
        p = eval_A_partials(r, Uv, w, n, tol)
        if dmi == (1, 0, 0):
            return p["A_r"]
        if dmi == (0, 1, 0):
            return p["A_U"]
        if dmi == (0, 0, 1):
            return p["A_w"]
        raise QuadratureError(f"no numeric rule for A derivative {dmi}")

    return hook


# ---------------------------------------------------------------------------
# Symbolic entropic scalars and the A rewrite rules
# ---------------------------------------------------------------------------


def w_expr(eos: EOS) -> Expr:
    """w = p_r / rho for the entropic EOS (= kappa'(S) S_r / rho)."""
    kp = partial(eos.p(), jet_atom("S", 0, 0))
    return ediv(kp * S_R, RHO)


def A_expr(eos: EOS) -> Expr:
    return opaque("A", R, U, w_expr(eos))


def entropic_scalar(branch: str, l: int, eos: Optional[EOS] = None, n_expr: Expr = None) -> Expr:
    """J_{1,l} or J_{2,l} as a jet expression (A opaque for the J2 branch)."""
    if l < 1:
        raise ExprError("entropic hierarchy starts at order 1")
    eos = eos or EOS.entropic()
    if eos.kind != "entropic":
        raise ExprError("the J1/J2 hierarchy requires an entropic EOS")
    two_over_n = ediv(Expr.const(2), param("n") if n_expr is None else n_expr)
    if branch == "J1":
        base = U * U + two_over_n * R * w_expr(eos)
    elif branch == "J2":
        base = A_expr(eos) - T
    else:
        raise ExprError("branch must be 'J1' or 'J2'")
    for _ in range(l - 1):
        base = recursion_apply(base, n_expr)
    return base.canonical()


_SLOTS = (param("slot_r"), param("slot_U"), param("slot_w"))
_SLOT_ATOMS = tuple(param_atom(s) for s in ("slot_r", "slot_U", "slot_w"))


def _slot_partial(e: Expr, slot: int) -> Expr:
    target = _SLOT_ATOMS[slot]

    def dprim(a):
        if a is target:
            return Expr.const(1)
        return None

    return chain_derive(e, dprim, {})


class ARules:
    """Rewrite rules eliminating r-derivatives of the opaque A symbol via the
    advection identity (pointwise in the slot variables)."""

    def __init__(self, n_expr: Expr = None):
        self.n_expr = n_expr if n_expr is not None else param("n")
        sr, su, sw = _SLOTS
        aU = Expr.atom(opq_atom("A", tuple(s.canonical() for s in _SLOTS), (0, 1, 0)))
        aw = Expr.atom(opq_atom("A", tuple(s.canonical() for s in _SLOTS), (0, 0, 1)))
        self._base = ediv(
            Expr.const(1) + sw * aU - (self.n_expr - 1) * ediv(su * sw, sr) * aw, su
        )
        self._cache: Dict[tuple, Expr] = {(1, 0, 0): self._base}

    def pointwise(self, dmi: tuple) -> Expr:
        """Slot-space expression for d^dmi A with no r-slot derivatives left."""
        i, j, k = dmi
        if i == 0:
            return Expr.atom(opq_atom("A", tuple(s.canonical() for s in _SLOTS), dmi))
        got = self._cache.get(dmi)
        if got is not None:
            return got
        if j > 0:
            e = self._slot_rewrite(_slot_partial(self.pointwise((i, j - 1, k)), 1))
        elif k > 0:
            e = self._slot_rewrite(_slot_partial(self.pointwise((i, j, k - 1)), 2))
        else:
            e = self._slot_rewrite(_slot_partial(self.pointwise((i - 1, 0, 0)), 0))
        self._cache[dmi] = e
        return e

    def _slot_rewrite(self, e: Expr) -> Expr:
        def amap(a):
            if a.kind == "opq" and a.name == "A" and a.dmi[0] >= 1:
                return self.pointwise(a.dmi)
            return None

        return substitute_atoms(e, amap)

    def atom_rule(self, a) -> Optional[Expr]:
        if a.kind != "opq" or a.name != "A" or a.dmi[0] == 0:
            return None
        pointwise = self.pointwise(a.dmi)
        args = a.args

        def amap(at):
            if at.kind == "param" and at.name == "slot_r":
                return args[0]
            if at.kind == "param" and at.name == "slot_U":
                return args[1]
            if at.kind == "param" and at.name == "slot_w":
                return args[2]
            return None

        return substitute_atoms(pointwise, amap)


def entropic_context(eos: Optional[EOS] = None, n_expr: Expr = None, with_A: bool = True) -> SystemContext:
    """Evolution context for the entropic system, optionally carrying the A
    rewrite rules and the K'(S) = f(S) kappa'(S) convention."""
    from .model import entropy_weighted_rules

    eos = eos or EOS.entropic()
    arules = ARules(n_expr) if with_A else None
    ewrules = entropy_weighted_rules(eos)

    def rules(a):
        if arules is not None:
            got = arules.atom_rule(a)
            if got is not None:
                return got
        return ewrules(a)

    return make_context(eos, n_expr, atom_rules=rules)


# ---------------------------------------------------------------------------
# Theorem-level symmetries from the entropic hierarchy
# ---------------------------------------------------------------------------


@dataclass
class GeneralizedGenerator:
    """tau d_t + xi d_r + eta_U d_U + eta_rho d_rho (+ eta_S d_S), with
    jet-dependent coefficients; characteristic through the usual formula."""

    tau: Expr
    xi: Expr
    eta_U: Expr
    eta_rho: Expr
    eta_S: Expr

    def characteristic(self, ctx: SystemContext) -> Characteristic:
        P_U = self.eta_U - self.tau * jet("U", 1, 0) - self.xi * jet("U", 0, 1)
        P_rho = self.eta_rho - self.tau * jet("rho", 1, 0) - self.xi * jet("rho", 0, 1)
        P_S = self.eta_S - self.tau * jet("S", 1, 0) - self.xi * jet("S", 0, 1)
        return Characteristic(ctx.restrict(P_U), ctx.restrict(P_rho), ctx.restrict(P_S))


def _neg_R_power(e: Expr, i: int, n_expr: Expr = None) -> Expr:
    for _ in range(i):
        e = -recursion_apply(e, n_expr)
    return e


def hierarchy_f_density(f_expr: Expr, l: int, eos: Optional[EOS] = None, n_expr: Expr = None) -> Density:
    """rho f(J_{1,l}, J_{2,l}) with f over placeholder fields j1, j2."""
    eos = eos or EOS.entropic()
    J1l = entropic_scalar("J1", l, eos, n_expr)
    J2l = entropic_scalar("J2", l, eos, n_expr)

    def amap(a):
        if a.kind == "jet" and (a.it, a.ir) == (0, 0):
            if a.field == "j1":
                return J1l
            if a.field == "j2":
                return J2l
        return None

    return Density(RHO * substitute_atoms(f_expr, amap), f"rho*f(J1{l},J2{l})")


def theorem51_symmetry(
    f_expr: Expr,
    l: int,
    eos: Optional[EOS] = None,
    n_expr: Expr = None,
    ctx: Optional[SystemContext] = None,
    printed: bool = False,
) -> Tuple[GeneralizedGenerator, Characteristic]:
    """The l-th order Hamiltonian symmetry for rho f(J_{1,l}, J_{2,l}):

        X = -2 f1^(l-1) d_t + A_U f2^(l-1) d_r
            - (A_r + ((n-1)/r) w A_w) f2^(l-1) d_U
            + (2 D_t f1^(l-1) - D_r(A_U f2^(l-1)) - ((n-1)/r) A_U f2^(l-1)) rho d_rho

    with f_.^(i) = (-R)^i f_{J_.,l} and f_expr over placeholders j1, j2.

    The eta_U component carries the term -((n-1)/r) w A_w f2^(l-1), which the
    source display omits; without it the characteristic fails the determining
    equations (printed=True reproduces the stated form for that check).
    """
    eos = eos or EOS.entropic()
    ctx = ctx or entropic_context(eos, n_expr)
    ne = ctx.n_expr
    J1l = entropic_scalar("J1", l, eos, n_expr)
    J2l = entropic_scalar("J2", l, eos, n_expr)
    f1 = partial(f_expr, jet_atom("j1", 0, 0))
    f2 = partial(f_expr, jet_atom("j2", 0, 0))

    def subst(e):
        def amap(a):
            if a.kind == "jet" and (a.it, a.ir) == (0, 0):
                if a.field == "j1":
                    return J1l
                if a.field == "j2":
                    return J2l
            return None

        return substitute_atoms(e, amap)

    f1v = _neg_R_power(subst(f1), l - 1, n_expr)
    f2v = _neg_R_power(subst(f2), l - 1, n_expr)
    w = w_expr(eos)
    args = (R.canonical(), U.canonical(), w.canonical())
    A_U = Expr.atom(opq_atom("A", args, (0, 1, 0)))
    A_r = Expr.atom(opq_atom("A", args, (1, 0, 0)))
    A_w = Expr.atom(opq_atom("A", args, (0, 0, 1)))
    tau = -2 * f1v
    xi = A_U * f2v
    eta_U = -A_r * f2v
    if not printed:
        eta_U = eta_U - ediv((ne - 1) * w * A_w, R) * f2v
    eta_rho = (2 * ctx.dt(ctx.restrict(f1v)) - D_r(xi) - ediv((ne - 1) * xi, R)) * RHO
    gen = GeneralizedGenerator(tau, xi, eta_U, eta_rho, Expr.zero())
    return gen, gen.characteristic(ctx)


def closure_h(f_expr: Expr, g_expr: Expr) -> Expr:
    """h = 2 f_{j1} g_{j2} - 2 f_{j2} g_{j1} over the placeholders."""
    a1, a2 = jet_atom("j1", 0, 0), jet_atom("j2", 0, 0)
    return (
        2 * partial(f_expr, a1) * partial(g_expr, a2)
        - 2 * partial(f_expr, a2) * partial(g_expr, a1)
    ).canonical()


def h_is_nontrivial(h: Expr) -> bool:
    """X_h is non-trivial iff h is not linear in (j1, j2)."""
    a1, a2 = jet_atom("j1", 0, 0), jet_atom("j2", 0, 0)
    for x in (a1, a2):
        for y in (a1, a2):
            if not partial(partial(h, x), y).is_zero():
                return True
    return False


def verify_commutator_closure(f_expr: Expr, g_expr: Expr, eos: Optional[EOS] = None,
                              ctx: Optional[SystemContext] = None) -> dict:
    """Check [pr X_f, pr X_g] = pr X_h with h from the closure formula, at
    l = 1 and with A opaque."""
    from .expr import evolutionary_commutator

    eos = eos or EOS.entropic()
    ctx = ctx or entropic_context(eos)
    _, cf = theorem51_symmetry(f_expr, 1, eos, ctx=ctx)
    _, cg = theorem51_symmetry(g_expr, 1, eos, ctx=ctx)
    h = closure_h(f_expr, g_expr)
    _, ch = theorem51_symmetry(h, 1, eos, ctx=ctx)
    br = evolutionary_commutator(cf.as_dict(), cg.as_dict(), ("U", "rho", "S"), restricted=True)
    diffs = [ctx.restrict(br[v] - getattr(ch, "P_" + v)) for v in ("U", "rho", "S")]
    return {
        "h": str(h),
        "h_nontrivial": h_is_nontrivial(h),
        "bracket_matches": all(d.is_zero() for d in diffs),
    }


# ---------------------------------------------------------------------------
# Verification driver for the theorem (Q-expressions, lemma, symmetries)
# ---------------------------------------------------------------------------


def q_expressions_residuals(branch: str, l: int, eos: Optional[EOS] = None) -> list:
    """Euler operators of rho~ f(J_{.,l}) against their closed forms.

    Note: relative to the source display the superscript here is (l-1); the
    (l) shown there is inconsistent with the base case l = 1 and with the
    final theorem, which uses (l-1).
    """
    eos = eos or EOS.entropic()
    ne = param("n")
    rn1, r1n = r_weights(None)
    kp = partial(eos.p(), jet_atom("S", 0, 0))
    J = entropic_scalar(branch, l, eos)
    f = opaque("f", J)
    fp = Expr.atom(opq_atom("f", (J.canonical(),), (1,)))
    fpows = [fp]
    for _ in range(l - 1):
        fpows.append(-recursion_apply(fpows[-1]))
    fl1 = fpows[l - 1]
    dens = (rn1 * RHO * f).canonical()
    eU = euler_operator(dens, "U")
    erho = euler_operator(dens, "rho")
    eS = euler_operator(dens, "S")
    two_over_n = ediv(Expr.const(2), ne)
    out = []
    if branch == "J1":
        Js = [entropic_scalar("J1", m, eos) for m in range(1, l + 1)]
        out.append(eU - 2 * rn1 * RHO * U * fl1)
        ssum = Expr.zero()
        for i in range(0, l):
            ssum = ssum + Js[l - i - 1] * fpows[i]
        out.append(erho - rn1 * (U * U * fl1 + f - ssum))
        out.append(eS + two_over_n * kp * D_r(epow(R, EXP_N) * fl1))
    else:
        w = w_expr(eos)
        Aw = Expr.atom(opq_atom("A", (R.canonical(), U.canonical(), w.canonical()), (0, 0, 1)))
        AU = Expr.atom(opq_atom("A", (R.canonical(), U.canonical(), w.canonical()), (0, 1, 0)))
        Js = [entropic_scalar("J2", m, eos) for m in range(1, l + 1)]
        out.append(eU - rn1 * RHO * AU * fl1)
        ssum = Expr.zero()
        for i in range(0, l - 1):
            ssum = ssum + Js[l - i - 1] * fpows[i]
        out.append(erho - rn1 * (f - w * Aw * fl1 - ssum))
        out.append(eS + kp * D_r(rn1 * Aw * fl1))
    return [e.canonical() for e in out]


def lemma_residuals(l: int, K: Optional[Expr] = None, eos: Optional[EOS] = None) -> list:
    """The four descent-lemma identities for K(r, U, rho, S, S_r), f opaque."""
    eos = eos or EOS.entropic()
    rn1, _ = r_weights(None)
    if K is None:
        K = entropic_scalar("J1", 1, eos)
    Ks = [K.canonical()]
    for _ in range(l):
        Ks.append(recursion_apply(Ks[-1]).canonical())
    Kl = Ks[l]
    f = opaque("f", Kl)
    fp = Expr.atom(opq_atom("f", (Kl,), (1,)))
    flist = [fp]
    for _ in range(l):
        flist.append(-recursion_apply(flist[-1]))
    fKl = flist[l]
    dens = (rn1 * RHO * f).canonical()
    out = [
        euler_operator(dens, "U") - fKl * euler_operator((rn1 * RHO * K).canonical(), "U"),
        euler_operator(dens, "S")
        - fKl * euler_operator((rn1 * RHO * K).canonical(), "S")
        + D_r(fKl) * euler_operator((rn1 * RHO * K).canonical(), "S", 1),
    ]
    Dl = Expr.zero()
    for i in range(l + 1):
        Dl = Dl + Ks[l - i] * flist[i]
    out.append(
        euler_operator(dens, "rho")
        - fKl * euler_operator((rn1 * RHO * K).canonical(), "rho")
        - rn1 * (f - Dl)
    )
    out.append(D_r(f - Dl) + K * D_r(fKl))
    return [e.canonical() for e in out]


def verify_theorem51(l_max: int = 2, eos: Optional[EOS] = None) -> dict:
    """(a) closed-form Euler expressions for both branches, (b) descent-lemma
    identities for K = J_{1,1}, (c) the theorem characteristic equals the
    Hamiltonian map of the density, (d) the two l = 1 symmetries commute."""
    eos = eos or EOS.entropic()
    ctx = entropic_context(eos)
    report = {"passed": True, "q_expressions": {}, "lemma": {}, "hamiltonian_match": {}, "commute": None}
    for branch in ("J1", "J2"):
        for l in range(1, l_max + 1):
            res = q_expressions_residuals(branch, l, eos)
            ok = all(e.is_zero() for e in res)
            report["q_expressions"][f"{branch},l={l}"] = ok
            report["passed"] &= ok
    # descent lemma for K = J_{1,1}; level 2 content is exercised through the
    # l = 2 closed-form expressions above
    res = lemma_residuals(1, eos=eos)
    ok = all(e.is_zero() for e in res)
    report["lemma"]["l=1"] = ok
    report["passed"] &= ok
    # theorem characteristic vs direct Hamiltonian map, opaque f(j1, j2)
    fgen = opaque("f", jet("j1"), jet("j2"))
    for l in (1,):
        _, char_thm = theorem51_symmetry(fgen, l, eos, ctx=ctx)
        dens = hierarchy_f_density(fgen, l, eos)
        char_map = hamiltonian_symmetry(dens, ctx)
        ok = char_map.equals(char_thm)
        report["hamiltonian_match"][f"l={l}"] = ok
        report["passed"] &= ok
    # the two basic l=1 symmetries commute (A opaque, advection rule in play)
    rep = verify_commutator_closure(jet("j1"), jet("j2"), eos, ctx)
    report["commute"] = rep["bracket_matches"] and not h_is_nontrivial(closure_h(jet("j1"), jet("j2")))
    report["passed"] &= rep["bracket_matches"]
    return report


# ---------------------------------------------------------------------------
# First-order group flows (enthalpy flux, entropy-weighted energy)
# ---------------------------------------------------------------------------


def enthalpy_group_flow(sl: RadialSlice, eps: float) -> RadialSlice:
    """S*(t, r) = S(t, M^{-1}(M(r) - eps)), M(r) = int rho r^(n-1) dr;
    U and rho unchanged.  Requires rho > 0 (M strictly increasing)."""
    if np.any(sl.rho <= 0):
        raise ValueError("mass coordinate needs rho > 0")
    r = sl.r
    w = sl.rho * r ** (sl.n - 1.0)
    M = integrate.cumulative_trapezoid(w, r, initial=0.0)
    target = M - eps
    from scipy.interpolate import PchipInterpolator

    rinv = PchipInterpolator(M, r)
    inside = (target >= M[0]) & (target <= M[-1])
    Sstar = np.array(sl.S, dtype=float, copy=True)
    Sitp = PchipInterpolator(r, sl.S)
    Sstar[inside] = Sitp(rinv(target[inside]))
    Sstar[~inside] = np.nan
    return RadialSlice(r.copy(), sl.U.copy(), sl.rho.copy(), Sstar, sl.t, sl.n)


def entropy_weighted_group_flow(
    sol: RadialSolution,
    t: float,
    eps: float,
    f: Callable[[float], float],
    fprime: Optional[Callable[[float], float]] = None,
    tol: float = 1e-12,
    corrected_rho: bool = False,
) -> RadialSlice:
    """Implicit map S* = S(sigma, r), sigma = t - eps f(S*), with U* = U(sigma, r)
    and the stated closed form for rho*.

    corrected_rho switches the rho component to the form integrated from the
    machine-verified symmetry characteristic (they agree when f' = 0).
    Solved by safeguarded bisection per grid point.
    """
    r = sol.r
    allS = np.concatenate([np.asarray(a) for a in sol.data["S"]])
    s_lo, s_hi = float(np.min(allS)), float(np.max(allS))
    pad = 0.1 * (s_hi - s_lo) + 1e-9
    s_lo -= pad
    s_hi += pad

    def S_at(sigma, ri):
        return float(sol.eval("S", sigma, np.array([ri]))[0])

    Sstar = np.empty_like(r)
    sigma_arr = np.empty_like(r)
    for i, ri in enumerate(r):
        def g(s):
            return s - S_at(t - eps * f(s), ri)

        a, b = s_lo, s_hi
        ga, gb = g(a), g(b)
        if ga * gb > 0:
            # fall back to the unshifted value as the initial guess bracket
            mid = S_at(t, ri)
            a, b = mid - pad, mid + pad
            ga, gb = g(a), g(b)
            if ga * gb > 0:
                raise ValueError("implicit entropy solve failed to bracket")
        for _ in range(200):
            m = 0.5 * (a + b)
            gm = g(m)
            if abs(b - a) < tol or gm == 0.0:
                break
            if ga * gm <= 0:
                b, gb = m, gm
            else:
                a, ga = m, gm
        Sstar[i] = 0.5 * (a + b)
        sigma_arr[i] = t - eps * f(Sstar[i])

    Ustar = np.array([sol.eval("U", sg, np.array([ri]))[0] for sg, ri in zip(sigma_arr, r)])
    rho_sig = np.array([sol.eval("rho", sg, np.array([ri]))[0] for sg, ri in zip(sigma_arr, r)])
    if fprime is None:
        rhostar = rho_sig
    else:
        # S_t, S_r at (sigma, r) via interpolants; S_t = -U S_r on solutions
        from scipy.interpolate import PchipInterpolator

        St = np.empty_like(r)
        Sr = np.empty_like(r)
        for i, (sg, ri) in enumerate(zip(sigma_arr, r)):
            Sslice = sol.eval("S", sg, r)
            ditp = PchipInterpolator(r, Sslice).derivative()
            Sr[i] = ditp(ri)
            St[i] = -sol.eval("U", sg, np.array([ri]))[0] * Sr[i]
        fp = np.array([fprime(s) for s in Sstar])
        if corrected_rho:
            rhostar = rho_sig / (1.0 + eps * fp * St)
        else:
            base = 1.0 + eps * St * fp
            expo = np.divide(Sr, St, out=np.zeros_like(Sr), where=np.abs(St) > 1e-300)
            rhostar = rho_sig * np.power(base, expo)
    return RadialSlice(r.copy(), Ustar, rhostar, Sstar, t, sol.n)


def first_order_group_flow(kind: str, eps: float, source, t: Optional[float] = None, **kw):
    """Dispatcher: kind in {'enthalpy', 'entropy_weighted'}."""
    if kind == "enthalpy":
        sl = source if isinstance(source, RadialSlice) else source.slice_at(t)
        return enthalpy_group_flow(sl, eps)
    if kind == "entropy_weighted":
        if not isinstance(source, RadialSolution):
            raise ValueError("entropy_weighted flow needs a RadialSolution")
        if t is None:
            raise ValueError("target time t required")
        return entropy_weighted_group_flow(source, t, eps, **kw)
    raise ValueError(f"unknown first-order flow {kind!r}")
