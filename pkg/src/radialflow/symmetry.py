"""Point and generalized symmetries of the radial Euler system.

Covers the characteristic form, the linearized determining equations, the
thirteen-case catalog of maximal point-symmetry algebras with their
commutator tables, and the finite transformation groups acting on discrete
solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .expr import (
    D_r,
    Expr,
    ExprError,
    R,
    SystemContext,
    T,
    ediv,
    epow,
    evolutionary_commutator,
    jet,
    jet_atom,
    opaque,
    param,
    partial,
    prolong_apply,
)
from .expr.kernel import EXP_N, EXP_Q, ExpQ, exp_add, expq_to_expr, substitute_atoms
from .fields import RadialSlice, RadialSolution, invert_monotone
from .model import EOS, TWO_OVER_N, make_context

U = jet("U")
RHO = jet("rho")
S = jet("S")
FIELDS = ("U", "rho", "S")


@dataclass(frozen=True)
class PointGenerator:
    """tau d_t + xi d_r + eta_U d_U + eta_rho d_rho + eta_S d_S with
    coefficients depending on (t, r, U, rho, S) only."""

    tau: Expr = Expr.zero()
    xi: Expr = Expr.zero()
    eta_U: Expr = Expr.zero()
    eta_rho: Expr = Expr.zero()
    eta_S: Expr = Expr.zero()
    name: str = ""

    def __post_init__(self):
        for e in (self.tau, self.xi, self.eta_U, self.eta_rho, self.eta_S):
            if e.max_jet_order() > 0:
                raise ExprError("point generator coefficients must be derivative free")

    def combo(self, coeff, other: "PointGenerator") -> "PointGenerator":
        c = Expr.const(coeff) if isinstance(coeff, (int, Fraction)) else coeff
        return PointGenerator(
            self.tau + c * other.tau,
            self.xi + c * other.xi,
            self.eta_U + c * other.eta_U,
            self.eta_rho + c * other.eta_rho,
            self.eta_S + c * other.eta_S,
        )

    def scaled(self, coeff) -> "PointGenerator":
        z = PointGenerator()
        return z.combo(coeff, self)

    def equals(self, other: "PointGenerator") -> bool:
        return all(
            (a - b).is_zero()
            for a, b in (
                (self.tau, other.tau),
                (self.xi, other.xi),
                (self.eta_U, other.eta_U),
                (self.eta_rho, other.eta_rho),
                (self.eta_S, other.eta_S),
            )
        )


@dataclass(frozen=True)
class Characteristic:
    """Evolutionary form P_U d_U + P_rho d_rho + P_S d_S."""

    P_U: Expr
    P_rho: Expr
    P_S: Expr

    @property
    def order(self) -> int:
        return max(e.max_jet_order() for e in (self.P_U, self.P_rho, self.P_S))

    def as_dict(self) -> Dict[str, Expr]:
        return {"U": self.P_U, "rho": self.P_rho, "S": self.P_S}

    def is_trivial(self) -> bool:
        return all(e.is_zero() for e in (self.P_U, self.P_rho, self.P_S))

    def minus(self, other: "Characteristic") -> "Characteristic":
        return Characteristic(
            self.P_U - other.P_U, self.P_rho - other.P_rho, self.P_S - other.P_S
        )

    def equals(self, other: "Characteristic") -> bool:
        return self.minus(other).is_trivial()

    def restricted(self, ctx: SystemContext) -> "Characteristic":
        return Characteristic(
            ctx.restrict(self.P_U), ctx.restrict(self.P_rho), ctx.restrict(self.P_S)
        )


def to_characteristic(g: PointGenerator) -> Characteristic:
    """P_v = eta_v - tau v_t - xi v_r (free-jet form)."""
    return Characteristic(
        g.eta_U - g.tau * jet("U", 1, 0) - g.xi * jet("U", 0, 1),
        g.eta_rho - g.tau * jet("rho", 1, 0) - g.xi * jet("rho", 0, 1),
        g.eta_S - g.tau * jet("S", 1, 0) - g.xi * jet("S", 0, 1),
    )


def determining_residuals(c: Characteristic, ctx: SystemContext) -> Tuple[Expr, Expr, Expr]:
    """The three linearized (Frechet-derivative) determining expressions,
    fully restricted to the solution space.  The characteristic is a symmetry
    iff all three normalize to zero."""
    P_U = ctx.restrict(c.P_U)
    P_rho = ctx.restrict(c.P_rho)
    P_S = ctx.restrict(c.P_S)
    eos = ctx.eos
    p = eos.p()
    p_rho = partial(p, jet_atom("rho", 0, 0))
    p_S = partial(p, jet_atom("S", 0, 0))
    n_e = ctx.n_expr
    S_r = jet("S", 0, 1)
    rho_r = jet("rho", 0, 1)
    U_r = jet("U", 0, 1)

    e1 = (
        ctx.dt(P_U)
        + U * D_r(P_U)
        + U_r * P_U
        + ediv(D_r(p_S * P_S + p_rho * P_rho), RHO)
        - ediv((p_S * S_r + p_rho * rho_r) * P_rho, RHO * RHO)
    )
    e2 = ctx.dt(P_rho) + D_r(U * P_rho + RHO * P_U) + ediv((n_e - 1) * (U * P_rho + RHO * P_U), R)
    e3 = ctx.dt(P_S) + U * D_r(P_S) + S_r * P_U
    return ctx.restrict(e1), ctx.restrict(e2), ctx.restrict(e3)


def is_symmetry(c: Characteristic, ctx: SystemContext) -> bool:
    return all(e.is_zero() for e in determining_residuals(c, ctx))


def commutator(a: Characteristic, b: Characteristic) -> Characteristic:
    """Prolonged evolutionary bracket on the free jet space:
    [pr a, pr b]^v = pr_a(b^v) - pr_b(a^v)."""
    out = evolutionary_commutator(a.as_dict(), b.as_dict(), FIELDS, restricted=False)
    return Characteristic(out["U"], out["rho"], out["S"])


def commutator_restricted(a: Characteristic, b: Characteristic, ctx: SystemContext) -> Characteristic:
    ar, br = a.restricted(ctx), b.restricted(ctx)
    out = evolutionary_commutator(ar.as_dict(), br.as_dict(), FIELDS, restricted=True)
    return Characteristic(ctx.restrict(out["U"]), ctx.restrict(out["rho"]), ctx.restrict(out["S"]))


# ---------------------------------------------------------------------------
# Generator catalog (Table-2 basis)
# ---------------------------------------------------------------------------

KAPPA = opaque("kappa", S)
KAPPA_P = partial(KAPPA, jet_atom("S", 0, 0))


def X1() -> PointGenerator:
    return PointGenerator(tau=Expr.const(1), name="X1")


def X2() -> PointGenerator:
    return PointGenerator(tau=T, xi=R, name="X2")


def Xii(q: Expr = None, kappa: Expr = None) -> PointGenerator:
    qe = q if q is not None else param("q")
    kap = kappa if kappa is not None else KAPPA
    kp = partial(kap, jet_atom("S", 0, 0))
    return PointGenerator(
        xi=qe * R, eta_U=qe * U, eta_rho=2 * RHO, eta_S=ediv(-2 * kap, kp), name="Xii"
    )


def Xiii(kappa: Expr = None) -> PointGenerator:
    kap = kappa if kappa is not None else KAPPA
    kp = partial(kap, jet_atom("S", 0, 0))
    return PointGenerator(xi=R, eta_U=U, eta_S=ediv(2 * kap, kp), name="Xiii")


def Xiv(q: Expr = None) -> PointGenerator:
    qe = q if q is not None else param("q")
    return PointGenerator(xi=qe * R, eta_U=qe * U, eta_rho=2 * RHO, name="Xiv")


def Xiv_prime(n: Expr = None) -> PointGenerator:
    ne = n if n is not None else param("n")
    return PointGenerator(xi=R, eta_U=U, eta_rho=ne * RHO, name="Xiv'")


def Xv(n: Expr = None) -> PointGenerator:
    ne = n if n is not None else param("n")
    return PointGenerator(
        tau=T * T, xi=R * T, eta_U=R - T * U, eta_rho=-ne * T * RHO, name="Xv"
    )


def Xvi(kappa: Expr = None) -> PointGenerator:
    kap = kappa if kappa is not None else KAPPA
    kp = partial(kap, jet_atom("S", 0, 0))
    return PointGenerator(eta_S=ediv(Expr.const(1), kp), name="Xvi")


def Xvii() -> PointGenerator:
    return PointGenerator(xi=R, eta_U=U, eta_rho=-2 * RHO, name="Xvii")


def Xviii(kappa: Expr = None) -> PointGenerator:
    kap = kappa if kappa is not None else KAPPA
    kp = partial(kap, jet_atom("S", 0, 0))
    return PointGenerator(xi=R, eta_U=U, eta_rho=-2 * RHO, eta_S=ediv(2 * kap, kp), name="Xviii")


def Xix(F: Expr = None) -> PointGenerator:
    Fe = F if F is not None else opaque("F", S)
    return PointGenerator(eta_S=Fe, name="Xix")


def Xvvi(F: Expr = None, kappa: Expr = None) -> PointGenerator:
    Fe = F if F is not None else opaque("F", S)
    kap = kappa if kappa is not None else KAPPA
    kp = partial(kap, jet_atom("S", 0, 0))
    G = partial(Fe * kp, jet_atom("S", 0, 0))  # (F kappa')'
    return PointGenerator(eta_rho=ediv(G, kp) * RHO, eta_S=Fe, name="Xvvi")


# ---------------------------------------------------------------------------
# The 13 catalog cases
# ---------------------------------------------------------------------------


@dataclass
class CatalogCase:
    case_id: int
    eos: EOS
    generators: Dict[str, PointGenerator]
    # (a, b) -> {name: rational coefficient}; pairs not listed must commute
    commutators: Dict[Tuple[str, str], Dict[str, Fraction]]
    algebra: str
    notes: str = ""


def _sl2_comms():
    return {
        ("X1", "X2"): {"X1": Fraction(1)},
        ("X1", "Xv"): {"X2": Fraction(2), "Xiv'": Fraction(-1)},
        ("X2", "Xv"): {"Xv": Fraction(1)},
    }


def build_case(case_id: int) -> CatalogCase:
    """Construct one Table-2 row with opaque kappa/f/F (family form)."""
    base = {"X1": X1(), "X2": X2()}
    std = {("X1", "X2"): {"X1": Fraction(1)}}
    k = param("k")
    if case_id == 1:
        return CatalogCase(1, EOS.general(), dict(base), std, "A_{2,1}")
    if case_id == 2:
        return CatalogCase(2, EOS.separable(), {**base, "Xiii": Xiii()}, std, "A_{2,1} + A_1")
    if case_id == 3:
        return CatalogCase(3, EOS.additive(), {**base, "Xvi": Xvi()}, std, "A_{2,1} + A_1")
    if case_id == 4:
        return CatalogCase(4, EOS.scaled_power(), {**base, "Xii": Xii()}, std, "A_{2,1} + A_1")
    if case_id == 5:
        return CatalogCase(5, EOS.log_form(), {**base, "Xviii": Xviii()}, std, "A_{2,1} + A_1")
    if case_id == 6:
        return CatalogCase(
            6, EOS.polytropic(), {**base, "Xiii": Xiii(), "Xiv": Xiv()}, std, "A_{2,1} + 2A_1"
        )
    if case_id == 7:
        return CatalogCase(
            7,
            EOS.additive(f=k * Expr.atom(_ln_rho_atom())),
            {**base, "Xvi": Xvi(), "Xvii": Xvii()},
            std,
            "A_{2,1} + 2A_1",
        )
    if case_id == 8:
        return CatalogCase(
            8,
            EOS.polytropic(q=TWO_OVER_N),
            {**base, "Xiii": Xiii(), "Xiv'": Xiv_prime(), "Xv": Xv()},
            _sl2_comms(),
            "sl(2,R) + 2A_1",
        )
    if case_id == 9:
        return CatalogCase(9, EOS.barotropic(), {**base, "Xix": Xix()}, std, "A_{2,1} + A_inf")
    if case_id == 10:
        return CatalogCase(
            10, EOS.entropic(), {**base, "Xvii": Xvii(), "Xvvi": Xvvi()}, std, "A_{2,1} + A_1 + A_inf"
        )
    if case_id == 11:
        return CatalogCase(
            11,
            EOS.barotropic(f=k * Expr.atom(_ln_rho_atom())),
            {**base, "Xvii": Xvii(), "Xix": Xix()},
            std,
            "A_{2,1} + A_1 + A_inf",
        )
    if case_id == 12:
        return CatalogCase(
            12,
            EOS.barotropic(f=k * epow(RHO, exp_add(1, EXP_Q))),
            {**base, "Xiv": Xiv(), "Xix": Xix()},
            std,
            "A_{2,1} + A_1 + A_inf",
        )
    if case_id == 13:
        return CatalogCase(
            13,
            EOS.barotropic(f=k * epow(RHO, exp_add(1, TWO_OVER_N))),
            {**base, "Xv": Xv(), "Xiv'": Xiv_prime(), "Xix": Xix()},
            _sl2_comms(),
            "sl(2,R) + A_1 + A_inf",
        )
    raise ExprError(f"unknown case {case_id}")


def _ln_rho_atom():
    from .expr.kernel import fn_atom

    return fn_atom("ln", RHO.canonical())


def expected_combination(case: CatalogCase, combo: Dict[str, Fraction]) -> Characteristic:
    g = PointGenerator()
    for name, c in combo.items():
        g = g.combo(c, case.generators[name])
    return to_characteristic(g)


def verify_case(case_id: int) -> dict:
    """Check every listed generator and the commutator table for one case."""
    case = build_case(case_id)
    ctx = make_context(case.eos)
    report = {
        "case": case_id,
        "eos": case.eos.label,
        "algebra": case.algebra,
        "generators": {},
        "commutators": {},
        "passed": True,
    }
    chars = {}
    for name, g in case.generators.items():
        c = to_characteristic(g)
        chars[name] = c
        residuals = determining_residuals(c, ctx)
        ok = all(e.is_zero() for e in residuals)
        report["generators"][name] = {
            "residual_zero": ok,
            "residual_terms": [len(e.terms) for e in residuals],
        }
        report["passed"] &= ok
    names = sorted(case.generators)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            pair = (a, b)
            expected = case.commutators.get(pair, {})
            got = commutator(chars[a], chars[b])
            want = expected_combination(case, expected)
            ok = got.equals(want)
            report["commutators"][f"[{a},{b}]"] = {
                "expected": {k: str(v) for k, v in expected.items()} or "0",
                "ok": ok,
            }
            report["passed"] &= ok
    return report


def verify_all_cases(case_ids: Sequence[int] = range(1, 14)) -> List[dict]:
    return [verify_case(i) for i in sorted(case_ids)]


# -- inter-case inheritance (structure noted alongside Table 2) --------------


def case6_inheritance_holds() -> bool:
    """Xiv = (q+1) Xiii|_{f=rho^{1+q}} - Xviii|_{kappa -> kappa^{1/(q+1)}, k=0}."""
    q = param("q")
    kap_hat = epow(KAPPA, ExpQ({(0, 0): Fraction(1)}, {(0, 0): Fraction(1), (0, 1): Fraction(1)}))
    lhs = Xiv()
    rhs = Xiii().scaled(q + 1).combo(Fraction(-1), Xviii(kappa=kap_hat))
    return lhs.equals(rhs)


def case7_inheritance_holds() -> bool:
    """Xvii = -2k Xvi|_{f=k ln rho} - Xii|_{kappa -> exp(kappa/k), q=-1}."""
    from .expr import exp_fn

    k = param("k")
    kap_hat = exp_fn(ediv(KAPPA, k))
    lhs = Xvii()
    rhs = Xvi().scaled(-2 * k).combo(Fraction(-1), Xii(q=Expr.const(-1), kappa=kap_hat))
    return lhs.equals(rhs)


def case8_specialization_holds() -> bool:
    """Xiv' = (1/q) Xiv at q = 2/n."""
    two_over_n = expq_to_expr(TWO_OVER_N)

    def sub_q(a):
        if a.kind == "param" and a.name == "q":
            return two_over_n

    xiv_at = PointGenerator(
        substitute_atoms(Xiv().tau, sub_q),
        substitute_atoms(Xiv().xi, sub_q),
        substitute_atoms(Xiv().eta_U, sub_q),
        substitute_atoms(Xiv().eta_rho, sub_q),
        substitute_atoms(Xiv().eta_S, sub_q),
    )
    half_n = ediv(param("n"), Expr.const(2))
    return Xiv_prime().equals(xiv_at.scaled(half_n))


def sl2_subalgebra_holds() -> bool:
    """{X1, X2 - Xiv'/2, Xv} closes as sl(2,R) and Xiv' is central to it."""
    h = X2().combo(Fraction(-1, 2), Xiv_prime())
    c1, ch, cv, civ = map(to_characteristic, (X1(), h, Xv(), Xiv_prime()))
    ok = commutator(c1, ch).equals(c1)
    ok &= commutator(ch, cv).equals(cv)
    got = commutator(c1, cv)
    want = to_characteristic(h.scaled(2))
    ok &= got.equals(want)
    ok &= commutator(c1, civ).is_trivial()
    ok &= commutator(cv, civ).is_trivial()
    return ok


def family_bracket_closes() -> bool:
    """[Xix(F1), Xix(F2)] = Xix(F1 F2' - F1' F2)."""
    F1 = opaque("F1", S)
    F2 = opaque("F2", S)
    a = to_characteristic(Xix(F1))
    b = to_characteristic(Xix(F2))
    got = commutator(a, b)
    h = F1 * partial(F2, jet_atom("S", 0, 0)) - partial(F1, jet_atom("S", 0, 0)) * F2
    return got.equals(to_characteristic(Xix(h)))


# ---------------------------------------------------------------------------
# Finite transformation groups acting on discrete solutions
# ---------------------------------------------------------------------------

GROUP_KINDS = (
    "symm1",
    "symm2",
    "symm.ii",
    "symm.iii",
    "symm.iv",
    "symm.v",
    "symm.vi",
    "symm.vii",
    "symm.ix",
    "symm.vvi",
)


@dataclass
class GroupData:
    """Callables needed by the entropy-change groups."""

    kappa: Optional[Callable] = None
    kappa_inv: Optional[Callable] = None
    kappa_prime: Optional[Callable] = None
    H: Optional[Callable] = None
    H_inv: Optional[Callable] = None
    F: Optional[Callable] = None
    q: float = 2.0 / 3.0
    n: float = 3.0

    def ensure_kappa_inv(self, data_lo: float, data_hi: float):
        if self.kappa_inv is None:
            if self.kappa is None:
                raise ValueError("kappa callable required for this group")
            self.kappa_inv = invert_monotone(self.kappa, data_lo, data_hi)

    def ensure_H_inv(self, data_lo: float, data_hi: float):
        if self.H_inv is None:
            if self.H is None:
                raise ValueError("H callable required for this group")
            self.H_inv = invert_monotone(self.H, data_lo, data_hi)


def apply_group(kind: str, eps: float, source, t: Optional[float] = None,
                data: Optional[GroupData] = None) -> RadialSlice:
    """Apply one finite transformation group to a discrete solution.

    Orientation: this is the action u -> exp(-eps X^) u, i.e. fields are
    sampled at the forward-mapped coordinates and the inverse field maps are
    applied there (for a pure time translation this reads
    U*(t, r) = U(t + eps, r)).  Writing the orbit maps naively as pointwise
    substitutions does not map solutions to solutions for the groups whose
    field factors involve t or r.

    source is a RadialSlice for groups that do not move time, and a
    RadialSolution (with target time t) for symm1, symm2, symm.v.  Output is
    resampled onto the source radial grid.
    """
    data = data or GroupData()
    if kind in ("symm1", "symm2", "symm.v"):
        if not isinstance(source, RadialSolution):
            raise ValueError(f"{kind} needs a RadialSolution (time-dependent pullback)")
        if t is None:
            raise ValueError("target time t required")
        r = source.r
        if kind == "symm1":
            sl = source.eval_slice(t + eps, r)
            sl.t = t
            return sl
        if kind == "symm2":
            lam = math.exp(eps)
            sl = source.eval_slice(lam * t, lam * r)
            return RadialSlice(r.copy(), sl.U, sl.rho, sl.S, t, source.n)
        # symm.v (conformal similarity): sample at (t~, r~) = (t, r)/(1 - eps t)
        # and invert the field maps there:
        #   U* = (U(t~, r~) - eps r) / (1 - eps t),  rho* = (1 - eps t)^(-n) rho
        a = 1.0 - eps * t
        if a <= 0:
            raise ValueError("symm.v parameter outside domain: 1 - eps*t <= 0")
        tt, rr = t / a, r / a
        sl = source.eval_slice(tt, rr)
        n = source.n
        return RadialSlice(
            r.copy(),
            (sl.U - eps * r) / a,
            a ** (-n) * sl.rho,
            sl.S,
            t,
            n,
        )

    if not isinstance(source, RadialSlice):
        source = source.slice_at(t if t is not None else source.t_max)
    sl = source
    r = sl.r
    smin, smax = float(np.min(sl.S)), float(np.max(sl.S))
    pad = 0.5 * (smax - smin) + 0.5

    if kind in ("symm.ii", "symm.iii", "symm.iv", "symm.vii"):
        qfac = data.q if kind in ("symm.ii", "symm.iv") else 1.0
        lam = math.exp(qfac * eps)
        base = sl.resample(lam * r)  # sample at the forward-scaled radius
        Ustar = base.U / lam
        if kind == "symm.ii":
            rhostar = math.exp(-2 * eps) * base.rho
            data.ensure_kappa_inv(smin - pad, smax + pad)
            Sstar = data.kappa_inv(math.exp(2 * eps) * data.kappa(base.S))
        elif kind == "symm.iv":
            rhostar = math.exp(-2 * eps) * base.rho
            Sstar = base.S
        elif kind == "symm.iii":
            rhostar = base.rho
            data.ensure_kappa_inv(smin - pad, smax + pad)
            Sstar = data.kappa_inv(math.exp(-2 * eps) * data.kappa(base.S))
        else:  # symm.vii
            rhostar = math.exp(2 * eps) * base.rho
            data.ensure_kappa_inv(smin - pad, smax + pad)
            Sstar = data.kappa_inv(math.exp(-2 * eps) * data.kappa(base.S))
        return RadialSlice(r.copy(), Ustar, rhostar, Sstar, sl.t, sl.n)

    if kind == "symm.vi":
        data.ensure_kappa_inv(smin - pad, smax + pad)
        Sstar = data.kappa_inv(data.kappa(sl.S) - eps)
        return RadialSlice(r.copy(), sl.U.copy(), sl.rho.copy(), Sstar, sl.t, sl.n)

    if kind in ("symm.ix", "symm.vvi"):
        data.ensure_H_inv(smin - pad, smax + pad)
        Sstar = data.H_inv(data.H(sl.S) - eps)
        if kind == "symm.ix":
            return RadialSlice(r.copy(), sl.U.copy(), sl.rho.copy(), Sstar, sl.t, sl.n)
        # symm.vvi: rho factor keeps kappa'(S) F(S) / rho pointwise invariant
        if data.kappa_prime is None or data.F is None:
            raise ValueError("symm.vvi needs kappa_prime and F callables")
        num = data.kappa_prime(Sstar) * data.F(Sstar)
        den = data.kappa_prime(sl.S) * data.F(sl.S)
        return RadialSlice(r.copy(), sl.U.copy(), num / den * sl.rho, Sstar, sl.t, sl.n)

    raise ValueError(f"unknown group kind {kind!r}; expected one of {GROUP_KINDS}")
