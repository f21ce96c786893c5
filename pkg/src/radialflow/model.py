"""Radial Euler system, EOS catalog, and the gas-dynamics equivalence.

The system in n > 1 dimensions:

    U_t + U U_r + (p_S S_r + p_rho rho_r)/rho = 0
    rho_t + (U rho)_r + ((n-1)/r) U rho       = 0
    S_t + U S_r                               = 0

closed by an equation of state p = p(rho, S).  The catalog covers the EOS
families that admit extra point symmetries, with kappa and f either opaque
symbols (family-wide checks) or concrete expressions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .expr import (
    D_r,
    ExpQ,
    Expr,
    ExprError,
    R,
    SystemContext,
    T,
    ediv,
    epow,
    euler_operator,
    exp_fn,
    jet,
    ln,
    opaque,
    param,
    partial,
    jet_atom,
)
from .expr.kernel import exp_add, EXP_N, EXP_Q, expq_to_expr

U = jet("U")
RHO = jet("rho")
S = jet("S")
U_R = jet("U", 0, 1)
RHO_R = jet("rho", 0, 1)
S_R = jet("S", 0, 1)

TWO_OVER_N = ExpQ(
    {(0, 0): Fraction(2)}, {(1, 0): Fraction(1)}
)  # the special polytropic exponent q = 2/n


def n_minus_1(n_expr: Expr) -> Expr:
    return n_expr - 1


def r_pow(e) -> Expr:
    """r raised to an exact exponent."""
    return epow(R, e)


RN1 = r_pow(exp_add(-1, EXP_N))  # r^(n-1)
R1N = r_pow(exp_add(1, EXP_N.neg()))  # r^(1-n)


class EOSError(ExprError):
    pass


@dataclass(frozen=True)
class EOS:
    """Equation of state with derived thermodynamics.

    kind is one of general | separable | additive | scaled_power | log_form |
    barotropic | polytropic | entropic.  kappa/f are expressions in S / rho
    (opaque symbols cover whole families); q is an exact exponent, k a
    parameter expression.
    """

    kind: str
    kappa: Optional[Expr] = None  # expression in S
    f: Optional[Expr] = None  # expression in rho (or in its composite argument)
    q: Optional[object] = None  # ExpQ or int
    k: Optional[Expr] = None
    label: str = ""

    # -- constructors --------------------------------------------------------

    @staticmethod
    def general(p: Optional[Expr] = None) -> "EOS":
        return EOS(kind="general", f=p, label="p(rho,S)")

    @staticmethod
    def separable(kappa: Optional[Expr] = None, f: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="separable",
            kappa=kappa if kappa is not None else opaque("kappa", S),
            f=f if f is not None else opaque("f", RHO),
            label="kappa(S)*f(rho)",
        )

    @staticmethod
    def additive(kappa: Optional[Expr] = None, f: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="additive",
            kappa=kappa if kappa is not None else opaque("kappa", S),
            f=f if f is not None else opaque("f", RHO),
            label="f(rho) + kappa(S)",
        )

    @staticmethod
    def scaled_power(q=None, kappa: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="scaled_power",
            kappa=kappa if kappa is not None else opaque("kappa", S),
            q=q if q is not None else EXP_Q,
            label="f(kappa(S)*rho)*rho^(1+q)",
        )

    @staticmethod
    def log_form(kappa: Optional[Expr] = None, k: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="log_form",
            kappa=kappa if kappa is not None else opaque("kappa", S),
            k=k if k is not None else param("k"),
            label="f(kappa(S)*rho) + k*ln(rho)",
        )

    @staticmethod
    def barotropic(f: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="barotropic",
            f=f if f is not None else opaque("f", RHO),
            label="f(rho)",
        )

    @staticmethod
    def polytropic(q=None, kappa: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="polytropic",
            kappa=kappa if kappa is not None else opaque("kappa", S),
            q=q if q is not None else EXP_Q,
            label="kappa(S)*rho^(1+q)",
        )

    @staticmethod
    def entropic(kappa: Optional[Expr] = None) -> "EOS":
        return EOS(
            kind="entropic",
            kappa=kappa if kappa is not None else opaque("kappa", S),
            label="kappa(S)",
        )

    # -- pressure and derived quantities --------------------------------------

    def p(self) -> Expr:
        if self.kind == "general":
            return self.f if self.f is not None else opaque("p", RHO, S)
        if self.kind == "separable":
            return self.kappa * self.f
        if self.kind == "additive":
            return self.f + self.kappa
        if self.kind == "scaled_power":
            return opaque("f", self.kappa * RHO) * epow(RHO, exp_add(1, self.q))
        if self.kind == "log_form":
            return opaque("f", self.kappa * RHO) + self.k * ln(RHO)
        if self.kind == "barotropic":
            return self.f
        if self.kind == "polytropic":
            return self.kappa * epow(RHO, exp_add(1, self.q))
        if self.kind == "entropic":
            return self.kappa
        raise EOSError(f"unknown EOS kind {self.kind!r}")

    def p_rho(self) -> Expr:
        return partial(self.p(), jet_atom("rho", 0, 0))

    def p_S(self) -> Expr:
        return partial(self.p(), jet_atom("S", 0, 0))

    def a2(self) -> Expr:
        """Squared sound speed at fixed entropy."""
        return self.p_rho()

    def internal_energy(self) -> Expr:
        """e(rho, S) with rho^2 de/drho = p.

        Integration constants: polytropic e = kappa rho^q / q, entropic
        e = -kappa/rho, barotropic power laws get constant 0.  Kinds without
        a closed form return an opaque symbol whose rho-derivative rewrites
        to p/rho^2 (see energy_context).
        """
        if self.kind == "polytropic":
            qinv = ediv(Expr.const(1), expq_to_expr(self.q))
            return qinv * self.kappa * epow(RHO, self.q)
        if self.kind == "entropic":
            return -self.kappa * epow(RHO, -1)
        if self.kind in ("barotropic", "separable", "additive"):
            fpart = _integrate_rho_over_rho2(self.f)
            if fpart is None:
                # opaque antiderivative of f/rho^2, rewritten via context rules
                fpart = opaque("Fb", RHO)
            if self.kind == "separable":
                return self.kappa * fpart
            if self.kind == "additive":
                return fpart - self.kappa * epow(RHO, -1)
            return fpart
        # opaque energy with the defining relation attached via context rules
        return opaque("en", RHO, S)

    def temperature(self) -> Expr:
        """T = de/dS where the energy has a closed form."""
        return partial(self.internal_energy(), jet_atom("S", 0, 0))

    # -- membership relations --------------------------------------------------

    def membership_relations(self) -> list:
        """Differential relations in p characterizing the family; each must
        normalize to zero for the instance."""
        p = self.p()
        pr = partial(p, jet_atom("rho", 0, 0))
        ps = partial(p, jet_atom("S", 0, 0))
        prs = partial(pr, jet_atom("S", 0, 0))
        rels = []
        if self.kind == "separable":
            rels.append(p * prs - pr * ps)
        elif self.kind == "additive":
            rels.append(prs)
        elif self.kind == "scaled_power":
            kp = partial(self.kappa, jet_atom("S", 0, 0))
            rels.append(RHO * pr * kp - self.kappa * ps - expq_to_expr(exp_add(1, self.q)) * p * kp)
        elif self.kind == "log_form":
            kp = partial(self.kappa, jet_atom("S", 0, 0))
            rels.append(RHO * pr * kp - self.kappa * ps - self.k * kp)
        elif self.kind == "barotropic":
            rels.append(ps)
        elif self.kind == "polytropic":
            rels.append(RHO * pr - expq_to_expr(exp_add(1, self.q)) * p)
            rels.append(p * prs - pr * ps)
        elif self.kind == "entropic":
            rels.append(pr)
        return [r.canonical() for r in rels]

    def check_membership(self) -> bool:
        return all(r.is_zero() for r in self.membership_relations())


def _integrate_rho_over_rho2(f: Optional[Expr]) -> Optional[Expr]:
    """Closed-form antiderivative of f(rho)/rho^2 in rho for sums of
    c*rho^alpha and c*ln(rho); None when unavailable."""
    if f is None:
        return None
    from .expr.kernel import exp_is_zero, exp_neg

    total = Expr.zero()
    rho_atom = jet_atom("rho", 0, 0)
    for m, c in f.terms.items():
        rho_exp = 0
        rest = []
        has_ln_rho = False
        for a, x in m:
            if a.kind == "jet" and a is rho_atom:
                rho_exp = x
            elif a.kind == "fn" and a.name == "ln" and a.args[0] == RHO.canonical() and x == 1:
                has_ln_rho = True
            elif a.kind == "jet":
                return None
            elif a.kind in ("opq", "fn", "pows") and any(
                j is rho_atom for j in Expr.atom(a).jet_atoms()
            ):
                return None
            else:
                rest.append((a, x))
        restm = Expr({tuple(rest): Fraction(c)})
        alpha = exp_add(rho_exp, -2)  # integrand exponent
        if has_ln_rho:
            if rho_exp != 0:
                return None
            # integral of ln(rho)/rho^2 = -(ln rho + 1)/rho
            total = total + restm * (-(ln(RHO) + 1) * epow(RHO, -1))
            continue
        if isinstance(alpha, int) and alpha == -1:
            total = total + restm * ln(RHO)
        else:
            ap1 = exp_add(alpha, 1)
            if exp_is_zero(ap1):
                return None
            total = total + restm * ediv(epow(RHO, ap1), expq_to_expr(ap1))
    return total


# ---------------------------------------------------------------------------
# Evolution contexts and residuals
# ---------------------------------------------------------------------------


def euler_residuals(eos: EOS, n_expr: Expr = None) -> tuple:
    """Left sides of the three radial Euler equations as free-jet expressions."""
    n_e = n_expr if n_expr is not None else param("n")
    p = eos.p()
    p_rho = partial(p, jet_atom("rho", 0, 0))
    p_S = partial(p, jet_atom("S", 0, 0))
    res_U = jet("U", 1, 0) + U * U_R + ediv(p_S * S_R + p_rho * RHO_R, RHO)
    res_rho = jet("rho", 1, 0) + D_r(U * RHO) + ediv((n_e - 1) * U * RHO, R)
    res_S = jet("S", 1, 0) + U * S_R
    return res_U, res_rho, res_S


def make_context(eos: EOS, n_expr: Expr = None, atom_rules=None) -> SystemContext:
    """Evolution context for the (U, rho, S) system under the given EOS."""
    n_e = n_expr if n_expr is not None else param("n")
    res_U, res_rho, res_S = euler_residuals(eos, n_e)
    evolution = {
        "U": (res_U - jet("U", 1, 0)) * -1,
        "rho": (res_rho - jet("rho", 1, 0)) * -1,
        "S": (res_S - jet("S", 1, 0)) * -1,
    }
    return SystemContext(("U", "rho", "S"), evolution, n_e, eos=eos, atom_rules=atom_rules)


def energy_rules(eos: EOS):
    """Atom rules attaching the defining relation rho^2 de/drho = p to the
    opaque energy symbols en(rho, S) and Fb(rho)."""
    p = eos.p()
    fb_target = eos.f if eos.f is not None else p  # Fb' = f/rho^2
    cache: dict = {}

    def rule(a):
        if a.kind != "opq" or a.name not in ("en", "Fb"):
            return None
        if a.dmi[0] == 0:
            return None
        got = cache.get(a.key)
        if got is not None:
            return got
        if a.name == "en":
            i, j = a.dmi
            e = ediv(p, RHO * RHO)
            for _ in range(i - 1):
                e = partial(e, jet_atom("rho", 0, 0))
            for _ in range(j):
                e = partial(e, jet_atom("S", 0, 0))
        else:
            (i,) = a.dmi
            e = ediv(fb_target, RHO * RHO)
            for _ in range(i - 1):
                e = partial(e, jet_atom("rho", 0, 0))
        cache[a.key] = e
        return e

    return rule


def energy_context(eos: EOS, n_expr: Expr = None) -> SystemContext:
    """Context whose atom rules also rewrite the opaque energy symbols."""
    n_e = n_expr if n_expr is not None else param("n")
    return make_context(eos, n_e, atom_rules=energy_rules(eos))


def gas_residuals(a2: Expr, n_expr: Expr = None) -> tuple:
    """Left sides of the radial gas-dynamics equations over fields (U, rho, p);
    a2 is the squared sound speed as an expression in (rho, p)."""
    n_e = n_expr if n_expr is not None else param("n")
    pfield = jet("p")
    p_r = jet("p", 0, 1)
    res_U = jet("U", 1, 0) + U * U_R + ediv(p_r, RHO)
    res_rho = jet("rho", 1, 0) + D_r(U * RHO) + ediv((n_e - 1) * U * RHO, R)
    res_p = jet("p", 1, 0) + U * p_r + a2 * RHO * (U_R + ediv((n_e - 1) * U, R))
    return res_U, res_rho, res_p


def make_gas_context(a2: Expr, n_expr: Expr = None) -> SystemContext:
    n_e = n_expr if n_expr is not None else param("n")
    res_U, res_rho, res_p = gas_residuals(a2, n_e)
    evolution = {
        "U": (res_U - jet("U", 1, 0)) * -1,
        "rho": (res_rho - jet("rho", 1, 0)) * -1,
        "p": (res_p - jet("p", 1, 0)) * -1,
    }
    return SystemContext(("U", "rho", "p"), evolution, n_e)


def pressure_residual_composite(eos: EOS, n_expr: Expr = None) -> Expr:
    """The gas-dynamics pressure equation with p = p(rho, S) substituted,
    as a free-jet expression over (U, rho, S); restricting it with the
    (U, rho, S) context must give zero."""
    n_e = n_expr if n_expr is not None else param("n")
    p = eos.p()
    a2 = eos.a2()
    p_t = partial(p, jet_atom("rho", 0, 0)) * jet("rho", 1, 0) + partial(
        p, jet_atom("S", 0, 0)
    ) * jet("S", 1, 0)
    p_r = D_r(p)
    return p_t + U * p_r + a2 * RHO * (U_R + ediv((n_e - 1) * U, R))


def to_gas_dynamics(eos: EOS, n_expr: Expr = None) -> dict:
    """Pressure-equation residual (composite form) and the sound speed."""
    return {
        "pressure_residual": pressure_residual_composite(eos, n_expr),
        "a2": eos.a2(),
    }


# ---------------------------------------------------------------------------
# Conserved-integral densities and fluxes (transported-domain balances)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BalanceLaw:
    """d/dt int_V Phi_tilde dr = -[flux]_boundary on the solution space.

    Phi_tilde already contains the r^(n-1) weight where the integral has one.
    """

    name: str
    density: Expr  # the full integrand Phi_tilde
    flux: Expr  # boundary flux F(r) with the balance -[F] on dV
    eos_kinds: tuple


def kinematic_balances(eos: EOS, n_expr: Expr = None) -> list:
    """The kinematic conserved-integral balances valid for the given EOS."""
    n_e = n_expr if n_expr is not None else param("n")
    rn1 = RN1 if n_expr is None else _concrete_rpow(n_expr)
    e = eos.internal_energy()
    p = eos.p()
    half = Fraction(1, 2)
    laws = [
        BalanceLaw("mass", rn1 * RHO, Expr.zero(), ("any",)),
        BalanceLaw("entropy", rn1 * RHO * opaque("fS", S), Expr.zero(), ("any",)),
        BalanceLaw(
            "energy",
            rn1 * RHO * (half * U * U + e),
            rn1 * p * U,
            ("any",),
        ),
    ]
    if eos.kind == "polytropic":
        laws.append(
            BalanceLaw(
                "dilational_energy",
                rn1 * (T * RHO * (half * U * U + e) - half * R * RHO * U),
                rn1 * (T * U - half * R) * p,
                ("polytropic",),
            )
        )
        laws.append(
            BalanceLaw(
                "similarity_energy",
                rn1 * (T * T * RHO * (half * U * U + e) - T * R * RHO * U + half * R * R * RHO),
                rn1 * T * (T * U - R) * p,
                ("polytropic",),
            )
        )
    if eos.kind == "barotropic":
        laws.append(
            BalanceLaw(
                "enthalpy_flux",
                U,
                e + ediv(p, RHO) - half * U * U,
                ("barotropic",),
            )
        )
    if eos.kind == "entropic":
        fS = opaque("fS", S)
        KS = opaque("KS", S)  # K' = fS * kappa'
        laws.append(
            BalanceLaw(
                "entropy_weighted_energy",
                rn1 * (half * RHO * U * U * fS - KS),
                rn1 * U * KS,
                ("entropic",),
            )
        )
    return laws


def _concrete_rpow(n_expr: Expr) -> Expr:
    c = n_expr.as_const()
    if c is None:
        return RN1
    return epow(R, int(c) - 1) if c.denominator == 1 else epow(R, ExpQ.const(c - 1))


def r_weights(n_expr: Expr = None) -> tuple:
    """(r^(n-1), r^(1-n)) for a symbolic or concrete dimension."""
    if n_expr is None:
        return RN1, R1N
    c = n_expr.as_const()
    if c is None:
        return RN1, R1N
    if c.denominator == 1:
        return epow(R, int(c) - 1), epow(R, 1 - int(c))
    return epow(R, ExpQ.const(c - 1)), epow(R, ExpQ.const(1 - c))


def balance_residual(law: BalanceLaw, ctx: SystemContext) -> Expr:
    """D_t(density) + D_r(U*density + flux) restricted to solutions; zero iff
    the transported-domain balance holds exactly."""
    dens = ctx.restrict(law.density)
    flux = ctx.restrict(law.flux)
    # K' rewrite for the entropy-weighted law: d(KS)/dS = fS * kappa'
    resid = ctx.dt(dens) + D_r(U * dens + flux)
    return ctx.restrict(resid)


def entropy_weighted_rules(eos: EOS):
    """Atom rules attaching K'(S) = f(S) kappa'(S) to the opaque K symbol."""
    kap = eos.kappa if eos.kappa is not None else opaque("kappa", S)

    def rule(a):
        if a.kind == "opq" and a.name == "KS" and a.dmi == (1,):
            kp = partial(kap, jet_atom("S", 0, 0))
            return opaque("fS", S) * kp
        if a.kind == "opq" and a.name == "KS" and a.dmi[0] > 1:
            kp = partial(kap, jet_atom("S", 0, 0))
            e = opaque("fS", S) * kp
            for _ in range(a.dmi[0] - 1):
                e = partial(e, jet_atom("S", 0, 0))
            return e
        return None

    return rule
