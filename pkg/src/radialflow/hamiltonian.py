"""Hamiltonian (co-symplectic) structure of the radial Euler system.

Variational-derivative convention, fixed by matching the operator action to
the equations of motion:

    delta/delta v := r^(1-n) E_v(r^(n-1) Phi)

With weighted gradients g = (g_U, g_rho, g_S) the operator action reads

    P_U   = -D_r g_rho + (S_r/rho) g_S
    P_rho = -r^(1-n) D_r(r^(n-1) g_U)
    P_S   = -(S_r/rho) g_U

which reproduces d_t(U, rho, S) on the energy functional and realizes the
conserved-integral -> Hamiltonian-symmetry correspondence.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

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
    partial,
)
from .expr.kernel import EXP_N, exp_add, expq_to_expr
from .model import EOS, TWO_OVER_N, energy_context, make_context, r_weights
from .symmetry import (
    Characteristic,
    PointGenerator,
    X1,
    Xiv_prime,
    Xv,
    X2,
    determining_residuals,
    to_characteristic,
)

U = jet("U")
RHO = jet("rho")
S = jet("S")
S_R = jet("S", 0, 1)


@dataclass(frozen=True)
class Density:
    """Conserved-integral density Phi with the r^(n-1) domain weight
    convention: the functional is integral of Phi r^(n-1) dr."""

    phi: Expr
    name: str = ""

    def __post_init__(self):
        if self.phi.has_t_jets():
            raise ExprError("densities must not contain t-derivatives of fields")


@dataclass(frozen=True)
class VariationalGradient:
    g_U: Expr
    g_rho: Expr
    g_S: Expr

    def as_tuple(self) -> Tuple[Expr, Expr, Expr]:
        return (self.g_U, self.g_rho, self.g_S)


def variational_gradient(d: Density, ctx: SystemContext = None, n_expr: Expr = None) -> VariationalGradient:
    """delta/delta v = r^(1-n) E_v(r^(n-1) Phi), componentwise."""
    ne = n_expr if n_expr is not None else (ctx.n_expr if ctx is not None else None)
    rn1, r1n = r_weights(ne)
    w = rn1 * d.phi
    out = []
    for f in ("U", "rho", "S"):
        g = r1n * euler_operator(w, f)
        if ctx is not None:
            g = ctx.restrict(g)
        out.append(g)
    return VariationalGradient(*out)


def apply_hamiltonian_operator(g: VariationalGradient, ctx: SystemContext) -> Characteristic:
    """Matrix action of the co-symplectic operator on a weighted gradient."""
    rn1, r1n = r_weights(ctx.n_expr)
    sr_over_rho = ediv(S_R, RHO)
    P_U = -D_r(g.g_rho) + sr_over_rho * g.g_S
    P_rho = -r1n * D_r(rn1 * g.g_U)
    P_S = -sr_over_rho * g.g_U
    return Characteristic(ctx.restrict(P_U), ctx.restrict(P_rho), ctx.restrict(P_S))


def hamiltonian_symmetry(d: Density, ctx: SystemContext) -> Characteristic:
    """H grad(Phi): the Hamiltonian symmetry generated by a conserved integral."""
    return apply_hamiltonian_operator(variational_gradient(d, ctx), ctx)


def is_casimir_density(d: Density, ctx: SystemContext) -> bool:
    """A density is a Casimir iff its Hamiltonian symmetry is trivial."""
    return hamiltonian_symmetry(d, ctx).is_trivial()


def poisson_bracket_density(F: Density, G: Density, ctx: SystemContext) -> Expr:
    """Integrand of {F, G}: r^(n-1) grad(F)^t H grad(G), defined modulo a
    trivial (total r-derivative) density."""
    rn1, _ = r_weights(ctx.n_expr)
    gF = variational_gradient(F, ctx)
    PG = apply_hamiltonian_operator(variational_gradient(G, ctx), ctx)
    dens = rn1 * (gF.g_U * PG.P_U + gF.g_rho * PG.P_rho + gF.g_S * PG.P_S)
    return ctx.restrict(dens)


def is_trivial_density(e: Expr) -> bool:
    """Modulo-total-derivative test: all three Euler operators vanish."""
    ee = e.canonical()
    return all(euler_operator(ee, f).is_zero() for f in ("U", "rho", "S"))


# ---------------------------------------------------------------------------
# Kinematic conserved integrals -> Hamiltonian symmetries (Table-3 content)
# ---------------------------------------------------------------------------


@dataclass
class Table3Row:
    name: str
    eos: EOS
    density: Callable[[], Density]
    expected: Callable[[SystemContext], Characteristic]
    printed: Optional[Callable[[SystemContext], Characteristic]] = None
    printed_matches: bool = True
    note: str = ""


def _energy_density(eos: EOS) -> Density:
    e = eos.internal_energy()
    return Density(RHO * (Fraction(1, 2) * U * U + e), "energy")


def _dilational_density(eos: EOS) -> Density:
    e = eos.internal_energy()
    return Density(
        T * RHO * (Fraction(1, 2) * U * U + e) - Fraction(1, 2) * R * RHO * U,
        "dilational_energy",
    )


def _similarity_density(eos: EOS) -> Density:
    e = eos.internal_energy()
    return Density(
        T * T * RHO * (Fraction(1, 2) * U * U + e)
        - T * R * RHO * U
        + Fraction(1, 2) * R * R * RHO,
        "similarity_energy",
    )


def _enthalpy_density() -> Density:
    _, r1n = r_weights(None)
    return Density(r1n * U, "enthalpy_flux")


def _entropy_weighted_density() -> Density:
    fS = opaque("fS", S)
    KS = opaque("KS", S)
    return Density(Fraction(1, 2) * RHO * U * U * fS - KS, "entropy_weighted_energy")


def _char_of(g: PointGenerator, scale, ctx: SystemContext) -> Characteristic:
    c = to_characteristic(g.scaled(scale))
    return c.restricted(ctx)


def table3_catalog() -> List[Table3Row]:
    """The five kinematic integrals with their Hamiltonian symmetries.

    `expected` is the characteristic the correspondence actually produces
    (machine-derived, and symmetry-verified); `printed` is the row as the
    source table states it, kept as a cross-check.  For the dilational row
    the map lands on the combination (1/2)Xiv' - X2 rather than on the pure
    scaling; for the entropy-weighted row the stated eta_rho lacks a factor
    of U (equivalently, it uses S_r where S_t belongs).  Both corrections are
    forced by the determining equations; see the acceptance tests.
    """
    rows: List[Table3Row] = []

    rows.append(
        Table3Row(
            name="energy",
            eos=EOS.general(),
            density=lambda: _energy_density(EOS.general()),
            expected=lambda ctx: _char_of(X1(), -1, ctx),
            printed=lambda ctx: _char_of(X1(), 1, ctx),
            printed_matches=False,  # matches up to overall sign only
            note="time translation X1 (map yields -char(X1))",
        )
    )
    rows.append(
        Table3Row(
            name="dilational_energy",
            eos=EOS.polytropic(q=TWO_OVER_N),
            density=lambda: _dilational_density(EOS.polytropic(q=TWO_OVER_N)),
            expected=lambda ctx: _char_of(
                Xiv_prime().combo(Fraction(-2), X2()).scaled(Fraction(1, 2)), 1, ctx
            ),
            printed=lambda ctx: _char_of(Xiv_prime(), 1, ctx),
            printed_matches=False,
            note="scaling Xiv' modulo the dilation X2: map yields (1/2)Xiv' - X2",
        )
    )
    rows.append(
        Table3Row(
            name="similarity_energy",
            eos=EOS.polytropic(q=TWO_OVER_N),
            density=lambda: _similarity_density(EOS.polytropic(q=TWO_OVER_N)),
            expected=lambda ctx: _char_of(Xv(), -1, ctx),
            printed=lambda ctx: _char_of(Xv(), 1, ctx),
            printed_matches=False,  # matches up to overall sign only
            note="conformal similarity Xv (map yields -char(Xv))",
        )
    )

    def enthalpy_expected(ctx: SystemContext) -> Characteristic:
        _, r1n = r_weights(ctx.n_expr)
        J1 = r1n * ediv(S_R, RHO)
        return Characteristic(Expr.zero(), Expr.zero(), -J1)

    rows.append(
        Table3Row(
            name="enthalpy_flux",
            eos=EOS.barotropic(),
            density=lambda: _enthalpy_density(),
            expected=enthalpy_expected,
            printed=enthalpy_expected,
            printed_matches=True,
            note="first-order X = -J_1 d_S, exactly as stated",
        )
    )

    def ew_expected(ctx: SystemContext) -> Characteristic:
        fS = opaque("fS", S)
        fp = partial(fS, jet_atom("S", 0, 0))
        # char of X = -f(S) d_t + f'(S) S_t rho d_rho, restricted
        return Characteristic(
            ctx.restrict(fS * jet("U", 1, 0)),
            ctx.restrict(fp * jet("S", 1, 0) * RHO + fS * jet("rho", 1, 0)),
            ctx.restrict(fS * jet("S", 1, 0)),
        )

    def ew_printed(ctx: SystemContext) -> Characteristic:
        fS = opaque("fS", S)
        fp = partial(fS, jet_atom("S", 0, 0))
        # char of X = f(S) d_t + f'(S) S_r rho d_rho as printed
        return Characteristic(
            ctx.restrict(-fS * jet("U", 1, 0)),
            ctx.restrict(fp * S_R * RHO - fS * jet("rho", 1, 0)),
            ctx.restrict(-fS * jet("S", 1, 0)),
        )

    rows.append(
        Table3Row(
            name="entropy_weighted_energy",
            eos=EOS.entropic(),
            density=lambda: _entropy_weighted_density(),
            expected=ew_expected,
            printed=ew_printed,
            printed_matches=False,
            note="first-order X = f(S) d_t + U f'(S) S_r rho d_rho up to sign "
            "(stated eta_rho lacks the factor U)",
        )
    )
    return rows


def _row_context(row: Table3Row) -> SystemContext:
    from .model import energy_rules, entropy_weighted_rules

    if row.name == "entropy_weighted_energy":
        return make_context(row.eos, atom_rules=entropy_weighted_rules(row.eos))
    return energy_context(row.eos)


def verify_table3() -> List[dict]:
    """For every kinematic integral: the correspondence output equals the
    expected characteristic exactly, and is a verified symmetry."""
    out = []
    for row in table3_catalog():
        ctx = _row_context(row)
        computed = hamiltonian_symmetry(row.density(), ctx)
        expected = row.expected(ctx)
        exact = computed.equals(expected)
        sym_ok = all(e.is_zero() for e in determining_residuals(computed, ctx))
        rep = {
            "integral": row.name,
            "eos": row.eos.label,
            "matches_expected": exact,
            "is_symmetry": sym_ok,
            "note": row.note,
            "passed": exact and sym_ok,
        }
        if row.printed is not None and not row.printed_matches:
            printed = row.printed(ctx)
            rep["printed_row_equals_map"] = computed.equals(printed)
            rep["printed_row_is_symmetry"] = all(
                e.is_zero() for e in determining_residuals(printed, ctx)
            )
        out.append(rep)
    return out


# ---------------------------------------------------------------------------
# Gas-dynamics counterpart
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GasCharacteristic:
    P_U: Expr
    P_rho: Expr
    P_p: Expr


def gas_variational_gradient(phi: Expr, n_expr: Expr = None) -> Tuple[Expr, Expr, Expr]:
    """Weighted gradient of a density in (U, rho, p) field variables."""
    rn1, r1n = r_weights(n_expr)
    w = rn1 * phi
    return tuple(r1n * euler_operator(w, f) for f in ("U", "rho", "p"))


def gas_hamiltonian_operator(
    g: Tuple[Expr, Expr, Expr], a2: Expr, p_r: Expr, ctx: SystemContext
) -> GasCharacteristic:
    """Matrix action of the gas-dynamics co-symplectic operator on a weighted
    gradient; a2 and p_r are expressions in the active variable set."""
    rn1, r1n = r_weights(ctx.n_expr)
    g_U, g_rho, g_p = g
    P_U = -D_r(g_rho) + ediv(p_r, RHO) * g_p - ediv(Expr.const(1), RHO) * D_r(RHO * a2 * g_p)
    P_rho = -r1n * D_r(rn1 * g_U)
    P_p = -ediv(p_r, RHO) * g_U - r1n * RHO * a2 * D_r(rn1 * ediv(g_U, RHO))
    return GasCharacteristic(ctx.restrict(P_U), ctx.restrict(P_rho), ctx.restrict(P_p))


def gas_consistency_residuals(phi: Expr, eos: EOS, n_expr: Expr = None) -> Tuple[Expr, Expr, Expr]:
    """Change-of-variables consistency for a density Phi(U, rho, S).

    Route A transforms the (U, rho, S) gradient to (U, rho, p) variables and
    applies the gas operator (with p, a2 composite in rho, S); route B applies
    the fluid operator and converts the entropy evolution component through
    P_p = p_rho P_rho + p_S P_S.  Returns the componentwise differences.
    """
    ctx = make_context(eos, n_expr)
    d = Density(phi)
    grad = variational_gradient(d, ctx)
    p = eos.p()
    p_rho = partial(p, jet_atom("rho", 0, 0))
    p_S = partial(p, jet_atom("S", 0, 0))
    a2 = eos.a2()
    p_r = D_r(p)
    # gradient transformation (inverse of the stated variational relations)
    g_p = ediv(grad.g_S, p_S)
    g_rho_gas = grad.g_rho - a2 * g_p
    gas = gas_hamiltonian_operator((grad.g_U, g_rho_gas, g_p), a2, p_r, ctx)
    fluid = apply_hamiltonian_operator(grad, ctx)
    P_p_from_fluid = ctx.restrict(p_rho * fluid.P_rho + p_S * fluid.P_S)
    return (
        ctx.restrict(gas.P_U - fluid.P_U),
        ctx.restrict(gas.P_rho - fluid.P_rho),
        ctx.restrict(gas.P_p - P_p_from_fluid),
    )
