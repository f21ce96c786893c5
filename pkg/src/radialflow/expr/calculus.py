"""Solution-space calculus: evolution contexts, restriction, prolongation.

A SystemContext carries the field list and the evolution rules d_t v = L_v
(expressed with r-derivatives only).  Restriction replaces every jet with a
t-index through repeated evolutionary time derivatives; contexts may also
carry extra atom rewrite rules (the entropic A-function identities live
there).
"""
from __future__ import annotations

from typing import Callable, Dict, Optional, Sequence

from .kernel import (
    Atom,
    Expr,
    ExprError,
    chain_derive,
    D_r,
    jet,
    jet_atom,
    substitute_atoms,
    var_atom,
)


class SystemContext:
    """Evolution system d_t v = L_v(v, v_r, ...) over the radial jet space."""

    def __init__(
        self,
        fields: Sequence[str],
        evolution: Dict[str, Expr],
        n_expr: Expr,
        eos=None,
        atom_rules: Optional[Callable[[Atom], Optional[Expr]]] = None,
    ):
        self.fields = tuple(fields)
        for f in self.fields:
            if f not in evolution:
                raise ExprError(f"missing evolution rule for field {f!r}")
            if evolution[f].has_t_jets():
                raise ExprError(f"evolution rule for {f!r} contains t-derivatives")
        self.evolution = dict(evolution)
        self.n_expr = n_expr
        self.eos = eos
        self.atom_rules = atom_rules
        self._tcache: Dict[tuple, Expr] = {}
        self._rst_memo: Dict = {}
        self._dt_memo: Dict = {}

    # -- evolutionary total time derivative ---------------------------------

    def dt(self, e: Expr) -> Expr:
        """Total t-derivative restricted to the solution space; e must be
        t-jet free already."""
        tv = var_atom("t")

        def dprim(a: Atom) -> Optional[Expr]:
            if a is tv:
                return Expr.const(1)
            if a.kind == "jet" and a.field in self.fields:
                if a.it:
                    raise ExprError("dt applied to unrestricted expression")
                return self._t_rule(a.field, 1, a.ir)
            return None

        return chain_derive(e, dprim, self._dt_memo)

    def material_derivative(self, e: Expr) -> Expr:
        """D_t e + U D_r e on the solution space (advection test)."""
        return self.restrict(self.dt(self.restrict(e)) + jet("U") * D_r(self.restrict(e)))

    def _t_rule(self, field: str, it: int, ir: int) -> Expr:
        """Restricted expression for d_t^it d_r^ir field."""
        key = (field, it, ir)
        got = self._tcache.get(key)
        if got is not None:
            return got
        if it == 0:
            out = Expr.atom(jet_atom(field, 0, ir))
        elif ir > 0:
            out = D_r(self._t_rule(field, it, ir - 1))
        elif it == 1:
            out = self._apply_rules(self.evolution[field])
        else:
            out = self.dt(self._t_rule(field, it - 1, 0))
        out = self._apply_rules(out)
        self._tcache[key] = out
        return out

    # -- restriction ---------------------------------------------------------

    def restrict(self, e: Expr) -> Expr:
        """Replace all t-jets via the evolution rules and apply any extra
        atom rules; result contains only r-derivatives."""

        def amap(a: Atom) -> Optional[Expr]:
            if a.kind == "jet" and a.it > 0 and a.field in self.fields:
                return self._t_rule(a.field, a.it, a.ir)
            if self.atom_rules is not None:
                return self.atom_rules(a)
            return None

        return substitute_atoms(e, amap, self._rst_memo)

    def _apply_rules(self, e: Expr) -> Expr:
        if self.atom_rules is None:
            return e
        return substitute_atoms(e, lambda a: self.atom_rules(a), self._rst_memo)


def restrict_to_solutions(e: Expr, ctx: SystemContext) -> Expr:
    return ctx.restrict(e)


def prolong_apply(char: Dict[str, Expr], e: Expr, restricted: bool = True) -> Expr:
    """Apply the prolonged evolutionary vector field with characteristic
    `char` to e.

    For restricted expressions (r-jets only) the prolongation runs over
    r-jets; otherwise it runs over the full (t, r) jet space with free total
    derivatives.
    """
    from .kernel import partial, total_derivative

    out = Expr.zero()
    dcache: Dict[tuple, Expr] = {}

    def d_power(field: str, it: int, ir: int) -> Expr:
        key = (field, it, ir)
        got = dcache.get(key)
        if got is not None:
            return got
        if it == 0 and ir == 0:
            out_ = char[field]
        elif it > 0:
            out_ = total_derivative(d_power(field, it - 1, ir), "t")
        else:
            out_ = total_derivative(d_power(field, it, ir - 1), "r")
        dcache[key] = out_
        return out_

    for a in sorted(e.jet_atoms(), key=lambda a: a.key):
        if a.field not in char:
            continue
        if restricted and a.it > 0:
            raise ExprError("restricted prolongation hit a t-jet; restrict first")
        pe = partial(e, a)
        if pe.terms:
            out = out + d_power(a.field, a.it, a.ir) * pe
    return out


def evolutionary_commutator(
    P: Dict[str, Expr], Q: Dict[str, Expr], fields: Sequence[str], restricted: bool = True
) -> Dict[str, Expr]:
    """Characteristic of [pr X_P, pr X_Q]: pr_P(Q^v) - pr_Q(P^v)."""
    return {
        v: prolong_apply(P, Q[v], restricted) - prolong_apply(Q, P[v], restricted)
        for v in fields
    }
