"""Jet-space computer-algebra kernel for the radial flow toolkit."""

from .kernel import (
    BudgetExceeded,
    ExpQ,
    Expr,
    ExprError,
    D_r,
    D_t,
    EXP_N,
    EXP_Q,
    N_PARAM,
    Q_PARAM,
    R,
    T,
    as_expr,
    chain_derive,
    ediv,
    epow,
    euler_operator,
    exp_fn,
    expq_to_expr,
    fn_atom,
    get_node_budget,
    is_zero,
    jet,
    jet_atom,
    ln,
    normalize,
    opaque,
    opq_atom,
    param,
    param_atom,
    partial,
    pows_atom,
    set_node_budget,
    sqrt,
    substitute_atoms,
    total_derivative,
    var_atom,
)
from .calculus import (
    SystemContext,
    evolutionary_commutator,
    prolong_apply,
    restrict_to_solutions,
)
from .parser import ParseError, parse
from .printer import expr_str
from .sampling import DEFAULT_SEED, NumEnv, eval_expr, eval_expr_with_scale, numeric_zero, sample_values

__all__ = [
    "BudgetExceeded",
    "ExpQ",
    "Expr",
    "ExprError",
    "D_r",
    "D_t",
    "EXP_N",
    "EXP_Q",
    "N_PARAM",
    "Q_PARAM",
    "R",
    "T",
    "as_expr",
    "chain_derive",
    "ediv",
    "epow",
    "euler_operator",
    "exp_fn",
    "expq_to_expr",
    "fn_atom",
    "get_node_budget",
    "is_zero",
    "jet",
    "jet_atom",
    "ln",
    "normalize",
    "opaque",
    "opq_atom",
    "param",
    "param_atom",
    "partial",
    "pows_atom",
    "set_node_budget",
    "sqrt",
    "substitute_atoms",
    "total_derivative",
    "var_atom",
    "SystemContext",
    "evolutionary_commutator",
    "prolong_apply",
    "restrict_to_solutions",
    "ParseError",
    "parse",
    "expr_str",
    "DEFAULT_SEED",
    "NumEnv",
    "eval_expr",
    "eval_expr_with_scale",
    "numeric_zero",
    "sample_values",
]
