"""Randomized numeric evaluation of expressions.

Used as a cross-check on symbolic normalization, never as the verdict.
Fields evaluate through seeded degree-4 polynomials in (t, r); opaque symbols
evaluate through seeded exponential forms C*exp(sum a_i x_i) so that partial
derivatives of every order stay exact and nonzero.  r samples in [0.5, 2] to
stay clear of the coordinate singularity.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .kernel import Atom, ExpQ, Expr, ExprError

DEFAULT_SEED = 20240915


class NumEnv:
    """Evaluation environment for one family of random fields."""

    def __init__(
        self,
        seed: int = DEFAULT_SEED,
        fields: Sequence[str] = ("U", "rho", "S"),
        params: Optional[Dict[str, float]] = None,
        positive_fields: Sequence[str] = ("rho", "S", "rt"),
        field_degree: int = 4,
        opq_hooks: Optional[Dict[str, Callable]] = None,
    ):
        rng = np.random.default_rng(seed)
        self.rng = rng
        self.params = {"n": 3.0, "q": 2.0 / 3.0, "k": 1.3, "eps": 0.1}
        if params:
            self.params.update(params)
        self.field_coeffs: Dict[str, np.ndarray] = {}
        for f in fields:
            c = 0.25 * rng.uniform(-1.0, 1.0, size=(field_degree + 1, field_degree + 1))
            if f in positive_fields:
                c[0, 0] = rng.uniform(1.5, 2.5)
            else:
                c[0, 0] = rng.uniform(-0.5, 0.5)
            self.field_coeffs[f] = c
        self._opq_params: Dict[tuple, tuple] = {}
        self.opq_hooks = opq_hooks or {}
        self.t = 0.3
        self.r = 1.0

    # polynomial field evaluation with exact derivatives
    def jet_value(self, field: str, it: int, ir: int) -> float:
        c = self.field_coeffs.get(field)
        if c is None:
            raise ExprError(f"no sample field {field!r}")
        tot = 0.0
        d = c.shape[0] - 1
        for i in range(it, d + 1):
            for j in range(ir, d + 1):
                fac = math.perm(i, it) * math.perm(j, ir)
                tot += c[i, j] * fac * self.t ** (i - it) * self.r ** (j - ir)
        return tot

    def _opq_ab(self, name: str, arity: int):
        key = (name, arity)
        got = self._opq_params.get(key)
        if got is None:
            rng = np.random.default_rng(abs(hash(key)) % (2**32))
            C = rng.uniform(0.6, 1.4)
            a = rng.uniform(0.2, 0.7, size=arity) * rng.choice([-1.0, 1.0], size=arity)
            got = (C, a)
            self._opq_params[key] = got
        return got

    def opq_value(self, name: str, dmi, argvals) -> float:
        hook = self.opq_hooks.get(name)
        if hook is not None:
            return hook(tuple(argvals), tuple(dmi))
        C, a = self._opq_ab(name, len(argvals))
        val = C * math.exp(float(np.dot(a, argvals)))
        for slot, d in enumerate(dmi):
            val *= a[slot] ** d
        return val

    def param_value(self, name: str) -> float:
        if name in self.params:
            return self.params[name]
        # deterministic pseudo-random value for ad-hoc parameter names
        rng = np.random.default_rng(abs(hash(("param", name))) % (2**32))
        return rng.uniform(0.3, 1.2)


def eval_expr_with_scale(e: Expr, env: NumEnv) -> tuple:
    """(value, sum of |term| magnitudes) so cancellation noise can be judged."""

    def atom_val(a: Atom) -> float:
        if a.kind == "var":
            return env.t if a.name == "t" else env.r
        if a.kind == "param":
            return env.param_value(a.name)
        if a.kind == "jet":
            return env.jet_value(a.field, a.it, a.ir)
        if a.kind == "opq":
            argvals = [eval_expr(x, env) for x in a.args]
            return env.opq_value(a.name, a.dmi, argvals)
        if a.kind == "fn":
            u = eval_expr(a.args[0], env)
            return math.log(u) if a.name == "ln" else math.exp(u)
        if a.kind == "pows":
            return eval_expr(a.base, env)
        raise ExprError(a.kind)

    def exp_val(x) -> float:
        if isinstance(x, int):
            return float(x)
        nv = sum(
            float(c) * env.param_value("n") ** dn * env.param_value("q") ** dq
            for (dn, dq), c in x.num.items()
        )
        dv = sum(
            float(c) * env.param_value("n") ** dn * env.param_value("q") ** dq
            for (dn, dq), c in x.den.items()
        )
        return nv / dv

    total = 0.0
    scale = 0.0
    for m, c in e.terms.items():
        v = float(c)
        for a, x in m:
            base = atom_val(a)
            xe = exp_val(x)
            if base < 0 and xe != int(xe):
                raise ExprError(f"negative base {base} under fractional power")
            v *= base ** xe
        total += v
        scale += abs(v)
    return total, scale


def eval_expr(e: Expr, env: NumEnv) -> float:
    return eval_expr_with_scale(e, env)[0]


def sample_values(e: Expr, seed: int = DEFAULT_SEED, n_samples: int = 20, **env_kw) -> np.ndarray:
    """Evaluate e at n_samples random (t, r) points, one shared random field
    family per seed."""
    env = NumEnv(seed=seed, **env_kw)
    rng = np.random.default_rng(seed + 1)
    out = np.empty(n_samples)
    for i in range(n_samples):
        env.t = rng.uniform(0.1, 0.8)
        env.r = rng.uniform(0.5, 2.0)
        out[i] = eval_expr(e, env)
    return out


def numeric_zero(e: Expr, seed: int = DEFAULT_SEED, n_samples: int = 20, tol: float = 1e-8, **env_kw) -> bool:
    """Cross-check only: does e evaluate to ~0 on random samples, relative to
    the magnitude of the terms being cancelled?"""
    env = NumEnv(seed=seed, **env_kw)
    rng = np.random.default_rng(seed + 1)
    for _ in range(n_samples):
        env.t = rng.uniform(0.1, 0.8)
        env.r = rng.uniform(0.5, 2.0)
        val, scale = eval_expr_with_scale(e, env)
        if abs(val) > tol * (1.0 + scale):
            return False
    return True
