"""Method-of-lines finite-volume solver for radial compressible flow.

Conservative update of Q = (rho, rho U, rho S) on cells [r_{i-1/2}, r_{i+1/2}]
with face areas r^(n-1) and volumes (r_+^n - r_-^n)/n:

    d/dt (Q_i V_i) = -[A F]_faces + source_i

MUSCL (minmod) reconstruction of primitives, Rusanov flux, SSP-RK2 in time.
The momentum source (n-1) p / r is integrated exactly against r^(n-1) so that
constant states are preserved to round-off.  The domain excludes r = 0;
zero-gradient ghosts at both ends (extrapolation inflow / outflow).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from .expr import Expr, ExprError
from .fields import RadialSlice, RadialSolution
from .model import EOS

DEFAULT_CFL = 0.4
RHO_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# numeric EOS and expression compilation
# ---------------------------------------------------------------------------


def compile_scalar(e: Expr, names: Sequence[str], params: Optional[Dict[str, float]] = None) -> Callable:
    """Compile an expression over the given symbols (vars t/r or bare fields)
    into a numpy-vectorized callable with positional arguments in `names`."""
    params = dict(params or {})
    params.setdefault("n", 3.0)
    params.setdefault("q", 2.0 / 3.0)
    params.setdefault("k", 1.0)
    index = {nm: i for i, nm in enumerate(names)}

    def comp(ex: Expr) -> Callable:
        pieces = []
        for m, c in ex.terms.items():
            factors = []
            for a, x in m:
                xe = _exp_value(x, params)
                if a.kind == "var" or a.kind == "jet":
                    nm = a.name if a.kind == "var" else a.field
                    if a.kind == "jet" and (a.it, a.ir) != (0, 0):
                        raise ExprError("compile_scalar supports undifferentiated fields only")
                    if nm not in index:
                        raise ExprError(f"symbol {nm!r} not among {names}")
                    factors.append(("arg", index[nm], xe))
                elif a.kind == "param":
                    if a.name not in params:
                        raise ExprError(f"no numeric value supplied for parameter {a.name!r}")
                    factors.append(("const", params[a.name] ** xe, None))
                elif a.kind == "fn":
                    sub = comp(a.args[0])
                    factors.append(("fn", (a.name, sub), xe))
                elif a.kind == "pows":
                    sub = comp(a.base)
                    factors.append(("pow", sub, xe))
                else:
                    raise ExprError(f"cannot compile atom kind {a.kind!r}")
            pieces.append((float(c), factors))

        def fn(*args):
            total = 0.0
            for c, factors in pieces:
                v = c
                for kind, payload, xe in factors:
                    if kind == "arg":
                        v = v * args[payload] ** xe
                    elif kind == "const":
                        v = v * payload
                    elif kind == "fn":
                        nm, sub = payload
                        base = np.log(sub(*args)) if nm == "ln" else np.exp(sub(*args))
                        v = v * base**xe
                    else:
                        v = v * sub_pow(payload, args, xe)
                total = total + v
            return total

        def sub_pow(sub, args, xe):
            return sub(*args) ** xe

        return fn

    return comp(e.canonical())


def _exp_value(x, params) -> float:
    if isinstance(x, int):
        return float(x)
    nv = sum(float(c) * params["n"] ** dn * params["q"] ** dq for (dn, dq), c in x.num.items())
    dv = sum(float(c) * params["n"] ** dn * params["q"] ** dq for (dn, dq), c in x.den.items())
    return nv / dv


@dataclass
class NumericEOS:
    """Callables p(rho, S), a2(rho, S), e(rho, S) for a concrete EOS."""

    p: Callable
    a2: Callable
    e: Callable
    kind: str
    kappa: Optional[Callable] = None
    kappa_prime: Optional[Callable] = None
    q: float = 0.0

    @staticmethod
    def from_eos(eos: EOS, params: Optional[Dict[str, float]] = None) -> "NumericEOS":
        params = dict(params or {})
        params.setdefault("n", 3.0)
        params.setdefault("q", 2.0 / params["n"])
        params.setdefault("k", 1.0)
        p_fn = compile_scalar(eos.p(), ("rho", "S"), params)
        a2_fn = compile_scalar(eos.a2(), ("rho", "S"), params)
        e_fn = compile_scalar(eos.internal_energy(), ("rho", "S"), params)
        kap = kp = None
        if eos.kappa is not None:
            from .expr import jet_atom, partial

            kap = compile_scalar(eos.kappa, ("S",), params)
            kp = compile_scalar(partial(eos.kappa, jet_atom("S", 0, 0)), ("S",), params)
        qv = float(eos.q) if isinstance(eos.q, int) else (_exp_value(eos.q, params) if eos.q is not None else 0.0)
        return NumericEOS(p=p_fn, a2=a2_fn, e=e_fn, kind=eos.kind, kappa=kap, kappa_prime=kp, q=qv)


# ---------------------------------------------------------------------------
# grid and state
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    r_min: float
    r_max: float
    N: int
    n: float = 3.0

    def __post_init__(self):
        if self.r_min <= 0:
            raise ValueError("r_min must be positive (coordinate singularity at r = 0)")
        if self.N < 16:
            raise ValueError("need at least 16 cells")
        self.edges = np.linspace(self.r_min, self.r_max, self.N + 1)
        self.rc = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.dr = (self.r_max - self.r_min) / self.N
        self.areas = self.edges ** (self.n - 1.0)
        self.volumes = (self.edges[1:] ** self.n - self.edges[:-1] ** self.n) / self.n


@dataclass
class State:
    grid: Grid
    rho: np.ndarray
    mom: np.ndarray
    rhoS: np.ndarray
    t: float
    eos: NumericEOS

    @staticmethod
    def from_primitives(grid: Grid, U, rho, S, eos: NumericEOS, t: float = 0.0) -> "State":
        rho = np.asarray(rho, dtype=float)
        return State(grid, rho.copy(), rho * np.asarray(U, float), rho * np.asarray(S, float), t, eos)

    def primitives(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        rho = np.maximum(self.rho, RHO_FLOOR)
        return self.mom / rho, self.rho, self.rhoS / rho

    def as_slice(self) -> RadialSlice:
        U, rho, S = self.primitives()
        return RadialSlice(self.grid.rc.copy(), U.copy(), rho.copy(), S.copy(), self.t, self.grid.n)

    def max_signal(self) -> float:
        U, rho, S = self.primitives()
        a2 = np.maximum(self.eos.a2(rho, S), 0.0)
        return float(np.max(np.abs(U) + np.sqrt(a2)))


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = 0.5 * (np.sign(a) + np.sign(b))
    return s * np.minimum(np.abs(a), np.abs(b))


def _mc_slope(dl: np.ndarray, dr: np.ndarray) -> np.ndarray:
    """Monotonized-central limited slope: sharper than minmod at smooth
    extrema while still TVD."""
    s = 0.5 * (np.sign(dl) + np.sign(dr))
    return s * np.minimum(np.minimum(2 * np.abs(dl), 2 * np.abs(dr)), 0.5 * np.abs(dl + dr))


def _rhs(state: State) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Semi-discrete right side; also returns the boundary mass flux
    (outflow positive) for exact conservation accounting."""
    g = state.grid
    U, rho, S = state.primitives()

    # ghost cells, zero gradient
    def pad(w):
        return np.concatenate(([w[0], w[0]], w, [w[-1], w[-1]]))

    Up, rhop, Sp = pad(U), pad(rho), pad(S)
    dU = _mc_slope(Up[1:-1] - Up[:-2], Up[2:] - Up[1:-1])
    drho = _mc_slope(rhop[1:-1] - rhop[:-2], rhop[2:] - rhop[1:-1])
    dS = _mc_slope(Sp[1:-1] - Sp[:-2], Sp[2:] - Sp[1:-1])
    # cell interface states: face k sits between padded cells k+1, k+2
    UL = (Up[1:-1] + 0.5 * dU)[:-1]
    UR = (Up[1:-1] - 0.5 * dU)[1:]
    rhoL = (rhop[1:-1] + 0.5 * drho)[:-1]
    rhoR = (rhop[1:-1] - 0.5 * drho)[1:]
    SL = (Sp[1:-1] + 0.5 * dS)[:-1]
    SR = (Sp[1:-1] - 0.5 * dS)[1:]
    rhoL = np.maximum(rhoL, RHO_FLOOR)
    rhoR = np.maximum(rhoR, RHO_FLOOR)

    pL = state.eos.p(rhoL, SL)
    pR = state.eos.p(rhoR, SR)
    aL = np.sqrt(np.maximum(state.eos.a2(rhoL, SL), 0.0))
    aR = np.sqrt(np.maximum(state.eos.a2(rhoR, SR), 0.0))
    alpha = np.maximum(np.abs(UL) + aL, np.abs(UR) + aR)

    # physical fluxes
    F1L, F1R = rhoL * UL, rhoR * UR
    F2L, F2R = rhoL * UL * UL + pL, rhoR * UR * UR + pR
    F3L, F3R = rhoL * UL * SL, rhoR * UR * SR
    Q1L, Q1R = rhoL, rhoR
    Q2L, Q2R = rhoL * UL, rhoR * UR
    Q3L, Q3R = rhoL * SL, rhoR * SR

    # face k = 0..N sits between padded cells k+1 and k+2, so faces 0 and N
    # are the domain boundaries (zero-gradient ghosts give first-order states
    # there, which is the extrapolation/outflow condition)
    F1 = 0.5 * (F1L + F1R) - 0.5 * alpha * (Q1R - Q1L)
    F2 = 0.5 * (F2L + F2R) - 0.5 * alpha * (Q2R - Q2L)
    F3 = 0.5 * (F3L + F3R) - 0.5 * alpha * (Q3R - Q3L)

    A = g.areas
    V = g.volumes
    p_cell = state.eos.p(rho, S)
    dA = A[1:] - A[:-1]

    rhs1 = -(A[1:] * F1[1:] - A[:-1] * F1[:-1]) / V
    rhs2 = -(A[1:] * F2[1:] - A[:-1] * F2[:-1]) / V + p_cell * dA / V
    rhs3 = -(A[1:] * F3[1:] - A[:-1] * F3[:-1]) / V

    boundary_mass_flux = A[-1] * F1[-1] - A[0] * F1[0]
    return rhs1, rhs2, rhs3, boundary_mass_flux


def step(state: State, dt: float, cfl_check: float = DEFAULT_CFL) -> Tuple[State, float]:
    """One SSP-RK2 step; returns the new state and the time-integrated
    boundary mass outflow (for conservation accounting).  Raises on CFL
    violation or vacuum."""
    g = state.grid
    smax = state.max_signal()
    if smax > 0 and dt > cfl_check * g.dr / smax * (1 + 1e-12):
        raise ValueError(f"CFL violation: dt={dt:g} > {cfl_check * g.dr / smax:g}")
    r1, r2, r3, bf1 = _rhs(state)
    s1 = State(g, state.rho + dt * r1, state.mom + dt * r2, state.rhoS + dt * r3, state.t + dt, state.eos)
    if np.any(s1.rho <= RHO_FLOOR):
        raise ValueError("vacuum: density fell below floor")
    r1b, r2b, r3b, bf2 = _rhs(s1)
    new = State(
        g,
        0.5 * (state.rho + s1.rho + dt * r1b),
        0.5 * (state.mom + s1.mom + dt * r2b),
        0.5 * (state.rhoS + s1.rhoS + dt * r3b),
        state.t + dt,
        state.eos,
    )
    if np.any(new.rho <= RHO_FLOOR):
        raise ValueError("vacuum: density fell below floor")
    outflow = 0.5 * dt * (bf1 + bf2)
    return new, outflow


@dataclass
class RunResult:
    solution: RadialSolution
    mass_history: np.ndarray  # total mass after each step
    outflow_history: np.ndarray  # accumulated boundary mass outflow
    times: np.ndarray
    mass_closure: float  # max |dM + outflow| per step, relative


def run(
    grid: Grid,
    eos: NumericEOS,
    U0: np.ndarray,
    rho0: np.ndarray,
    S0: np.ndarray,
    t_end: float,
    cfl: float = DEFAULT_CFL,
    n_snapshots: int = 33,
) -> RunResult:
    """Advance to t_end, recording n_snapshots slices (including endpoints)."""
    state = State.from_primitives(grid, U0, rho0, S0, eos)
    sol = RadialSolution(grid.rc, grid.n)
    sol.append(state.as_slice())
    snap_times = np.linspace(0.0, t_end, n_snapshots)[1:]
    V = grid.volumes
    masses = [float(np.sum(state.rho * V))]
    outflows = [0.0]
    times = [0.0]
    closure = 0.0
    acc_out = 0.0
    next_snap = 0
    while state.t < t_end - 1e-14:
        smax = state.max_signal()
        dt = cfl * grid.dr / max(smax, 1e-12)
        target = snap_times[next_snap] if next_snap < len(snap_times) else t_end
        dt = min(dt, target - state.t, t_end - state.t)
        m_before = float(np.sum(state.rho * V))
        state, out = step(state, dt, cfl_check=cfl)
        acc_out += out
        m_after = float(np.sum(state.rho * V))
        scale = max(abs(m_before), 1.0)
        closure = max(closure, abs(m_after - m_before + out) / scale)
        masses.append(m_after)
        outflows.append(acc_out)
        times.append(state.t)
        if next_snap < len(snap_times) and state.t >= snap_times[next_snap] - 1e-14:
            sol.append(state.as_slice())
            next_snap += 1
    return RunResult(sol, np.array(masses), np.array(outflows), np.array(times), closure)


# ---------------------------------------------------------------------------
# transported domains and characteristic tracing
# ---------------------------------------------------------------------------


@dataclass
class TransportedDomain:
    """Boundary trajectories r_a(t) < r_b(t) advected by the flow."""

    times: np.ndarray
    r_a: np.ndarray
    r_b: np.ndarray


def trace_characteristic(sol: RadialSolution, r0: float, times: np.ndarray) -> np.ndarray:
    """Integrate dr/dt = U(t, r) through the stored solution (RK4)."""
    out = np.empty(len(times))
    out[0] = r0
    r = float(r0)
    rmin, rmax = sol.r[0], sol.r[-1]
    for i in range(len(times) - 1):
        t0, t1 = times[i], times[i + 1]
        h = t1 - t0

        def u(t, rr):
            return float(sol.eval("U", t, np.array([rr]))[0])

        k1 = u(t0, r)
        k2 = u(t0 + 0.5 * h, r + 0.5 * h * k1)
        k3 = u(t0 + 0.5 * h, r + 0.5 * h * k2)
        k4 = u(t1, r + h * k3)
        r = r + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not (rmin <= r <= rmax):
            raise ValueError("characteristic exited the grid")
        out[i + 1] = r
    return out


def transported_domain(sol: RadialSolution, r_a0: float, r_b0: float, times: np.ndarray) -> TransportedDomain:
    ra = trace_characteristic(sol, r_a0, times)
    rb = trace_characteristic(sol, r_b0, times)
    if np.any(rb <= ra):
        raise ValueError("transported domain collapsed")
    return TransportedDomain(times, ra, rb)


def _weighted_integral(sl: RadialSlice, values: np.ndarray, a: float, b: float) -> float:
    """Integral of values dr over [a, b]: midpoint over whole cells plus
    cubic-interpolated partial end cells."""
    r = sl.r
    dr = r[1] - r[0]
    edges = np.concatenate(([r[0] - 0.5 * dr], 0.5 * (r[1:] + r[:-1]), [r[-1] + 0.5 * dr]))
    itp = PchipInterpolator(r, values)
    lo = np.searchsorted(edges, a, side="right") - 1
    hi = np.searchsorted(edges, b, side="right") - 1
    lo = max(lo, 0)
    hi = min(hi, len(r) - 1)
    if lo == hi:
        return float(itp.integrate(a, b))
    total = 0.0
    # partial first cell
    total += float(itp.integrate(a, edges[lo + 1]))
    # whole interior cells by midpoint
    if hi > lo + 1:
        total += float(np.sum(values[lo + 1 : hi]) * dr)
    # partial last cell
    total += float(itp.integrate(edges[hi], b))
    return total


# ---------------------------------------------------------------------------
# conserved-integral balance and advected-scalar drift reports
# ---------------------------------------------------------------------------


def _entropy_f(S):
    return S


def balance_definitions(eos: NumericEOS, n: float, fS: Callable = _entropy_f,
                        fS_int_kappa: Optional[Callable] = None) -> Dict[str, dict]:
    """Density/flux callables per applicable conserved integral.

    Densities are full integrands (weight included); fluxes F(t, r, U, rho, S)
    obey d/dt int = -[F] on the boundary.
    """
    w = lambda r: r ** (n - 1.0)

    defs = {
        "mass": {
            "density": lambda t, r, U, rho, S: w(r) * rho,
            "flux": lambda t, r, U, rho, S: 0.0 * r,
        },
        "entropy": {
            "density": lambda t, r, U, rho, S: w(r) * rho * fS(S),
            "flux": lambda t, r, U, rho, S: 0.0 * r,
        },
        "energy": {
            "density": lambda t, r, U, rho, S: w(r) * rho * (0.5 * U * U + eos.e(rho, S)),
            "flux": lambda t, r, U, rho, S: w(r) * eos.p(rho, S) * U,
        },
    }
    if eos.kind == "polytropic":
        defs["dilational_energy"] = {
            "density": lambda t, r, U, rho, S: w(r)
            * (t * rho * (0.5 * U * U + eos.e(rho, S)) - 0.5 * r * rho * U),
            "flux": lambda t, r, U, rho, S: w(r) * (t * U - 0.5 * r) * eos.p(rho, S),
        }
        defs["similarity_energy"] = {
            "density": lambda t, r, U, rho, S: w(r)
            * (t * t * rho * (0.5 * U * U + eos.e(rho, S)) - t * r * rho * U + 0.5 * r * r * rho),
            "flux": lambda t, r, U, rho, S: w(r) * t * (t * U - r) * eos.p(rho, S),
        }
    if eos.kind == "barotropic":
        defs["enthalpy_flux"] = {
            "density": lambda t, r, U, rho, S: U,
            "flux": lambda t, r, U, rho, S: eos.e(rho, S) + eos.p(rho, S) / rho - 0.5 * U * U,
        }
    if eos.kind == "entropic" and fS_int_kappa is not None:
        # K(S) = int f kappa' dS supplied by the caller
        defs["entropy_weighted_energy"] = {
            "density": lambda t, r, U, rho, S: w(r) * (0.5 * rho * U * U * fS(S) - fS_int_kappa(S)),
            "flux": lambda t, r, U, rho, S: w(r) * U * fS_int_kappa(S),
        }
    return defs


def conserved_report(
    sol: RadialSolution,
    eos: NumericEOS,
    domain: TransportedDomain,
    laws: Optional[Sequence[str]] = None,
    fS: Callable = _entropy_f,
    fS_int_kappa: Optional[Callable] = None,
) -> Dict[str, dict]:
    """Imbalance of each transported-domain balance over the traced interval:
    max_t |I(t) - I(0) + int_0^t (F_b - F_a)| / scale."""
    n = sol.n
    defs = balance_definitions(eos, n, fS, fS_int_kappa)
    names = list(defs) if laws is None else [nm for nm in laws if nm in defs]
    times = domain.times
    report: Dict[str, dict] = {}
    for nm in names:
        dens = defs[nm]["density"]
        flux = defs[nm]["flux"]
        I = np.empty(len(times))
        Fnet = np.empty(len(times))
        for i, t in enumerate(times):
            sl = sol.slice_at(t)
            vals = dens(t, sl.r, sl.U, sl.rho, sl.S)
            I[i] = _weighted_integral(sl, vals, domain.r_a[i], domain.r_b[i])
            itp = {f: PchipInterpolator(sl.r, getattr(sl, f)) for f in ("U", "rho", "S")}
            fb = flux(
                t, domain.r_b[i], itp["U"](domain.r_b[i]), itp["rho"](domain.r_b[i]), itp["S"](domain.r_b[i])
            )
            fa = flux(
                t, domain.r_a[i], itp["U"](domain.r_a[i]), itp["rho"](domain.r_a[i]), itp["S"](domain.r_a[i])
            )
            Fnet[i] = fb - fa
        acc = cumulative_trapezoid(Fnet, times, initial=0.0)
        resid = I - I[0] + acc
        scale = max(float(np.max(np.abs(I))), 1e-30)
        report[nm] = {
            "imbalance": float(np.max(np.abs(resid))),
            "relative_imbalance": float(np.max(np.abs(resid)) / scale),
            "scale": scale,
        }
    return report


def advected_drift(
    sol: RadialSolution,
    eos: NumericEOS,
    start_radii: Sequence[float],
    quantities: Sequence[str] = ("J0",),
    n_checkpoints: int = 17,
    A_tol: float = 1e-10,
) -> Dict[str, dict]:
    """Drift of advected scalars along traced characteristics:
    max_t |J(t) - J(0)| / max(|J(0)|, floor) per tracer, worst over tracers."""
    from .advected import eval_A

    n = sol.n
    times = np.linspace(sol.t_min, sol.t_max, n_checkpoints)
    report: Dict[str, dict] = {}
    values: Dict[str, list] = {qq: [] for qq in quantities}
    for r0 in start_radii:
        path = trace_characteristic(sol, r0, times)
        series: Dict[str, np.ndarray] = {qq: np.empty(len(times)) for qq in quantities}
        for i, t in enumerate(times):
            sl = sol.slice_at(t)
            itpU = PchipInterpolator(sl.r, sl.U)
            itprho = PchipInterpolator(sl.r, sl.rho)
            itpS = PchipInterpolator(sl.r, sl.S)
            dS = itpS.derivative()
            rr = path[i]
            Uv, rhov, Sv, Srv = float(itpU(rr)), float(itprho(rr)), float(itpS(rr)), float(dS(rr))
            if eos.kind == "entropic":
                p_r = eos.kappa_prime(Sv) * Srv
            else:
                # p_r = a2 rho_r + p_S S_r; for the drift report only the
                # entropic branch needs p_r, so this path is unused
                p_r = None
            for qq in quantities:
                if qq == "J0":
                    series[qq][i] = Sv
                elif qq == "J1":
                    series[qq][i] = rr ** (1.0 - n) * Srv / rhov
                elif qq == "J11":
                    series[qq][i] = Uv * Uv + (2.0 / n) * rr * p_r / rhov
                elif qq == "J21":
                    series[qq][i] = eval_A(rr, Uv, p_r / rhov, n, tol=A_tol) - t
                else:
                    raise ValueError(f"unknown quantity {qq!r}")
        for qq in quantities:
            values[qq].append(series[qq])
    for qq in quantities:
        drifts = []
        for series in values[qq]:
            scale = max(abs(series[0]), 1e-10)
            drifts.append(float(np.max(np.abs(series - series[0])) / scale))
        report[qq] = {"max_drift": max(drifts), "per_tracer": drifts}
    return report


# ---------------------------------------------------------------------------
# discrete PDE residuals of (possibly transformed) solutions
# ---------------------------------------------------------------------------


def discrete_residual_norms(
    slices: Sequence[RadialSlice], eos: NumericEOS, interior_margin: int = 4
) -> np.ndarray:
    """L2 norms of the three discrete PDE residuals from three consecutive
    time slices (centered differences in t, 2nd order in r)."""
    if len(slices) != 3:
        raise ValueError("need exactly three consecutive slices")
    s0, s1, s2 = slices
    dt = s2.t - s1.t
    if abs((s1.t - s0.t) - dt) > 1e-9 * max(abs(dt), 1e-12):
        raise ValueError("slices must be equally spaced in time")
    r = s1.r
    n = s1.n
    sl = slice(interior_margin, len(r) - interior_margin)

    def ddr(w):
        return np.gradient(w, r, edge_order=2)

    U_t = (s2.U - s0.U) / (2 * dt)
    rho_t = (s2.rho - s0.rho) / (2 * dt)
    S_t = (s2.S - s0.S) / (2 * dt)
    U, rho, S = s1.U, s1.rho, s1.S
    p = eos.p(rho, S)
    res1 = U_t + U * ddr(U) + ddr(p) / rho
    res2 = rho_t + ddr(U * rho) + (n - 1.0) / r * U * rho
    res3 = S_t + U * ddr(S)
    return np.array(
        [
            float(np.sqrt(np.mean(res1[sl] ** 2))),
            float(np.sqrt(np.mean(res2[sl] ** 2))),
            float(np.sqrt(np.mean(res3[sl] ** 2))),
        ]
    )


def symmetry_residual_check(
    sol: RadialSolution,
    eos: NumericEOS,
    kind: str,
    eps: float,
    t_center: float,
    dt_fd: float,
    data=None,
    interior_margin: int = 6,
) -> dict:
    """Apply a transformation group to the discrete solution and compare the
    PDE residual norms of the transformed fields against the baseline."""
    from .symmetry import apply_group

    ts = [t_center - dt_fd, t_center, t_center + dt_fd]
    base = [sol.slice_at(t) for t in ts]
    trans = [apply_group(kind, eps, sol, t=t, data=data) for t in ts]
    rb = discrete_residual_norms(base, eos, interior_margin)
    rt = discrete_residual_norms(trans, eos, interior_margin)
    ratio = rt / np.maximum(rb, 1e-300)
    return {
        "kind": kind,
        "eps": eps,
        "baseline": rb.tolist(),
        "transformed": rt.tolist(),
        "ratio": ratio.tolist(),
        "max_ratio": float(np.max(ratio)),
    }
