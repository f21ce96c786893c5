"""Discrete radial fields: time slices, solution stacks, interpolation.

Group actions and balance reports need point evaluation of (U, rho, S) at
arbitrary (t, r).  Radial interpolation is monotone cubic (PCHIP); time
interpolation is cubic when at least four snapshots are available.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator


@dataclass
class RadialSlice:
    """Fields at one instant on a radial grid (cell centers)."""

    r: np.ndarray
    U: np.ndarray
    rho: np.ndarray
    S: np.ndarray
    t: float = 0.0
    n: float = 3.0

    def copy(self) -> "RadialSlice":
        return RadialSlice(self.r.copy(), self.U.copy(), self.rho.copy(), self.S.copy(), self.t, self.n)

    def interpolators(self) -> Dict[str, PchipInterpolator]:
        return {
            "U": PchipInterpolator(self.r, self.U, extrapolate=True),
            "rho": PchipInterpolator(self.r, self.rho, extrapolate=True),
            "S": PchipInterpolator(self.r, self.S, extrapolate=True),
        }

    def resample(self, r_new: np.ndarray, t: Optional[float] = None) -> "RadialSlice":
        itp = self.interpolators()
        return RadialSlice(
            r=np.asarray(r_new, dtype=float),
            U=itp["U"](r_new),
            rho=itp["rho"](r_new),
            S=itp["S"](r_new),
            t=self.t if t is None else t,
            n=self.n,
        )


class RadialSolution:
    """Stack of time slices with (t, r) interpolation.

    Fields are stored as 2-D arrays indexed (time, radius).  Radial
    evaluation uses PCHIP per requested time; time interpolation is cubic
    Lagrange on the four nearest snapshots (linear near the ends).
    """

    def __init__(self, r: np.ndarray, n: float = 3.0):
        self.r = np.asarray(r, dtype=float)
        self.n = n
        self.ts: list = []
        self.data: Dict[str, list] = {"U": [], "rho": [], "S": []}

    def append(self, sl: RadialSlice):
        if self.ts and sl.t <= self.ts[-1]:
            raise ValueError("snapshots must be appended in increasing time")
        self.ts.append(float(sl.t))
        for f in ("U", "rho", "S"):
            self.data[f].append(np.asarray(getattr(sl, f), dtype=float).copy())

    @property
    def t_min(self) -> float:
        return self.ts[0]

    @property
    def t_max(self) -> float:
        return self.ts[-1]

    def slice_at(self, t: float) -> RadialSlice:
        """Fields on the stored grid at time t (interpolated)."""
        arrs = {f: self._field_at(f, t) for f in ("U", "rho", "S")}
        return RadialSlice(self.r.copy(), arrs["U"], arrs["rho"], arrs["S"], t, self.n)

    def _field_at(self, fname: str, t: float) -> np.ndarray:
        ts = self.ts
        snaps = self.data[fname]
        if len(ts) == 1:
            return snaps[0].copy()
        t = float(t)
        j = int(np.searchsorted(ts, t))
        j = max(1, min(j, len(ts) - 1))
        lo = max(0, j - 2)
        hi = min(len(ts), lo + 4)
        lo = max(0, hi - 4)
        tt = np.array(ts[lo:hi])
        block = np.stack(snaps[lo:hi], axis=0)
        # Lagrange weights in time
        w = np.ones(len(tt))
        for i in range(len(tt)):
            for k in range(len(tt)):
                if k != i:
                    w[i] *= (t - tt[k]) / (tt[i] - tt[k])
        return np.tensordot(w, block, axes=(0, 0))

    def eval(self, fname: str, t: float, r_pts: np.ndarray) -> np.ndarray:
        arr = self._field_at(fname, t)
        itp = PchipInterpolator(self.r, arr, extrapolate=True)
        return itp(np.asarray(r_pts, dtype=float))

    def eval_slice(self, t: float, r_pts: np.ndarray) -> RadialSlice:
        return RadialSlice(
            r=np.asarray(r_pts, dtype=float),
            U=self.eval("U", t, r_pts),
            rho=self.eval("rho", t, r_pts),
            S=self.eval("S", t, r_pts),
            t=float(t),
            n=self.n,
        )


def invert_monotone(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n_tab: int = 4097):
    """Numeric inverse of a function monotone on [lo, hi] via a dense table
    plus PCHIP; raises if the table is not strictly monotone."""
    xs = np.linspace(lo, hi, n_tab)
    ys = fn(xs)
    dy = np.diff(ys)
    if np.all(dy > 0):
        return PchipInterpolator(ys, xs, extrapolate=True)
    if np.all(dy < 0):
        return PchipInterpolator(ys[::-1], xs[::-1], extrapolate=True)
    raise ValueError("function is not monotone on the data range; cannot invert")
