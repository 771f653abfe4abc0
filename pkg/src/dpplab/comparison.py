"""Comparison-function machinery for two-point regularity arguments.

The pair function f(x, z) = f1 - f2 combines a Hoelder-profile-plus-midpoint
term f1(x, z) = C|x-z|^delta + |x+z|^2 with an annular staircase f2 that is
largest on the diagonal x = z and drops by the factor C^2 per annulus of
width epsilon/10, vanishing beyond N*epsilon/10. All evaluators are
vectorized over leading axes; difference helpers factor the algebra so that
nearby evaluations do not lose precision to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Array

# annulus_index sentinel for |x-z| > N*epsilon/10
OUTSIDE = -1

# Boundary tolerance for annulus membership, relative to epsilon/10.
_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class ComparisonParams:
    """Constant schedule for the pair function.

    mode "strict" pins the conservative sufficient schedule:
        delta = 1/(10(n+2)), omega = min(1/(10(n+2)), 4^-n),
        C = 1e10/(delta^2 * omega), N = ceil(100*C/delta), theta = 1/10.
    mode "desk" admits any delta in (0,1), C > 1, N >= 1 so the certifier can
    probe numerically tractable scales.
    """

    n: int
    delta: float
    C: float
    N: int
    epsilon: float
    theta: float = 0.1
    omega: Optional[float] = None
    mode: str = "desk"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.C <= 1.0:
            raise ValueError("C must exceed 1")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie in (0, 1)")
        if self.mode not in ("strict", "desk"):
            raise ValueError("mode must be 'strict' or 'desk'")
        if self.mode == "strict":
            delta = 1.0 / (10.0 * (self.n + 2))
            if not math.isclose(self.delta, delta, rel_tol=1e-12):
                raise ValueError("strict mode pins delta = 1/(10(n+2))")
            if self.omega is None:
                raise ValueError("strict mode needs omega")
            C = 1e10 / (self.delta**2 * self.omega)
            if not math.isclose(self.C, C, rel_tol=1e-9):
                raise ValueError("strict mode pins C = 1e10/(delta^2*omega)")
            if self.N < 100.0 * self.C / self.delta:
                raise ValueError("strict mode needs N >= 100*C/delta")

    @property
    def near_far_split(self) -> float:
        """Pair distance N*epsilon/10 separating the staircase from f1-only."""
        return self.N * self.epsilon / 10.0

    def f2_peak(self) -> float:
        """f2 on the diagonal: C^(2N) * epsilon^delta (may overflow to inf)."""
        with np.errstate(over="ignore"):
            return float(np.exp(2.0 * self.N * math.log(self.C)
                                + self.delta * math.log(self.epsilon)))

    def as_dict(self) -> dict:
        return {"n": self.n, "delta": self.delta, "C": self.C, "N": self.N,
                "epsilon": self.epsilon, "theta": self.theta,
                "omega": self.omega, "mode": self.mode}


# Desk-scale schedule frozen from the parameter search
# (demos/desk_parameter_search.py); all four certified inequalities hold with
# positive margins at these values over B1 x B1 minus the diagonal.
DESK_SCHEDULE = dict(n=2, delta=0.2, C=250.0, N=40, epsilon=0.05, theta=0.1)


def default_params(n: int, mode: str = "desk",
                   omega_alpha: Optional[float] = None) -> ComparisonParams:
    """Conservative sufficient schedule ("strict") or the frozen desk-scale
    set ("desk").

    omega_alpha overrides the modulus omega in the strict schedule (the
    space-dependent games tie it to the coefficient's modulus of continuity).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if omega_alpha is not None and not (0.0 < omega_alpha < 1.0):
        raise ValueError("omega_alpha must lie in (0, 1)")
    if mode == "strict":
        delta = 1.0 / (10.0 * (n + 2))
        omega = min(delta, 4.0 ** (-n)) if omega_alpha is None else omega_alpha
        C = 1e10 / (delta**2 * omega)
        N = int(math.ceil(100.0 * C / delta))
        return ComparisonParams(n=n, delta=delta, C=C, N=N, epsilon=1e-3,
                                theta=0.1, omega=omega, mode="strict")
    if mode == "desk":
        if n != DESK_SCHEDULE["n"]:
            raise ValueError("the validated desk schedule is for n = 2; "
                             "build ComparisonParams directly for other n")
        return ComparisonParams(mode="desk", omega=None, **DESK_SCHEDULE)
    raise ValueError("mode must be 'strict' or 'desk'")


# -- geometry helpers -------------------------------------------------------


def _pair(x, z) -> tuple[Array, Array, bool]:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    scalar = x.ndim == 1
    return np.atleast_2d(x), np.atleast_2d(z), scalar


def _ret(v: Array, scalar: bool):
    return float(v[0]) if scalar else v


@dataclass(frozen=True)
class CoupledPoint:
    """A pair (x, z) with the unit separation direction and its projections."""

    x: tuple
    z: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.asarray(self.x).reshape(-1)))
        object.__setattr__(self, "z", tuple(float(v) for v in np.asarray(self.z).reshape(-1)))
        if len(self.x) != len(self.z):
            raise ValueError("x and z must share a dimension")

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.x, self.z)))

    @property
    def V(self) -> Optional[Array]:
        """Unit vector (x - z)/|x - z|; None on the diagonal."""
        d = np.subtract(self.x, self.z)
        t = np.linalg.norm(d)
        return None if t == 0.0 else d / t

    def v_component(self, h) -> float:
        v = self.V
        if v is None:
            raise ValueError("projections undefined on the diagonal x = z")
        return float(np.dot(np.asarray(h, dtype=float), v))

    def vperp_component(self, h) -> Array:
        v = self.V
        if v is None:
            raise ValueError("projections undefined on the diagonal x = z")
        h = np.asarray(h, dtype=float)
        return h - np.dot(h, v) * v

    def annulus(self, epsilon: float, N: int) -> int:
        return annulus_index(np.asarray(self.x), np.asarray(self.z), epsilon, N)


# -- the pair function ------------------------------------------------------


def eval_f1(x, z, C: float, delta: float):
    """f1(x, z) = C|x - z|^delta + |x + z|^2 (vectorized)."""
    X, Z, scalar = _pair(x, z)
    d = X - Z
    s = X + Z
    t = np.sqrt(np.einsum("...i,...i->...", d, d))
    out = C * t**delta + np.einsum("...i,...i->...", s, s)
    return _ret(out, scalar)


def annulus_index(x, z, epsilon: float, N: int):
    """Index of the annulus A_i = {(i-1)eps/10 < |x-z| <= i*eps/10}.

    Returns 0 exactly on the diagonal, 1..N inside the staircase, and the
    sentinel OUTSIDE (-1) beyond N*epsilon/10. The upper annulus boundary is
    closed with a relative tolerance matching the closed-ball convention.
    """
    X, Z, scalar = _pair(x, z)
    d = X - Z
    t = np.sqrt(np.einsum("...i,...i->...", d, d))
    q = 10.0 * t / epsilon
    i = np.ceil(q - _EDGE_TOL).astype(np.int64)
    i = np.where(t == 0.0, 0, np.maximum(i, 1))
    i = np.where(i > N, OUTSIDE, i)
    return (int(i[0]) if scalar else i)


def eval_f2(x, z, params: ComparisonParams):
    """Annular staircase: C^(2(N-i)) * epsilon^delta on A_i, 0 outside.

    Maximal on the diagonal (i = 0); drops by the factor C^2 per annulus.
    Values may overflow to inf at strict-schedule scales; that is reported, not
    masked.
    """
    X, Z, scalar = _pair(x, z)
    i = np.atleast_1d(annulus_index(X, Z, params.epsilon, params.N))
    with np.errstate(over="ignore"):
        vals = np.exp(2.0 * (params.N - i.astype(float)) * math.log(params.C)
                      + params.delta * math.log(params.epsilon))
    out = np.where(i == OUTSIDE, 0.0, vals)
    return _ret(out, scalar)


def eval_f(x, z, params: ComparisonParams):
    """The comparison function f = f1 - f2 at the schedule's C, delta."""
    f1 = eval_f1(x, z, params.C, params.delta)
    f2 = eval_f2(x, z, params)
    return f1 - f2


def pair_function(params: ComparisonParams):
    """Vectorized closure g(x_pts, z_pts) -> f(x, z) for the certifier."""
    def g(xp: Array, zp: Array) -> Array:
        return np.asarray(eval_f(xp, zp, params), dtype=float)
    return g


def f1_difference(x, z, hx, hz, C: float, delta: float):
    """f1(x+hx, z+hz) - f1(x, z) without cancellation.

    Factored form: the quadratic part is (2(x+z) + hx+hz) . (hx+hz) exactly;
    the power part uses a^delta * expm1(delta * log1p((b-a)/a)) with b - a
    computed through the squared norms.
    """
    X, Z, scalar = _pair(x, z)
    HX = np.atleast_2d(np.asarray(hx, dtype=float))
    HZ = np.atleast_2d(np.asarray(hz, dtype=float))
    d = X - Z
    dd = HX - HZ
    s = X + Z
    ds = HX + HZ
    a2 = np.einsum("...i,...i->...", d, d)
    a = np.sqrt(a2)
    cross = 2.0 * np.einsum("...i,...i->...", d, dd) + np.einsum("...i,...i->...", dd, dd)
    b = np.sqrt(a2 + cross)
    quad = np.einsum("...i,...i->...", 2.0 * s + ds, ds)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = cross / (a * (a + b))          # (b - a)/a, stable
        pow_diff = np.where(
            a > 0.0,
            a**delta * np.expm1(delta * np.log1p(rel)),
            b**delta,
        )
    # diagonal start: b^delta - 0^delta = b^delta handled above
    out = C * pow_diff + quad
    return _ret(out, scalar)


def taylor_f1(x, z, hx, hz, C: float, delta: float):
    """Second-order expansion of f1(x+hx, z+hz) and its cubic remainder bound.

    Expansion around (x, z), valid off the diagonal:
        f1 + C*delta*t^(delta-1)*(hx-hz)_V + 2(x+z).(hx+hz)
           + (C/2)*delta*t^(delta-2)*[(delta-1)*(hx-hz)_V^2 + |(hx-hz)_Vperp|^2]
           + |hx+hz|^2
    with t = |x-z| and V = (x-z)/t. The remainder bound
    C*|(hx,hz)|^3*(t - 2*eps_eff)^(delta-3), eps_eff = max(|hx|, |hz|), is
    returned where t > 2*eps_eff; elsewhere it is None (scalar) / nan (array).
    """
    X, Z, scalar = _pair(x, z)
    HX = np.atleast_2d(np.asarray(hx, dtype=float))
    HZ = np.atleast_2d(np.asarray(hz, dtype=float))
    d = X - Z
    t = np.sqrt(np.einsum("...i,...i->...", d, d))
    if np.any(t == 0.0):
        raise ValueError("taylor_f1 needs x != z")
    V = d / t[..., None]
    dd = HX - HZ
    ds = HX + HZ
    dd_v = np.einsum("...i,...i->...", dd, V)
    dd_perp = dd - dd_v[..., None] * V
    s = X + Z
    first = C * delta * t**(delta - 1.0) * dd_v \
        + 2.0 * np.einsum("...i,...i->...", s, ds)
    second = 0.5 * C * delta * t**(delta - 2.0) * (
        (delta - 1.0) * dd_v**2
        + np.einsum("...i,...i->...", dd_perp, dd_perp)
    ) + np.einsum("...i,...i->...", ds, ds)
    f1 = C * t**delta + np.einsum("...i,...i->...", s, s)
    approx = f1 + first + second

    eps_eff = np.maximum(np.linalg.norm(HX, axis=-1), np.linalg.norm(HZ, axis=-1))
    hnorm = np.sqrt(np.einsum("...i,...i->...", HX, HX)
                    + np.einsum("...i,...i->...", HZ, HZ))
    valid = t > 2.0 * eps_eff
    with np.errstate(invalid="ignore"):
        bound = np.where(valid, C * hnorm**3 * (t - 2.0 * eps_eff)**(delta - 3.0),
                         np.nan)
    if scalar:
        return float(approx[0]), (float(bound[0]) if valid[0] else None)
    return approx, bound


def error2_bound(x, z, epsilon: float, params: ComparisonParams):
    """Coarse remainder bound 10*eps^2*|x-z|^(delta-2) for the far regime.

    Requires the schedule relation N >= 100*C/delta and |x-z| > N*epsilon/10.
    """
    if params.N < 100.0 * params.C / params.delta:
        raise ValueError("error2_bound needs N >= 100*C/delta")
    X, Z, scalar = _pair(x, z)
    d = X - Z
    t = np.sqrt(np.einsum("...i,...i->...", d, d))
    if np.any(t <= params.N * epsilon / 10.0):
        raise ValueError("error2_bound needs |x-z| > N*epsilon/10")
    out = 10.0 * epsilon**2 * t**(params.delta - 2.0)
    return _ret(out, scalar)


def f1_oscillation_bound(params: ComparisonParams) -> tuple[float, float]:
    """Uniform bounds on |f1(x+hx, z+hz) - f1(x, z)| over B1 with |h| <= eps.

    Returns the sharp form 2*C*eps^delta + 16*eps and the coarse form
    3*C*eps^delta (the coarse one presumes C*eps^delta >= 16*eps, which holds
    at strict-schedule scales). Requires epsilon < 1.
    """
    if not (0.0 < params.epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    sharp = 2.0 * params.C * params.epsilon**params.delta + 16.0 * params.epsilon
    coarse = 3.0 * params.C * params.epsilon**params.delta
    return sharp, coarse
