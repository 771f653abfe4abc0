"""One-step dynamic programming operators for tug-of-war type games.

Four step rules share the interface (evaluator, point, spec) -> value:

* tug-of-war: average of the best and worst move in the epsilon-ball;
* random walk: mean over the epsilon-ball;
* space-dependent mix: alpha(x)/2 * (sup+inf) + beta(x) * mean;
* directional noise: optimize alpha*u(x+nu) + beta*(disk mean orthogonal to nu)
  over moves 0 < |nu| <= epsilon, then average the two players' optima.

An evaluator is any callable mapping an (m, n) array of points to (m,) values.
Grid application (`apply_operator`) gathers stored values through precomputed
stencil tables and never interpolates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (Array, GridDomain, ValueField, ball_second_moment,
                   disk_second_moment, orthonormal_complement)

Evaluator = Callable[[Array], Array]

KINDS = ("tug_of_war", "random_walk", "space_dependent", "directional")

# r_min convention: the smallest |nu| probed by the directional game's
# move search, as a fraction of epsilon.
R_MIN_FACTOR = 1.0 / 16.0


def alpha_beta_from_p(p: float, n: int) -> tuple[float, float]:
    """Mixing weights (alpha, beta) of the p-degenerate game in dimension n.

    alpha = (p-2)/(p+n), beta = (2+n)/(p+n); p = inf gives (1, 0).

    Raises:
        ValueError: if p < 2 (weights would leave [0, 1]).
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if math.isinf(p):
        return 1.0, 0.0
    if p < 2:
        raise ValueError("p must be >= 2 (or inf)")
    return (p - 2.0) / (p + n), (2.0 + n) / (p + n)


@dataclass(frozen=True)
class GameSpec:
    """Which game, at which step size, with which quadrature budgets.

    alpha is a constant in [0, 1] or, for the space-dependent game, a
    vectorized callable x -> alpha(x). direction_count / radius_count /
    disk_node_count parametrize the directional game's move search and disk
    rule; defaults follow the package conventions (64 directions for n = 2,
    128 for n >= 3; radii epsilon * {1, 1/2, 1/4, 1/16}; 9 disk nodes per
    radial line, 16 angular for n >= 3).
    """

    kind: str
    epsilon: float
    alpha: object = None
    direction_count: Optional[int] = None
    radius_count: int = 4
    disk_node_count: int = 9
    disk_angle_count: int = 16

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown game kind {self.kind!r}; pick from {KINDS}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.kind == "space_dependent" and self.alpha is None:
            raise ValueError("space_dependent needs alpha")
        if self.kind == "directional":
            if self.alpha is None or not np.isscalar(self.alpha):
                raise ValueError("directional needs a constant alpha")
            if not (0.0 < float(self.alpha) <= 1.0):
                raise ValueError("directional alpha must lie in (0, 1]")
        if np.isscalar(self.alpha) and self.alpha is not None:
            a = float(self.alpha)
            if not (0.0 <= a <= 1.0):
                raise ValueError("alpha must lie in [0, 1]")

    @staticmethod
    def tug_of_war(epsilon: float) -> "GameSpec":
        return GameSpec("tug_of_war", epsilon)

    @staticmethod
    def random_walk(epsilon: float) -> "GameSpec":
        return GameSpec("random_walk", epsilon)

    @staticmethod
    def space_dependent(epsilon: float, alpha) -> "GameSpec":
        return GameSpec("space_dependent", epsilon, alpha)

    @staticmethod
    def directional(epsilon: float, alpha: float, **kw) -> "GameSpec":
        return GameSpec("directional", epsilon, alpha, **kw)

    def alpha_at(self, pts: Array) -> Array:
        pts = np.atleast_2d(pts)
        if callable(self.alpha):
            a = np.asarray(self.alpha(pts), dtype=float)
        else:
            a = np.full(len(pts), float(self.alpha))
        if np.any((a < 0) | (a > 1)):
            raise ValueError("alpha(x) left [0, 1]")
        return a

    @property
    def r_min(self) -> float:
        return self.epsilon * R_MIN_FACTOR


# -- quadrature ------------------------------------------------------------


@dataclass(frozen=True)
class BallRule:
    """Offsets and weights for averaging over an epsilon-ball."""

    offsets: Array   # (m, n)
    weights: Array   # (m,), sums to 1

    @staticmethod
    def product(n: int, epsilon: float, nodes_per_axis: int = 21) -> "BallRule":
        """Equal-weight cube-lattice rule clipped to the closed ball.

        Symmetric under h -> -h, so affine integrands are averaged exactly.
        """
        ax = np.linspace(-epsilon, epsilon, nodes_per_axis)
        grid = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
        keep = np.einsum("ij,ij->i", grid, grid) <= epsilon**2 * (1 + 1e-12)
        pts = grid[keep]
        w = np.full(len(pts), 1.0 / len(pts))
        return BallRule(pts, w)

    @staticmethod
    def from_grid(domain: GridDomain, epsilon: float) -> "BallRule":
        offs = domain.stencil(epsilon) * domain.spacing
        w = np.full(len(offs), 1.0 / len(offs))
        return BallRule(offs, w)

    @staticmethod
    def monte_carlo(n: int, epsilon: float, m: int, rng: np.random.Generator,
                    antithetic: bool = True) -> "BallRule":
        half = (m + 1) // 2 if antithetic else m
        g = rng.standard_normal((half, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = epsilon * rng.random(half) ** (1.0 / n)
        pts = g * r[:, None]
        if antithetic:
            pts = np.concatenate([pts, -pts], axis=0)[:m]
        w = np.full(len(pts), 1.0 / len(pts))
        return BallRule(pts, w)


def sphere_directions(n: int, count: int) -> Array:
    """Deterministic antipodally-symmetric unit directions, (count, n).

    count must be even. n = 2 uses equally spaced angles; n = 3 a Fibonacci
    hemisphere plus antipodes; n >= 4 a seeded low-discrepancy construction.
    """
    if count % 2 != 0 or count < 2:
        raise ValueError("direction count must be even and >= 2")
    if n == 2:
        th = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    half = count // 2
    if n == 3:
        k = np.arange(half) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * k
        z = 1.0 - k / half            # hemisphere z in (0, 1]
        r = np.sqrt(np.maximum(0.0, 1.0 - z**2))
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    else:
        gen = np.random.Generator(np.random.Philox(key=np.array([n, count], dtype=np.uint64)))
        pts = gen.standard_normal((half, n))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.concatenate([pts, -pts], axis=0)


def default_direction_count(n: int) -> int:
    return 64 if n == 2 else 128


def move_radii(spec: GameSpec) -> Array:
    """Radii probed for |nu|: epsilon*2^-j plus the floor r_min."""
    k = max(2, int(spec.radius_count))
    radii = [spec.epsilon * 0.5**j for j in range(k - 1)]
    radii.append(spec.r_min)
    return np.unique(np.asarray(radii))[::-1]


def disk_rule(n: int, epsilon: float, nu: Array, nodes: int = 9,
              angles: int = 16) -> tuple[Array, Array]:
    """Quadrature (points, weights) for the mean over the (n-1)-disk.

    The disk has radius epsilon, is centered at the origin, and lies in the
    hyperplane orthogonal to nu. n = 2: Gauss-Legendre on the segment;
    n >= 3: Gauss-Legendre in the radial volume coordinate tensored with a
    symmetric angular set. Exact for affine integrands by symmetry.
    """
    basis = orthonormal_complement(nu)  # (n-1, n)
    if n == 2:
        x, w = np.polynomial.legendre.leggauss(nodes)
        pts = np.outer(x * epsilon, basis[0])
        return pts, w / w.sum()
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (x + 1.0)                       # volume coordinate in (0, 1)
    wu = w / w.sum()
    r = epsilon * u ** (1.0 / (n - 1))
    dirs = sphere_directions(n - 1, angles)   # directions inside the hyperplane
    local = dirs @ basis                      # (angles, n)
    pts = (r[:, None, None] * local[None, :, :]).reshape(-1, n)
    wts = np.repeat(wu / angles, angles)
    return pts, wts


# -- pointwise step rules ---------------------------------------------------


def step_tug_of_war(u: Evaluator, x, epsilon: float, probe: Array) -> float:
    """0.5*(sup + inf) of u over the probe point set within the epsilon-ball.

    probe holds absolute points; every probe point must lie within the closed
    epsilon-ball of x.
    """
    x = np.asarray(x, dtype=float)
    probe = np.atleast_2d(np.asarray(probe, dtype=float))
    d = probe - x
    if np.any(np.einsum("ij,ij->i", d, d) > epsilon**2 * (1 + 1e-9)):
        raise ValueError("probe point outside the epsilon-ball")
    vals = np.asarray(u(probe), dtype=float)
    return 0.5 * (vals.max() + vals.min())


def step_random_walk(u: Evaluator, x, epsilon: float, rule: BallRule) -> float:
    """Weighted mean of u over x + rule.offsets."""
    x = np.asarray(x, dtype=float)
    vals = np.asarray(u(x + rule.offsets), dtype=float)
    return float(vals @ rule.weights)


def step_space_dependent(u: Evaluator, x, epsilon: float, alpha: float,
                         probe: Array, rule: BallRule) -> float:
    a = float(alpha)
    if not (0.0 <= a <= 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    tug = step_tug_of_war(u, x, epsilon, probe)
    mean = step_random_walk(u, x, epsilon, rule)
    return a * tug + (1.0 - a) * mean


def step_directional(u: Evaluator, x, spec: GameSpec) -> float:
    """Directional-noise step: 0.5*(sup + inf) over moves of the move value.

    The value of move nu is alpha*u(x+nu) + beta*mean of u over the epsilon-
    disk orthogonal to nu, centered at x.
    """
    if spec.kind != "directional":
        raise ValueError("spec.kind must be 'directional'")
    x = np.asarray(x, dtype=float)
    n = x.size
    alpha = float(spec.alpha)
    beta = 1.0 - alpha
    dirs = sphere_directions(n, spec.direction_count or default_direction_count(n))
    radii = move_radii(spec)
    best = -np.inf
    worst = np.inf
    for e in dirs:
        pts, wts = disk_rule(n, spec.epsilon, e, spec.disk_node_count,
                             spec.disk_angle_count)
        disk_mean = float(np.asarray(u(x + pts), dtype=float) @ wts)
        jump_vals = np.asarray(u(x + np.outer(radii, e)), dtype=float)
        vals = alpha * jump_vals + beta * disk_mean
        best = max(best, vals.max())
        worst = min(worst, vals.min())
    return 0.5 * (best + worst)


# -- grid application -------------------------------------------------------

_SNAP_CACHE: dict = {}


def _directional_tables(domain: GridDomain, spec: GameSpec):
    """Snap move and disk quadrature nodes onto the epsilon-stencil.

    Returns (jump_cols (K,), disk_cols (K, J), disk_wts (J,), K) where columns
    index the stencil of spec.epsilon. Nearest-offset snapping keeps the
    operator monotone and non-expansive on grids.
    """
    key = (id(domain), round(spec.epsilon, 12), spec.direction_count,
           spec.radius_count, spec.disk_node_count, spec.disk_angle_count)
    if key in _SNAP_CACHE:
        return _SNAP_CACHE[key]
    n = domain.ndim
    offs = domain.stencil(spec.epsilon) * domain.spacing  # (S, n)
    dirs = sphere_directions(n, spec.direction_count or default_direction_count(n))
    radii = move_radii(spec)
    jump_nodes = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)

    def snap(nodes):
        d2 = ((nodes[:, None, :] - offs[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    jump_cols = snap(jump_nodes)  # (K,) with K = len(radii)*len(dirs)
    disk_cols = []
    wts = None
    for e in dirs:
        pts, w = disk_rule(n, spec.epsilon, e, spec.disk_node_count,
                           spec.disk_angle_count)
        disk_cols.append(snap(pts))
        wts = w
    disk_cols = np.asarray(disk_cols)          # (D, J), per direction
    # expand per (radius, direction) move: disk depends only on direction
    ndir = len(dirs)
    disk_per_move = np.tile(disk_cols, (len(radii), 1))
    out = (jump_cols, disk_per_move, wts, len(jump_nodes))
    _SNAP_CACHE[key] = out
    return out


def apply_operator(field: ValueField, spec: GameSpec) -> ValueField:
    """Apply the one-step operator at every interior point of a grid field.

    Strip values pass through unchanged. Deterministic; sup/inf and means are
    taken over the stored grid values via the epsilon-stencil (directional
    quadrature nodes snap to their nearest stencil offset).
    """
    dom = field.domain
    table = dom.neighbor_table(spec.epsilon)
    vals = field.values[table]  # (m, S)
    if spec.kind == "tug_of_war":
        out = 0.5 * (vals.max(axis=1) + vals.min(axis=1))
    elif spec.kind == "random_walk":
        out = vals.mean(axis=1)
    elif spec.kind == "space_dependent":
        a = spec.alpha_at(dom.interior_points)
        out = 0.5 * a * (vals.max(axis=1) + vals.min(axis=1)) + (1.0 - a) * vals.mean(axis=1)
    elif spec.kind == "directional":
        jump_cols, disk_cols, wts, K = _directional_tables(dom, spec)
        alpha = float(spec.alpha)
        beta = 1.0 - alpha
        m = vals.shape[0]
        best = np.full(m, -np.inf)
        worst = np.full(m, np.inf)
        chunk = max(1, int(4e6) // max(1, m))
        for s in range(0, K, chunk):
            jc = jump_cols[s:s + chunk]
            dc = disk_cols[s:s + chunk]
            jump_vals = vals[:, jc]                      # (m, c)
            disk_vals = vals[:, dc] @ wts                # (m, c)
            move_vals = alpha * jump_vals + beta * disk_vals
            best = np.maximum(best, move_vals.max(axis=1))
            worst = np.minimum(worst, move_vals.min(axis=1))
        out = 0.5 * (best + worst)
    else:  # pragma: no cover
        raise ValueError(spec.kind)
    return field.with_interior(out)
