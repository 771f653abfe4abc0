"""Grid domains with boundary strips, ball stencils, and exact moment identities.

A domain is a lattice h*Z^n clipped to a shape (open ball, open box, or a
predicate mask). Interior points carry unknowns; the strip is the minimal set
of extra lattice points so that every interior point's closed epsilon-ball is
covered, which is where boundary data lives. Points are enumerated in
lexicographic lattice order so that every downstream computation is
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Array = np.ndarray

# Closed-ball membership tolerance, relative to epsilon.
BALL_TOL = 1e-12


def _as_point(x, n: int) -> Array:
    p = np.asarray(x, dtype=float).reshape(-1)
    if p.size != n:
        raise ValueError(f"expected a point of dimension {n}, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Ball:
    """Open euclidean ball used as a domain shape."""

    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def ndim(self) -> int:
        return len(self.center)

    def contains(self, pts: Array) -> Array:
        d = np.asarray(pts, dtype=float) - np.asarray(self.center)
        return np.einsum("...i,...i->...", d, d) < self.radius**2

    def bounding_box(self) -> tuple[Array, Array]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box used as a domain shape."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box must have positive extent in every axis")

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def contains(self, pts: Array) -> Array:
        p = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((p > lo) & (p < hi), axis=-1)

    def bounding_box(self) -> tuple[Array, Array]:
        return np.asarray(self.lo), np.asarray(self.hi)


@dataclass(frozen=True)
class Mask:
    """Shape given by an arbitrary vectorized predicate plus a bounding box."""

    predicate: Callable[[Array], Array]
    lo: tuple
    hi: tuple

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def contains(self, pts: Array) -> Array:
        out = np.asarray(self.predicate(np.asarray(pts, dtype=float)))
        return out.astype(bool)

    def bounding_box(self) -> tuple[Array, Array]:
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)


def stencil_offsets(n: int, spacing: float, epsilon: float) -> Array:
    """Integer lattice offsets o with |o*spacing| <= epsilon (closed ball).

    Sorted lexicographically. The closed-ball comparison uses the relative
    tolerance BALL_TOL*epsilon so lattice points sitting exactly on the sphere
    are kept regardless of rounding.
    """
    r = int(math.floor(epsilon / spacing + BALL_TOL)) + 1
    axes = [np.arange(-r, r + 1)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    d2 = np.einsum("ij,ij->i", grid * spacing, grid * spacing)
    keep = d2 <= (epsilon * (1.0 + BALL_TOL)) ** 2
    offs = grid[keep]
    order = np.lexsort(offs.T[::-1])
    return offs[order].astype(np.int64)


def _pack(lattice: Array) -> Array:
    """Encode integer lattice rows into single int64 keys for set operations."""
    lat = lattice.astype(np.int64)
    lo = lat.min(axis=0)
    span = lat.max(axis=0) - lo + 1
    key = np.zeros(len(lat), dtype=np.int64)
    for j in range(lat.shape[1]):
        key = key * span[j] + (lat[:, j] - lo[j])
    return key


class GridDomain:
    """Lattice domain: interior unknowns plus a boundary strip.

    Attributes:
        ndim: space dimension n.
        spacing: lattice spacing h.
        strip_width: nominal strip width (>= epsilon used at construction).
        lattice: (M, n) int64 lattice coordinates, lexicographic order.
        points: (M, n) float physical coordinates (lattice * spacing).
        interior_mask: (M,) bool, True for interior points.
    """

    def __init__(self, shape, spacing: float, epsilon: float,
                 lattice: Array, interior_mask: Array):
        self.shape = shape
        self.ndim = int(lattice.shape[1])
        self.spacing = float(spacing)
        self.strip_width = float(epsilon)
        self.lattice = lattice
        self.points = lattice * spacing
        self.interior_mask = interior_mask
        self.interior_indices = np.flatnonzero(interior_mask)
        self.strip_indices = np.flatnonzero(~interior_mask)
        self._index = {tuple(row): i for i, row in enumerate(lattice)}
        self._stencils: dict = {}
        self._tables: dict = {}

    # -- counts ---------------------------------------------------------

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_interior(self) -> int:
        return len(self.interior_indices)

    @property
    def n_strip(self) -> int:
        return len(self.strip_indices)

    @property
    def interior_points(self) -> Array:
        return self.points[self.interior_indices]

    @property
    def strip_points(self) -> Array:
        return self.points[self.strip_indices]

    # -- lookups --------------------------------------------------------

    def point_index(self, x) -> int:
        """Row index of the grid point at x (must lie on the lattice)."""
        p = _as_point(x, self.ndim)
        k = np.rint(p / self.spacing).astype(np.int64)
        if np.max(np.abs(k * self.spacing - p)) > 1e-9 * self.spacing:
            raise KeyError(f"{p} is not a lattice point of this domain")
        try:
            return self._index[tuple(k)]
        except KeyError:
            raise KeyError(f"{p} lies outside the domain") from None

    def has_lattice(self, k: tuple) -> bool:
        return k in self._index

    def nearest_index(self, x) -> int:
        """Row index of the stored point nearest to x (ties: lexicographic)."""
        p = _as_point(x, self.ndim)
        k = tuple(np.rint(p / self.spacing).astype(np.int64))
        if k in self._index:
            return self._index[k]
        d2 = np.einsum("ij,ij->i", self.points - p, self.points - p)
        return int(np.argmin(d2))

    # -- stencils -------------------------------------------------------

    def stencil(self, epsilon: float) -> Array:
        """Lattice offsets of the closed epsilon-ball, lexicographic order."""
        key = round(epsilon / self.spacing, 9)
        if key not in self._stencils:
            self._stencils[key] = stencil_offsets(self.ndim, self.spacing, epsilon)
        return self._stencils[key]

    def neighbor_table(self, epsilon: float) -> Array:
        """(n_interior, S) row indices of each interior point's stencil.

        Every interior point has the full stencil present by the strip
        coverage invariant; asserted at build time.
        """
        key = round(epsilon / self.spacing, 9)
        if key not in self._tables:
            offs = self.stencil(epsilon)
            base = self.lattice[self.interior_indices]
            table = np.empty((len(base), len(offs)), dtype=np.int64)
            for j, o in enumerate(offs):
                cols = [self._index.get(tuple(row)) for row in base + o]
                if any(c is None for c in cols):
                    raise RuntimeError(
                        "strip does not cover the epsilon-ball of an interior "
                        "point; rebuild the domain with this epsilon")
                table[:, j] = cols
            self._tables[key] = table
        return self._tables[key]


def build_grid_domain(shape, spacing: float, epsilon: float) -> GridDomain:
    """Build a GridDomain for `shape` with lattice step `spacing`.

    The strip is the dilation of the interior lattice set by the closed
    epsilon-stencil, minus the interior: the minimal point set covering one
    epsilon-step beyond the interior.

    Raises:
        ValueError: no interior points, or spacing too coarse (epsilon < 3h).
    """
    if spacing <= 0 or epsilon <= 0:
        raise ValueError("spacing and epsilon must be positive")
    if epsilon < 3.0 * spacing:
        raise ValueError(
            f"spacing {spacing} too coarse for epsilon {epsilon}: need epsilon >= 3*spacing")
    lo, hi = shape.bounding_box()
    n = shape.ndim
    klo = np.floor(np.asarray(lo) / spacing).astype(np.int64) - 1
    khi = np.ceil(np.asarray(hi) / spacing).astype(np.int64) + 1
    axes = [np.arange(klo[j], khi[j] + 1) for j in range(n)]
    lat = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    inside = shape.contains(lat * spacing)
    interior = lat[inside]
    if len(interior) == 0:
        raise ValueError("shape contains no lattice points at this spacing")

    offs = stencil_offsets(n, spacing, epsilon)
    # Dilate: all interior+offset tuples, dedup, drop interior ones.
    dil = (interior[:, None, :] + offs[None, :, :]).reshape(-1, n)
    allpts = np.concatenate([interior, dil], axis=0)
    key = _pack(allpts)
    _, first = np.unique(key, return_index=True)
    allpts = allpts[np.sort(first)]
    # interior membership of the deduped set
    ikey = set(map(int, _pack_against(interior, allpts)))
    akey = _pack_against(allpts, allpts)
    interior_mask = np.fromiter((int(k) in ikey for k in akey), dtype=bool,
                                count=len(allpts))

    order = np.lexsort(allpts.T[::-1])
    lat_sorted = allpts[order]
    mask_sorted = interior_mask[order]
    dom = GridDomain(shape, spacing, epsilon, lat_sorted, mask_sorted)
    dom.neighbor_table(epsilon)  # asserts strip coverage eagerly
    return dom


def _pack_against(rows: Array, reference: Array) -> Array:
    """Pack `rows` with the key geometry of `reference` (shared lo/span)."""
    ref = reference.astype(np.int64)
    lo = ref.min(axis=0)
    span = ref.max(axis=0) - lo + 1
    key = np.zeros(len(rows), dtype=np.int64)
    r = rows.astype(np.int64)
    for j in range(r.shape[1]):
        key = key * span[j] + (r[:, j] - lo[j])
    return key


def ball_neighbors(domain: GridDomain, x, epsilon: float) -> Array:
    """Grid points of `domain` within the closed epsilon-ball of x.

    x must be a grid point; the result includes x itself and is ordered
    lexicographically by lattice offset.
    """
    i = domain.point_index(x)
    base = domain.lattice[i]
    offs = domain.stencil(epsilon)
    rows = []
    for o in offs:
        j = domain._index.get(tuple(base + o))
        if j is not None:
            rows.append(j)
    return domain.points[np.array(rows, dtype=np.int64)]


@dataclass
class ValueField:
    """Values attached to every stored point of a GridDomain."""

    domain: GridDomain
    values: Array

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != self.domain.n_points:
            raise ValueError("values length must equal the domain point count")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @property
    def interior_values(self) -> Array:
        return self.values[self.domain.interior_indices]

    @property
    def strip_values(self) -> Array:
        return self.values[self.domain.strip_indices]

    def osc_strip(self) -> float:
        s = self.strip_values
        return float(s.max() - s.min()) if len(s) else 0.0

    def copy(self) -> "ValueField":
        return ValueField(self.domain, self.values.copy())

    def with_interior(self, interior_values: Array) -> "ValueField":
        out = self.values.copy()
        out[self.domain.interior_indices] = interior_values
        return ValueField(self.domain, out)

    def evaluate(self, pts: Array) -> Array:
        """Exact lookup of stored values at lattice points (batched)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        idx = [self.domain.point_index(row) for row in p]
        out = self.values[np.array(idx)]
        return out if np.ndim(pts) > 1 else out[0]


def constant_field(domain: GridDomain, value: float) -> ValueField:
    return ValueField(domain, np.full(domain.n_points, float(value)))


def field_from_function(domain: GridDomain, f: Callable[[Array], Array]) -> ValueField:
    return ValueField(domain, np.asarray(f(domain.points), dtype=float))


# -- exact moment identities ---------------------------------------------


def ball_second_moment(n: int, epsilon: float) -> float:
    """Mean of a single squared coordinate over the uniform n-ball of radius epsilon."""
    if n < 1 or epsilon <= 0:
        raise ValueError("need n >= 1 and epsilon > 0")
    return epsilon**2 / (n + 2)


def disk_second_moment(n: int, epsilon: float) -> float:
    """Mean of |h|^2 over the uniform (n-1)-disk of radius epsilon in R^n."""
    if n < 2 or epsilon <= 0:
        raise ValueError("need n >= 2 and epsilon > 0")
    return (n - 1) * epsilon**2 / (n + 1)


def ball_volume(n: int, radius: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * radius**n


def orthonormal_complement(v: Array) -> Array:
    """(n-1, n) orthonormal basis of the hyperplane orthogonal to v.

    Deterministic for a given v (Householder construction).
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    n = v.size
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("zero vector has no normal hyperplane")
    u = v / nv
    # Householder vector mapping e_k -> u, k = argmax |u_k| for stability.
    k = int(np.argmax(np.abs(u)))
    e = np.zeros(n)
    e[k] = 1.0 if u[k] >= 0 else -1.0
    w = u + e
    w /= np.linalg.norm(w)
    H = np.eye(n) - 2.0 * np.outer(w, w)
    # H maps u to -e_k (up to sign); its other columns span the complement.
    cols = [j for j in range(n) if j != k]
    basis = H[:, cols].T
    return basis
