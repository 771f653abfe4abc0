"""Noise couplings: mirror reflection, minimal disk rotation, and clamping.

Each coupling transports one token's noise realization to the other token so
that the pair moves with the marginal laws of the underlying game while the
pair distance drifts the way the comparison arguments need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Array


def mirror_map(x, z, h):
    """Reflect h across the hyperplane orthogonal to V = (x-z)/|x-z|.

    P(h) = h - 2 (h.V) V. An involutive isometry of every centered ball;
    undefined on the diagonal x = z. h may be a single vector or (m, n).
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    d = x - z
    t = np.linalg.norm(d)
    if t == 0.0:
        raise ValueError("mirror_map needs x != z")
    v = d / t
    h = np.asarray(h, dtype=float)
    hv = h @ v if h.ndim > 1 else np.dot(h, v)
    return h - 2.0 * np.multiply.outer(hv, v) if h.ndim > 1 else h - 2.0 * hv * v


def clamp_projection(x, epsilon: float, y):
    """Project y to x when the pair is at least epsilon/2 apart, else keep y.

    P_x(y) = x if |x - y| >= eps/2, else y. In particular points at distance
    exactly eps/2 map to x. y may be (n,) or (m, n).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if y.ndim == 1:
        return x.copy() if np.linalg.norm(x - y) >= 0.5 * epsilon else y.copy()
    d = np.linalg.norm(y - x, axis=1)
    out = y.copy()
    out[d >= 0.5 * epsilon] = x
    return out


@dataclass(frozen=True)
class RotationMap:
    """Minimal rotation taking direction a to direction b, identity on their
    orthogonal complement.

    Antipodal pair (b = -a) and parallel pair (b = a) both give the identity:
    the convention P(nu, nu') = P(-nu, -nu') forces the antipodal case to
    match the parallel one, and the identity maps the hyperplane orthogonal
    to nu onto the hyperplane orthogonal to -nu anyway.
    """

    a_hat: tuple
    c_hat: Optional[tuple]   # in-plane direction orthogonal to a_hat; None = identity
    cos_phi: float
    sin_phi: float

    def apply(self, h):
        h = np.asarray(h, dtype=float)
        if self.c_hat is None:
            return h.copy()
        a = np.asarray(self.a_hat)
        c = np.asarray(self.c_hat)
        ha = h @ a if h.ndim > 1 else np.dot(h, a)
        hc = h @ c if h.ndim > 1 else np.dot(h, c)
        na = ha * self.cos_phi - hc * self.sin_phi
        nc = ha * self.sin_phi + hc * self.cos_phi
        if h.ndim > 1:
            return h - np.multiply.outer(ha, a) - np.multiply.outer(hc, c) \
                + np.multiply.outer(na, a) + np.multiply.outer(nc, c)
        return h - ha * a - hc * c + na * a + nc * c

    def __call__(self, h):
        return self.apply(h)


def rotation_map(nu_x, nu_z, parallel_tol: float = 1e-14) -> RotationMap:
    """Minimal rotation moving nu_x/|nu_x| onto nu_z/|nu_z|.

    It maps the hyperplane orthogonal to nu_x onto the hyperplane orthogonal
    to nu_z and fixes the (n-2)-dimensional intersection pointwise. Parallel
    and antipodal inputs give the identity.
    """
    a = np.asarray(nu_x, dtype=float)
    b = np.asarray(nu_z, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("rotation_map needs nonzero directions")
    a = a / na
    b = b / nb
    cos_phi = float(np.clip(np.dot(a, b), -1.0, 1.0))
    c = b - cos_phi * a
    nc = np.linalg.norm(c)
    if nc <= parallel_tol:
        return RotationMap(tuple(a), None, 1.0, 0.0)
    c = c / nc
    # the subtraction above cancels badly for near-(anti)parallel pairs and
    # leaves c tilted toward a by ~eps/|c|; one re-orthogonalization pass
    # restores a.c ~ eps, which apply() needs for exact isometry
    c = c - float(np.dot(a, c)) * a
    c = c / np.linalg.norm(c)
    sin_phi = float(np.dot(b, c))
    scale = math.hypot(cos_phi, sin_phi)
    return RotationMap(tuple(a), tuple(c), cos_phi / scale, sin_phi / scale)


def rotation_angle(nu_x, nu_z) -> float:
    """Angle of the minimal rotation (0 for parallel or antipodal pairs)."""
    r = rotation_map(nu_x, nu_z)
    if r.c_hat is None:
        return 0.0
    return float(np.arctan2(r.sin_phi, r.cos_phi))


COUPLING_KINDS = ("mirror", "rotation", "clamp")


@dataclass(frozen=True)
class CouplingMap:
    """One of the three couplings, bundled with its defining data.

    mirror   : reflection across the bisector of (x, z); data x, z
    rotation : minimal rotation taking nu_x to nu_z; data nu_x, nu_z
    clamp    : two-case projection toward x at scale epsilon; data x, epsilon
    """

    kind: str
    x: tuple | None = None
    z: tuple | None = None
    nu_x: tuple | None = None
    nu_z: tuple | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in COUPLING_KINDS:
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.kind == "mirror":
            if self.x is None or self.z is None:
                raise ValueError("mirror coupling needs x and z")
            if np.array_equal(self.x, self.z):
                raise ValueError("mirror coupling needs x != z")
        if self.kind == "rotation":
            if self.nu_x is None or self.nu_z is None:
                raise ValueError("rotation coupling needs nu_x and nu_z")
            if not (np.any(np.asarray(self.nu_x)) and np.any(np.asarray(self.nu_z))):
                raise ValueError("rotation coupling needs nonzero directions")
        if self.kind == "clamp" and (self.x is None or self.epsilon is None):
            raise ValueError("clamp coupling needs x and epsilon")

    @staticmethod
    def mirror(x, z) -> "CouplingMap":
        return CouplingMap("mirror", x=tuple(np.asarray(x, dtype=float)),
                           z=tuple(np.asarray(z, dtype=float)))

    @staticmethod
    def rotation(nu_x, nu_z) -> "CouplingMap":
        return CouplingMap("rotation",
                           nu_x=tuple(np.asarray(nu_x, dtype=float)),
                           nu_z=tuple(np.asarray(nu_z, dtype=float)))

    @staticmethod
    def clamp(x, epsilon: float) -> "CouplingMap":
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return CouplingMap("clamp", x=tuple(np.asarray(x, dtype=float)),
                           epsilon=float(epsilon))

    def apply(self, arg):
        """Mirror/rotation: image of a displacement. Clamp: image of a point."""
        if self.kind == "mirror":
            return mirror_map(np.asarray(self.x), np.asarray(self.z), arg)
        if self.kind == "rotation":
            return rotation_map(np.asarray(self.nu_x), np.asarray(self.nu_z))(arg)
        return clamp_projection(np.asarray(self.x), self.epsilon, arg)

    __call__ = apply
