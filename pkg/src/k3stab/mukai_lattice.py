"""Exact arithmetic on the rank-3 Mukai lattice of a Picard-rank-1 K3 surface.

Vectors are integer triples ``(r, d, s)`` standing for ``(r, d*H, s)`` where
``H`` is the ample generator with ``H^2 = 2m``.  The Mukai pairing is

    <(r1, d1, s1), (r2, d2, s2)> = 2m*d1*d2 - r1*s2 - r2*s1

which has signature (2, 1).
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import LatticeError

# Largest integer magnitude that converts to a float without rounding.
FLOAT_EXACT_LIMIT = 2**53


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances threaded through every floating-point operation."""

    quadric_rel: float = 1e-9  # |(W,W)| <= quadric_rel * (W, conj W) for reduced W
    hole: float = 1e-12  # |Z(delta)| at a computed hole position
    degenerate: float = 1e-8  # relative to sqrt(d) in is_degenerate
    closure: float = 1e-7  # distance to a cut counted as "on the closure"
    wall_param: float = 1e-12  # bisection tolerance along a path parameter
    section: float = 1e-12  # |W_r| below this is a degenerate section


@dataclass(frozen=True)
class LatticeContext:
    """Degree datum ``m`` (``H^2 = 2m``) plus the tolerances used downstream."""

    m: int
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 1:
            raise LatticeError(f"m must be a positive integer, got {self.m!r}")

    @property
    def gram(self) -> np.ndarray:
        m = self.m
        return np.array([[0, 0, -1], [0, 2 * m, 0], [-1, 0, 0]], dtype=object)


class MukaiVector(NamedTuple):
    r: int
    d: int
    s: int

    def __add__(self, other):
        return MukaiVector(self.r + other.r, self.d + other.d, self.s + other.s)

    def __sub__(self, other):
        return MukaiVector(self.r - other.r, self.d - other.d, self.s - other.s)

    def __neg__(self):
        return MukaiVector(-self.r, -self.d, -self.s)

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return MukaiVector(k * self.r, k * self.d, k * self.s)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.r == 0 and self.d == 0 and self.s == 0

    def as_floats(self) -> tuple[float, float, float]:
        """Convert to floats, refusing values that would lose integer precision."""
        for c in self:
            if abs(c) > FLOAT_EXACT_LIMIT:
                raise OverflowError(f"coordinate {c} of {tuple(self)} exceeds 2**53")
        return float(self.r), float(self.d), float(self.s)

    def to_json(self) -> dict:
        return {"r": self.r, "d": self.d, "s": self.s}

    @classmethod
    def from_json(cls, obj) -> "MukaiVector":
        if isinstance(obj, dict):
            return cls(int(obj["r"]), int(obj["d"]), int(obj["s"]))
        r, d, s = obj
        return cls(int(r), int(d), int(s))


def vec(r: int, d: int, s: int) -> MukaiVector:
    """Build a MukaiVector, rejecting non-integer coordinates."""
    for c in (r, d, s):
        if isinstance(c, bool) or not isinstance(c, (int, np.integer)):
            raise LatticeError(f"Mukai vector coordinates must be integers, got {c!r}")
    return MukaiVector(int(r), int(d), int(s))


POINT_CLASS = MukaiVector(0, 0, 1)


def pair(ctx: LatticeContext, v: Sequence[int], w: Sequence[int]) -> int:
    """Exact Mukai pairing of two integer vectors.

    Coordinates are promoted to Python ints first so fixed-width inputs
    (numpy int64) cannot wrap around.
    """
    r1, d1, s1 = (operator.index(c) for c in v)
    r2, d2, s2 = (operator.index(c) for c in w)
    return 2 * ctx.m * d1 * d2 - r1 * s2 - r2 * s1


def pair_any(m: int, v, w):
    """Bilinear (not Hermitian) Mukai pairing for real or complex triples."""
    return 2 * m * v[1] * w[1] - v[0] * w[2] - w[0] * v[2]


class Cone(Enum):
    PLUS = "plus"
    MINUS = "minus"
    OUTSIDE = "outside"

    @property
    def sign(self) -> int:
        return {Cone.PLUS: 1, Cone.MINUS: -1}[self]


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def cone_component(ctx: LatticeContext, v: Sequence) -> Cone:
    """Which component of ``{(v,v) <= 0}`` contains ``v``.

    Inside the cone ``r*s >= m*d^2 >= 0``, so ``r`` and ``s`` never have
    opposite signs and the component is ``sign(s)``, or ``sign(r)`` when
    ``s == 0``.  Works for real vectors as well as lattice vectors.
    """
    r, d, s = v
    if r == 0 and d == 0 and s == 0:
        raise LatticeError("cone_component of the zero vector")
    if pair_any(ctx.m, v, v) > 0:
        return Cone.OUTSIDE
    sg = _sign(s) if s != 0 else _sign(r)
    return Cone.PLUS if sg > 0 else Cone.MINUS


def is_root(ctx: LatticeContext, v: Sequence[int]) -> bool:
    return pair(ctx, v, v) == -2


def enumerate_roots(ctx: LatticeContext, r_max: int, d_max: int) -> list[MukaiVector]:
    """All positive-rank (-2)-classes with ``1 <= r <= r_max`` and ``|d| <= d_max``.

    ``(delta, delta) = -2`` reads ``m*d^2 - r*s = -1``, so ``s`` is determined
    by ``r`` and ``d`` whenever ``r`` divides ``m*d^2 + 1``.
    """
    if r_max < 1 or d_max < 0:
        raise LatticeError(f"need r_max >= 1 and d_max >= 0, got {r_max}, {d_max}")
    out = []
    for r in range(1, r_max + 1):
        for d in range(-d_max, d_max + 1):
            q, rem = divmod(ctx.m * d * d + 1, r)
            if rem == 0:
                out.append(MukaiVector(r, d, q))
    out.sort()
    return out


def reflect(ctx: LatticeContext, delta: Sequence[int], v: Sequence[int]) -> MukaiVector:
    """Reflection in the hyperplane orthogonal to the root ``delta``."""
    if not is_root(ctx, delta):
        raise LatticeError(f"{tuple(delta)} is not a (-2)-class for m={ctx.m}")
    k = pair(ctx, v, delta)
    return MukaiVector(v[0] + k * delta[0], v[1] + k * delta[1], v[2] + k * delta[2])


def shift_action(k: int, v: Sequence[int]) -> MukaiVector:
    """Mukai vector of ``E[k]`` given that of ``E``."""
    sg = -1 if k % 2 else 1
    return MukaiVector(sg * v[0], sg * v[1], sg * v[2])


# -- isometries ---------------------------------------------------------------


def reflection_matrix(ctx: LatticeContext, delta: Sequence[int]) -> np.ndarray:
    cols = [reflect(ctx, delta, e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    return np.array([[c[i] for c in cols] for i in range(3)], dtype=object)


def apply(g: np.ndarray, v: Sequence[int]) -> MukaiVector:
    return MukaiVector(*(int(sum(g[i][j] * v[j] for j in range(3))) for i in range(3)))


def _as_int_matrix(g) -> np.ndarray:
    g = np.asarray(g, dtype=object)
    if g.shape != (3, 3):
        raise LatticeError(f"isometry must be 3x3, got shape {g.shape}")
    for x in g.flat:
        if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
            raise LatticeError(f"isometry entries must be integers, got {x!r}")
    return np.array([[int(x) for x in row] for row in g], dtype=object)


def is_isometry(ctx: LatticeContext, g) -> bool:
    g = _as_int_matrix(g)
    gram = ctx.gram
    if not np.array_equal(g.T.dot(gram).dot(g), gram):
        return False
    det = (
        g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
    )
    return abs(det) == 1


def is_orientation_preserving(ctx: LatticeContext, g) -> bool:
    """Whether ``g`` preserves the orientation of positive definite 2-planes.

    The reference plane is spanned by the real and imaginary parts of
    ``exp(i*H) = (1, i, -m)``; its images are projected back onto it and the
    sign of the resulting 2x2 determinant is returned.  The projection is
    never singular because a positive plane meets the negative line
    orthogonal to the reference plane trivially.
    """
    g = _as_int_matrix(g)
    if not is_isometry(ctx, g):
        raise LatticeError("orientation test needs an isometry")
    m = ctx.m
    x = (1, 0, -m)
    y = (0, 1, 0)
    gx, gy = apply(g, x), apply(g, y)
    det = pair(ctx, gx, x) * pair(ctx, gy, y) - pair(ctx, gx, y) * pair(ctx, gy, x)
    return det > 0


def identity_matrix() -> np.ndarray:
    return np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=object)


def isotropic_and_proportional(ctx: LatticeContext, a: Sequence[int], b: Sequence[int]) -> bool:
    """Both isotropic and proportional (cross product zero)."""
    cross = (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
    return pair(ctx, a, a) == 0 and pair(ctx, b, b) == 0 and cross == (0, 0, 0)

