"""Section of the tube domain, holes, and the geometric chamber.

A point ``z = b + i*t`` of the upper half-plane stands for ``beta + i*omega = z*H``
and maps to the reduced vector ``exp(zH) = (1, z, m*z^2)``.  A positive root
``delta = (r, d, s)`` has exactly one zero of its central charge in the
half-plane, at ``d/r + i/(r*sqrt(m))``; the chamber is the half-plane with the
closed vertical segments below these holes removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple, Optional, Sequence, Union

from .errors import DegenerateError, LatticeError
from .mukai_lattice import LatticeContext, MukaiVector, enumerate_roots, is_root, pair_any


class OmegaVector(NamedTuple):
    """Complex vector ``(W_r, W_d, W_s)`` in N(X) (x) C."""

    r: complex
    d: complex
    s: complex

    def conj(self) -> "OmegaVector":
        return OmegaVector(self.r.conjugate(), self.d.conjugate(), self.s.conjugate())

    def scale(self, c: complex) -> "OmegaVector":
        return OmegaVector(c * self.r, c * self.d, c * self.s)

    @property
    def real(self) -> tuple[float, float, float]:
        return (self.r.real, self.d.real, self.s.real)

    @property
    def imag(self) -> tuple[float, float, float]:
        return (self.r.imag, self.d.imag, self.s.imag)

    def to_json(self) -> list:
        return [[c.real, c.imag] for c in self]

    @classmethod
    def from_json(cls, obj) -> "OmegaVector":
        return cls(*(complex(float(a), float(b)) for a, b in obj))


Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class TubePoint:
    """``z = b + i*t`` with ``t > 0``.

    ``b`` and ``t`` may be Fractions, in which case chamber tests are exact.
    """

    b: Number
    t: Number

    def __post_init__(self):
        if not self.t > 0:
            raise LatticeError(f"tube point needs t > 0, got t={self.t}")

    @property
    def z(self) -> complex:
        return complex(float(self.b), float(self.t))

    @classmethod
    def from_complex(cls, z: complex) -> "TubePoint":
        return cls(z.real, z.imag)


def _bt(z) -> tuple:
    """Split a TubePoint, complex or (b, t) pair without validating t."""
    if isinstance(z, TubePoint):
        return z.b, z.t
    if isinstance(z, (complex, float, int)):
        z = complex(z)
        return z.real, z.imag
    b, t = z
    return b, t


def exp_class(ctx: LatticeContext, z) -> OmegaVector:
    """The section ``exp(zH) = (1, z, m z^2)``."""
    b, t = _bt(z)
    if not t > 0:
        raise LatticeError(f"exp_class needs Im z > 0, got {t}")
    zc = complex(float(b), float(t))
    return OmegaVector(1 + 0j, zc, ctx.m * zc * zc)


def central_charge(ctx: LatticeContext, omega: Sequence[complex], v: Sequence[int]) -> complex:
    """``Z(v) = (W, v)``, complex bilinear in ``W``."""
    if v[0] == 0 and v[1] == 0 and v[2] == 0:
        return 0j
    fv = MukaiVector(*v).as_floats()
    return complex(pair_any(ctx.m, omega, fv))


def hermitian_norm(ctx: LatticeContext, omega: Sequence[complex]) -> float:
    """``(W, conj W)``, which equals ``2d`` for reduced ``W``."""
    m = ctx.m
    wr, wd, ws = omega
    return 2 * m * abs(wd) ** 2 - 2 * (wr * ws.conjugate()).real


def quadric_residual(ctx: LatticeContext, omega: Sequence[complex]) -> float:
    """``|(W, W)|``."""
    return abs(pair_any(ctx.m, omega, omega))


# -- holes --------------------------------------------------------------------


@dataclass(frozen=True)
class Hole:
    """Zero of ``<exp(z), root>`` in the upper half-plane.

    The real part is stored as an exact rational and the height as the pair
    ``(r, m)`` meaning ``1/(r*sqrt(m))``.
    """

    root: MukaiVector
    real: Fraction
    r: int
    m: int

    @property
    def height(self) -> float:
        return 1.0 / (self.r * math.sqrt(self.m))

    @property
    def z(self) -> complex:
        return complex(float(self.real), self.height)

    def to_json(self) -> dict:
        return {"num": self.real.numerator, "den": self.real.denominator, "r": self.r}


def hole_of(ctx: LatticeContext, delta: Sequence[int]) -> Hole:
    delta = MukaiVector(*delta)
    if not is_root(ctx, delta) or delta.r <= 0:
        raise LatticeError(f"{tuple(delta)} is not a positive root for m={ctx.m}")
    return Hole(delta, Fraction(delta.d, delta.r), delta.r, ctx.m)


def holes(ctx: LatticeContext, r_max: int, d_max: int) -> list[Hole]:
    """One hole per root in the box, each checked against its central charge.

    The check is relative to the size of the terms of ``<exp(z), delta>``,
    which for small roots is of order one.
    """
    if r_max < 1 or d_max < 1:
        raise LatticeError("hole bounds must be >= 1")
    out = []
    for delta in enumerate_roots(ctx, r_max, d_max):
        h = hole_of(ctx, delta)
        zc = h.z
        zval = central_charge(ctx, exp_class(ctx, zc), delta)
        scale = 1.0 + abs(2 * ctx.m * zc * delta.d) + abs(delta.r * ctx.m * zc * zc) + abs(delta.s)
        if abs(zval) > ctx.tol.hole * scale:
            raise DegenerateError(f"hole of {tuple(delta)} misses by {abs(zval):.3e}")
        out.append(h)
    return out


def holes_to_json(ctx: LatticeContext, hs: Sequence[Hole]) -> dict:
    return {
        "m": ctx.m,
        "roots": [h.root.to_json() for h in hs],
        "positions": [h.to_json() for h in hs],
    }


def holes_from_json(obj: dict) -> list[Hole]:
    m = int(obj["m"])
    out = []
    for root, pos in zip(obj["roots"], obj["positions"]):
        v = MukaiVector.from_json(root)
        out.append(Hole(v, Fraction(int(pos["num"]), int(pos["den"])), int(pos["r"]), m))
    return out


# -- chamber ------------------------------------------------------------------


@dataclass(frozen=True)
class Chamber:
    kind: str  # "inside", "on_segment" or "outside_tube"
    root: Optional[MukaiVector] = None

    @property
    def inside(self) -> bool:
        return self.kind == "inside"


INSIDE = Chamber("inside")
OUTSIDE_TUBE = Chamber("outside_tube")


def _exact(x) -> Fraction:
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(float(x))  # exact binary value of the float


def segment_root(ctx: LatticeContext, b) -> Optional[MukaiVector]:
    """The unique positive root whose cut lies on the line ``Re z = b``, if any.

    A root has ``gcd(r, d) = 1`` because ``r`` divides ``m d^2 + 1``, so
    ``d/r`` is already in lowest terms and the root is pinned down by ``b``.
    """
    fb = _exact(b)
    r, d = fb.denominator, fb.numerator
    q, rem = divmod(ctx.m * d * d + 1, r)
    if rem:
        return None
    return MukaiVector(r, d, q)


def on_segment(ctx: LatticeContext, z, delta: Sequence[int]) -> bool:
    """Exact test ``b == d/r`` and ``t <= 1/(r sqrt m)``."""
    b, t = _bt(z)
    r, d, _ = delta
    fb, ft = _exact(b), _exact(t)
    if ft <= 0 or fb * r != d:
        return False
    return ctx.m * r * r * ft * ft <= 1


def on_segment_by_sign(ctx: LatticeContext, z, delta: Sequence[int]) -> bool:
    """Exact test ``<exp(z), delta>`` in ``R_{<=0}``.

    With ``z = b + i t``: Im = ``2 m t (d - r b)`` and
    Re = ``2 m b d - s - r m (b^2 - t^2)``.
    """
    b, t = _bt(z)
    r, d, s = delta
    fb, ft = _exact(b), _exact(t)
    m = ctx.m
    im = 2 * m * ft * (d - r * fb)
    re = 2 * m * fb * d - s - r * m * (fb * fb - ft * ft)
    return im == 0 and re <= 0


def in_geometric_chamber(ctx: LatticeContext, z, r_max: Optional[int] = None,
                         d_max: Optional[int] = None) -> Chamber:
    """Classify ``z`` as inside the chamber, on a closed cut, or off the tube.

    Exact for Fraction inputs and for floats (taken at their binary value).
    When a box is given, roots outside it are ignored.
    """
    b, t = _bt(z)
    if not t > 0:
        return OUTSIDE_TUBE
    delta = segment_root(ctx, b)
    if delta is None:
        return INSIDE
    if r_max is not None and delta.r > r_max:
        return INSIDE
    if d_max is not None and abs(delta.d) > d_max:
        return INSIDE
    if on_segment(ctx, (b, t), delta):
        return Chamber("on_segment", delta)
    return INSIDE


def distance_to_cut(ctx: LatticeContext, z, delta: Sequence[int]) -> float:
    """Euclidean distance in the half-plane from ``z`` to the closed cut of ``delta``."""
    zc = complex(*map(float, _bt(z)))
    h = hole_of(ctx, delta)
    x = float(h.real)
    dy = 0.0 if zc.imag <= h.height else zc.imag - h.height
    if zc.imag < 0:
        dy = -zc.imag
    return math.hypot(zc.real - x, dy)


def in_chamber_closure(ctx: LatticeContext, z, r_max: int, d_max: int, tol: Optional[float] = None) -> bool:
    """Whether ``z`` is in the chamber or within ``tol`` of a cut, away from holes.

    The holes themselves are excluded: a reduced charge there is degenerate.
    """
    tol = ctx.tol.closure if tol is None else tol
    b, t = _bt(z)
    if not t > 0:
        return False
    zc = complex(float(b), float(t))
    for h in holes(ctx, r_max, d_max):
        if abs(zc - h.z) <= tol:
            return False
    return True


# -- Q+ membership ------------------------------------------------------------


def _check_section(ctx: LatticeContext, omega: Sequence[complex]) -> None:
    size = max(abs(c) for c in omega)
    if size == 0 or abs(omega[0]) <= ctx.tol.section * size:
        raise DegenerateError("section degenerate: W_r vanishes")


def recover_z(ctx: LatticeContext, omega: Sequence[complex]) -> TubePoint:
    """``z = W_d / W_r``, the tube point whose section is proportional to ``W``."""
    _check_section(ctx, omega)
    return TubePoint.from_complex(omega[1] / omega[0])


def is_reduced(ctx: LatticeContext, omega: Sequence[complex]) -> bool:
    h = hermitian_norm(ctx, omega)
    return h > 0 and quadric_residual(ctx, omega) <= ctx.tol.quadric_rel * h


def in_Q_plus(ctx: LatticeContext, omega: Sequence[complex]) -> bool:
    """Reduced, positive, and oriented so that ``Im(W_d/W_r) > 0``."""
    if not is_reduced(ctx, omega):
        return False
    try:
        _check_section(ctx, omega)
    except DegenerateError:
        return False
    return (omega[1] / omega[0]).imag > 0


def is_degenerate(ctx: LatticeContext, omega: Sequence[complex],
                  tol: Optional[float] = None) -> Optional[MukaiVector]:
    """A root ``delta`` with ``|(W, delta)| < tol * sqrt(d)``, or None.

    In the orthogonal frame ``(Theta, Re W, Im W)`` a root with small central
    charge has ``(Theta, delta)^2 = |Z|^2 + 2d`` bounded, which bounds each of
    its lattice coordinates.  The finite box is scanned exhaustively and the
    root with the smallest ``|Z|`` is returned, normalised to ``r > 0``.
    """
    from .hyperbolic import theta_of

    if not is_reduced(ctx, omega):
        raise DegenerateError("is_degenerate needs a reduced W")
    tol = ctx.tol.degenerate if tol is None else tol
    th = theta_of(ctx, omega)
    dd = th.d
    thr = tol * math.sqrt(dd)
    x, y = OmegaVector(*omega).real, OmegaVector(*omega).imag
    big = math.sqrt(thr * thr + 2 * dd)
    # delta = (-(delta,Th) Th + (delta,X) X + (delta,Y) Y) / d
    bound = [(big * abs(th[j]) + thr * (abs(x[j]) + abs(y[j]))) / dd for j in range(3)]
    r_hi = int(math.floor(bound[0] + 1e-9))
    d_hi = int(math.floor(bound[1] + 1e-9))
    s_hi = bound[2] + 1e-9
    m = ctx.m
    best, best_val = None, None
    for r in range(-r_hi, r_hi + 1):
        for d in range(-d_hi, d_hi + 1):
            num = m * d * d + 1
            if r == 0:
                continue  # m d^2 = -1 has no solution
            s, rem = divmod(num, r)
            if rem or abs(s) > s_hi:
                continue
            val = abs(central_charge(ctx, omega, (r, d, s)))
            if val < thr and (best_val is None or val < best_val):
                best, best_val = MukaiVector(r, d, s), val
    if best is None:
        return None
    return best if best.r > 0 else -best
