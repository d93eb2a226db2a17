"""The negative line orthogonal to a reduced charge, in the Minkowski model.

For reduced ``W`` the real and imaginary parts span a positive plane, and its
orthogonal complement is a negative line.  ``Theta`` is the vector on that
line with ``(Theta, Theta) = -d`` lying in the positive cone, where
``2d = (W, conj W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateError, LatticeError
from .mukai_lattice import LatticeContext, pair_any
from .period_domain import hermitian_norm


@dataclass(frozen=True)
class ThetaVector:
    v: tuple[float, float, float]
    d: float

    def __getitem__(self, i):
        return self.v[i]

    def __iter__(self):
        return iter(self.v)

    def __len__(self):
        return 3


def theta_of(ctx: LatticeContext, omega: Sequence[complex]) -> ThetaVector:
    """Solve ``(Theta, Re W) = (Theta, Im W) = 0`` and normalise.

    The solution line is ``G^{-1}(Re W x Im W)`` with
    ``G^{-1} = [[0,0,-1],[0,1/2m,0],[-1,0,0]]``.  The sign is fixed by
    ``r + s > 0``; for a timelike vector ``r`` and ``s`` share a sign and
    cannot both be small, so this never hits the cone boundary.
    """
    m = ctx.m
    two_d = hermitian_norm(ctx, omega)
    if not two_d > 0:
        raise DegenerateError(f"(W, conj W) = {two_d} is not positive")
    xr, xd, xs = omega[0].real, omega[1].real, omega[2].real
    yr, yd, ys = omega[0].imag, omega[1].imag, omega[2].imag
    c0 = xd * ys - xs * yd
    c1 = xs * yr - xr * ys
    c2 = xr * yd - xd * yr
    u = (-c2, c1 / (2 * m), -c0)
    uu = pair_any(m, u, u)
    if not uu < 0:
        raise DegenerateError("orthogonal line is not negative; W is not reduced")
    d = 0.5 * two_d
    k = math.sqrt(d / -uu)
    if u[0] + u[2] < 0:
        k = -k
    return ThetaVector((k * u[0], k * u[1], k * u[2]), d)


def minkowski_identity(ctx: LatticeContext, omega: Sequence[complex], theta: Sequence[float],
                       v: Sequence[int]) -> float:
    """Residual of ``|(W,v)|^2 - (Theta,v)^2 = d (v,v)``."""
    m = ctx.m
    d = 0.5 * hermitian_norm(ctx, omega)
    fv = tuple(float(c) for c in v)
    z = pair_any(m, omega, fv)
    tv = pair_any(m, theta, fv)
    return abs(z) ** 2 - tv * tv - d * pair_any(m, fv, fv)


def hyp_distance(ctx: LatticeContext, th1: ThetaVector, th2: ThetaVector, tol: float = 1e-9) -> float:
    """Hyperbolic distance ``arccosh(-(Th1, Th2)/d)``.

    Vectors with different ``d`` are first rescaled to the unit sheet, so the
    result only depends on the lines they span.  Evaluated as
    ``2 asinh(sqrt((D, D))/2)`` with ``D`` the difference of the unit
    vectors, which keeps full relative accuracy for nearby points.
    """
    m = ctx.m
    u1 = tuple(c / math.sqrt(th1.d) for c in th1)
    u2 = tuple(c / math.sqrt(th2.d) for c in th2)
    c = -pair_any(m, u1, u2)
    if c < 1 - tol:
        raise LatticeError(f"-(Th1,Th2)/d = {c} < 1; not on the same sheet")
    delta = tuple(a - b for a, b in zip(u1, u2))
    dd = max(pair_any(m, delta, delta), 0.0)
    return 2 * math.asinh(0.5 * math.sqrt(dd))
