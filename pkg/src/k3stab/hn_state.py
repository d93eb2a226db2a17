"""Lattice-level bookkeeping of the extremal HN factors of the point class.

The tracked object is the skyscraper class ``e = (0, 0, 1)``.  Inside the
geometric chamber it is stable (width 0).  Crossing the cut of a positive root
``delta = (r, d, s)`` splits it into ``delta`` with multiplicity ``k = r`` and
the isotropic class ``S2 = e - k*delta``; whichever has the larger phase is
``A+``.  Alignments of ``Z(v+)`` and ``Z(v-)`` are the walls of that state.

Only this two-factor picture is modelled.  Walls whose factor data would have
to be guessed raise WallDataError instead.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    HoleHitError,
    NonTransverseCrossingError,
    StepTooLargeError,
    WallCollisionError,
    WallDataError,
)
from .mukai_lattice import (
    POINT_CLASS,
    Cone,
    LatticeContext,
    MukaiVector,
    cone_component,
    is_root,
    pair,
    pair_any,
)
from .period_domain import Chamber, central_charge, exp_class, in_geometric_chamber

Factors = tuple  # tuple of (MukaiVector, multiplicity)


def phase(ctx: LatticeContext, omega: Sequence[complex], v: Sequence[int], prev: float) -> float:
    """Branch of ``arg Z(v) / pi`` closest to ``prev``."""
    z = central_charge(ctx, omega, v)
    return phase_of_value(z, prev)


def phase_of_value(z: complex, prev: float) -> float:
    if z == 0:
        raise HoleHitError("class hits hole: central charge vanishes")
    a = cmath.phase(z) / math.pi
    k = round((prev - a) / 2)
    phi = a + 2 * k
    if abs(phi - prev) >= 0.5:
        raise StepTooLargeError(f"step too large: phase jumped from {prev} to {phi}")
    return phi


@dataclass(frozen=True)
class WidthState:
    vplus: MukaiVector
    vminus: MukaiVector
    nint: int
    phiplus: float
    phiminus: float
    plus_factors: Factors
    minus_factors: Factors
    root: Optional[MukaiVector] = None  # cut crossed to reach this state

    @property
    def is_seed(self) -> bool:
        return self.root is None

    def lattice_key(self) -> tuple:
        """Everything except the float phases."""
        return (self.vplus, self.vminus, self.nint, self.plus_factors, self.minus_factors, self.root)

    def to_json(self) -> dict:
        def facs(fs):
            return [{**v.to_json(), "mult": k} for v, k in fs]

        return {
            "vplus": self.vplus.to_json(),
            "vminus": self.vminus.to_json(),
            "nint": self.nint,
            "phiplus": self.phiplus,
            "phiminus": self.phiminus,
            "plus_factors": facs(self.plus_factors),
            "minus_factors": facs(self.minus_factors),
            "root": None if self.root is None else self.root.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WidthState":
        def facs(fs):
            return tuple((MukaiVector.from_json(f), int(f["mult"])) for f in fs)

        return cls(
            MukaiVector.from_json(obj["vplus"]),
            MukaiVector.from_json(obj["vminus"]),
            int(obj["nint"]),
            float(obj["phiplus"]),
            float(obj["phiminus"]),
            facs(obj["plus_factors"]),
            facs(obj["minus_factors"]),
            None if obj["root"] is None else MukaiVector.from_json(obj["root"]),
        )


@dataclass(frozen=True)
class WallEvent:
    kind: str  # plus_wall, minus_wall, integral_wall, geometric_boundary
    roots: tuple
    param: float
    side: int  # +1 if the alignment function goes from - to +

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "roots": [MukaiVector(*v).to_json() for v in self.roots],
            "param": self.param,
            "side": self.side,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WallEvent":
        return cls(obj["kind"], tuple(MukaiVector.from_json(v) for v in obj["roots"]),
                   float(obj["param"]), int(obj["side"]))


def seed_state(ctx: LatticeContext, omega: Sequence[complex], phi0: float = 1.0) -> WidthState:
    e = POINT_CLASS
    p = phase(ctx, omega, e, phi0)
    return WidthState(e, e, 0, p, p, ((e, 1),), ((e, 1),))


def initial_state_geometric(ctx: LatticeContext, e: Sequence[int], z) -> WidthState:
    """Width-zero state of the point class at a chamber point ``z``."""
    if tuple(e) != tuple(POINT_CLASS):
        raise WallDataError(f"unsupported seed class {tuple(e)}; only (0,0,1) is modelled")
    ch = in_geometric_chamber(ctx, z)
    if not ch.inside:
        raise WallDataError(f"seed point {z} is not inside the geometric chamber ({ch.kind})")
    return seed_state(ctx, exp_class(ctx, z))


def refresh(ctx: LatticeContext, state: WidthState, omega: Sequence[complex]) -> WidthState:
    """Re-evaluate the continuous phases at ``omega``."""
    pp = phase(ctx, omega, state.vplus, state.phiplus)
    pm = phase(ctx, omega, state.vminus, state.phiminus)
    return replace(state, phiplus=pp, phiminus=pm)


def width(ctx: LatticeContext, state: WidthState, omega: Sequence[complex]) -> float:
    s = refresh(ctx, state, omega)
    return s.nint + s.phiplus - s.phiminus


def epsilon(ctx: LatticeContext, state: WidthState) -> int:
    return cone_component(ctx, state.vplus).sign


# -- wall crossing ------------------------------------------------------------


def split_classes(ctx: LatticeContext, delta: Sequence[int]) -> tuple[MukaiVector, int, MukaiVector]:
    """``(delta, k, S2)`` with ``k*delta + S2 = e`` and ``S2`` the reflection of ``e``."""
    delta = MukaiVector(*delta)
    if not is_root(ctx, delta) or delta.r <= 0:
        raise WallDataError(f"{tuple(delta)} is not a positive root")
    k = -pair(ctx, POINT_CLASS, delta)
    return delta, k, POINT_CLASS - k * delta


def cross_geometric_boundary(ctx: LatticeContext, state: WidthState, delta: Sequence[int],
                             omega: Sequence[complex]) -> WidthState:
    """Leave the chamber through the cut of ``delta``; ``omega`` is just past it."""
    if not state.is_seed or state.nint != 0:
        raise WallDataError("geometric boundary crossing needs the width-zero seed state")
    delta, k, s2 = split_classes(ctx, delta)
    ze = central_charge(ctx, omega, POINT_CLASS)
    zd = central_charge(ctx, omega, delta)
    if (zd * ze.conjugate()).real <= 0:
        raise WallDataError(f"{tuple(omega)} is not next to the cut of {tuple(delta)}")
    pe = state.phiplus
    pd = phase(ctx, omega, delta, pe)
    ps = phase(ctx, omega, s2, pe)
    if pd == ps:
        raise NonTransverseCrossingError("omega lies on the wall; move off it")
    sub, quo = ((delta, k), (s2, 1)) if pd > ps else ((s2, 1), (delta, k))
    return WidthState(
        sub[1] * sub[0], quo[1] * quo[0], 0, max(pd, ps), min(pd, ps), (sub,), (quo,), delta
    )


def cross_integral_wall(ctx: LatticeContext, state: WidthState, omega: Sequence[complex]) -> WidthState:
    """Cross the alignment wall of ``Z(v+)`` and ``Z(v-)``; ``omega`` is just past it.

    A positive alignment is the width-0 wall.  If the factors keep their
    order the state is unchanged; otherwise they recombine into the point
    class and the seed state comes back.  A negative alignment is a wall at
    positive integral width: the lower factor is shifted, and the result is
    accepted only if it still satisfies ``(v+, v-) > 0``.
    """
    if state.is_seed:
        raise WallDataError("the seed state has no integral wall")
    (s1, a), = state.plus_factors
    (s2, b), = state.minus_factors
    z1 = central_charge(ctx, omega, s1)
    z2 = central_charge(ctx, omega, s2)
    p1 = phase_of_value(z1, state.phiplus)
    p2 = phase_of_value(z2, state.phiminus)
    if (z1 * z2.conjugate()).real > 0:
        # width-0 wall
        if a * s1 + b * s2 != POINT_CLASS:
            raise WallDataError("inconsistent wall data: factors do not sum to the point class")
        if p1 > p2:
            return replace(state, phiplus=p1, phiminus=p2)
        return replace(seed_state(ctx, omega, p1), phiplus=p1, phiminus=p1)
    # negative alignment: the gap has wrapped through an integer
    gap = state.nint + p1 - p2
    n_new = math.floor(gap)
    if n_new == state.nint:
        return replace(state, phiplus=p1, phiminus=p2)
    shift = n_new - state.nint
    sg = -1 if shift % 2 else 1
    cand = replace(
        state,
        vminus=sg * state.vminus,
        nint=n_new,
        phiminus=p2 + shift,
    )
    if n_new < 0 or pair(ctx, cand.vplus, cand.vminus) <= 0:
        raise WallDataError(
            "factor data at this integral wall is not determined by history "
            f"(width would pass {max(n_new, state.nint)})"
        )
    return cand


def check_invariants(ctx: LatticeContext, state: WidthState, omega: Sequence[complex]) -> list[str]:
    """Return the list of violated state invariants (empty when all hold)."""
    bad = []
    w = width(ctx, state, omega)
    if w < -1e-9:
        bad.append(f"negative width {w}")
    for v, fs in ((state.vplus, state.plus_factors), (state.vminus, state.minus_factors)):
        tot = sum(k for _, k in fs)
        if pair(ctx, v, v) > 0 or pair(ctx, v, v) < -2 * tot * tot:
            bad.append(f"class {tuple(v)} has square {pair(ctx, v, v)}")
    if not state.is_seed:
        sgn = -1 if state.nint % 2 else 1
        total = state.vplus + sgn * state.vminus
        if total != POINT_CLASS:
            bad.append(f"v+ and shifted v- sum to {tuple(total)}")
        frac = w - math.floor(w)
        if 1e-9 < frac < 1 - 1e-9:
            if pair(ctx, state.vplus, state.vminus) <= 0:
                bad.append("(v+, v-) <= 0 at non-integral width")
            if cone_component(ctx, state.vplus) == cone_component(ctx, state.vminus):
                bad.append("v+ and v- in the same cone component")
    return bad


# -- event detection ----------------------------------------------------------


def alignment(ctx: LatticeContext, omega: Sequence[complex], a: Sequence[int], b: Sequence[int]) -> complex:
    """``Z(a) * conj Z(b)``; its imaginary part vanishes on the alignment locus."""
    return central_charge(ctx, omega, a) * central_charge(ctx, omega, b).conjugate()


@dataclass(frozen=True)
class Crossing:
    param: float
    side: int  # +1 when Im alignment goes from - to +
    positive: bool  # Z(a), Z(b) point the same way (cut side, not the far side)


def _scan(f: Callable[[float], float], s0: float, s1: float, samples: int, xtol: float,
          tangent_ok: Callable[[float], bool]) -> list[tuple[float, int]]:
    """Sign changes of ``f`` on ``(s0, s1]``, refined by Brent's method.

    A sample where ``f`` touches zero without changing sign is a tangency;
    it raises unless ``tangent_ok(s)`` says the touching point is harmless.
    """
    ss = np.linspace(s0, s1, samples + 1)
    vals = [f(s) for s in ss]

    def tangent(i):
        if not tangent_ok(float(ss[i])):
            raise NonTransverseCrossingError("non-transverse crossing; perturb path")

    out = []
    for i in range(samples):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0:
            continue  # belongs to the previous interval (or the caller's start point)
        if fb == 0:
            if i + 1 == samples or vals[i + 2] * fa < 0:
                out.append((float(ss[i + 1]), 1 if fa < 0 else -1))
            elif vals[i + 2] != 0:
                tangent(i + 1)
            continue
        if fa * fb < 0:
            root = brentq(f, ss[i], ss[i + 1], xtol=xtol)
            out.append((float(root), 1 if fa < 0 else -1))
    return out


def alignment_crossings(ctx: LatticeContext, omega_at: Callable[[float], Sequence[complex]],
                        a: Sequence[int], b: Sequence[int], s0: float, s1: float,
                        samples: int = 64, only_positive: bool = False) -> list[Crossing]:
    """Parameters where ``Im Z(a) conj Z(b)`` changes sign along ``omega_at``.

    ``Im`` values below ``1e-13 |Z(a) Z(b)|`` are rounded to zero, so a path
    running along the alignment locus shows up as a tangency rather than as
    spurious sign flips.  With ``only_positive`` only same-direction
    alignments are reported and checked for tangency.
    """

    def f(s):
        al = alignment(ctx, omega_at(s), a, b)
        return 0.0 if abs(al.imag) <= 1e-13 * abs(al) else al.imag

    def harmless(s):
        return only_positive and alignment(ctx, omega_at(s), a, b).real < 0

    out = []
    for s, side in _scan(f, s0, s1, samples, ctx.tol.wall_param, harmless):
        al = alignment(ctx, omega_at(s), a, b)
        if abs(al) == 0:
            raise HoleHitError("class hits hole on the path")
        if only_positive and al.real < 0:
            continue
        out.append(Crossing(s, side, al.real > 0))
    return out


def cut_crossings(ctx: LatticeContext, omega_at, roots: Sequence[Sequence[int]], s0: float, s1: float,
                  samples: int = 64) -> list[WallEvent]:
    """Crossings of root cuts along a path, in parameter order.

    A cut of ``delta`` is where ``Z(delta)`` is a positive multiple of
    ``Z(e)``.  ``side`` is +1 for the left-to-right direction, which is the
    anticlockwise direction around the hole.
    """
    out = []
    for delta in roots:
        for c in alignment_crossings(ctx, omega_at, delta, POINT_CLASS, s0, s1, samples, True):
            if c.positive:
                out.append(WallEvent("geometric_boundary", (MukaiVector(*delta),), c.param, c.side))
    out.sort(key=lambda ev: ev.param)
    _check_collisions(ctx, out)
    return out


def _check_collisions(ctx: LatticeContext, events: Sequence[WallEvent]) -> None:
    for e1, e2 in zip(events, events[1:]):
        if e2.param - e1.param < ctx.tol.wall_param and e1.roots != e2.roots:
            raise WallCollisionError(f"wall collision at parameter {e1.param}; shrink step")


def detect_walls(ctx: LatticeContext, state: WidthState, omega_at, s0: float, s1: float,
                 roots: Sequence[Sequence[int]] = (), samples: int = 64) -> list[WallEvent]:
    """Walls of ``state`` along ``omega_at(s)`` for ``s`` in ``(s0, s1]``.

    For the seed state the walls are the cuts of ``roots``.  Otherwise the
    alignment of each pair of factor classes is scanned: pairs inside A+ give
    plus walls, inside A- minus walls, and across the two sides integral
    walls.
    """
    if state.is_seed:
        return cut_crossings(ctx, omega_at, roots, s0, s1, samples)
    events = []
    pf = [v for v, _ in state.plus_factors]
    mf = [v for v, _ in state.minus_factors]
    pairs = [("plus_wall", a, b) for i, a in enumerate(pf) for b in pf[i + 1:]]
    pairs += [("minus_wall", a, b) for i, a in enumerate(mf) for b in mf[i + 1:]]
    pairs += [("integral_wall", a, b) for a in pf for b in mf]
    for kind, a, b in pairs:
        for c in alignment_crossings(ctx, omega_at, a, b, s0, s1, samples):
            events.append(WallEvent(kind, (a, b), c.param, c.side))
    events.sort(key=lambda ev: ev.param)
    _check_collisions(ctx, events)
    return events


# -- following a path ---------------------------------------------------------


@dataclass
class PathResult:
    state: WidthState
    omega: tuple
    events: list = field(default_factory=list)  # state-changing walls
    letters: list = field(default_factory=list)  # (root, +-1) from cut crossings


def _advance(ctx, state, omega_at, s0, s1, samples):
    for s in np.linspace(s0, s1, samples + 1)[1:]:
        state = refresh(ctx, state, omega_at(s))
    return state


def follow_path(ctx: LatticeContext, state: WidthState, zs: Sequence[complex],
                roots: Sequence[Sequence[int]], samples: int = 64) -> PathResult:
    """Carry ``state`` along the polyline ``zs`` on the section.

    Returns the final state, the wall events that changed it, and one letter
    per crossed cut.  Parameters of events are global: segment ``j`` covers
    ``[j, j+1]``.
    """
    for z in zs:
        ch = in_geometric_chamber(ctx, z)
        if ch.kind != "inside":
            if ch.kind == "on_segment":
                raise NonTransverseCrossingError(f"vertex {z} lies on the cut of {tuple(ch.root)}; perturb path")
            raise WallDataError(f"vertex {z} is not in the upper half-plane")
    res = PathResult(state, tuple(exp_class(ctx, zs[0])))
    for j, (za, zb) in enumerate(zip(zs, zs[1:])):
        za, zb = complex(za), complex(zb)

        def omega_at(s, za=za, zb=zb, j=j):
            return exp_class(ctx, za + (s - j) * (zb - za))

        for ev in cut_crossings(ctx, omega_at, roots, j, j + 1, samples):
            res.letters.append((ev.roots[0], ev.side))
        s_cur = float(j)
        while True:
            evs = [ev for ev in detect_walls(ctx, res.state, omega_at, s_cur, j + 1, roots, samples)
                   if ev.param > s_cur]
            if not evs:
                res.state = _advance(ctx, res.state, omega_at, s_cur, j + 1, samples)
                break
            ev = evs[0]
            nxt = evs[1].param if len(evs) > 1 else j + 1
            after = min(ev.param + 1e-7, 0.5 * (ev.param + nxt))
            before = res.state
            res.state = _advance(ctx, res.state, omega_at, s_cur, ev.param, samples)
            w_after = omega_at(after)
            if ev.kind == "geometric_boundary":
                res.state = cross_geometric_boundary(ctx, res.state, ev.roots[0], w_after)
            elif ev.kind == "integral_wall":
                res.state = cross_integral_wall(ctx, res.state, w_after)
            else:  # never produced by the two-factor model
                raise WallDataError(f"{ev.kind} not supported by the two-factor model")
            if res.state.lattice_key() != before.lattice_key():
                res.events.append(ev)
            s_cur = after
    res.omega = tuple(exp_class(ctx, zs[-1]))
    return res
