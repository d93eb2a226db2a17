"""Words in Z x Free, loop lifting through the cut system, and lattice shadows.

A group element is an even-shift count together with a freely reduced word
in generators ``t_delta`` (one per positive root).  A loop in the punctured
half-plane lifts to the word that records, in order, each crossing of a cut
segment: ``t_delta`` for a left-to-right crossing (the anticlockwise sense
around the hole) and ``t_delta^-1`` for right-to-left.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import LiftError
from .mukai_lattice import (
    LatticeContext,
    MukaiVector,
    apply,
    enumerate_roots,
    identity_matrix,
    reflection_matrix,
)
from .period_domain import in_geometric_chamber

Letter = tuple  # (MukaiVector, +1 or -1)


def reduce_word(letters: Iterable[Letter]) -> tuple:
    """Free reduction with a stack."""
    out: list = []
    for v, e in letters:
        if e not in (1, -1):
            raise ValueError(f"letter exponents must be +-1, got {e}")
        v = MukaiVector(*v)
        if out and out[-1][0] == v and out[-1][1] == -e:
            out.pop()
        else:
            out.append((v, e))
    return tuple(out)


def _is_reduced(word) -> bool:
    return all(not (a[0] == b[0] and a[1] == -b[1]) for a, b in zip(word, word[1:]))


@dataclass(frozen=True)
class GroupElement:
    shift: int = 0  # in units of the even shift [2]
    word: tuple = ()

    def __post_init__(self):
        if not _is_reduced(self.word):
            raise ValueError("word is not freely reduced; use GroupElement.from_letters")

    @classmethod
    def from_letters(cls, letters: Iterable[Letter], shift: int = 0) -> "GroupElement":
        return cls(shift, reduce_word(letters))

    @classmethod
    def generator(cls, delta: Sequence[int], exp: int = 1) -> "GroupElement":
        return cls(0, ((MukaiVector(*delta), exp),))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def is_identity(self) -> bool:
        return self.shift == 0 and not self.word

    def word_json(self) -> list:
        return [{**v.to_json(), "exp": e} for v, e in self.word]

    def to_json(self) -> dict:
        return {"shift": self.shift, "word": self.word_json()}

    @classmethod
    def from_json(cls, obj) -> "GroupElement":
        if isinstance(obj, list):
            obj = {"shift": 0, "word": obj}
        letters = [(MukaiVector.from_json(x), int(x["exp"])) for x in obj["word"]]
        return cls(int(obj["shift"]), tuple(letters))


IDENTITY = GroupElement()


def multiply(g1: GroupElement, g2: GroupElement) -> GroupElement:
    return GroupElement(g1.shift + g2.shift, reduce_word(g1.word + g2.word))


def invert(g: GroupElement) -> GroupElement:
    return GroupElement(-g.shift, tuple((v, -e) for v, e in reversed(g.word)))


# -- polylines and lifting ----------------------------------------------------


@dataclass(frozen=True)
class Polyline:
    """A based polygonal path; ``closed`` joins the last vertex back to the base."""

    base: complex
    vertices: tuple
    closed: bool = True

    @property
    def points(self) -> list[complex]:
        pts = [self.base, *self.vertices]
        if self.closed:
            pts.append(self.base)
        return pts

    @classmethod
    def from_points(cls, pts: Sequence[complex], closed: bool = True) -> "Polyline":
        pts = [complex(p) for p in pts]
        if closed and len(pts) > 1 and pts[-1] == pts[0]:
            pts = pts[:-1]
        return cls(pts[0], tuple(pts[1:]), closed)

    def to_json(self) -> dict:
        return {
            "base": [self.base.real, self.base.imag],
            "vertices": [[p.real, p.imag] for p in self.vertices],
            "closed": self.closed,
        }

    @classmethod
    def from_json(cls, obj) -> "Polyline":
        if isinstance(obj, str):
            obj = json.loads(obj)
        base = complex(*map(float, obj["base"]))
        verts = tuple(complex(*map(float, p)) for p in obj["vertices"])
        return cls(base, verts, bool(obj.get("closed", True)))

    def concat(self, other: "Polyline") -> "Polyline":
        if self.base != other.base:
            raise LiftError("loops must share a base point")
        return Polyline(self.base, self.vertices + (self.base,) + other.vertices, True)


class CutSystem:
    """The vertical cuts of all positive roots in a box, sorted by real part."""

    def __init__(self, ctx: LatticeContext, r_max: int, d_max: int):
        self.ctx, self.r_max, self.d_max = ctx, r_max, d_max
        cuts = []
        for v in enumerate_roots(ctx, r_max, d_max):
            cuts.append((v.d / v.r, 1.0 / (v.r * math.sqrt(ctx.m)), v))
        cuts.sort(key=lambda c: c[0])
        self.cuts = cuts
        self.xs = [c[0] for c in cuts]

    def covers(self, pts: Sequence[complex]) -> bool:
        """Every root whose cut some point of the path can reach lies in the box.

        A cut of a root with rank ``r`` only reaches height ``1/(r sqrt m)``
        and sits at ``|b| = |d|/r``.
        """
        t_min = min(p.imag for p in pts)
        b_max = max(abs(p.real) for p in pts)
        r_need = math.floor(1 / (t_min * math.sqrt(self.ctx.m)))
        if r_need > self.r_max:
            return False
        return math.floor(b_max * max(r_need, 1)) <= self.d_max

    def crossings(self, a: complex, b: complex, tol: float) -> list[Letter]:
        if a.real == b.real:
            return []
        lo, hi = sorted((a.real, b.real))
        i0 = bisect.bisect_right(self.xs, lo)
        i1 = bisect.bisect_left(self.xs, hi)
        sign = 1 if b.real > a.real else -1
        out = []
        for x, h, v in self.cuts[i0:i1]:
            s = (x - a.real) / (b.real - a.real)
            t = a.imag + s * (b.imag - a.imag)
            if abs(t - h) <= tol:
                raise LiftError(f"path passes within {tol} of the hole of {tuple(v)}")
            if t < h:
                out.append((s, v, sign))
        out.sort(key=lambda c: c[0])
        return [(v, e) for _, v, e in out]


def lift_path(ctx: LatticeContext, pts: Sequence[complex], r_max: int, d_max: int,
              tol: float | None = None, cuts: CutSystem | None = None) -> GroupElement:
    """Word of cut crossings along an open polyline (no base-point checks)."""
    tol = ctx.tol.closure if tol is None else tol
    cuts = cuts or CutSystem(ctx, r_max, d_max)
    pts = [complex(p) for p in pts]
    if any(p.imag <= 0 for p in pts):
        raise LiftError("polyline leaves the upper half-plane")
    if not cuts.covers(pts):
        raise LiftError("polyline reaches cuts of roots outside the enumeration box")
    for p in pts:
        ch = in_geometric_chamber(ctx, p, r_max, d_max)
        if ch.kind == "on_segment":
            raise LiftError(f"vertex {p} lies on the cut of {tuple(ch.root)}")
    letters = []
    for a, b in zip(pts, pts[1:]):
        if a == b:
            raise LiftError(f"repeated vertex {a}")
        letters.extend(cuts.crossings(a, b, tol))
    return GroupElement.from_letters(letters)


def lift_loop(ctx: LatticeContext, loop: Polyline, r_max: int, d_max: int,
              tol: float | None = None) -> GroupElement:
    """Deck transformation word of a closed loop based in the chamber."""
    if not loop.closed:
        raise LiftError("loop is not closed")
    if not in_geometric_chamber(ctx, loop.base, r_max, d_max).inside:
        raise LiftError(f"base point {loop.base} is not in the geometric chamber")
    return lift_path(ctx, loop.points, r_max, d_max, tol)


# -- lattice shadows ----------------------------------------------------------


def twist_matrix(ctx: LatticeContext, delta: Sequence[int]) -> np.ndarray:
    """Action of the spherical twist on N(X): the reflection in ``delta``."""
    return reflection_matrix(ctx, delta)


def shift_matrix(k: int) -> np.ndarray:
    """Action of ``[k]``: multiplication by ``(-1)^k``."""
    return identity_matrix() * (-1 if k % 2 else 1)


def act_on_lattice(ctx: LatticeContext, g: GroupElement) -> np.ndarray:
    """Product of the letter actions; each ``t_delta`` acts as a squared twist."""
    mat = shift_matrix(2 * g.shift)
    for v, _ in g.word:
        tw = twist_matrix(ctx, v)
        mat = mat.dot(tw).dot(tw)
    return mat


def deck_action_on_chamber(ctx: LatticeContext, g: GroupElement, tag: tuple = ()) -> tuple:
    """Left multiplication on chamber tags (reduced words)."""
    return reduce_word(g.word + tuple(tag))


def act_on_vector(ctx: LatticeContext, g: GroupElement, v: Sequence[int]) -> MukaiVector:
    return apply(act_on_lattice(ctx, g), v)
