"""Width-decreasing flow on reduced central charges.

The field is ``dW/dt = eps * zeta * Theta(W)`` with
``zeta = i * exp(i*pi*(phi+ + phi-)/2)`` and ``eps = +-1`` the cone component
of ``v+``.  Along it ``Z(v) `` moves by ``eps*zeta*(Theta, v)``, which pulls the
phases of ``A+`` and ``A-`` together, and ``Theta`` moves at unit speed in the
hyperbolic plane.

The inner loop runs on plain complex tuples; one RK4 step plus projection
costs a few tens of microseconds.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from scipy.optimize import brentq

from .errors import DegenerateError, HoleHitError, K3StabError, StepTooLargeError, WallDataError
from .hn_state import (
    PathResult,
    WallEvent,
    WidthState,
    follow_path,
    epsilon,
    initial_state_geometric,
    phase_of_value,
    refresh,
    seed_state,
    width,
)
from .monodromy import GroupElement
from .mukai_lattice import POINT_CLASS, LatticeContext, MukaiVector, cone_component, enumerate_roots
from .period_domain import OmegaVector, TubePoint, exp_class, is_degenerate, recover_z


@dataclass(frozen=True)
class FlowConfig:
    h: float = 1e-3
    proj_tol: float = 1e-15  # projection residual relative to |W|^2
    proj_iter: int = 10
    max_steps: int = 200_000
    wall_tol: float = 1e-10  # |w - n| at arrival

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")


# -- kernels ------------------------------------------------------------------


def _pair(m, a, b):
    return 2 * m * a[1] * b[1] - a[0] * b[2] - b[0] * a[2]


def _theta(m, w):
    """Theta(W) and d for a complex triple ``w``."""
    xr, xd, xs = w[0].real, w[1].real, w[2].real
    yr, yd, ys = w[0].imag, w[1].imag, w[2].imag
    c0 = xd * ys - xs * yd
    c1 = xs * yr - xr * ys
    c2 = xr * yd - xd * yr
    u0, u1, u2 = -c2, c1 / (2 * m), -c0
    uu = 2 * m * u1 * u1 - 2 * u0 * u2
    d = m * (xd * xd + yd * yd) - (xr * xs + yr * ys)
    if not (uu < 0 and d > 0):
        raise DegenerateError("W is not a positive reduced vector")
    k = math.sqrt(d / -uu)
    if u0 + u2 < 0:
        k = -k
    return (k * u0, k * u1, k * u2), d


def _zeta(php, phm):
    return 1j * cmath.exp(0.5j * math.pi * (php + phm))


class _Field:
    """Vector field for a fixed pair (v+, v-) with branch tracking of the phases."""

    def __init__(self, m, eps, vp, vm):
        self.m = m
        self.eps = eps
        self.vp = tuple(float(c) for c in vp)
        self.vm = tuple(float(c) for c in vm)

    def phases(self, w, pp, pm):
        zp = _pair(self.m, w, self.vp)
        zm = _pair(self.m, w, self.vm)
        return phase_of_value(zp, pp), phase_of_value(zm, pm)

    def __call__(self, w, pp, pm):
        pp, pm = self.phases(w, pp, pm)
        th, _ = _theta(self.m, w)
        c = self.eps * _zeta(pp, pm)
        return (c * th[0], c * th[1], c * th[2])


def _project(m, w, d0, tol, iters):
    """Gauss-Newton (minimum norm) projection of ``w`` onto the reduced quadric.

    Constraints on ``X = Re w``, ``Y = Im w``: ``(X,X) = d0``, ``(Y,Y) = d0``,
    ``(X,Y) = 0``.  With ``gX = G X`` the Jacobian rows are ``(2gX, 0)``,
    ``(0, 2gY)`` and ``(gY, gX)``.
    """
    x = [w[0].real, w[1].real, w[2].real]
    y = [w[0].imag, w[1].imag, w[2].imag]
    prev = math.inf
    for _ in range(iters):
        g1 = _pair(m, x, x) - d0
        g2 = _pair(m, y, y) - d0
        g3 = _pair(m, x, y)
        # rounding in the pairings is relative to |x|^2 + |y|^2, not to d0
        scale = d0 + sum(c * c for c in x) + sum(c * c for c in y)
        res = abs(g1) + abs(g2) + abs(g3)
        if res <= tol * scale or (res >= 0.5 * prev and res <= 1e3 * tol * scale):
            return (complex(x[0], y[0]), complex(x[1], y[1]), complex(x[2], y[2]))
        prev = res
        gx = (-x[2], 2 * m * x[1], -x[0])
        gy = (-y[2], 2 * m * y[1], -y[0])
        nx = gx[0] ** 2 + gx[1] ** 2 + gx[2] ** 2
        ny = gy[0] ** 2 + gy[1] ** 2 + gy[2] ** 2
        cxy = gx[0] * gy[0] + gx[1] * gy[1] + gx[2] * gy[2]
        # A = J J^T = [[4nx, 0, 2c], [0, 4ny, 2c], [2c, 2c, nx+ny]]
        a11, a22, a13, a33 = 4 * nx, 4 * ny, 2 * cxy, nx + ny
        # eliminate l1, l2 from the first two rows, solve the third for l3
        l3 = (g3 - a13 * (g1 / a11 + g2 / a22)) / (a33 - a13 * a13 * (1 / a11 + 1 / a22))
        l1 = (g1 - a13 * l3) / a11
        l2 = (g2 - a13 * l3) / a22
        for i in range(3):
            x[i] -= 2 * l1 * gx[i] + l3 * gy[i]
            y[i] -= 2 * l2 * gy[i] + l3 * gx[i]
    raise DegenerateError("projection onto the reduced quadric did not converge")


def _rk4(fld, w, pp, pm, h, d0, cfg):
    k1 = fld(w, pp, pm)
    w2 = tuple(a + 0.5 * h * b for a, b in zip(w, k1))
    k2 = fld(w2, pp, pm)
    w3 = tuple(a + 0.5 * h * b for a, b in zip(w, k2))
    k3 = fld(w3, pp, pm)
    w4 = tuple(a + h * b for a, b in zip(w, k3))
    k4 = fld(w4, pp, pm)
    wn = tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(w, k1, k2, k3, k4))
    wn = _project(fld.m, wn, d0, cfg.proj_tol, cfg.proj_iter)
    pp, pm = fld.phases(wn, pp, pm)
    return wn, pp, pm


def _field_for(ctx: LatticeContext, state: WidthState) -> _Field:
    return _Field(ctx.m, cone_component(ctx, state.vplus).sign, state.vplus, state.vminus)


# -- public single-step API ---------------------------------------------------


def zeta(state: WidthState) -> complex:
    """``i * exp(i*pi*(phi+ + phi-)/2)`` for a state of non-integral width."""
    gap = state.phiplus - state.phiminus
    if gap == 0 or gap == 1:
        raise WallDataError("zeta is undefined at integral width")
    return _zeta(state.phiplus, state.phiminus)


def vector_field(ctx: LatticeContext, state: WidthState, omega: Sequence[complex]) -> OmegaVector:
    """``eps * zeta * Theta(W)`` with phases refreshed at ``omega``."""
    state = refresh(ctx, state, omega)
    zeta(state)
    return OmegaVector(*_field_for(ctx, state)(tuple(complex(c) for c in omega), state.phiplus, state.phiminus))


def step(ctx: LatticeContext, state: WidthState, omega: Sequence[complex], h: float,
         config: Optional[FlowConfig] = None):
    """One RK4 step of length ``h`` (negative runs the flow backwards) plus projection."""
    cfg = config or FlowConfig()
    state = refresh(ctx, state, omega)
    w = tuple(complex(c) for c in omega)
    d0 = _theta(ctx.m, w)[1]
    wn, pp, pm = _rk4(_field_for(ctx, state), w, state.phiplus, state.phiminus, h, d0, cfg)
    return replace(state, phiplus=pp, phiminus=pm), OmegaVector(*wn)


# -- traces -------------------------------------------------------------------


@dataclass(frozen=True)
class FlowRecord:
    t: float
    omega: OmegaVector
    phiplus: float
    phiminus: float
    width: float
    dwdt: float  # exact derivative of the width along the field
    d_residual: float  # relative drift of (W, conj W)
    quadric_residual: float  # |(W, W)| / (W, conj W)
    theta_speed: float  # hyperbolic distance to the previous Theta over elapsed time

    def to_json(self) -> dict:
        return {
            "type": "sample",
            "t": self.t,
            "omega": self.omega.to_json(),
            "phiplus": self.phiplus,
            "phiminus": self.phiminus,
            "width": self.width,
            "dwdt": self.dwdt,
            "d_residual": self.d_residual,
            "quadric_residual": self.quadric_residual,
            "theta_speed": self.theta_speed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FlowRecord":
        return cls(obj["t"], OmegaVector.from_json(obj["omega"]), obj["phiplus"], obj["phiminus"],
                   obj["width"], obj["dwdt"], obj["d_residual"], obj["quadric_residual"],
                   obj["theta_speed"])


@dataclass
class FlowTrace:
    state: WidthState  # state at the start
    records: list = field(default_factory=list)
    status: str = "running"  # reached_integral_wall, reached_width_zero, error(hole), error(step)
    message: str = ""
    final_state: Optional[WidthState] = None

    @property
    def ok(self) -> bool:
        return self.status in ("reached_integral_wall", "reached_width_zero")

    @property
    def duration(self) -> float:
        return self.records[-1].t if self.records else 0.0

    def summary(self) -> dict:
        return {
            "type": "summary",
            "status": self.status,
            "message": self.message,
            "samples": len(self.records),
            "duration": self.duration,
            "state": self.state.to_json(),
            "final_state": None if self.final_state is None else self.final_state.to_json(),
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_json()) for r in self.records]
        lines.append(json.dumps(self.summary()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "FlowTrace":
        recs, summ = [], None
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj["type"] == "sample":
                recs.append(FlowRecord.from_json(obj))
            else:
                summ = obj
        if summ is None:
            raise ValueError("trace has no summary record")
        fs = summ["final_state"]
        return cls(WidthState.from_json(summ["state"]), recs, summ["status"], summ["message"],
                   None if fs is None else WidthState.from_json(fs))


def _dwdt(fld, w, pp, pm):
    """Exact ``d(phi+ - phi-)/dt``: ``dZ(v)/dt = eps*zeta*(Theta, v)``."""
    th, _ = _theta(fld.m, w)
    c = fld.eps * _zeta(pp, pm)
    out = 0.0
    for v, sg in ((fld.vp, 1), (fld.vm, -1)):
        z = _pair(fld.m, w, v)
        dz = c * _pair(fld.m, th, v)
        out += sg * (dz / z).imag / math.pi
    return out


def _unit_theta(m, w):
    th, d = _theta(m, w)
    s = 1 / math.sqrt(d)
    return (th[0] * s, th[1] * s, th[2] * s)


def _hyp(m, u1, u2):
    dl = (u1[0] - u2[0], u1[1] - u2[1], u1[2] - u2[2])
    return 2 * math.asinh(0.5 * math.sqrt(max(_pair(m, dl, dl), 0.0)))


def flow_to_integer(ctx: LatticeContext, state: WidthState, omega: Sequence[complex],
                    config: Optional[FlowConfig] = None) -> FlowTrace:
    """Integrate until the width reaches ``n = floor(width)``.

    The last step is shortened with Brent's method so that the final sample
    satisfies ``|w - n| < wall_tol``.  Holes or step failures end the trace
    with an error status instead of raising, so the partial trace can be
    inspected.
    """
    cfg = config or FlowConfig()
    m = ctx.m
    state = refresh(ctx, state, omega)
    trace = FlowTrace(state)
    n = state.nint
    if state.is_seed or state.phiplus - state.phiminus <= 0:
        raise WallDataError("flow needs a state of positive non-integral width")
    fld = _field_for(ctx, state)
    w = tuple(complex(c) for c in omega)
    d0 = _theta(m, w)[1]
    pp, pm = state.phiplus, state.phiminus

    def record(t, w, pp, pm, prev_u, dt):
        d = _theta(m, w)[1]
        u = _unit_theta(m, w)
        speed = _hyp(m, prev_u, u) / dt if prev_u is not None and dt > 0 else 1.0
        trace.records.append(FlowRecord(
            t, OmegaVector(*w), pp, pm, n + pp - pm, _dwdt(fld, w, pp, pm),
            abs(d - d0) / d0, abs(_pair(m, w, w)) / (2 * d), speed))
        return u

    t = 0.0
    u = record(t, w, pp, pm, None, 0.0)
    try:
        for _ in range(cfg.max_steps):
            wn, ppn, pmn = _rk4(fld, w, pp, pm, cfg.h, d0, cfg)
            if ppn - pmn > cfg.wall_tol:
                t += cfg.h
                w, pp, pm = wn, ppn, pmn
                u = record(t, w, pp, pm, u, cfg.h)
                continue

            def gap(hh):
                _, a, b = _rk4(fld, w, pp, pm, hh, d0, cfg)
                return a - b

            if ppn - pmn > 0:
                hs = cfg.h  # already within wall_tol
            else:
                hs = brentq(gap, 0.0, cfg.h, xtol=1e-16)
            w, pp, pm = _rk4(fld, w, pp, pm, hs, d0, cfg)
            t += hs
            record(t, w, pp, pm, u, hs)
            if abs(pp - pm) >= cfg.wall_tol:
                raise StepTooLargeError(f"wall arrival missed by {pp - pm:.3e}")
            break
        else:
            raise StepTooLargeError(f"no wall reached after {cfg.max_steps} steps")
    except (HoleHitError, DegenerateError) as exc:
        trace.status, trace.message = "error(hole)", str(exc)
        return trace
    except StepTooLargeError as exc:
        trace.status, trace.message = "error(step)", str(exc)
        return trace
    hole = is_degenerate(ctx, w)
    if hole is not None:
        trace.status = "error(hole)"
        trace.message = f"endpoint is degenerate for root {tuple(hole)}"
        return trace
    trace.status = "reached_width_zero" if n == 0 else "reached_integral_wall"
    trace.final_state = replace(state, phiplus=pp, phiminus=pm)
    return trace


def theta_ode_residual(ctx: LatticeContext, trace: FlowTrace) -> float:
    """Largest gap between central differences of Theta and ``eps*(Re zeta Re W + Im zeta Im W)``.

    Measured relative to ``1 + |rhs|`` at interior samples with equal spacing
    on both sides; the shortened last step is skipped.
    """
    m = ctx.m
    eps = epsilon(ctx, trace.state)
    recs = trace.records
    worst = 0.0
    for k in range(1, len(recs) - 1):
        h0, h1 = recs[k].t - recs[k - 1].t, recs[k + 1].t - recs[k].t
        if abs(h0 - h1) > 1e-12 * max(h0, h1):
            continue
        a, b = _theta(m, tuple(recs[k - 1].omega))[0], _theta(m, tuple(recs[k + 1].omega))[0]
        z = _zeta(recs[k].phiplus, recs[k].phiminus)
        w = recs[k].omega
        for i in range(3):
            rhs = eps * (z.real * w[i].real + z.imag * w[i].imag)
            fd = (b[i] - a[i]) / (h0 + h1)
            worst = max(worst, abs(fd - rhs) / (1 + abs(rhs)))
    return worst


# -- seeds --------------------------------------------------------------------


def seed_path(ctx: LatticeContext, theta: float, b1: Optional[float] = None) -> list[complex]:
    """A path from the chamber across the cut of ``(1,0,1)`` ending at width ``theta``.

    It starts left of the cut at height ``t_c = 1/(2 sqrt m)``, crosses to
    ``b1 + i t_c`` and then moves down the vertical line until the width of
    the point class equals ``theta``.  ``b1`` defaults to ``theta/3``
    (clipped to ``[0.02, 0.3]``) and is halved until the width at ``t_c``
    is below ``theta``.
    """
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    tc = 0.5 / math.sqrt(ctx.m)
    b1 = min(max(theta / 3, 0.02), 0.3) if b1 is None else b1
    start = complex(-0.05, tc)
    roots = enumerate_roots(ctx, 2, 2)
    seed = initial_state_geometric(ctx, POINT_CLASS, start)
    for _ in range(60):
        corner = complex(b1, tc)
        res = follow_path(ctx, seed, [start, corner], roots)
        st = res.state
        if width(ctx, st, res.omega) < theta:
            break
        b1 /= 2  # the corner itself is already too wide
    else:
        raise ValueError(f"width {theta} too small to seed")
    # walk down on a geometric grid until the width passes theta
    ts = [tc * (0.995 ** k) for k in range(1, 2000)]
    prev_t, prev_st = tc, st
    for tt in ts:
        cur = refresh(ctx, prev_st, exp_class(ctx, complex(b1, tt)))
        if width(ctx, cur, exp_class(ctx, complex(b1, tt))) >= theta:
            break
        prev_t, prev_st = tt, cur
    else:
        raise ValueError(f"width {theta} not reached below b1={b1}")

    def f(tt):
        return width(ctx, prev_st, exp_class(ctx, complex(b1, tt))) - theta

    t_theta = brentq(f, tt, prev_t, xtol=1e-15)
    return [start, corner, complex(b1, t_theta)]


def seed_for_width(ctx: LatticeContext, theta: float, b1: Optional[float] = None):
    """``(state, omega, path)`` at the end of :func:`seed_path`."""
    zs = seed_path(ctx, theta, b1)
    res = follow_path(ctx, initial_state_geometric(ctx, POINT_CLASS, zs[0]), zs, enumerate_roots(ctx, 2, 2))
    return res.state, res.omega, zs


# -- retraction ---------------------------------------------------------------


def flow_letters(ctx: LatticeContext, omegas: Sequence[Sequence[complex]], roots: Sequence[Sequence[int]]):
    """Cut crossings between consecutive charges, as ``(root, +-1)`` letters.

    Uses the same alignment function as the path code: ``Im Z(delta) conj Z(e)``
    changes sign while ``Re Z(delta) conj Z(e) > 0``.
    """
    import numpy as np

    if len(omegas) < 2 or not roots:
        return []
    W = np.array([[complex(c) for c in w] for w in omegas])
    R = np.array([[float(c) for c in v] for v in roots])
    m = ctx.m
    zd = 2 * m * np.outer(W[:, 1], R[:, 1]) - np.outer(W[:, 0], R[:, 2]) - np.outer(W[:, 2], R[:, 0])
    ze = -W[:, 0]
    al = zd * np.conj(ze)[:, None]
    sg = np.sign(al.imag)
    out = []
    for k in range(len(omegas) - 1):
        ch = np.nonzero((sg[k] != sg[k + 1]) & (sg[k] != 0))[0]
        hits = []
        for j in ch:
            if sg[k + 1, j] == 0 and k + 2 < len(omegas) and sg[k + 2, j] == sg[k, j]:
                continue
            if al[k, j].real > 0 and al[k + 1, j].real > 0:
                frac = al[k, j].imag / (al[k, j].imag - al[k + 1, j].imag)
                hits.append((frac, MukaiVector(*roots[j]), 1 if sg[k, j] < 0 else -1))
        hits.sort(key=lambda x: x[0])
        out.extend((v, e) for _, v, e in hits)
    return out


@dataclass
class RetractResult:
    endpoint: TubePoint
    state: WidthState
    events: list
    word: GroupElement
    path: PathResult
    traces: list
    path_letters: list
    flow_letters: list
    zs: list  # the input path, starting at z_start

    def based_loop(self, ctx: LatticeContext) -> list[complex]:
        """Closed loop matching the retraction: path, then flow, then back over the top.

        The on-cut endpoint of the flow is left out; from the sample before it
        the loop rises vertically above every hole, moves across and comes
        back down to the start.
        """
        pts = list(self.zs)
        for tr in self.traces:
            pts.extend(recover_z(ctx, r.omega).z for r in tr.records[1:-1])
        top = max(1 / math.sqrt(ctx.m), max(p.imag for p in pts)) + 1.0
        last, base = pts[-1], pts[0]
        pts += [complex(last.real, top), complex(base.real, top), base]
        return pts


def retract(ctx: LatticeContext, z_start, path_prefix: Sequence = (), r_max: int = 6, d_max: int = 6,
            config: Optional[FlowConfig] = None, samples: int = 64) -> RetractResult:
    """Follow a path out of the chamber, then flow back to width zero.

    Letters are collected for every cut of a root in the box crossed by the
    path or by the flow.  Integral walls at positive width would need factor
    data the two-factor model does not carry and raise WallDataError.
    """
    roots = enumerate_roots(ctx, r_max, d_max)
    z0 = z_start.z if isinstance(z_start, TubePoint) else complex(z_start)
    zs = [z0] + [p.z if isinstance(p, TubePoint) else complex(p) for p in path_prefix]
    state = initial_state_geometric(ctx, POINT_CLASS, z0)
    pr = follow_path(ctx, state, zs, roots, samples)
    state, omega = pr.state, pr.omega
    events = list(pr.events)
    traces, fl = [], []
    t_total = float(len(zs) - 1)
    while not state.is_seed:
        gap = state.phiplus - state.phiminus
        if gap > 0:
            tr = flow_to_integer(ctx, state, omega, config)
            if not tr.ok:
                raise K3StabError(f"flow failed: {tr.status}: {tr.message}")
            traces.append(tr)
            fl.extend(flow_letters(ctx, [r.omega for r in tr.records[:-1]], roots))
            t_total += tr.duration
            events.append(WallEvent("integral_wall", (state.vplus, state.vminus), t_total, -1))
            state, omega = tr.final_state, tuple(tr.records[-1].omega)
        if state.nint != 0:
            raise WallDataError("integral wall at positive width: factor data not determined by history")
        state = seed_state(ctx, omega, state.phiplus)
    endpoint = recover_z(ctx, omega)
    word = GroupElement.from_letters(list(pr.letters) + fl)
    return RetractResult(endpoint, state, events, word, pr, traces, list(pr.letters), fl, zs)
