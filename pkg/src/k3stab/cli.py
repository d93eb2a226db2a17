"""Command-line front end.

Every subcommand writes to ``--out`` (or stdout).  Failures print one JSON
object ``{"error": ..., "message": ...}`` on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from importlib import resources

from .errors import K3StabError
from .flow_engine import FlowConfig, flow_to_integer, retract, seed_for_width
from .hn_state import follow_path, initial_state_geometric
from .monodromy import Polyline, lift_loop
from .mukai_lattice import POINT_CLASS, LatticeContext, Tolerances, enumerate_roots
from .period_domain import holes, holes_to_json

# SVG defaults (documented in the README)
SVG_WIDTH = 800
SVG_MARGIN = 30
SVG_BACKGROUND = "#ffffff"
SVG_CHAMBER = "#eaf1fb"
SVG_AXIS = "#444444"
SVG_CUT = "#c0392b"
SVG_HOLE = "#111111"
SVG_FONT = 11


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, 2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _parse_path(text: str) -> list[complex]:
    """``"b,t;b,t;..."`` to a list of complex numbers."""
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            b, t = chunk.split(",")
            pts.append(complex(float(b), float(t)))
    if not pts:
        raise argparse.ArgumentTypeError("empty path")
    return pts


def _parse_window(text: str):
    vals = [float(x) for x in text.split(",")]
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("window must be x0,x1,y0,y1 with x0<x1 and y0<y1")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="k3stab", description="Mukai lattice, holes, flows and monodromy for Picard rank one K3 surfaces")
    p.add_argument("--m", type=_positive_int, default=1, help="degree datum, H^2 = 2m")
    p.add_argument("--tol", type=_positive_float, default=None,
                   help="geometric tolerance near cuts and holes (default 1e-7)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in ("roots", "holes"):
        sp = sub.add_parser(name, help=f"list {name} in a box")
        sp.add_argument("--rmax", type=_positive_int, default=5)
        sp.add_argument("--dmax", type=_positive_int, default=5)

    sp = sub.add_parser("chamber", help="SVG of the half-plane with holes and cuts")
    sp.add_argument("--window", type=_parse_window, default=[-2.0, 2.0, 0.0, 1.5])
    sp.add_argument("--rmax", type=_positive_int, default=8)
    sp.add_argument("--dmax", type=_positive_int, default=None, help="default: enough to fill the window")
    sp.add_argument("--width", type=_positive_int, default=SVG_WIDTH)

    sp = sub.add_parser("flow", help="JSON-lines trace of the width flow")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, default=None, help="start at this width next to the cut of (1,0,1)")
    g.add_argument("--path", type=_parse_path, default=None, help='"b,t;b,t;..." starting in the chamber')
    sp.add_argument("--h", type=_positive_float, default=1e-3)
    sp.add_argument("--rmax", type=_positive_int, default=6)
    sp.add_argument("--dmax", type=_positive_int, default=6)

    sp = sub.add_parser("retract", help="follow a path out of the chamber and flow back")
    sp.add_argument("--path", type=_parse_path, required=True, help='"b,t;b,t;..." starting in the chamber')
    sp.add_argument("--h", type=_positive_float, default=1e-3)
    sp.add_argument("--rmax", type=_positive_int, default=6)
    sp.add_argument("--dmax", type=_positive_int, default=6)

    sp = sub.add_parser("lift", help="deck transformation word of a based loop")
    sp.add_argument("--loop", default=None, help="polyline JSON file (default: bundled loop around i)")
    sp.add_argument("--rmax", type=_positive_int, default=5)
    sp.add_argument("--dmax", type=_positive_int, default=5)

    # --out is also accepted after the subcommand
    for sp in sub.choices.values():
        sp.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    return p


# -- commands -----------------------------------------------------------------


def cmd_roots(ctx, args) -> str:
    return json.dumps([v.to_json() for v in enumerate_roots(ctx, args.rmax, args.dmax)]) + "\n"


def cmd_holes(ctx, args) -> str:
    return json.dumps(holes_to_json(ctx, holes(ctx, args.rmax, args.dmax))) + "\n"


def chamber_svg(ctx, window, r_max, d_max=None, width=SVG_WIDTH) -> str:
    """The window of the half-plane with every cut and hole of the box."""
    x0, x1, y0, y1 = window
    if d_max is None:
        d_max = max(1, math.ceil(max(abs(x0), abs(x1)) * r_max))
    sx = (width - 2 * SVG_MARGIN) / (x1 - x0)
    height = int(round((y1 - y0) * sx)) + 2 * SVG_MARGIN

    def px(b, t):
        return SVG_MARGIN + (b - x0) * sx, height - SVG_MARGIN - (t - y0) * sx

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="{SVG_BACKGROUND}"/>',
    ]
    ax0, ay0 = px(x0, max(y0, 0.0))
    ax1, ay1 = px(x1, y1)
    out.append(f'<rect x="{ax0:.2f}" y="{ay1:.2f}" width="{ax1 - ax0:.2f}" height="{ay0 - ay1:.2f}" '
               f'fill="{SVG_CHAMBER}"/>')
    if y0 <= 0 <= y1:
        out.append(f'<line x1="{ax0:.2f}" y1="{ay0:.2f}" x2="{ax1:.2f}" y2="{ay0:.2f}" '
                   f'stroke="{SVG_AXIS}" stroke-width="1"/>')
    for k in range(math.ceil(x0), math.floor(x1) + 1):
        tx, ty = px(k, max(y0, 0.0))
        out.append(f'<text x="{tx:.2f}" y="{ty + 14:.2f}" font-size="{SVG_FONT}" '
                   f'text-anchor="middle" fill="{SVG_AXIS}">{k}</text>')
    for h in holes(ctx, r_max, d_max):
        b, t = float(h.real), h.height
        if not (x0 <= b <= x1) or t < y0:
            continue
        bx, by = px(b, max(y0, 0.0))
        hx, hy = px(b, min(t, y1))
        out.append(f'<line x1="{bx:.2f}" y1="{by:.2f}" x2="{hx:.2f}" y2="{hy:.2f}" '
                   f'stroke="{SVG_CUT}" stroke-width="{max(0.4, 1.5 / math.sqrt(h.r)):.2f}" '
                   f'data-root="{h.root.r},{h.root.d},{h.root.s}"/>')
        if t <= y1:
            out.append(f'<circle cx="{hx:.2f}" cy="{hy:.2f}" r="{max(0.8, 3.0 / math.sqrt(h.r)):.2f}" '
                       f'fill="{SVG_HOLE}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_chamber(ctx, args) -> str:
    return chamber_svg(ctx, args.window, args.rmax, args.dmax, args.width)


def cmd_flow(ctx, args) -> str:
    cfg = FlowConfig(h=args.h)
    if args.path is not None:
        zs = args.path
        st = initial_state_geometric(ctx, POINT_CLASS, zs[0])
        res = follow_path(ctx, st, zs, enumerate_roots(ctx, args.rmax, args.dmax))
        state, omega = res.state, res.omega
    else:
        theta = 0.3 if args.theta is None else args.theta
        state, omega, _ = seed_for_width(ctx, theta)
    tr = flow_to_integer(ctx, state, omega, cfg)
    if not tr.ok:
        raise K3StabError(f"{tr.status}: {tr.message}")
    return tr.to_jsonl()


def cmd_retract(ctx, args) -> str:
    zs = args.path
    res = retract(ctx, zs[0], zs[1:], args.rmax, args.dmax, FlowConfig(h=args.h))
    lines = [tr.to_jsonl() for tr in res.traces]
    summary = {
        "type": "retract",
        "endpoint": [float(res.endpoint.b), float(res.endpoint.t)],
        "word": res.word.to_json(),
        "events": [ev.to_json() for ev in res.events],
        "state": res.state.to_json(),
    }
    return "".join(lines) + json.dumps(summary) + "\n"


def cmd_lift(ctx, args) -> str:
    if args.loop is None:
        text = resources.files("k3stab").joinpath("data/loop_around_i.json").read_text()
    else:
        with open(args.loop) as fh:
            text = fh.read()
    loop = Polyline.from_json(json.loads(text))
    g = lift_loop(ctx, loop, args.rmax, args.dmax)
    return json.dumps(g.word_json()) + "\n"


COMMANDS = {
    "roots": cmd_roots,
    "holes": cmd_holes,
    "chamber": cmd_chamber,
    "flow": cmd_flow,
    "retract": cmd_retract,
    "lift": cmd_lift,
}


def _glue_values(argv):
    """Join ``--window -2,...`` into ``--window=-2,...`` so argparse does not see a flag."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--window", "--path") and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_values(argv))
    tol = Tolerances() if args.tol is None else replace(Tolerances(), closure=args.tol)
    try:
        ctx = LatticeContext(args.m, tol)
        text = COMMANDS[args.command](ctx, args)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (K3StabError, ValueError, OSError, KeyError) as exc:
        _fail(type(exc).__name__, f"{args.command}: {exc}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
