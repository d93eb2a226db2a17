import math
import random

import pytest

from k3stab.errors import (
    HoleHitError,
    NonTransverseCrossingError,
    StepTooLargeError,
    WallCollisionError,
    WallDataError,
)
from k3stab.hn_state import (
    WallEvent,
    WidthState,
    _check_collisions,
    alignment_crossings,
    check_invariants,
    cross_geometric_boundary,
    cross_integral_wall,
    cut_crossings,
    detect_walls,
    epsilon,
    follow_path,
    initial_state_geometric,
    phase,
    refresh,
    seed_state,
    split_classes,
    width,
)
from k3stab.mukai_lattice import POINT_CLASS, Cone, LatticeContext, MukaiVector, cone_component, enumerate_roots, pair
from k3stab.period_domain import central_charge, exp_class

C1 = LatticeContext(1)
E = POINT_CLASS
ROOTS = enumerate_roots(C1, 4, 4)


def test_phase_examples():
    w = exp_class(C1, 2j)
    assert phase(C1, w, E, 1.0) == 1.0
    # Z((0,0,-1)) = 1 > 0
    assert phase(C1, w, (0, 0, -1), 0.0) == 0.0
    assert phase(C1, w, E, 3.0) == 3.0
    with pytest.raises(HoleHitError):
        phase(C1, exp_class(C1, 1j), (1, 0, 1), 1.0)
    with pytest.raises(StepTooLargeError):
        phase(C1, w, E, 0.4)


def test_initial_state():
    st = initial_state_geometric(C1, E, 2j)
    assert width(C1, st, exp_class(C1, 2j)) == 0
    assert st.plus_factors == ((E, 1),) and st.is_seed
    with pytest.raises(WallDataError):
        initial_state_geometric(C1, E, 0.5j)
    with pytest.raises(WallDataError):
        initial_state_geometric(C1, (1, 0, 1), 2j)


def _just_past(z_cut, dz=1e-4):
    return exp_class(C1, z_cut + dz)


def test_cross_geometric_boundary_examples():
    st = initial_state_geometric(C1, E, -0.1 + 0.5j)
    st = refresh(C1, st, exp_class(C1, 0.5j))
    new = cross_geometric_boundary(C1, st, (1, 0, 1), _just_past(0.5j))
    facs = {new.plus_factors[0], new.minus_factors[0]}
    assert facs == {((1, 0, 1), 1), ((-1, 0, 0), 1)}
    st2 = refresh(C1, initial_state_geometric(C1, E, 0.4 + 0.3j), exp_class(C1, 0.5 + 0.3j))
    new2 = cross_geometric_boundary(C1, st2, (2, 1, 1), exp_class(C1, 0.5001 + 0.3j))
    facs2 = {new2.plus_factors[0], new2.minus_factors[0]}
    assert facs2 == {((2, 1, 1), 2), ((-4, -2, -1), 1)}
    with pytest.raises(WallDataError):
        cross_geometric_boundary(C1, new, (1, 0, 1), _just_past(0.5j))
    with pytest.raises(WallDataError):
        cross_geometric_boundary(C1, st, (1, 1, 1), _just_past(0.5j))
    # next to the line but above the hole is not a crossing of the cut
    with pytest.raises(WallDataError):
        cross_geometric_boundary(C1, st, (1, 0, 1), _just_past(1.5j))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_factor_sum_rule(m):
    ctx = LatticeContext(m)
    for delta in enumerate_roots(ctx, 8, 8):
        d, k, s2 = split_classes(ctx, delta)
        assert k == delta.r
        assert k * d + s2 == E
        assert pair(ctx, s2, s2) == 0
        assert pair(ctx, k * d, s2) == k * k > 0
        assert cone_component(ctx, d) is Cone.PLUS
        assert cone_component(ctx, s2) is Cone.MINUS


def test_width_continuous_across_boundary():
    st = refresh(C1, initial_state_geometric(C1, E, -0.1 + 0.5j), exp_class(C1, 0.5j))
    new = cross_geometric_boundary(C1, st, (1, 0, 1), _just_past(0.5j, 1e-6))
    ws = [width(C1, new, exp_class(C1, 0.5j + eps)) for eps in (1e-6, 1e-5, 1e-4, 1e-3)]
    assert ws[0] < 1e-5 and all(a < b for a, b in zip(ws, ws[1:]))
    # independent: gap of the two phases via cmath
    z = 0.5j + 1e-3
    zd = central_charge(C1, exp_class(C1, z), (1, 0, 1))
    zs = central_charge(C1, exp_class(C1, z), (-1, 0, 0))
    import cmath
    gap = (cmath.phase(zd) - cmath.phase(zs)) / math.pi
    assert ws[-1] == pytest.approx(abs((gap + 1) % 2 - 1), rel=1e-9)


def test_recross_restores_seed():
    for delta in ROOTS:
        h = complex(delta.d / delta.r, 0.5 / delta.r)
        before, after = exp_class(C1, h - 1e-4), exp_class(C1, h + 1e-4)
        seed = initial_state_geometric(C1, E, h - 1e-4)
        st = refresh(C1, seed, exp_class(C1, h))
        out = cross_geometric_boundary(C1, st, delta, after)
        back = cross_integral_wall(C1, out, before)
        assert back.lattice_key() == seed.lattice_key()
        assert back.phiplus == pytest.approx(seed.phiplus, abs=1e-3)


def test_cross_integral_wall_keeps_order_on_same_side():
    st = refresh(C1, initial_state_geometric(C1, E, -0.1 + 0.5j), exp_class(C1, 0.5j))
    new = cross_geometric_boundary(C1, st, (1, 0, 1), _just_past(0.5j))
    kept = cross_integral_wall(C1, new, _just_past(0.5j, 2e-4))
    assert kept.vplus == (1, 0, 1) and kept.vminus == (-1, 0, 0)
    assert kept.phiplus - kept.phiminus == pytest.approx(width(C1, new, _just_past(0.5j, 2e-4)))
    with pytest.raises(WallDataError):
        cross_integral_wall(C1, st, _just_past(0.5j))


def test_width_one_wall_is_not_determined():
    st = initial_state_geometric(C1, E, -0.05 + 0.5j)
    with pytest.raises(WallDataError):
        follow_path(C1, st, [-0.05 + 0.5j, 0.05 + 0.5j, 0.05 + 1.5j, -0.05 + 1.5j], ROOTS)


def test_detect_walls_examples():
    seed = initial_state_geometric(C1, E, 2j)

    def seg(a, b):
        return lambda s: exp_class(C1, a + s * (b - a))

    assert detect_walls(C1, seed, seg(2j, 1.1j + 0.3), 0, 1, ROOTS) == []
    evs = detect_walls(C1, seed, seg(-0.2 + 0.5j, 0.3 + 0.5j), 0, 1, ROOTS)
    assert [(e.kind, e.roots, e.side) for e in evs] == [("geometric_boundary", ((1, 0, 1),), 1)]
    assert evs[0].param == pytest.approx(0.4, abs=1e-12)


def test_small_loop_alignment_crossings():
    # square around i: the alignment of (1,0,1) with e changes sign twice,
    # once on the cut (positive) and once above the hole (negative)
    pts = [0.2 + 1.2j, -0.2 + 1.2j, -0.2 + 0.8j, 0.2 + 0.8j, 0.2 + 1.2j]
    found = []
    for a, b in zip(pts, pts[1:]):
        cs = alignment_crossings(C1, lambda s, a=a, b=b: exp_class(C1, a + s * (b - a)), (1, 0, 1), E, 0, 1)
        found.extend(cs)
    assert len(found) == 2
    assert {c.side for c in found} == {1, -1}
    assert sorted(c.positive for c in found) == [False, True]


def test_tangent_alignment_raises():
    def touch(s):
        return exp_class(C1, complex((s - 0.5) ** 2, 0.5))

    with pytest.raises(NonTransverseCrossingError):
        cut_crossings(C1, touch, [(1, 0, 1)], 0, 1, samples=64)
    with pytest.raises(NonTransverseCrossingError):
        follow_path(C1, initial_state_geometric(C1, E, -0.1 + 0.5j), [-0.1 + 0.5j, 0.5j, -0.1 + 0.4j], ROOTS)


def test_collision_detection():
    a = WallEvent("geometric_boundary", ((1, 0, 1),), 0.5, 1)
    b = WallEvent("geometric_boundary", ((2, 1, 1),), 0.5 + 1e-14, 1)
    with pytest.raises(WallCollisionError):
        _check_collisions(C1, [a, b])
    _check_collisions(C1, [a, WallEvent("geometric_boundary", ((2, 1, 1),), 0.6, 1)])


def test_invariants_along_paths():
    rnd = random.Random(11)
    for _ in range(30):
        b0 = rnd.uniform(-0.4, -0.05)
        t0 = rnd.uniform(0.2, 0.9)
        b1 = rnd.uniform(0.05, 0.45)
        t1 = rnd.uniform(0.1, 0.9)
        zs = [complex(b0, t0), complex(b1, t0), complex(b1, t1)]
        res = follow_path(C1, initial_state_geometric(C1, E, zs[0]), zs, ROOTS, samples=32)
        st = res.state
        assert not st.is_seed and st.root == (1, 0, 1)
        assert check_invariants(C1, st, res.omega) == []
        eps = epsilon(C1, st)
        # epsilon constant and invariants preserved along a wall-free vertical move
        for t in (t1 * 0.9, t1 * 0.8):
            st = refresh(C1, st, exp_class(C1, complex(b1, t)))
            assert check_invariants(C1, st, exp_class(C1, complex(b1, t))) == []
            assert epsilon(C1, st) == eps


def test_path_letters_and_return():
    st = initial_state_geometric(C1, E, -0.05 + 0.5j)
    res = follow_path(C1, st, [-0.05 + 0.5j, 0.2 + 0.5j, 0.6 + 0.45j, 0.6 + 0.6j, -0.05 + 0.6j], ROOTS)
    letters = [(tuple(v), e) for v, e in res.letters]
    # the return leg passes over the hole of (2,1,1) at height 1/2
    assert letters == [((1, 0, 1), 1), ((2, 1, 1), 1), ((1, 0, 1), -1)]
    assert res.state.is_seed
    assert [e.kind for e in res.events] == ["geometric_boundary", "integral_wall"]


def test_json_roundtrip():
    st = follow_path(C1, initial_state_geometric(C1, E, -0.05 + 0.5j), [-0.05 + 0.5j, 0.2 + 0.5j], ROOTS).state
    assert WidthState.from_json(st.to_json()) == st
    ev = WallEvent("integral_wall", (MukaiVector(1, 0, 1), MukaiVector(-1, 0, 0)), 0.25, -1)
    assert WallEvent.from_json(ev.to_json()) == ev
