import cmath
import math

import numpy as np
import pytest

from k3stab.errors import WallDataError
from k3stab.flow_engine import (
    FlowConfig,
    FlowTrace,
    _Field,
    _field_for,
    _zeta,
    flow_to_integer,
    retract,
    seed_for_width,
    step,
    theta_ode_residual,
    vector_field,
    zeta,
)
from k3stab.hn_state import epsilon, follow_path, initial_state_geometric, width
from k3stab.monodromy import IDENTITY, GroupElement
from k3stab.mukai_lattice import POINT_CLASS, Cone, LatticeContext, cone_component, enumerate_roots, pair_any
from k3stab.period_domain import exp_class, hermitian_norm, in_chamber_closure, is_degenerate

C1 = LatticeContext(1)
ROOTS = enumerate_roots(C1, 4, 4)


def _post_boundary(z_left=-0.05 + 0.9j, z_right=0.05 + 0.9j):
    st = initial_state_geometric(C1, POINT_CLASS, z_left)
    res = follow_path(C1, st, [z_left, z_right], ROOTS)
    return res.state, res.omega


def test_zeta_examples():
    assert _zeta(0.0, 0.0) == pytest.approx(1j)
    th = 0.3
    assert _zeta((1 + th) / 2, (1 - th) / 2) == pytest.approx(-1)
    for pp, pm in [(0.7, 0.2), (1.3, 0.9), (-0.2, -0.6)]:
        z = _zeta(pp, pm)
        assert abs(z) == pytest.approx(1, abs=1e-15)
        arg = cmath.phase(z) / math.pi % 2
        # the argument sits between phi+ and phi- + 1 modulo 2
        assert (arg - pp) % 2 < (pm + 1 - pp) % 2
    st, _ = _post_boundary()
    with pytest.raises(WallDataError):
        zeta(initial_state_geometric(C1, POINT_CLASS, 2j))
    assert abs(zeta(st)) == pytest.approx(1)


def test_field_orthogonal_and_sign():
    st, om = _post_boundary()
    v = vector_field(C1, st, om)
    assert abs(pair_any(1, v, om)) < 1e-12
    eps = epsilon(C1, st)
    assert eps == (1 if cone_component(C1, st.vplus) is Cone.PLUS else -1)
    fld = _field_for(C1, st)
    w = tuple(complex(c) for c in om)
    flipped = _Field(1, -fld.eps, fld.vp, fld.vm)(w, st.phiplus, st.phiminus)
    assert np.allclose(np.array(flipped), -np.array(v), atol=1e-14)


def test_phases_move_together():
    st, om = _post_boundary()
    st2, _ = step(C1, st, om, 1e-4)
    assert st2.phiplus < st.phiplus
    assert st2.phiminus > st.phiminus


def test_step_preserves_constraints():
    st, om = seed_for_width(C1, 0.9)[:2]
    d0 = hermitian_norm(C1, om)
    for _ in range(1000):
        st, om = step(C1, st, om, 1e-3)
    assert abs(hermitian_norm(C1, om) - d0) / d0 < 1e-9
    assert abs(pair_any(1, om, om)) / d0 < 1e-9


def test_step_reversible():
    st, om0 = seed_for_width(C1, 0.8)[:2]
    st0 = st
    om = om0
    for _ in range(100):
        st, om = step(C1, st, om, 1e-3)
    for _ in range(100):
        st, om = step(C1, st, om, -1e-3)
    assert np.max(np.abs(np.array(om) - np.array(om0))) < 1e-6
    assert st.phiplus == pytest.approx(st0.phiplus, abs=1e-9)


def test_flow_small_width():
    st, om = seed_for_width(C1, 0.1)[:2]
    assert width(C1, st, om) == pytest.approx(0.1, abs=1e-9)
    tr = flow_to_integer(C1, st, om)
    assert tr.status == "reached_width_zero"
    assert tr.duration <= math.pi / 2 / math.cos(0.05 * math.pi) + 1e-2
    assert abs(tr.records[-1].width) < 1e-10
    assert is_degenerate(C1, tr.records[-1].omega) is None
    ws = [r.width for r in tr.records]
    assert all(a > b for a, b in zip(ws, ws[1:]))
    for r in tr.records:
        assert -r.dwdt >= 2 / math.pi * math.cos(math.pi * r.width / 2) - 1e-3
    assert theta_ode_residual(C1, tr) < 1e-4
    assert all(abs(r.theta_speed - 1) < 1e-3 for r in tr.records[1:])


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("theta", [0.05, 0.5, 0.95])
def test_seed_for_width(m, theta):
    ctx = LatticeContext(m)
    st, om, zs = seed_for_width(ctx, theta)
    assert width(ctx, st, om) == pytest.approx(theta, abs=1e-9)
    assert st.root == (1, 0, 1)
    assert in_chamber_closure(ctx, zs[0], 6, 6)


def test_flow_rejects_seed():
    with pytest.raises(WallDataError):
        flow_to_integer(C1, initial_state_geometric(C1, POINT_CLASS, 2j), exp_class(C1, 2j))
    with pytest.raises(ValueError):
        FlowConfig(h=0)


def test_trace_jsonl_roundtrip():
    st, om = seed_for_width(C1, 0.2)[:2]
    tr = flow_to_integer(C1, st, om)
    text = tr.to_jsonl()
    back = FlowTrace.from_jsonl(text)
    assert back.records == tr.records
    assert back.state == tr.state and back.final_state == tr.final_state
    assert back.to_jsonl() == text


def test_retract_trivial():
    res = retract(C1, 2j, [1.5j + 0.3])
    assert res.word == IDENTITY
    assert res.endpoint.z == pytest.approx(1.5j + 0.3)
    assert res.traces == []


def test_retract_single_crossing():
    res = retract(C1, -0.1 + 0.5j, [0.1 + 0.5j])
    assert res.word == GroupElement.generator((1, 0, 1))
    assert res.state.is_seed
    assert in_chamber_closure(C1, res.endpoint.z, 6, 6)
    assert [e.kind for e in res.events] == ["geometric_boundary", "integral_wall"]
