import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steiner_drop.errors import DomainError, SingularStateError
from steiner_drop.model import (
    Params,
    State,
    accelerations,
    apply_G1,
    apply_G2,
    apply_S,
    dq_dalpha,
    net_force,
    q_of_alpha,
    q_of_height,
    rhs,
    triangle_from_com,
)

xs = st.floats(-0.5, 0.5)
ys = st.floats(0.05, 5.0)
alphas = st.floats(0.05, 1.55)


def vertex_space_force(x, y, q):
    """Net force assembled from vertex positions and contact angles."""
    A = np.array([-1.0 / (3 * y), 0.0])
    B = np.array([1.0 / (3 * y), 0.0])
    C = np.array([3 * x, 3 * y])
    ang_a = math.atan2(C[1] - A[1], C[0] - A[0])
    ang_b = math.atan2(C[1] - B[1], B[0] - C[0])
    ang_c = math.pi - ang_a - ang_b
    base = B[0] - A[0]
    surf = np.array([math.cos(ang_b) - math.cos(ang_a), -math.sin(ang_b) - math.sin(ang_a)])
    kappa = q * (1 / math.sin(ang_a) + 1 / math.sin(ang_b) + 1 / math.sin(ang_c))
    return surf + np.array([0.0, kappa * base])


def test_q_known_values():
    assert q_of_alpha(math.pi / 4) == pytest.approx(1.0 / (4.0 + math.sqrt(2.0)), rel=1e-15)
    assert q_of_alpha(math.pi / 3) == pytest.approx(2 * 0.75 * 3**0.25 / 6.0, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, -0.1, math.pi / 2, 2.0, math.nan])
def test_q_rejects_out_of_range(bad):
    with pytest.raises(DomainError):
        q_of_alpha(bad)


def test_dq_matches_finite_difference():
    for a in np.linspace(0.1, 1.5, 15):
        h = 1e-6
        fd = (q_of_alpha(a + h) - q_of_alpha(a - h)) / (2 * h)
        assert dq_dalpha(a) == pytest.approx(fd, rel=1e-7, abs=1e-9)


@given(alphas)
def test_q_of_height_inverts_at_primary_height(a):
    y0 = math.sqrt(math.tan(a)) / 3
    assert q_of_height(y0) == pytest.approx(q_of_alpha(a), rel=1e-12)


def test_q_dense_sampling_single_maximum():
    a = np.linspace(0.01, math.pi / 2 - 0.01, 20001)
    q = np.array([q_of_alpha(v) for v in a])
    peaks = np.nonzero((q[1:-1] > q[:-2]) & (q[1:-1] > q[2:]))[0]
    assert len(peaks) == 1
    assert a[peaks[0] + 1] == pytest.approx(1.3908, abs=1e-3)


@given(xs, ys, alphas)
def test_accelerations_match_vertex_space_assembly(x, y, a):
    q = q_of_alpha(a)
    f, h = accelerations(x, y, q)
    ref = vertex_space_force(x, y, q)
    scale = 1.0 + abs(ref).max()
    assert abs(f - ref[0]) < 1e-11 * scale
    assert abs(h - ref[1]) < 1e-11 * scale


@given(xs, ys)
def test_triangle_area_and_centroid(x, y):
    tri = triangle_from_com(x, y)
    # shoelace area against the unit-area constraint
    assert tri.area() == pytest.approx(1.0, rel=1e-12)
    assert tri.vertices.mean(axis=0) == pytest.approx([x, y], abs=1e-12)
    assert tri.alpha + tri.beta + tri.gamma == pytest.approx(math.pi, abs=1e-14)
    assert tri.c == pytest.approx(tri.xB - tri.xA)


def test_equilibrium_is_isosceles_rest_state():
    p = Params(1.0)
    y0 = math.sqrt(math.tan(1.0)) / 3
    f, h = accelerations(0.0, y0, p.q)
    assert abs(f) < 1e-15 and abs(h) < 1e-13
    tri = triangle_from_com(0.0, y0)
    assert tri.alpha == pytest.approx(1.0, abs=1e-14)
    assert tri.beta == pytest.approx(1.0, abs=1e-14)


@given(xs, ys, alphas)
def test_parity_bitwise(x, y, a):
    q = q_of_alpha(a)
    f1, h1 = accelerations(x, y, q)
    f2, h2 = accelerations(-x, y, q)
    assert f1 == -f2
    assert h1 == h2


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, 50)
    y = rng.uniform(0.1, 3.0, 50)
    q = q_of_alpha(0.9)
    F, H = accelerations(x, y, q)
    for k in range(50):
        f, h = accelerations(float(x[k]), float(y[k]), q)
        assert F[k] == pytest.approx(f, rel=1e-14, abs=1e-15)
        assert H[k] == pytest.approx(h, rel=1e-14, abs=1e-15)


def test_rhs_and_net_force():
    p = Params(1.2)
    s = State(0.1, 0.2, 0.6, -0.3)
    out = rhs(s, p)
    f, h = accelerations(0.1, 0.6, p.q)
    assert out[0] == 0.2 and out[2] == -0.3
    assert out[1] == f and out[3] == h
    nf = net_force(0.1, 0.6, p)
    assert (nf.Fx, nf.Fy) == (f, h)


def test_rhs_rejects_substrate_contact():
    p = Params(1.0)
    with pytest.raises(SingularStateError):
        State(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(SingularStateError):
        rhs(np.array([0.0, 0.0, -1.0, 0.0]), p)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_involutions(v):
    v = np.array(v)
    v[2] = abs(v[2]) + 0.1
    for G in (apply_G1, apply_G2, apply_S):
        assert np.array_equal(G(G(v)), v)
    assert np.array_equal(apply_S(v), apply_G2(apply_G1(v)))
    assert np.array_equal(apply_S(v), apply_G1(apply_G2(v)))


@given(xs, st.floats(-1, 1), st.floats(0.1, 3), st.floats(-1, 1), alphas)
def test_reversibility_identity(x, w, y, z, a):
    # G maps the flow to its time reverse: G(F(v)) = -F(G(v))
    p = Params(a)
    v = np.array([x, w, y, z])
    for G in (apply_G1, apply_G2):
        assert np.allclose(G(rhs(v, p)), -rhs(G(v), p), rtol=0, atol=1e-13)
    # S commutes with the flow
    assert np.allclose(apply_S(rhs(v, p)), rhs(apply_S(v), p), rtol=0, atol=1e-13)


def test_state_roundtrip_and_physical_scales():
    s = State(0.1, 0.2, 0.3, 0.4)
    assert State.from_array(s.as_array()) == s
    p = Params(1.0, sigma=0.07, rho=1000.0, volume=1e-6)
    assert p.length_scale == pytest.approx(1e-2)
    assert p.time_scale == pytest.approx(math.sqrt(1000.0 * 1e-6 / 0.07))
    with pytest.raises(DomainError):
        Params(1.0).time_scale


def test_q_vanishes_at_small_angle():
    vals = [q_of_alpha(a) for a in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2] > 0.0 and vals[2] < 1e-8


def test_triangle_quarter_pi_example():
    t = triangle_from_com(0.0, 1 / 3)
    assert (t.xA, t.xB) == pytest.approx((-1.0, 1.0), abs=1e-15)
    assert (t.xC, t.yC) == pytest.approx((0.0, 1.0), abs=1e-15)
    assert t.alpha == pytest.approx(math.pi / 4, abs=1e-15) and t.beta == pytest.approx(math.pi / 4, abs=1e-15)
    assert t.area() == pytest.approx(1.0, rel=1e-15)


@given(st.floats(0.01, 0.5), ys)
def test_triangle_mirror_swaps_sides(x, y):
    t, m = triangle_from_com(x, y), triangle_from_com(-x, y)
    assert (m.a, m.b) == pytest.approx((t.b, t.a), rel=1e-14)
    assert (m.alpha, m.beta) == pytest.approx((t.beta, t.alpha), rel=1e-14)
