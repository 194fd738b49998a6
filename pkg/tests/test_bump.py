import numpy as np
import pytest
from hypothesis import given, strategies as st

from ifslab.bump import (BumpSpec, Separator, SeparatorSpec, build_separator, field_divergence,
                         flow, hamiltonian_field, sup_distance_to_identity)
from ifslab.errors import SpecError
from ifslab.geometry import ChartPoint
from ifslab.maps import apply, apply_inverse, jacobian_det

B = BumpSpec(0.5)


def on_segment(b, n=100):
    ys = np.linspace(b.delta, 1 - b.delta, n)
    return np.column_stack([np.full(n, b.x), ys])


def test_field_on_plateau_and_off_support():
    np.testing.assert_allclose(hamiltonian_field(B, (0.5, 0.5)), (0.0, 1.0), atol=0)
    np.testing.assert_allclose(hamiltonian_field(B, (0.51, 0.3)), (0.0, 1.0), atol=1e-15)
    assert tuple(hamiltonian_field(B, (0.2, 0.5))) == (0.0, 0.0)
    assert tuple(hamiltonian_field(B, (0.5, 0.001))) == (0.0, 0.0)


def test_divergence_free(rng):
    p = rng.random((1000, 2))
    assert np.max(np.abs(field_divergence(B, p))) < 1e-8


def test_alpha_profile(rng):
    p = rng.random((2000, 2))
    a = B.alpha(p)
    assert np.max(np.abs(a)) <= 1.0
    off = np.abs(p[:, 0] - B.x) >= B.half_width
    assert np.all(a[off] == 0.0)
    near = np.column_stack([B.x + rng.uniform(-0.02, 0.02, 100), rng.uniform(0.1, 0.9, 100)])
    # alpha equals x - x_i there, which differs from x by a constant and has the same field
    np.testing.assert_allclose(B.alpha(near), near[:, 0] - B.x, atol=1e-15)


def test_epsilon_is_computed():
    assert B.epsilon == pytest.approx(B.delta - B.rho_inner)


def test_translation_law():
    p = on_segment(B)
    for t in np.linspace(-0.99 * B.epsilon, 0.99 * B.epsilon, 20):
        q = flow(B, t, p)
        np.testing.assert_allclose(q[:, 0], p[:, 0], atol=1e-12)
        np.testing.assert_allclose(q[:, 1], p[:, 1] + t, atol=1e-9)


def test_example_points():
    t = B.epsilon / 2
    assert flow(B, t, ChartPoint(0.5, 0.5)) == pytest.approx((0.5, 0.5 + t), abs=1e-9)
    p = np.array([[0.3, 0.5], [0.7, 0.2], [0.5, 0.002]])
    assert np.array_equal(flow(B, 0.3, p), p)
    q = np.random.default_rng(1).random((100, 2))
    assert np.array_equal(flow(B, 0.0, q), q)


def test_flow_preconditions():
    with pytest.raises(ValueError):
        flow(B, 1.5, (0.5, 0.5))
    with pytest.raises(ValueError):
        flow(B, 0.1, (0.5, 0.5), max_step=1e-2)


def test_spec_validation():
    with pytest.raises(SpecError):
        SeparatorSpec.standard(xs=(0.25, 0.3, 0.75))
    with pytest.raises(SpecError):
        SeparatorSpec.standard(t=(0.0, 0.06, 0.0))
    with pytest.raises(SpecError):
        SeparatorSpec.standard(xs=(0.5, 0.25, 0.75))
    with pytest.raises(SpecError):
        BumpSpec(0.5, inner_half_width=0.2)


def test_spec_json_round_trip():
    s = SeparatorSpec.standard(t=(0.01, -0.02, 0.03), rho_inner=0.06)
    assert SeparatorSpec.from_dict(s.to_dict()) == s


def test_zero_translation_is_identity(rng):
    h = build_separator(SeparatorSpec.standard())
    p = rng.random((2000, 2))
    assert np.max(np.abs(apply(h, p) - p)) <= 1e-10


def test_single_segment_shift():
    s = SeparatorSpec.standard()
    e = s.epsilon
    h = build_separator(s.with_t((0.0, e / 2, 0.0)))
    q = apply(h, on_segment(s.bumps[1]))
    np.testing.assert_allclose(q - on_segment(s.bumps[1]), [[0.0, e / 2]] * 100, atol=1e-9)


def test_separator_jacobian(rng):
    s = SeparatorSpec.standard(t=(0.03, -0.04, 0.02))
    h = build_separator(s)
    p = rng.uniform(1e-5, 1 - 1e-5, (1000, 2))
    assert np.max(np.abs(jacobian_det(h, p) - 1.0)) < 1e-6


def test_round_trip_and_sup_distance(rng):
    s = SeparatorSpec.standard(t=(0.03, -0.04, 0.02))
    h = build_separator(s)
    p = rng.random((5000, 2))
    assert np.max(np.abs(apply_inverse(h, apply(h, p)) - p)) < 1e-10
    bound = max(abs(t) for t in s.t) * max(b.speed_bound() for b in s.bumps) + 1e-9
    assert sup_distance_to_identity(h, p) <= bound


def test_boundary_identity(rng):
    h = build_separator(SeparatorSpec.standard(t=(0.03, -0.04, 0.02)))
    m = 0.004
    edge = rng.random((2000, 2))
    side = rng.integers(0, 4, 2000)
    edge[side == 0, 0] *= m
    edge[side == 1, 0] = 1 - m * edge[side == 1, 0]
    edge[side == 2, 1] *= m
    edge[side == 3, 1] = 1 - m * edge[side == 3, 1]
    assert np.array_equal(apply(h, edge), edge)


def test_single_bump_collapse(rng):
    s = SeparatorSpec.standard()
    for i in range(3):
        t = [0.0, 0.0, 0.0]
        t[i] = -0.03
        h = build_separator(s.with_t(t))
        p = rng.random((1000, 2))
        assert np.array_equal(apply(h, p), flow(s.bumps[i], -0.03, p))


def test_flows_commute(rng):
    s = SeparatorSpec.standard()
    t = (0.02, -0.03, 0.035)
    p = rng.random((1000, 2))
    a = p
    for i in (0, 1, 2):
        a = flow(s.bumps[i], t[i], a)
    b = p
    for i in (2, 0, 1):
        b = flow(s.bumps[i], t[i], b)
    assert np.max(np.abs(a - b)) < 1e-9


def test_annulus_band(rng):
    s = SeparatorSpec.standard(t=(0.03, -0.04, 0.02))
    h = Separator(s, band=(0.125, 0.875))
    p = rng.random((3000, 2))
    q = apply(h, p)
    outside = (p[:, 1] < 0.125) | (p[:, 1] > 0.875)
    assert np.array_equal(q[outside], p[outside])
    # the segment over x_i shifts by t_i times the band height
    seg = np.column_stack([np.full(50, s.bumps[0].x), np.linspace(0.3, 0.7, 50)])
    np.testing.assert_allclose(apply(h, seg)[:, 1] - seg[:, 1], 0.03 * 0.75, atol=1e-9)


@given(st.floats(-0.039, 0.039), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_flow_inverse_property(t, x, y):
    p = np.array([[x, y]])
    q = flow(B, -t, flow(B, t, p))
    assert np.max(np.abs(q - p)) < 1e-10
    with pytest.raises(SpecError):
        BumpSpec(0.95)
    with pytest.raises(SpecError):
        BumpSpec(0.05)
