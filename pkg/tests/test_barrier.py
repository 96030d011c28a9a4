import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbfnav.barrier import (
    BarrierGeometry,
    BarrierParams,
    Circle,
    CircleGeometry,
    Ellipse,
    EllipseGeometry,
    Obstacle,
    barrier_derivatives,
    barrier_geometry,
    evaluate,
    goal_phi,
    h1_circle,
    h1_ellipse,
    h2,
    lie_derivatives,
)
from cbfnav.dynamics import ControlInput, RobotState, state_derivative
from cbfnav.oracles import lie_derivative_check, random_barrier, random_state_near

PARAMS = BarrierParams()
coord = st.floats(min_value=-5, max_value=5)
angle = st.floats(min_value=-math.pi, max_value=math.pi, exclude_max=True)
axis = st.floats(min_value=0.1, max_value=3.0)


def test_h1_circle_examples():
    obs = Obstacle(1.0, -2.0, 0.5)
    assert h1_circle((1.0 + 1.0, -2.0), obs, 0.5) == pytest.approx(3.0)
    assert h1_circle((1.0, -1.5), obs, 0.5) == pytest.approx(0.0)
    assert h1_circle((1.0, -2.0), obs, 0.5) == -1.0
    with pytest.raises(ValueError):
        h1_circle((0, 0), obs, 0.0)


def test_h1_ellipse_examples():
    g = EllipseGeometry(2.0, 1.0, 0.7)
    assert h1_ellipse((3.0, 4.0), (3.0, 4.0), g) == -1.0
    tip = (3.0 + 2.0 * math.cos(0.7), 4.0 + 2.0 * math.sin(0.7))
    assert h1_ellipse(tip, (3.0, 4.0), g) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        EllipseGeometry(0.0, 1.0)


@given(coord, coord, axis, angle)
def test_round_ellipse_equals_circle(x, y, r, phi):
    obs = Obstacle(0.3, -0.2, r)
    assert h1_ellipse((x, y), (0.3, -0.2), EllipseGeometry(r, r, phi)) == pytest.approx(
        h1_circle((x, y), obs, r), abs=1e-9
    )


def test_goal_phi_examples():
    assert goal_phi((0, 0), (1, 0)) == 0.0
    assert goal_phi((0, 0), (0, 1)) == pytest.approx(math.pi / 2)
    assert goal_phi((0, 0), (1, 1)) == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        goal_phi((1, 1), (1, 1))


@given(angle, st.floats(min_value=-3, max_value=3), st.floats(min_value=0.5, max_value=5))
def test_goal_phi_rotates_with_goal(base, delta, dist):
    c = (0.4, -1.0)
    g0 = (c[0] + dist * math.cos(base), c[1] + dist * math.sin(base))
    g1 = (c[0] + dist * math.cos(base + delta), c[1] + dist * math.sin(base + delta))
    turned = goal_phi(c, g1) - goal_phi(c, g0) - delta
    assert math.remainder(turned, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_barrier_derivative_examples():
    grad, hess = barrier_derivatives((2.0, 0.0), BarrierGeometry((0.0, 0.0), CircleGeometry(1.0)))
    np.testing.assert_allclose(grad, [4.0, 0.0])
    np.testing.assert_allclose(hess, 2.0 * np.eye(2))
    for phi in (0.0, 0.4, -2.0):
        ge, he = barrier_derivatives((2.0, 0.0), BarrierGeometry((0.0, 0.0), EllipseGeometry(1.0, 1.0, phi)))
        np.testing.assert_allclose(ge, grad, atol=1e-12)
        np.testing.assert_allclose(he, hess, atol=1e-12)


def test_ellipse_gradient_against_finite_difference():
    geom = EllipseGeometry(2.0, 1.0, 0.0)
    grad, _ = barrier_derivatives((2.0, 0.0), BarrierGeometry((0.0, 0.0), geom))
    step = 1e-6
    fd = [
        (h1_ellipse((2.0 + step, 0.0), (0, 0), geom) - h1_ellipse((2.0 - step, 0.0), (0, 0), geom)) / (2 * step),
        (h1_ellipse((2.0, step), (0, 0), geom) - h1_ellipse((2.0, -step), (0, 0), geom)) / (2 * step),
    ]
    np.testing.assert_allclose(grad, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(fd, grad, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("shape", ["circle", "ellipse"])
def test_gradient_and_hessian_central_differences(shape):
    rng = np.random.default_rng(11)
    step = 1e-6
    for _ in range(100):
        b = random_barrier(rng, shape)
        s = random_state_near(rng, b)
        p = np.array([s.x, s.y])
        grad, hess = barrier_derivatives(p, b)
        h = lambda q: h1_ellipse(q, b.center, EllipseGeometry(*b.geom.axes()))
        fd_grad = np.array([(h(p + step * e) - h(p - step * e)) / (2 * step) for e in np.eye(2)])
        fd_hess = np.array(
            [
                (barrier_derivatives(p + step * e, b)[0] - barrier_derivatives(p - step * e, b)[0]) / (2 * step)
                for e in np.eye(2)
            ]
        )
        scale = max(1.0, np.abs(fd_grad).max())
        assert np.abs(grad - fd_grad).max() / scale <= 1e-5
        np.testing.assert_allclose(hess, fd_hess.T, rtol=1e-5, atol=1e-5)
        np.testing.assert_allclose(hess, hess.T)


def test_h2_examples():
    circle = BarrierGeometry((0.0, 0.0), CircleGeometry(1.0))
    # hand evaluation: 3 * 3 + 1 * (4 cos(pi))
    assert h2(RobotState(2.0, 0.0, 1.0, math.pi), circle, BarrierParams(3.0, 1.0)) == pytest.approx(5.0)


@given(coord, coord, angle, axis, angle)
def test_h2_at_rest_is_scaled_h1(x, y, th, r, phi):
    for b in (
        BarrierGeometry((0.0, 0.0), CircleGeometry(r)),
        BarrierGeometry((0.0, 0.0), EllipseGeometry(1.8 * r, r, phi)),
    ):
        ev = evaluate(RobotState(x, y, 0.0, th), b, PARAMS)
        assert ev.h2 == PARAMS.c1 * ev.h1
        assert ev.Lf_h2 == 0.0
        assert ev.Lg_h2[1] == 0.0


def test_lie_derivative_example():
    # heading along the gradient at distance 2 from a unit circle
    circle = BarrierGeometry((0.0, 0.0), CircleGeometry(1.0))
    lf, lg = lie_derivatives(RobotState(2.0, 0.0, 1.0, 0.0), circle, BarrierParams(3.0, 1.0))
    assert lf == pytest.approx(14.0)
    np.testing.assert_allclose(lg, [4.0, 0.0], atol=1e-12)


def test_time_derivative_matches_forward_difference():
    # One-sided differences carry their own O(dt) error, so the barriers here
    # are sized like the scenario obstacles (minor axis 0.5-0.8 m).
    rng = np.random.default_rng(5)
    dt = 1e-6
    worst = 0.0
    for i in range(100):
        r = rng.uniform(0.5, 0.8)
        center = tuple(rng.uniform(-3, 3, size=2))
        if i % 2:
            b = BarrierGeometry(center, CircleGeometry(r))
        else:
            b = BarrierGeometry(center, EllipseGeometry(1.8 * r, r, rng.uniform(-math.pi, math.pi)))
        s = random_state_near(rng, b)
        u = ControlInput(rng.uniform(-2.5, 2.5), rng.uniform(-1, 1))
        lf, lg = lie_derivatives(s, b, PARAMS)
        analytic = lf + lg @ u.as_array()
        nxt = s.as_array() + dt * state_derivative(s, u)
        numeric = (h2(RobotState(*nxt), b, PARAMS) - h2(s, b, PARAMS)) / dt
        worst = max(worst, abs(analytic - numeric) / max(1.0, abs(numeric)))
    assert worst <= 1e-5


def test_lie_derivatives_against_reference_oracle():
    check = lie_derivative_check(100, seed=3)
    assert check.max_rel_error_lf <= 1e-5
    assert check.max_rel_error_lg <= 1e-5
    assert check.max_aspect_one_diff <= 1e-12


@given(coord, coord, axis, st.floats(min_value=1.0, max_value=3.0), angle)
def test_sign_semantics_match_membership(x, y, b, aspect, phi):
    a = aspect * b
    geom = EllipseGeometry(a, b, phi)
    h = h1_ellipse((x, y), (0.0, 0.0), geom)
    # membership in body coordinates, via a different parametrization
    u = x * math.cos(-phi) - y * math.sin(-phi)
    w = x * math.sin(-phi) + y * math.cos(-phi)
    inside = (u / a) ** 2 + (w / b) ** 2
    if inside < 1 - 1e-9:
        assert h < 0
    elif inside > 1 + 1e-9:
        assert h > 0


def test_barrier_geometry_sizes():
    obs = Obstacle(1.0, 1.0, 0.5, 0.3, Ellipse(1.8))
    g = barrier_geometry(obs, 1, goal=(1.0, 5.0))
    assert (g.geom.a, g.geom.b) == pytest.approx((1.44, 0.8))
    assert g.geom.phi == pytest.approx(math.pi / 2)
    g = barrier_geometry(Obstacle(1.0, 1.0, 0.5, 0.3), 1)
    assert isinstance(g.geom, CircleGeometry) and g.geom.r == pytest.approx(0.8)
    with pytest.raises(ValueError):
        barrier_geometry(obs, 0, goal=None)


def test_obstacle_validation():
    with pytest.raises(ValueError):
        Obstacle(0, 0, 0.0)
    with pytest.raises(ValueError):
        Obstacle(0, 0, 1.0, -0.1)
    with pytest.raises(ValueError):
        Ellipse(0.9)
    with pytest.raises(ValueError):
        BarrierParams(0.0, 1.0)


def test_ellipse_contains_physical_disc():
    # minor axis equals the disc radius, so every disc point has h1 <= 0
    obs = Obstacle(0.0, 0.0, 0.5, 0.3, Ellipse(1.8))
    for z in (0, 1):
        g = barrier_geometry(obs, z, goal=(3.0, 2.0))
        for t in np.linspace(-math.pi, math.pi, 50):
            p = (0.5 * math.cos(t), 0.5 * math.sin(t))
            assert h1_ellipse(p, g.center, g.geom) <= 1e-12
