import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bearingtrack.control import (
    ControlGains,
    bearing_error_vector,
    displacement_error_vector,
    follower_command,
    leader_command,
)
from bearingtrack.errors import ValidationError

from support import unit

seeds = st.integers(0, 2**32 - 1)


def test_gains_must_be_positive():
    ControlGains(1.0, 1.0)
    for k1, k2 in ((0, 1), (1, 0), (-1, 2)):
        with pytest.raises(ValidationError, match="k1 > 0 and k2 > 0"):
            ControlGains(k1, k2)


class TestBearingError:
    def test_examples(self):
        np.testing.assert_array_equal(bearing_error_vector([[0.6, 0.8]], [[0.6, 0.8]]), [0, 0])
        np.testing.assert_array_equal(bearing_error_vector([[1, 0]], [[0, 1]]), [1, -1])

    @given(seeds, st.integers(1, 8), st.sampled_from([2, 3]))
    def test_bounded_by_twice_neighbor_count(self, seed, k, d):
        rng = np.random.default_rng(seed)
        r = bearing_error_vector(unit(rng, k, d), unit(rng, k, d))
        assert np.linalg.norm(r) <= 2 * k + 1e-12

    @given(seeds, st.floats(0.01, 100))
    def test_invariant_to_scaling(self, seed, c):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(3, 3))
        g_star = unit(rng, 3, 3)
        g1 = z / np.linalg.norm(z, axis=1, keepdims=True)
        g2 = c * z / np.linalg.norm(c * z, axis=1, keepdims=True)
        np.testing.assert_allclose(bearing_error_vector(g1, g_star), bearing_error_vector(g2, g_star), atol=1e-12)


class TestDisplacementError:
    def test_examples(self):
        g = np.array([[0.6, 0.8]])
        np.testing.assert_allclose(displacement_error_vector(3.0 * g, g), [0, 0], atol=1e-15)
        # p_i = [0,0], p_j = [2,0], g* = [0,1]
        np.testing.assert_array_equal(displacement_error_vector([[2.0, 0.0]], [[0.0, 1.0]]), [2, 0])
        z = np.array([[1.0, 1.0], [1.0, -1.0]])
        np.testing.assert_array_equal(displacement_error_vector(z, [[1.0, 0], [1.0, 0]]), [0, 0])

    @given(seeds, st.sampled_from([2, 3]))
    def test_matches_projector_sum(self, seed, d):
        rng = np.random.default_rng(seed)
        p_i = rng.normal(size=d)
        p_j = rng.normal(size=(4, d))
        g = unit(rng, 4, d)
        expected = -sum((np.eye(d) - np.outer(gk, gk)) @ (p_i - pk) for gk, pk in zip(g, p_j))
        np.testing.assert_allclose(displacement_error_vector(p_j - p_i, g), expected, atol=1e-12)

    @given(seeds)
    def test_linear_in_displacements(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(3, 3))
        g = unit(rng, 3, 3)
        np.testing.assert_allclose(
            displacement_error_vector(2 * z, g), 2 * displacement_error_vector(z, g), atol=1e-12
        )


class TestFollowerCommand:
    def test_equilibrium(self):
        v_c = np.array([0.3, 0.4])
        cmd = follower_command(v_c / 0.5, v_c, np.zeros(2), ControlGains(2.0, 3.0))
        assert cmd.u == pytest.approx(0.5)
        assert cmd.omega == 0
        np.testing.assert_allclose(cmd.xi_dot, 0, atol=1e-16)

    def test_orthogonal_heading_2d(self):
        cmd = follower_command([1.0, 0.0], [0.0, 0.0], [0.0, 1.0], ControlGains(1.0, 1.0))
        assert cmd.u == 0
        np.testing.assert_array_equal(cmd.xi_dot, [0, 0])
        assert cmd.omega == 1.0

    def test_turns_toward_xi_3d(self):
        cmd = follower_command([1.0, 0, 0], [0, 0.5, 0], np.zeros(3), ControlGains(1.0, 1.0))
        np.testing.assert_array_equal(cmd.omega, [0, 0, 0.5])

    @given(seeds, st.sampled_from([2, 3]))
    def test_definitions_and_bounds(self, seed, d):
        rng = np.random.default_rng(seed)
        h = unit(rng, d)
        xi, r = rng.normal(size=(2, d))
        gains = ControlGains(*rng.uniform(0.1, 20, size=2))
        cmd = follower_command(h, xi, r, gains)
        H = np.outer(h, h)
        assert cmd.u == pytest.approx(h @ (gains.k1 * r + xi), abs=1e-12)
        assert abs(cmd.u) <= gains.k1 * np.linalg.norm(r) + np.linalg.norm(xi) + 1e-12
        assert abs(cmd.u) <= np.linalg.norm(gains.k1 * r + xi) + 1e-12
        np.testing.assert_allclose(cmd.xi_dot, H @ r - (np.eye(d) - H) @ xi, atol=1e-12)
        # the two parts of xi_dot live in orthogonal subspaces
        assert abs((H @ r) @ ((np.eye(d) - H) @ xi)) <= 1e-12 * max(1, np.linalg.norm(r) * np.linalg.norm(xi))
        w = r + xi
        expected = gains.k2 * (h[0] * w[1] - h[1] * w[0] if d == 2 else np.cross(h, w))
        np.testing.assert_allclose(cmd.omega, expected, atol=1e-12)

    @given(seeds, st.sampled_from([2, 3]))
    def test_stacked_matches_single(self, seed, d):
        rng = np.random.default_rng(seed)
        h = unit(rng, 5, d)
        xi, r = rng.normal(size=(2, 5, d))
        gains = ControlGains(3.0, 2.0)
        stacked = follower_command(h, xi, r, gains)
        for k in range(5):
            one = follower_command(h[k], xi[k], r[k], gains)
            assert stacked.u[k] == one.u
            np.testing.assert_array_equal(stacked.omega[k], one.omega)
            np.testing.assert_array_equal(stacked.xi_dot[k], one.xi_dot)


@pytest.mark.parametrize(
    "speed, heading",
    [(0.15, [np.cos(np.pi / 6), np.sin(np.pi / 6), 0.0]), (0.0, [1.0, 0.0])],
)
def test_leader_command(speed, heading):
    cmd = leader_command(speed, heading)
    assert cmd.u == speed
    np.testing.assert_array_equal(cmd.omega, 0)
    np.testing.assert_array_equal(cmd.xi_dot, np.zeros(len(heading)))


@given(arrays(float, 3, elements=st.floats(-5, 5)))
def test_bearing_error_zero_iff_bearings_match(v):
    if np.linalg.norm(v) < 1e-3:
        return
    g = (v / np.linalg.norm(v))[None]
    assert np.abs(bearing_error_vector(g, g)).max() == 0
