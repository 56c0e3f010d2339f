import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bearingtrack import geometry
from bearingtrack.errors import CoincidentAgents

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@st.composite
def unit_vectors(draw, d=None):
    d = d or draw(st.sampled_from([2, 3]))
    v = draw(arrays(float, d, elements=st.floats(-1, 1)))
    norm = np.linalg.norm(v)
    if norm < 1e-3:
        v = np.eye(d)[0]
        norm = 1.0
    return v / norm


def test_bearing_examples():
    np.testing.assert_allclose(geometry.bearing([0, 0], [1, 0]), [1, 0])
    np.testing.assert_allclose(geometry.bearing([0, 0, 0], [3, 4, 0]), [0.6, 0.8, 0], atol=1e-15)
    with pytest.raises(CoincidentAgents):
        geometry.bearing([1, 1], [1, 1])


def test_bearings_reports_agent_indices():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(CoincidentAgents, match="agents 2 and 3"):
        geometry.bearings(pts, np.array([0, 1]), np.array([1, 2]))


@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite))
def test_bearing_is_antisymmetric_and_unit(p, q):
    if np.linalg.norm(q - p) <= 1e-6:
        return
    g = geometry.bearing(p, q)
    np.testing.assert_allclose(g, -geometry.bearing(q, p), atol=1e-15)
    assert abs(np.linalg.norm(g) - 1) <= 1e-9


def test_projector_examples():
    np.testing.assert_array_equal(geometry.projector([1.0, 0.0]), [[0, 0], [0, 1]])
    np.testing.assert_allclose(geometry.projector([0.6, 0.8]) @ [0.6, 0.8], 0, atol=1e-15)
    g = np.full(3, 1 / np.sqrt(3))
    P = geometry.projector(g)
    np.testing.assert_allclose(P @ P, P, atol=1e-15)


@given(unit_vectors())
def test_projector_properties(g):
    d = g.size
    P = geometry.projector(g)
    np.testing.assert_array_equal(P, P.T)
    assert np.abs(P @ P - P).max() <= 1e-12
    assert np.abs(P @ g).max() <= 1e-12
    eig = np.linalg.eigvalsh(P)
    np.testing.assert_allclose(eig, [0] + [1] * (d - 1), atol=1e-12)
    assert abs(np.trace(P) - (d - 1)) <= 1e-12


def test_projector_broadcasts():
    g = np.array([[1.0, 0.0], [0.0, 1.0]])
    P = geometry.projector(g)
    assert P.shape == (2, 2, 2)
    np.testing.assert_array_equal(P[1], [[1, 0], [0, 0]])


def test_double_cross_examples():
    np.testing.assert_allclose(geometry.double_cross([0, 0, 1.0], [1, 2, 3.0]), [1, 2, 0])
    np.testing.assert_allclose(geometry.double_cross([1.0, 0, 0], [1.0, 0, 0]), [0, 0, 0])
    np.testing.assert_allclose(geometry.double_cross([1.0, 0], [2.0, 5]), [0, 5])


@given(st.sampled_from([2, 3]).flatmap(lambda d: st.tuples(unit_vectors(d), arrays(float, d, elements=finite))))
def test_double_cross_equals_projection(xy):
    x, y = xy
    assert np.abs(geometry.double_cross(x, y) - geometry.projector(x) @ y).max() <= 1e-12 * max(1, np.abs(y).max())


def test_cross_two_dimensional_is_scalar():
    assert geometry.cross([1.0, 0.0], [0.0, 1.0]) == 1.0
    np.testing.assert_allclose(geometry.cross([1.0, 0, 0], [0, 1.0, 0]), [0, 0, 1])


def test_heading_rate_examples():
    np.testing.assert_allclose(geometry.heading_rate([1.0, 0.0], 1.0), [0, 1])
    np.testing.assert_allclose(geometry.heading_rate([1.0, 0, 0], [0, 0, 1.0]), [0, 1, 0])
    np.testing.assert_array_equal(geometry.heading_rate([0.6, 0.8], 0.0), [0, 0])
    np.testing.assert_array_equal(geometry.heading_rate([0.6, 0.8, 0], np.zeros(3)), [0, 0, 0])


@given(unit_vectors(3), arrays(float, 3, elements=finite))
def test_heading_rate_orthogonal_3d(h, w):
    assert abs(geometry.heading_rate(h, w) @ h) <= 1e-12 * max(1, np.abs(w).max())


@given(unit_vectors(2), finite)
def test_heading_rate_orthogonal_2d(h, w):
    assert abs(geometry.heading_rate(h, w) @ h) <= 1e-12 * max(1, abs(w))


def _rk4_heading(h, w, dt):
    k1 = geometry.heading_rate(h, w)
    k2 = geometry.heading_rate(h + dt / 2 * k1, w)
    k3 = geometry.heading_rate(h + dt / 2 * k2, w)
    k4 = geometry.heading_rate(h + dt * k3, w)
    return geometry.normalize(h + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))


@pytest.mark.parametrize("d", [2, 3])
def test_heading_norm_preserved_over_many_steps(d):
    rng = np.random.default_rng(d)
    h = rng.normal(size=(64, d))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    w = rng.normal(scale=2.0, size=64 if d == 2 else (64, 3))
    for _ in range(100_000):
        h = _rk4_heading(h, w, 0.005)
    assert np.abs(np.linalg.norm(h, axis=1) - 1).max() <= 1e-12


def test_zero_angular_velocity_shapes():
    assert geometry.zero_angular_velocity(2).shape == ()
    assert geometry.zero_angular_velocity(3, (4,)).shape == (4, 3)
