import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from elastoscatter.errors import ParameterError
from elastoscatter.medium import (P, SH, SV, S, incident_field, make_medium, polarization,
                                  rotation_to_e3, shear_polarizations)


def unit_vectors(n, seed=0):
    g = np.random.default_rng(seed).standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def test_make_medium_derived_values():
    m = make_medium(2, 1, np.pi)
    assert (m.c_p, m.c_s) == (2.0, 1.0)
    assert m.kappa_p == pytest.approx(np.pi / 2)
    assert m.kappa_s == pytest.approx(np.pi)


def test_zero_frequency():
    m = make_medium(0, 1, 0)
    assert m.kappa_p == m.kappa_s == 0


@pytest.mark.parametrize("lam, mu, omega, needle", [
    (-1, 1, 1, "3*lambda + 2*mu"),
    (1, 0, 1, "mu > 0"),
    (1, 1, -1, "omega"),
])
def test_make_medium_rejects(lam, mu, omega, needle):
    with pytest.raises(ParameterError, match=needle.replace("*", r"\*").replace("+", r"\+")):
        make_medium(lam, mu, omega)


@given(st.floats(-0.6, 5), st.floats(0.1, 5), st.floats(0.01, 10))
def test_pressure_slower_wavenumber(lam, mu, omega):
    assume(3 * lam + 2 * mu > 1e-9)
    m = make_medium(lam, mu, omega)
    assert m.kappa_p < m.kappa_s


def test_rotation_e1_closed_form():
    R = rotation_to_e3([1.0, 0, 0])
    # rows of the closed form at theta_x = 1, r^2 = 1
    expected = np.array([[0, 0, -1], [0, 1, 0], [1, 0, 0]], dtype=float)
    np.testing.assert_allclose(R, expected, atol=1e-15)
    np.testing.assert_allclose(R @ [1, 0, 0], [0, 0, 1], atol=1e-15)


def test_rotation_e2_determinant():
    R = rotation_to_e3([0, 1.0, 0])
    np.testing.assert_allclose(R @ [0, 1, 0], [0, 0, 1], atol=1e-15)
    # cofactor expansion along the first row
    det = (R[0, 0] * (R[1, 1] * R[2, 2] - R[1, 2] * R[2, 1])
           - R[0, 1] * (R[1, 0] * R[2, 2] - R[1, 2] * R[2, 0])
           + R[0, 2] * (R[1, 0] * R[2, 1] - R[1, 1] * R[2, 0]))
    assert det == pytest.approx(1.0)


def test_pole_conventions():
    np.testing.assert_array_equal(rotation_to_e3([0, 0, 1.0]), np.eye(3))
    np.testing.assert_array_equal(rotation_to_e3([0, 0, -1.0]), np.diag([1.0, -1, -1]))
    h, v = shear_polarizations([0, 0, 1.0])
    np.testing.assert_array_equal(h, [1, 0, 0])
    np.testing.assert_array_equal(v, [0, 1, 0])
    h, v = shear_polarizations([0, 0, -1.0])
    np.testing.assert_array_equal(v, [0, -1, 0])


def test_shear_polarizations_e1():
    h, v = shear_polarizations([1.0, 0, 0])
    np.testing.assert_allclose(h, [0, 0, -1], atol=1e-15)
    np.testing.assert_allclose(v, [0, 1, 0], atol=1e-15)


def test_rotation_sample_orthogonal():
    theta = unit_vectors(1000)
    R = rotation_to_e3(theta)
    eye = np.einsum("nki,nkj->nij", R, R)
    assert np.abs(eye - np.eye(3)).max() < 1e-10
    assert np.abs(np.einsum("nij,nj->ni", R, theta) - [0, 0, 1]).max() < 1e-10


def test_frame_right_handed_orthonormal():
    theta = unit_vectors(1000, seed=3)
    h, v = shear_polarizations(theta)
    for a, b in ((theta, h), (theta, v), (h, v)):
        assert np.abs(np.sum(a * b, axis=1)).max() < 1e-12
    det = np.linalg.det(np.stack([h, v, theta], axis=2))
    np.testing.assert_allclose(det, 1.0, atol=1e-12)


def test_closed_form_polarizations_match_rotation_rows():
    theta = unit_vectors(50, seed=5)
    tx, ty, tz = theta.T
    r2 = tx**2 + ty**2
    h_ref = np.stack([ty**2 + tx**2 * tz, tx * ty * (tz - 1), -r2 * tx], axis=1) / r2[:, None]
    v_ref = np.stack([tx * ty * (tz - 1), tx**2 + ty**2 * tz, -r2 * ty], axis=1) / r2[:, None]
    h, v = shear_polarizations(theta)
    np.testing.assert_allclose(h, h_ref, atol=1e-12)
    np.testing.assert_allclose(v, v_ref, atol=1e-12)


def test_incident_examples():
    m = make_medium(2, 1, np.pi)
    np.testing.assert_allclose(incident_field(P, [1.0, 0, 0], np.zeros(3), m), [1, 0, 0])
    np.testing.assert_allclose(incident_field(SH, [1.0, 0, 0], [1.0, 0, 0], m), [0, 0, 1],
                               atol=1e-15)
    np.testing.assert_allclose(incident_field(S(3, 4), [0, 0, 1.0], np.zeros(3), m),
                               [0.6, 0.8, 0])
    with pytest.raises(ParameterError):
        S(0, 0)


def test_sv_uses_shear_wavenumber():
    m = make_medium(2, 1, 1.3)
    theta = np.array([0.0, 0.6, 0.8])
    x = np.array([0.4, -0.2, 1.1])
    u = incident_field(SV, theta, x, m)
    _, v = shear_polarizations(theta)
    np.testing.assert_allclose(u, v * np.exp(1j * m.kappa_s * theta @ x))


def test_polarization_rejects_zero_weights():
    with pytest.raises(ParameterError):
        polarization((0.0, 0.0), [1.0, 0, 0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_pressure_wave_solves_navier(seed):
    rng = np.random.default_rng(seed)
    m = make_medium(2.0, 1.0, 1.7)
    theta = rng.standard_normal(3)
    theta /= np.linalg.norm(theta)
    x = rng.uniform(-1, 1, 3)
    h = 1e-3
    e = np.eye(3)

    def U(p):
        return incident_field(P, theta, p, m)

    u0 = U(x)
    lap = sum(U(x + h * e[a]) - 2 * u0 + U(x - h * e[a]) for a in range(3)) / h**2
    H = np.zeros((3, 3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            H[a, b] = (U(x + h * (e[a] + e[b])) - U(x + h * (e[a] - e[b]))
                       - U(x - h * (e[a] - e[b])) + U(x - h * (e[a] + e[b]))) / (4 * h**2)
    grad_div = np.array([sum(H[i, k, k] for k in range(3)) for i in range(3)])
    res = m.mu * lap + (m.lam + m.mu) * grad_div + m.omega**2 * u0
    assert np.linalg.norm(res) <= 1e-4 * np.linalg.norm(u0) / h**2
    # each term alone is of size omega^2 |U|; the residual is far below it
    assert np.linalg.norm(res) <= 1e-4 * m.omega**2 * np.linalg.norm(u0)
