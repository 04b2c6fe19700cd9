import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fjmgt.errors import ShapeError, UnsupportedScenario
from fjmgt.spectral import Interval, Rectangle, SineBasis, eigenpairs, nonlinearity


def test_interval_eigenvalues():
    lam = eigenpairs(Interval(2.0, 4)).eigenvalues
    np.testing.assert_allclose(lam, (np.arange(1, 5) * np.pi / 2.0) ** 2)


def test_rectangle_eigenvalues_sorted():
    eig = eigenpairs(Rectangle(1.0, 2.0, 3))
    assert np.all(np.diff(eig.eigenvalues) >= 0)
    i, j = eig.index[0]
    assert (i, j) == (1, 1)
    assert eig.eigenvalues[0] == pytest.approx(np.pi ** 2 * (1 + 0.25))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.floats(0.5, 3.0), st.integers(0, 2 ** 31))
def test_round_trip_interval(n, length, seed):
    basis = SineBasis(Interval(length, n))
    xi = np.random.default_rng(seed).standard_normal(n)
    np.testing.assert_allclose(basis.to_modal(basis.to_physical(xi)), xi, atol=1e-12)


def test_round_trip_rectangle_and_batching():
    basis = SineBasis(Rectangle(1.0, 1.5, 4))
    xi = np.random.default_rng(0).standard_normal((16, 3))
    np.testing.assert_allclose(basis.to_modal(basis.to_physical(xi)), xi, atol=1e-12)


def test_parseval():
    basis = SineBasis(Interval(1.3, 6))
    xi = np.random.default_rng(2).standard_normal(6)
    assert basis.l2_norm(basis.to_physical(xi)) == pytest.approx(np.linalg.norm(xi), rel=1e-12)


def test_physical_mode_shape():
    basis = SineBasis(Interval(1.0, 4))
    u = basis.to_physical(np.array([np.sqrt(0.5), 0, 0, 0]))
    np.testing.assert_allclose(u, np.sin(np.pi * basis.x[0]), atol=1e-14)


def test_coefficient_matrix_against_quadrature():
    n = 6
    # dense reference by a fine midpoint rule
    xf = (np.arange(20000) + 0.5) / 20000
    phi = np.sqrt(2) * np.sin(np.outer(xf, np.arange(1, n + 1)) * np.pi)
    ref = (phi * (1 + np.sin(np.pi * xf))[:, None]).T @ phi / 20000
    errors = []
    for J in (12, 48, 192):
        basis = SineBasis(Interval(1.0, n), quad_points=J)
        M = basis.coefficient_matrix(1.0 + np.sin(np.pi * basis.x[0]))
        np.testing.assert_allclose(M, M.T, atol=1e-14)
        errors.append(np.max(np.abs(M - ref)))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-7


def test_laplacian_and_gradient():
    basis = SineBasis(Interval(1.0, 3))
    xi = np.array([1.0, 0.0, 0.5])
    np.testing.assert_allclose(basis.laplacian(xi), -basis.eigenvalues * xi)
    g = basis.gradient_samples(np.array([np.sqrt(0.5), 0, 0]))
    np.testing.assert_allclose(g, np.pi * np.cos(np.pi * basis.x[0]), atol=1e-12)


def test_kb_vanishes_at_midpoint_for_first_mode():
    basis = SineBasis(Interval(1.0, 4), quad_points=9)
    u = np.array([np.sqrt(0.5), 0, 0, 0])
    nl = nonlinearity("KB", basis, u, u, 1.0)
    mid = np.argmin(np.abs(basis.x[0] - 0.5))
    assert abs(nl[mid]) < 1e-14


def test_wb_term():
    basis = SineBasis(Interval(1.0, 2))
    ut = np.array([np.sqrt(0.5), 0.0])
    np.testing.assert_allclose(nonlinearity("WB", basis, ut, ut, 0.5), np.sin(np.pi * basis.x[0]) ** 2, atol=1e-14)


def test_shape_errors():
    with pytest.raises(ShapeError):
        SineBasis(Interval(1.0, 8), quad_points=4)
    with pytest.raises(ShapeError):
        SineBasis(Interval(1.0, 4)).to_physical(np.zeros(3))
    with pytest.raises(ShapeError):
        Interval(-1.0, 4)
    with pytest.raises(UnsupportedScenario):
        SineBasis(Rectangle(1.0, 1.0, 2)).gradient_samples(np.zeros(4))
