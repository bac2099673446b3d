import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diskturing.eigenmodes import (
    HalfIntegerOrderError,
    ModeIndex,
    SingularPointError,
    boundary_series_terms,
    build_grid,
    diameter_sign_changes,
    eigenfunction_field,
    eigenvalue,
    is_half_integer,
    neumann_pair_residual,
    radial_value,
    series_coefficients,
)


def exact_eta2(n, k, rho=1):
    n = Fraction(n)
    return 4 * (2 * k + 1) * (n + 2 * k + 1) * (n + 4 * k) / (Fraction(rho) ** 2 * (n + 4 * k + 2))


def test_known_eigenvalues():
    assert eigenvalue(ModeIndex(1.7, 1, 1.0)) == pytest.approx(float(exact_eta2("1.7", 1)), rel=1e-14)
    assert eigenvalue(ModeIndex(2.7, 1, 1.0)) == pytest.approx(52.675862068965517, rel=1e-12)
    assert eigenvalue(ModeIndex(1.7, 1, 1.0)) == pytest.approx(41.750649350649350, rel=1e-12)


@pytest.mark.parametrize("n", [1.3, 1.7, 2.7, 0.3, 4.1])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("rho", [1.0, 10.0, 35.0])
def test_pair_cancels(n, k, rho):
    assert neumann_pair_residual(ModeIndex(n, k, rho)) < 1e-10


def test_detuned_pair_does_not_cancel():
    mode = ModeIndex(1.7, 1)
    assert neumann_pair_residual(mode, eta2=1.01 * mode.eta2) > 1e-3


def test_pair_cancellation_symbolic():
    sympy = pytest.importorskip("sympy")
    n, x = sympy.symbols("n x", positive=True)
    for k in range(3):
        j = 2 * k
        a = [sympy.Integer(1)]
        for i in range(j + 1):
            a.append(-a[-1] / (4 * (i + 1) * (n + i + 1)))
        F = [a[i] * (n + 2 * i) * x ** (n + 2 * i - 1) for i in (j, j + 1)]
        x2 = 4 * (2 * k + 1) * (n + 2 * k + 1) * (n + 4 * k) / (n + 4 * k + 2)
        expr = sympy.simplify((F[0] + F[1]).subs(x, sympy.sqrt(x2)))
        assert expr == 0


@given(st.floats(0.05, 6.0), st.integers(0, 4), st.floats(0.1, 100.0))
def test_eta_rho_scale_free(n, k, rho):
    if is_half_integer(n):
        return
    a = math.sqrt(eigenvalue(ModeIndex(n, k, rho))) * rho
    b = math.sqrt(eigenvalue(ModeIndex(n, k, 1.0)))
    assert a == pytest.approx(b, rel=1e-12)


def test_eigenvalue_increases_with_k():
    vals = [eigenvalue(ModeIndex(1.7, k)) for k in range(6)]
    assert np.all(np.diff(vals) > 0)


def test_coefficients_closed_form():
    n = 1.7
    a, b = series_coefficients(ModeIndex(n, 0), 6)
    for j in range(7):
        pa = math.prod(n + m for m in range(1, j + 1))
        pb = math.prod(-n + m for m in range(1, j + 1))
        assert a[j] == pytest.approx((-1) ** j / (4**j * math.factorial(j) * pa), rel=1e-14)
        assert b[j] == pytest.approx((-1) ** j / (4**j * math.factorial(j) * pb), rel=1e-14)


def test_radial_value_matches_direct_sum():
    mode = ModeIndex(1.3, 1, 2.0)
    r = np.array([0.05, 0.4, 1.0, 2.0])
    a, b = series_coefficients(mode, 40)
    x = math.sqrt(mode.eta2) * r
    j = np.arange(41)
    direct = (a[None] * x[:, None] ** (1.3 + 2 * j) + b[None] * x[:, None] ** (-1.3 + 2 * j)).sum(axis=1)
    np.testing.assert_allclose(radial_value(mode, r, 40), direct, rtol=1e-12)
    assert isinstance(radial_value(mode, 1.0), float)


def test_radial_value_solves_bessel_ode():
    # R'' + R'/r + (eta^2 - n^2/r^2) R = 0, checked by central differences
    mode = ModeIndex(1.7, 1)
    r, h = 0.6, 1e-4
    R = [radial_value(mode, r + s * h) for s in (-1, 0, 1)]
    d2 = (R[2] - 2 * R[1] + R[0]) / h**2
    d1 = (R[2] - R[0]) / (2 * h)
    resid = d2 + d1 / r + (mode.eta2 - 1.7**2 / r**2) * R[1]
    assert abs(resid) < 1e-4 * max(abs(d2), abs(R[1]))


def test_singular_point_rejected():
    with pytest.raises(SingularPointError):
        radial_value(ModeIndex(1.7, 1), 0.0)
    with pytest.raises(SingularPointError):
        radial_value(ModeIndex(1.7, 1), np.array([0.5, -0.1]))


@pytest.mark.parametrize("n", [0.5, 1.5, 2.0, 3.0, 2.5 + 1e-12])
def test_half_integer_lattice_rejected(n):
    with pytest.raises(HalfIntegerOrderError, match="half-integer order"):
        ModeIndex(n, 1)


@pytest.mark.parametrize("kw", [dict(n=-1.3, k=1), dict(n=1.7, k=-1), dict(n=1.7, k=1.5), dict(n=1.7, k=1, rho=0.0)])
def test_invalid_mode(kw):
    with pytest.raises(ValueError):
        ModeIndex(**kw)


def test_boundary_terms_shape():
    assert boundary_series_terms(ModeIndex(1.7, 2), 7).shape == (8,)


def test_grid_parities():
    g = build_grid(95, 90)
    assert len(g.r_points) == 96 and len(g.theta_points) == 91
    assert np.all(g.r_points != 0)
    assert g.angular_step_deg == pytest.approx(4.0)
    for N, M in [(94, 90), (95, 91), (1, 90), (95, 2)]:
        with pytest.raises(ValueError):
            build_grid(N, M)


def test_field_mapping_and_csv(tmp_path):
    mode = ModeIndex(1.7, 1)
    g = build_grid(15, 12)
    fld = eigenfunction_field(mode, g)
    # negative Chebyshev radius is the mirrored point (|r|, theta + pi)
    i = len(g.r_points) - 1
    expect = radial_value(mode, abs(g.r_points[i])) * np.exp(1j * 1.7 * (g.theta_points[3] + np.pi))
    assert fld.values[i, 3] == pytest.approx(expect, rel=1e-12)
    np.testing.assert_allclose(fld.magnitude, np.abs(fld.values))
    path = fld.to_csv(tmp_path / "f.csv")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (16 * 13, 6)
    np.testing.assert_allclose(data[:, 2] + 1j * data[:, 3], fld.values.ravel(), rtol=1e-15)
    sign = np.loadtxt(fld.sign_to_csv(tmp_path / "s.csv"), delimiter=",", skiprows=1)
    assert set(np.unique(sign[:, 2])) <= {-1, 0, 1}


def test_sign_changes_grow_with_k():
    g = build_grid(95, 90)
    changes = [diameter_sign_changes(eigenfunction_field(ModeIndex(2.7, k), g)) for k in range(3)]
    assert changes[0] < changes[2]
