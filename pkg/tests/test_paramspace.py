import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diskturing.eigenmodes import ModeIndex
from diskturing.paramspace import (
    SweepConfig,
    beta_axis_intercepts,
    classify_region_map,
    discriminant,
    phi_coefficients,
    psi_coefficients,
    real_positive_roots,
    sweep_curves,
    table1_relations,
)
from diskturing.stability import ReactionParams, StabilityClass, classify_eta2, trace_det_arrays

UPPER = dict(gamma=1.0, mode=ModeIndex(1.7, 1, 35.0))


def sympy_coefficients(alpha, gamma, d, eta2):
    sympy = pytest.importorskip("sympy")
    b = sympy.symbols("b")
    a, g, dd, e = (sympy.nsimplify(x) for x in (alpha, gamma, d, eta2))
    s = a + b
    T = g * (b - a - s**3) / s - (dd + 1) * e
    D = (g * (b - a) / s - e) * (-g * s**2 - dd * e) + 2 * g**2 * b * s
    psi = sympy.Poly(sympy.expand(sympy.cancel((T**2 - 4 * D) * s**2)), b)
    phi = sympy.Poly(sympy.expand(sympy.cancel(T * s)), b)
    return ([float(c) for c in reversed(psi.all_coeffs())],
            [float(c) for c in reversed(phi.all_coeffs())])


@pytest.mark.parametrize("alpha,gamma,d,eta2", [(0.3, 1.0, 2.0, 0.05), (1.2, 3.0, 7.0, 0.4), (0.0, 2.0, 1.5, 1.1)])
def test_coefficients_match_symbolic(alpha, gamma, d, eta2):
    psi, phi = sympy_coefficients(alpha, gamma, d, eta2)
    np.testing.assert_allclose(psi_coefficients(alpha, gamma, d, eta2), psi, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(phi_coefficients(alpha, gamma, d, eta2), phi, rtol=1e-12, atol=1e-12)


def test_psi_leading_coefficient():
    assert psi_coefficients(0.7, 3.0, 2.0, 0.1)[-1] == pytest.approx(9.0)


def test_beta_squared_factor_at_alpha_zero():
    c = psi_coefficients(0.0, 1.0, 2.0, 0.1)
    assert c[0] == 0 and c[1] == 0


def test_roots_of_known_polynomial():
    # (b - 1)(b - 2)(b + 3)(b^2 + 1)
    c = np.polynomial.polynomial.polyfromroots([1, 2, -3, 1j, -1j]).real
    np.testing.assert_allclose(real_positive_roots(c), [1, 2], atol=1e-12)
    with pytest.raises(ValueError):
        real_positive_roots([0, 0, 0])
    assert real_positive_roots([5.0]).size == 0


@settings(max_examples=100)
@given(st.lists(st.floats(0.05, 5.0), min_size=1, max_size=5, unique=True))
def test_roots_recovered(rts):
    rts = sorted(rts)
    if np.min(np.diff(rts), initial=1) < 1e-2:
        return
    c = np.polynomial.polynomial.polyfromroots(rts)
    np.testing.assert_allclose(real_positive_roots(c), rts, rtol=1e-6, atol=1e-8)


def bisection_roots(f, lo, hi, n=20001):
    x = np.linspace(lo, hi, n)
    y = f(x)
    out = []
    for i in np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]:
        a, b = x[i], x[i + 1]
        for _ in range(80):
            m = 0.5 * (a + b)
            if np.sign(f(np.array([m]))[0]) == np.sign(f(np.array([a]))[0]):
                a = m
            else:
                b = m
        out.append(0.5 * (a + b))
    return np.array(out)


def test_psi_roots_match_bisection():
    rng = np.random.default_rng(3)
    g, d, e2 = 1.0, 2.0, UPPER["mode"].eta2
    for a in rng.uniform(0.0, 1.0, 10):
        found = real_positive_roots(psi_coefficients(a, g, d, e2))
        found = found[found <= 3]
        oracle = bisection_roots(lambda b: discriminant(a, b, g, d, e2), 1e-9, 3.0)
        assert len(found) == len(oracle)
        np.testing.assert_allclose(found, oracle, atol=1e-6)


def test_sweep_residuals_small():
    cfg = SweepConfig(d=2.0, n_sweep=120, **UPPER)
    cs = sweep_curves(cfg)
    assert len(cs.psi_points) > 0 and len(cs.phi_points) > 0
    assert cs.psi_residuals.max() < 1e-6
    assert cs.phi_residuals.max() < 1e-8
    # phi points carry a complex pair
    assert np.all(discriminant(cs.phi_points[:, 0], cs.phi_points[:, 1], 1.0, 2.0, cfg.eta2) < 0)
    np.testing.assert_allclose(cs.beta_intercepts, [0.431, 2.397], atol=1e-3)


def test_empty_phi_lower_block(tmp_path):
    cs = sweep_curves(SweepConfig(gamma=1.0, d=4.0, mode=ModeIndex(1.7, 1, 10.0), n_sweep=100))
    assert len(cs.phi_points) == 0
    text = cs.to_csv(tmp_path / "c.csv").read_text().splitlines()
    assert text[0] == "curve_id,alpha,beta,residual"


def test_intercepts_solve_discriminant():
    e2 = UPPER["mode"].eta2
    for b in beta_axis_intercepts(1.0, 2.0, e2):
        T, D = trace_det_arrays(0.0, b, 1.0, 2.0, e2)
        assert abs(T * T - 4 * D) < 1e-9 * (1 + T * T)


def test_region_map_agrees_with_pointwise():
    cfg = SweepConfig(d=7.0, n_sweep=40, **UPPER)
    rmap = classify_region_map(cfg)
    assert sum(rmap.counts().values()) == 40 * 40
    assert sum(rmap.fractions().values()) == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    for i, j in rng.integers(0, 40, (25, 2)):
        rep = classify_eta2(ReactionParams(rmap.alphas[i], rmap.betas[j], 1.0, 7.0), cfg.eta2)
        assert rmap.class_at(i, j) is rep.stability_class


def test_region_map_csv(tmp_path):
    rmap = classify_region_map(SweepConfig(d=2.0, n_sweep=5, **UPPER))
    lines = rmap.to_csv(tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "alpha,beta,class" and len(lines) == 26
    assert json.loads(json.dumps(rmap.summary()))["counts"]


def test_ladder_relations(tmp_path):
    maps = [classify_region_map(SweepConfig(d=d, n_sweep=60, **UPPER)) for d in (2, 7, 12)]
    rep = table1_relations(maps)
    assert rep.ds == [2, 7, 12]
    assert rep.nested_growing(StabilityClass.TURING)
    assert rep.strictly_decreasing(StabilityClass.HOPF)
    data = json.loads(rep.to_json(tmp_path / "l.json").read_text())
    assert len(data["per_d"]) == 3


def test_ladder_rejects_mismatch():
    a = classify_region_map(SweepConfig(d=2.0, n_sweep=10, **UPPER))
    b = classify_region_map(SweepConfig(d=3.0, n_sweep=11, **UPPER))
    c = classify_region_map(SweepConfig(gamma=1.0, d=3.0, mode=ModeIndex(1.7, 2, 35.0), n_sweep=10))
    with pytest.raises(ValueError):
        table1_relations([a, b])
    with pytest.raises(ValueError):
        table1_relations([a, c])
    with pytest.raises(ValueError):
        table1_relations([a])


@pytest.mark.parametrize("kw", [dict(alpha_max=0), dict(n_sweep=1), dict(imag_tol=0), dict(gamma=0)])
def test_invalid_sweep(kw):
    base = dict(gamma=1.0, d=2.0, mode=ModeIndex(1.7, 1, 35.0))
    base.update(kw)
    with pytest.raises(ValueError):
        SweepConfig(**base)
