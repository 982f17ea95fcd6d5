import math

import numpy as np
import pytest

from holocalc.calib import Calibration, norm_P
from holocalc.contour import Circle, Contour, build_cauchy_contour
from holocalc.errors import ConvergenceError, PreconditionError
from holocalc.funcalc import (
    OperatorValuedFun,
    apply_funcalc,
    apply_operator_valued,
    composition_check,
    default_contour,
    funcalc,
    funcalc_power_series,
    matched_distance,
    spectral_mapping_check,
    taylor_operators,
)
from holocalc.holofun import Exp, Poly, PowerSeries, Rational
from holocalc.spectral import eigen_radius, resolvent_direct

from oracles import eig_oracle, rand_complex

U2 = Calibration.uniform(2)
EXP = Exp()


def random_T(seed, n=4):
    rng = np.random.default_rng(seed)
    return rand_complex(rng, n, n) / 2


def test_identity_and_unit():
    T = random_T(0)
    P = Calibration.uniform(4)
    assert norm_P(P, funcalc(P, T, Poly([0, 1])) - T) < 1e-11
    assert norm_P(P, funcalc(P, T, Poly([1])) - np.eye(4)) < 1e-11


def test_exp_diag_example():
    r = apply_funcalc(U2, np.diag([0.0, 1.0]), EXP)
    assert np.allclose(r.value, np.diag([1, math.e]), atol=1e-10)
    assert r.commutation_defect < 1e-12
    d = r.to_dict()
    assert d["tol"] == 1e-12 and "value" in d["provenance"]


def test_exp_jordan_against_closed_form():
    J = np.array([[0.3, 1], [0, 0.3]])
    F = funcalc(U2, J, EXP)
    assert np.allclose(F, math.exp(0.3) * np.array([[1, 1], [0, 1]]), atol=1e-12)


def test_matches_eigen_oracle():
    for seed in range(5):
        T = random_T(seed, 5)
        P = Calibration.uniform(5)
        for f in (EXP, Poly([0, 0, 1]), Rational([1.0], [-5.0, 1.0])):
            F = funcalc(P, T, f)
            O = eig_oracle(T, f)
            assert norm_P(P, F - O) <= 1e-9 * norm_P(P, O)


def test_representative_independence():
    T = random_T(3)
    P = Calibration.uniform(4)
    eigs = np.linalg.eigvals(T)
    c1 = build_cauchy_contour(eigs)
    rad = np.max(np.abs(eigs)) + 1
    c2 = Contour((Circle(0j, rad),), 1.0)
    F1, F2 = funcalc(P, T, EXP, c1), funcalc(P, T, EXP, c2)
    assert norm_P(P, F1 - F2) <= 1e-10


def test_contour_must_enclose_spectrum_once():
    T = np.diag([0.0, 3.0])
    bad = Contour((Circle(0j, 1.0),), 0.5)  # misses 3
    # integrating over a contour that misses an eigenvalue is allowed (winding 0)
    F = funcalc(U2, T, Poly([1]), bad)
    assert np.allclose(F, np.diag([1, 0]), atol=1e-12)
    with pytest.raises(PreconditionError):
        funcalc(U2, T, Rational([1.0], [-0.5, 1.0]), Contour((Circle(0j, 4.0),), 0.5))


def test_pole_inside_rejected_by_default_contour_builder():
    # f has a pole at an eigenvalue: no valid contour
    with pytest.raises(PreconditionError):
        default_contour(np.diag([0.0, 5.0]), Rational([1.0], [-5.0, 1.0]))


def test_node_cap_raises_convergence_error():
    T = np.diag([0.0, 1.0])
    # a pole just outside a too-large circle makes quadrature slow
    f = Rational([1.0], [-2.0, 1.0])
    c = Contour((Circle(0.5 + 0j, 1.5 - 1e-6),), 1e-6)
    with pytest.raises(ConvergenceError):
        apply_funcalc(U2, T, f, c, tol=1e-14, max_nodes=512)


def test_operator_valued_examples():
    rng = np.random.default_rng(1)
    T = random_T(1, 3)
    P = Calibration.uniform(3)
    S = rand_complex(rng, 3, 3)
    one, ident = Poly([1]), Poly([0, 1])
    assert norm_P(P, apply_operator_valued(P, T, OperatorValuedFun(((one, S),))) - S) < 1e-10
    assert norm_P(P, apply_operator_valued(P, T, OperatorValuedFun(((ident, np.eye(3)),))) - T) < 1e-10
    C = 2 * T @ T - T + 0.5 * np.eye(3)  # commutes with T
    got = apply_operator_valued(P, T, OperatorValuedFun(((ident, C),)))
    assert norm_P(P, got - C @ T) < 1e-10


def test_power_series_examples():
    coeffs = lambda k: 1 / math.factorial(k)
    V, _ = funcalc_power_series(U2, np.zeros((2, 2)), coeffs, math.inf)
    assert np.array_equal(V, np.eye(2))
    V, k = funcalc_power_series(U2, [[0, 1], [0, 0]], coeffs, math.inf)
    assert np.array_equal(V, np.array([[1, 1], [0, 1]], complex)) and k == 2
    V, _ = funcalc_power_series(U2, np.diag([1.0, -1.0]), coeffs, math.inf)
    assert np.allclose(V, np.diag([math.e, 1 / math.e]), atol=1e-12, rtol=0)
    with pytest.raises(PreconditionError):
        funcalc_power_series(U2, np.diag([2.0, 0]), [1, 1], 1.0)


def test_power_series_matches_contour():
    T = random_T(7, 3) / 3
    P = Calibration.uniform(3)
    geo = PowerSeries(lambda k: 1.0, 1.0)  # 1/(1 - z)
    F = funcalc(P, T, geo)
    V, _ = funcalc_power_series(P, T, lambda k: 1.0, 1.0, tol=1e-15)
    assert norm_P(P, F - V) < 1e-10
    assert norm_P(P, F - resolvent_direct(T, 1.0)) < 1e-10


def test_spectral_mapping_examples():
    rep = spectral_mapping_check(U2, np.diag([1.0, 2.0]), Poly([0, 0, 1]))
    assert rep["max_matched_distance"] <= 1e-9
    assert spectral_mapping_check(U2, random_T(2, 2), Poly([0, 1]))["max_matched_distance"] < 1e-12
    rep = spectral_mapping_check(U2, [[0, 1], [0, 0]], EXP)
    assert rep["max_matched_distance"] < 1e-7


def test_matched_distance():
    assert matched_distance([1, 2, 3], [3, 1, 2]) == 0
    assert matched_distance([0, 1], [1.1, 0]) == pytest.approx(0.1)
    with pytest.raises(PreconditionError):
        matched_distance([1], [1, 2])


def test_composition_examples():
    T = np.diag([1.0, 2.0])
    rep = composition_check(U2, T, Poly([0, 0, 1]), Poly([1, 1]))
    assert np.allclose(rep["lhs"], np.diag([2, 5]), atol=1e-10)
    assert np.allclose(rep["rhs"], np.diag([2, 5]), atol=1e-10)
    rep = composition_check(U2, np.diag([0.0, 1.0]), EXP, Poly([0, 0, 1]))
    assert np.allclose(rep["lhs"], np.diag([1, math.e ** 2]), atol=1e-9)
    assert rep["deviation"] < 1e-9
    rep = composition_check(U2, random_T(4, 2), Poly([0, 1]), EXP)
    assert rep["deviation"] < 1e-10


def test_image_radius_matches_max_f_on_spectrum():
    T = random_T(5)
    P = Calibration.uniform(4)
    F = funcalc(P, T, EXP)
    assert eigen_radius(F) == pytest.approx(np.max(np.abs(np.exp(np.linalg.eigvals(T)))), rel=1e-8)


def test_continuity_bound():
    T = random_T(6, 3)
    P = Calibration.uniform(3)
    c = default_contour(T, EXP).with_nodes(256)
    f, g = EXP, Exp(1.001)
    diff = norm_P(P, funcalc(P, T, f, c) - funcalc(P, T, g, c))
    from holocalc.contour import quadrature_nodes
    lam, _ = quadrature_nodes(c)
    sup_diff = np.max(np.abs(f(lam) - g(lam)))
    sup_R = max(norm_P(P, resolvent_direct(T, z)) for z in lam)
    assert diff <= c.length / (2 * math.pi) * sup_R * sup_diff * (1 + 1e-6)


def test_taylor_operators_are_derivatives():
    T = random_T(8, 3)
    P = Calibration.uniform(3)
    C, _ = taylor_operators(P, T, EXP, 5)
    # for exp, f^(k)(T)/k! = exp(T)/k!
    E = funcalc(P, T, EXP)
    for k in range(6):
        assert norm_P(P, C[k] - E / math.factorial(k)) < 1e-10
