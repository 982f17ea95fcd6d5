import numpy as np
import pytest

from holocalc.calib import Calibration, norm_P
from holocalc.contour import Circle, Contour
from holocalc.errors import PreconditionError
from holocalc.funcalc import funcalc
from holocalc.holofun import Poly
from holocalc.projections import (
    SpectralSet,
    projection_algebra_check,
    resolvent_lower_bound_check,
    spectral_projection,
    verify_resolvent_power_bound,
)
from holocalc.spectral import eigen_radius

from oracles import rand_complex


def test_projection_examples():
    P = Calibration.uniform(2)
    T = np.diag([1.0, 3.0])
    r = spectral_projection(P, T, [0], gap=0.5)
    assert np.allclose(r.projector, np.diag([1, 0]), atol=1e-12)
    assert r.multiplicity == 1 and r.trace_defect < 1e-12
    assert np.array_equal(spectral_projection(P, T, [], gap=0.5).projector, np.zeros((2, 2)))
    assert np.allclose(spectral_projection(P, T, [0, 1], gap=0.5).projector, np.eye(2), atol=1e-12)


def test_projection_on_defective_block():
    # Jordan block at 1 plus a simple eigenvalue at 4
    T = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 4.0]])
    P = Calibration.uniform(3)
    r = spectral_projection(P, T, [0], gap=0.5)
    assert r.multiplicity == 2 and r.trace_defect < 1e-10
    assert np.allclose(r.projector, np.diag([1, 1, 0]), atol=1e-10)


def test_bad_cluster_index_and_tiny_gap():
    P = Calibration.uniform(2)
    with pytest.raises(PreconditionError):
        spectral_projection(P, np.diag([1.0, 3.0]), [2], gap=0.5)
    with pytest.raises(PreconditionError):
        spectral_projection(P, np.diag([1.0, 3.0]), [0], gap=1e-12)


def test_algebra_examples():
    P = Calibration.uniform(3)
    T = np.diag([1.0, 3.0, 7.0])
    rep = projection_algebra_check(P, T, [0], [0], gap=0.5)
    assert rep["intersection_deviation"] < 1e-12 and rep["union_deviation"] is None
    rep = projection_algebra_check(P, T, [0], [1], gap=0.5)
    assert np.allclose(rep["union_projector"], np.diag([1, 1, 0]), atol=1e-12)
    assert rep["union_deviation"] < 1e-12 and rep["intersection_deviation"] < 1e-12
    rep = projection_algebra_check(P, T, [0, 1], [2], gap=0.5)
    assert norm_P(P, rep["union_projector"] - np.eye(3)) < 1e-12


def test_uniqueness_over_contours():
    P = Calibration.uniform(2)
    T = np.array([[1, 2], [0, 3.0]])
    r = spectral_projection(P, T, [0], gap=0.5)
    other = Contour((Circle(1 + 0j, 1.5),), 0.5)
    Q2 = funcalc(P, T, Poly([1.0]), other)
    assert norm_P(P, r.projector - Q2) <= 1e-11


def test_commutant_property():
    rng = np.random.default_rng(3)
    V = np.eye(4) + 0.3 * rand_complex(rng, 4, 4)
    T = V @ np.diag([0, 1, 2, 3.0]) @ np.linalg.inv(V)
    P = Calibration.from_weights([[1, 2, 1, 1], [0.5, 0.5, 3, 1]])
    Q = spectral_projection(P, T, [1, 3], gap=0.5).projector
    for _ in range(50):
        a = rand_complex(rng, 3)
        S = a[0] * np.eye(4) + a[1] * T + a[2] * T @ T
        assert norm_P(P, Q @ S - S @ Q) <= 1e-9 * max(1, norm_P(P, S))


def test_projector_radius_zero_or_one():
    rng = np.random.default_rng(4)
    T = rand_complex(rng, 4, 4)
    eigs = np.linalg.eigvals(T)
    gap = 0.5 * np.min([abs(a - b) for i, a in enumerate(eigs) for b in eigs[i + 1:]])
    P = Calibration.uniform(4)
    Q = spectral_projection(P, T, [0], gap).projector
    assert eigen_radius(Q) == pytest.approx(1, abs=1e-8)
    assert eigen_radius(Q - Q @ Q) < 1e-8


def test_power_bound_examples():
    P = Calibration.uniform(1)
    rep = verify_resolvent_power_bound(P, [[0.0]], [1.0], eps0=0.5, n_max=10)
    assert np.allclose(rep["envelope"][0], 0.5 ** np.arange(1, 11))
    rep = verify_resolvent_power_bound(P, [[1.0]], [3.0], eps0=1.0, n_max=10)
    assert np.allclose(rep["envelope"][0], 0.5 ** np.arange(1, 11)) and rep["bounded"]
    rep = verify_resolvent_power_bound(P, [[0.0]], [1.001], eps0=1.0, n_max=40)
    assert np.all(np.isfinite(rep["envelope"])) and rep["bounded"]
    with pytest.raises(PreconditionError):
        verify_resolvent_power_bound(P, [[0.0]], [0.4], eps0=0.5)


def test_lower_bound_examples():
    rep = resolvent_lower_bound_check([[1.0]], 2.0, [Calibration.uniform(1)])
    assert rep["per_calibration"][0]["norm_R"] == pytest.approx(1) and rep["all_hold"]
    rep = resolvent_lower_bound_check(np.diag([1.0, 3.0]), 2.0, [Calibration.uniform(2)])
    assert rep["per_calibration"][0]["norm_R"] >= 1
    rep = resolvent_lower_bound_check([[1, 1], [0, 1.0]], 1.5, [Calibration.uniform(2)])
    assert rep["per_calibration"][0]["norm_R"] >= 2 and rep["all_hold"]
    with pytest.raises(PreconditionError):
        resolvent_lower_bound_check([[0, 1], [0, 0.0]], 1.0, [Calibration.from_weights([[1, 0], [1, 1]])])


def test_spectral_set_construction():
    H = SpectralSet.of([2, 0, 2], 0.1)
    assert H.members == frozenset({0, 2})
