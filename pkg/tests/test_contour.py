import numpy as np
import pytest

from holocalc.contour import (
    Circle,
    Contour,
    Domain,
    build_cauchy_contour,
    cluster_spectrum,
    quadrature_nodes,
    winding_number,
)
from holocalc.errors import ContourError, PreconditionError


def unit(nodes=64):
    return Contour((Circle(0j, 1.0, 1, nodes),), 1.0)


def test_cluster_examples():
    assert cluster_spectrum([1, 2], 0.5) == [[0], [1]]
    assert cluster_spectrum([1, 1.1, 5], 0.2) == [[0, 1], [2]]
    assert cluster_spectrum([3 + 1j], 1e-9) == [[0]]


def test_cluster_single_linkage_chains():
    # 0 - 0.15 - 0.3 chain merges even though 0 and 0.3 are 0.3 apart
    assert cluster_spectrum([0, 0.15, 0.3, 2], 0.2) == [[0, 1, 2], [3]]


def test_contour_examples():
    c = build_cauchy_contour([0], domain=Domain.disk(0, 2))
    assert len(c.circles) == 1 and abs(c.circles[0].center) < 1e-12 and c.circles[0].radius <= 1
    c = build_cauchy_contour([1], [2], Domain.disk(0, 10))
    assert abs(c.circles[0].center - 1) < 1e-12 and c.circles[0].radius <= 0.5
    with pytest.raises(ContourError):
        build_cauchy_contour([1, 2], [1.5], Domain.disk(1.5, 0.5 + 1e-9))


def test_contour_certificate_rechecked():
    rng = np.random.default_rng(0)
    for _ in range(20):
        K = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        ex = 3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        ex = ex[np.min(np.abs(ex[:, None] - K[None, :]), axis=1) > 0.05]
        D = Domain.disk(0, 8)
        c = build_cauchy_contour(K, ex, D)
        assert all(winding_number(c, z) == 1 for z in K)
        assert all(winding_number(c, z) == 0 for z in ex)
        lam, _ = quadrature_nodes(c)
        assert np.all(D.contains(lam))
        assert np.min(np.abs(lam[:, None] - K[None, :])) >= c.separation * (1 - 1e-9)


def test_annular_exclusion_is_infeasible():
    with pytest.raises(ContourError):
        build_cauchy_contour([0, 0.1], [0.05], gap=0.2)


def test_gap_splits_around_excluded_point():
    c = build_cauchy_contour([0, 2], [1])
    assert len(c.circles) == 2 and winding_number(c, 1) == 0


def test_winding_examples():
    u = unit()
    assert winding_number(u, 0) == 1
    assert winding_number(u, 2) == 0
    two = Contour((Circle(0j, 1.0), Circle(5 + 0j, 1.0)), 0.5)
    assert winding_number(two, 5.2) == 1
    with pytest.raises(PreconditionError):
        winding_number(u, 1.0)


def test_intersecting_circles_rejected():
    with pytest.raises(ContourError):
        Contour((Circle(0j, 1.0), Circle(1.5 + 0j, 1.0)), 0.1)


def test_quadrature_examples():
    lam, w = quadrature_nodes(unit(64))
    assert abs(np.sum(w / lam) - 1) < 1e-14
    assert abs(np.sum(w)) < 1e-14
    assert abs(np.sum(w * lam ** 5)) < 1e-13


def test_quadrature_geometric_convergence():
    a = 1.6
    errs = []
    for N in (8, 16, 32):
        lam, w = quadrature_nodes(unit(N))
        errs.append(abs(np.sum(w / (lam - a))))  # exact value 0: pole outside
    # error ~ a^-N, so doubling N roughly squares it
    assert errs[1] <= 10 * errs[0] ** 2 and errs[2] <= 10 * errs[1] ** 2


def test_domain_roundtrip():
    D = Domain(((1 + 1j, 2.0), (0, 1.0)))
    assert Domain.from_dict(D.to_dict()) == D
    c = build_cauchy_contour([0.1, 1 + 1j], domain=D)
    assert Contour.from_dict(c.to_dict()).circles == c.circles
    with pytest.raises(PreconditionError):
        Domain(((0, -1.0),))
