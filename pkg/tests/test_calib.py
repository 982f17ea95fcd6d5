import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holocalc.calib import (
    Calibration,
    DerivedSeminorm,
    WeightedSup,
    is_quotient_bounded,
    is_universally_bounded,
    mixed_seminorm,
    mixed_seminorm_estimate,
    norm_P,
    phat,
    principal_closure,
    q_equivalent,
    seminorm_eval,
)
from holocalc.errors import DimensionError, PreconditionError

from oracles import brute_mixed, rand_complex

N = [[0, 1], [0, 0]]


def test_seminorm_eval_examples():
    assert seminorm_eval(WeightedSup([1, 2]), [3, -1]) == 3
    assert seminorm_eval(WeightedSup([4, 5]), [0, 0]) == 0
    assert seminorm_eval(WeightedSup([0, 1]), [5, 0]) == 0


def test_seminorm_dimension_mismatch():
    with pytest.raises(DimensionError):
        seminorm_eval(WeightedSup([1, 1]), [1, 2, 3])


def test_negative_weights_rejected():
    with pytest.raises(PreconditionError):
        WeightedSup([1, -1])


def test_calibration_must_separate():
    with pytest.raises(PreconditionError):
        Calibration.from_weights([[1, 0], [2, 0]])
    with pytest.raises(DimensionError):
        Calibration((WeightedSup([1, 1]), WeightedSup([1, 1, 1])))


def test_principal_flag_verified():
    with pytest.raises(PreconditionError):
        Calibration((WeightedSup([1, 0]), WeightedSup([0, 1])), principal=True)
    assert Calibration.from_weights([[1, 0], [1, 1]]).principal


def test_mixed_seminorm_examples():
    p = WeightedSup([1, 1])
    assert mixed_seminorm(p, p, N).value == pytest.approx(1)
    assert mixed_seminorm(WeightedSup([3, 0.5]), WeightedSup([3, 0.5]), np.eye(2)).value == pytest.approx(1)
    inf = mixed_seminorm(WeightedSup([1, 0]), WeightedSup([1, 1]), N)
    assert not inf.is_finite and float(inf) == math.inf and inf.to_json() == "inf"


def test_mixed_seminorm_dimension_mismatch():
    with pytest.raises(DimensionError):
        mixed_seminorm(WeightedSup([1, 1]), WeightedSup([1, 1, 1]), np.eye(2))


@pytest.mark.parametrize("n", [2, 3])
def test_closed_form_matches_brute_force(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        T = rand_complex(rng, n, n)
        w = rng.uniform(0.2, 2, n)
        v = rng.uniform(0.2, 2, n)
        exact = mixed_seminorm(WeightedSup(w), WeightedSup(v), T).value
        brute = brute_mixed(w, v, T)
        assert brute <= exact * (1 + 1e-12)
        assert brute >= 0.99 * exact


def test_closed_form_infinite_matches_brute_force():
    w, v = [1, 0], [1, 1]
    assert brute_mixed(w, v, N) > 1e7
    assert brute_mixed([1, 0], [1, 1], [[0, 0], [1, 0]]) == pytest.approx(
        mixed_seminorm(WeightedSup(w), WeightedSup(v), [[0, 0], [1, 0]]).value)


def test_three_formulas_agree():
    # sup over p(x) = 1, over p(x) <= 1, and the least M with q(Tx) <= M p(x)
    rng = np.random.default_rng(5)
    T = rand_complex(rng, 3, 3)
    p, q = WeightedSup([1, 2, 0.5]), WeightedSup([0.3, 1, 1])
    m = mixed_seminorm(p, q, T).value
    X = rand_complex(rng, 3, 4000)
    ratios = q(T @ X) / p(X)
    assert ratios.max() <= m * (1 + 1e-12)
    X1 = X / p(X)
    assert np.all(q(T @ X1) <= m * (1 + 1e-12))
    assert brute_mixed(p.weights, q.weights, T) == pytest.approx(m, rel=1e-2)


def test_estimate_examples():
    p = WeightedSup([1, 1])
    assert mixed_seminorm_estimate(p, p, np.eye(2)) == pytest.approx(1)
    est = mixed_seminorm_estimate(p, p, N, samples=10_000)
    assert est == pytest.approx(1, rel=0.05)
    assert est <= 1 + 1e-12
    assert mixed_seminorm_estimate(WeightedSup([0, 0]), p, np.eye(2)) == 0.0


def test_estimate_below_exact():
    rng = np.random.default_rng(1)
    for _ in range(5):
        T = rand_complex(rng, 3, 3)
        w, v = WeightedSup(rng.uniform(0.1, 1, 3)), WeightedSup(rng.uniform(0.1, 1, 3))
        assert mixed_seminorm_estimate(w, v, T, 2000) <= mixed_seminorm(w, v, T).value * (1 + 1e-12)


def test_derived_seminorm_estimated():
    d = DerivedSeminorm(np.eye(2))
    val = mixed_seminorm(d, d, N)
    assert val.estimated and val.value <= 1 + 1e-12


def test_phat_examples():
    p = WeightedSup([1, 1])
    assert phat(p, np.eye(2)).value == 1
    assert phat(WeightedSup([2, 7]), 2 * np.eye(2)).value == pytest.approx(2)
    assert phat(p, [[1, 1], [0, 1]]).value == pytest.approx(2)


def test_quotient_bounded_examples():
    rng = np.random.default_rng(0)
    assert is_quotient_bounded(Calibration.from_weights([[1, 2], [3, 1]]), rand_complex(rng, 2, 2))
    P = Calibration.from_weights([[1, 0], [1, 1]])
    assert not is_quotient_bounded(P, N)
    assert is_quotient_bounded(P, [[0, 0], [1, 0]])


def test_universally_bounded_examples():
    assert is_universally_bounded(Calibration.uniform(2), np.eye(2)) == (True, 1.0)
    ok, b = is_universally_bounded(Calibration.uniform(2), np.diag([3, 1]))
    assert ok and b == pytest.approx(3)
    assert is_universally_bounded(Calibration.from_weights([[1, 0], [1, 1]]), N) == (False, None)


def test_principal_closure_examples():
    C = principal_closure(Calibration.from_weights([[1, 0], [0, 1]]))
    assert any(np.array_equal(p.weights, [1, 1]) for p in C) and C.principal
    P = Calibration.from_weights([[1, 0], [1, 1]])
    assert len(principal_closure(P)) == 2


def test_principal_closure_three_members():
    P = Calibration.from_weights([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    C = principal_closure(P)
    assert len(C) <= 7 and C.is_directed()
    for i in range(3):
        assert np.array_equal(C[i].weights, P[i].weights)


def test_q_equivalence_with_closure():
    # the closure adds (1,1,2) and (2,1,2), both with full support like (2,1,1)
    P = Calibration.from_weights([[1, 0, 2], [1, 1, 0], [2, 1, 1]])
    assert q_equivalent(P, principal_closure(P))
    # here max((1,0),(0,1)) has a support no member of P has
    Q = Calibration.from_weights([[1, 0], [0, 1]])
    assert not q_equivalent(Q, principal_closure(Q))


def test_q_equivalence_is_support_matching():
    A = Calibration.from_weights([[1, 0], [0, 1]])
    B = Calibration.from_weights([[5, 0], [0, 0.1]])
    assert q_equivalent(A, B)
    assert not q_equivalent(A, Calibration.uniform(2))


def test_q_equivalence_sampled_path():
    A = Calibration((DerivedSeminorm(np.eye(2)),))
    B = Calibration((DerivedSeminorm(2 * np.eye(2)), DerivedSeminorm([[1, 1], [0, 1]])))
    assert q_equivalent(A, B)
    C = Calibration((DerivedSeminorm([[1, 0]]), DerivedSeminorm([[0, 1]])))
    assert not q_equivalent(A, C)


weights = st.lists(st.floats(0.1, 5), min_size=3, max_size=3)


@settings(max_examples=60, deadline=None)
@given(w=weights, seed=st.integers(0, 10_000))
def test_submultiplicative(w, seed):
    rng = np.random.default_rng(seed)
    S, T = rand_complex(rng, 3, 3), rand_complex(rng, 3, 3)
    p = WeightedSup(w)
    assert phat(p, S @ T).value <= phat(p, S).value * phat(p, T).value * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_submultiplicative_with_kernels(seed):
    rng = np.random.default_rng(seed)
    w = np.array([1.0, 2.0, 0.0])
    # block triangular: ker p = span(e3) is invariant
    S, T = rand_complex(rng, 3, 3), rand_complex(rng, 3, 3)
    S[:2, 2] = 0
    T[:2, 2] = 0
    p = WeightedSup(w)
    assert phat(p, S @ T).value <= phat(p, S).value * phat(p, T).value * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_universal_implies_quotient(seed):
    rng = np.random.default_rng(seed)
    W = rng.uniform(0, 2, (2, 3))
    W[rng.random((2, 3)) < 0.3] = 0
    W[0] = np.maximum(W[0], 0.1)
    P = Calibration.from_weights(W)
    T = rand_complex(rng, 3, 3) * (rng.random((3, 3)) < 0.6)
    ok, _ = is_universally_bounded(P, T)
    if ok:
        assert is_quotient_bounded(P, T)


def test_norm_is_least_common_constant():
    rng = np.random.default_rng(3)
    P = Calibration.from_weights([[1, 2, 0.5], [2, 0.1, 1]])
    T = rand_complex(rng, 3, 3)
    M = norm_P(P, T)
    X = rand_complex(rng, 3, 5000)
    for p in P:
        assert np.all(p(T @ X) <= M * p(X) * (1 + 1e-12))
    # attained up to sampling for the maximizing member
    k = int(np.argmax([phat(p, T).value for p in P]))
    w = P[k].weights
    i = int(np.argmax(w * (np.abs(T) / w).sum(axis=1)))
    x = np.exp(-1j * np.angle(T[i])) / w
    assert P[k](T @ x) / P[k](x) == pytest.approx(M, rel=1e-12)
