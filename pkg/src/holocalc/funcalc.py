"""Holomorphic functional calculus by contour quadrature of the resolvent."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .calib import Calibration, as_operator, norm_P
from .contour import Contour, Domain, build_cauchy_contour, quadrature_nodes, winding_number
from .errors import ConvergenceError, PreconditionError
from .holofun import Compose, HoloFun, PowerSeries
from .spectral import ResolventCache, spectral_radius

__all__ = [
    "MAX_NODES",
    "OperatorValuedFun",
    "FuncalcResult",
    "defect_norm",
    "default_contour",
    "apply_funcalc",
    "funcalc",
    "taylor_operators",
    "apply_operator_valued",
    "funcalc_power_series",
    "matched_distance",
    "spectral_mapping_check",
    "composition_check",
]

MAX_NODES = 4096


def defect_norm(P: Calibration, X, scale: float = 1.0) -> float:
    """||X||_P, ignoring kernel-invariance violations below 1e-13 * scale.

    Quadrature noise would otherwise put tiny entries where kernel
    invariance demands zeros and make every defect infinite.
    """
    X = np.asarray(X)
    return norm_P(P, X, atol=1e-13 * max(scale, 1.0))


def _scale(*mats) -> float:
    return max([1.0] + [float(np.max(np.abs(m))) for m in mats])


def default_contour(T, f: HoloFun | None = None, nodes: int = 128) -> Contour:
    """Circles around the whole spectrum of T avoiding the singularities of f."""
    T = as_operator(T)
    eigs = np.linalg.eigvals(T)
    excluded = f.poles() if f is not None else np.zeros(0)
    domain = None
    g = f
    while isinstance(g, Compose):
        g = g.inner
    if isinstance(g, PowerSeries):
        domain = Domain.disk(0, g.radius)
    contour = build_cauchy_contour(eigs, excluded, domain, nodes=nodes)
    if f is not None:
        f.check_contour(contour)
    return contour


@dataclass
class FuncalcResult:
    value: np.ndarray
    nodes_per_circle: int
    change: float
    commutation_defect: float
    contour: Contour
    tol: float
    provenance: dict = field(default_factory=dict)
    rounding_floor: float = 0.0

    def to_dict(self):
        from .io import operator_to_json

        return {
            "value": operator_to_json(self.value),
            "nodes_per_circle": self.nodes_per_circle,
            "last_doubling_change": self.change,
            "rounding_floor": self.rounding_floor,
            "commutation_defect": self.commutation_defect,
            "contour": self.contour.to_dict(),
            "tol": self.tol,
            "provenance": self.provenance,
        }


def _check_contour_for(T_cache: ResolventCache, contour: Contour):
    for z in T_cache.eigs:
        w = winding_number(contour, z)
        if w not in (0, 1):
            raise PreconditionError(f"eigenvalue {z} has winding number {w}; contour must give 0 or 1")


def _adaptive(P, contour: Contour, cache: ResolventCache, integrand, tol: float, max_nodes: int,
              weight=None):
    """Double the node count until successive quadratures agree within tol.

    ``integrand(nodes, weights, R)`` returns the quadrature sum; the same
    resolvent batch is reused through the cache.  When ``weight(nodes)``
    gives the scalar factor of the integrand, the rounding floor
    64 eps ||sum_j |w_j f_j| |R_j| ||_P is also accepted as agreement.
    Returns (value, nodes, change, contour, floor).
    """
    N = max(c.nodes for c in contour.circles)
    prev = None
    while True:
        cur_contour = contour.with_nodes(N)
        lam, w = quadrature_nodes(cur_contour)
        R = cache.at(lam)
        val = integrand(lam, w, R)
        floor = 0.0
        if weight is not None:
            mag = np.einsum("j,jab->ab", np.abs(w * weight(lam)), np.abs(R))
            floor = 64 * np.finfo(float).eps * defect_norm(P, mag, _scale(mag))
        if prev is not None:
            change = defect_norm(P, val - prev, _scale(val))
            if change < max(tol, floor):
                return val, N, change, cur_contour, floor
        if 2 * N > max_nodes:
            raise ConvergenceError(
                f"quadrature did not stabilise below tol={tol} by {N} nodes per circle; "
                "check contour placement and analyticity"
            )
        prev = val
        N *= 2


def apply_funcalc(P: Calibration, T, f: HoloFun, contour: Contour | None = None, tol: float = 1e-12,
                  cache: ResolventCache | None = None, max_nodes: int = MAX_NODES) -> FuncalcResult:
    """f(T) = (1/2 pi i) * integral over the contour of f(l) R(l, T) dl."""
    T = as_operator(T, P.dim)
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    cache = cache or ResolventCache(T)
    contour = contour or default_contour(T, f)
    _check_contour_for(cache, contour)
    f.check_contour(contour)

    def integrand(lam, w, R):
        return np.einsum("j,jab->ab", w * f(lam), R)

    val, N, change, used, floor = _adaptive(P, contour, cache, integrand, tol, max_nodes, weight=f)
    comm = defect_norm(P, val @ T - T @ val, _scale(val, T) * _scale(T))
    return FuncalcResult(
        val, N, change, comm, used, tol,
        {"value": f"trapezoid sum w_j f(l_j) R(l_j,T), f={f.spec()}",
         "commutation_defect": "||F T - T F||_P",
         "last_doubling_change": "||F_N - F_N/2||_P",
         "rounding_floor": "64 eps ||sum |w_j f(l_j)| |R(l_j,T)| ||_P"},
        floor,
    )


def funcalc(P: Calibration, T, f: HoloFun, contour: Contour | None = None, tol: float = 1e-12,
            cache: ResolventCache | None = None) -> np.ndarray:
    """Just the matrix f(T)."""
    return apply_funcalc(P, T, f, contour, tol, cache).value


def taylor_operators(P: Calibration, T, f: HoloFun, order: int, contour: Contour | None = None,
                     tol: float = 1e-12, cache: ResolventCache | None = None,
                     max_nodes: int = MAX_NODES) -> tuple[np.ndarray, Contour]:
    """Operators f^(k)(T)/k! for k = 0..order from one shared contour.

    Each is the quadrature of the k-th Taylor coefficient of f against the
    resolvent; the resolvent solves are shared across orders.
    """
    T = as_operator(T, P.dim)
    cache = cache or ResolventCache(T)
    contour = contour or default_contour(T, f)
    _check_contour_for(cache, contour)
    f.check_contour(contour)

    def integrand(lam, w, R):
        c = f.taylor(lam, order)
        return np.einsum("kj,jab->kab", c * w[None, :], R)

    def stacked_norm_P(P_, X):
        return max(defect_norm(P_, X[k], _scale(X[k])) for k in range(X.shape[0]))

    N = max(c.nodes for c in contour.circles)
    prev = None
    while True:
        cur = contour.with_nodes(N)
        lam, w = quadrature_nodes(cur)
        val = integrand(lam, w, cache.at(lam))
        if prev is not None and stacked_norm_P(P, val - prev) < tol:
            return val, cur
        if 2 * N > max_nodes:
            raise ConvergenceError(f"Taylor-coefficient quadrature did not stabilise by {N} nodes")
        prev = val
        N *= 2


@dataclass(frozen=True)
class OperatorValuedFun:
    """f(l) = sum_k g_k(l) C_k with scalar holomorphic g_k."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((g, np.asarray(C, dtype=complex)) for g, C in self.terms))
        if not self.terms:
            raise PreconditionError("operator-valued function needs at least one term")

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        return sum(g(lam)[..., None, None] * C for g, C in self.terms)


def apply_operator_valued(P: Calibration, T, f: OperatorValuedFun, contour: Contour | None = None,
                          tol: float = 1e-12, cache: ResolventCache | None = None) -> np.ndarray:
    """sum_j w_j (sum_k g_k(l_j) C_k) R(l_j, T)."""
    T = as_operator(T, P.dim)
    for _, C in f.terms:
        as_operator(C, P.dim)
    cache = cache or ResolventCache(T)
    if contour is None:
        poles = np.concatenate([g.poles() for g, _ in f.terms])
        contour = build_cauchy_contour(cache.eigs, poles)
    _check_contour_for(cache, contour)
    for g, _ in f.terms:
        g.check_contour(contour)

    def integrand(lam, w, R):
        total = 0
        for g, C in f.terms:
            total = total + C @ np.einsum("j,jab->ab", w * g(lam), R)
        return total

    val, *_ = _adaptive(P, contour, cache, integrand, tol, MAX_NODES)
    return val


def funcalc_power_series(P: Calibration, T, coeffs, radius: float, tol: float = 1e-12,
                         max_terms: int = 10_000, n_max: int = 60):
    """sum_k a_k T^k, valid when the certified radius of T is below ``radius``.

    ``coeffs`` is a finite sequence or a callable k -> a_k.  Summation stops
    when the latest nonzero term, inflated by the geometric tail factor, is
    below tol.  Returns (value, terms_used).
    """
    T = as_operator(T, P.dim)
    r_cert = spectral_radius(P, T, n_max).certified
    if not r_cert < radius:
        raise PreconditionError(f"certified radius {r_cert:.6g} is not below series radius {radius:.6g}")
    finite = not callable(coeffs)
    coef = (lambda k: coeffs[k]) if finite else coeffs
    limit = len(coeffs) if finite else max_terms
    q_cert = r_cert / radius if math.isfinite(radius) else 0.0
    n = T.shape[0]
    power = np.eye(n, dtype=complex)
    total = np.zeros((n, n), dtype=complex)
    norms = []
    for k in range(limit):
        if k:
            power = power @ T
        if not np.any(power):
            return total, k
        a = complex(coef(k))
        if a == 0:
            continue
        term = a * power
        total += term
        t = norm_P(P, term)
        norms.append(t)
        if finite:
            continue
        q = q_cert
        if len(norms) >= 4 and norms[-4] > 0:
            q = max(q, (norms[-1] / norms[-4]) ** (1 / 3))
        if len(norms) >= 4 and q < 1 and t / (1 - q) < tol:
            return total, k + 1
    if finite:
        return total, limit
    raise ConvergenceError(f"power series did not converge in {max_terms} terms")


def matched_distance(a, b) -> float:
    """Max distance under the optimal one-to-one matching of two multisets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise PreconditionError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if a.size else 0.0


def spectral_mapping_check(P: Calibration, T, f: HoloFun, contour: Contour | None = None,
                           tol: float = 1e-12) -> dict:
    T = as_operator(T, P.dim)
    fT = funcalc(P, T, f, contour, tol)
    image = f(np.linalg.eigvals(T))
    spec = np.linalg.eigvals(fT)
    return {
        "f": f.spec(),
        "f_of_spectrum": [[z.real, z.imag] for z in image],
        "spectrum_of_fT": [[z.real, z.imag] for z in spec],
        "max_matched_distance": matched_distance(image, spec),
        "provenance": {"max_matched_distance": "optimal assignment |f(eig T) - eig f(T)|"},
    }


def composition_check(P: Calibration, T, f: HoloFun, g: HoloFun, tol: float = 1e-12) -> dict:
    """Compare (g o f)(T) with g(f(T)), each through its own contour."""
    T = as_operator(T, P.dim)
    inner_contour = default_contour(T, f)
    gf = Compose(g, f)
    gf.check_contour(inner_contour)
    lhs = funcalc(P, T, gf, inner_contour, tol)
    fT = funcalc(P, T, f, inner_contour, tol)
    outer_contour = default_contour(fT, g)
    rhs = funcalc(P, fT, g, outer_contour, tol)
    # informational: does f map the inner contour inside the outer one
    lam, _ = quadrature_nodes(inner_contour.with_nodes(256))
    nested = all(winding_number(outer_contour, z) == 1 for z in f(lam))
    return {
        "deviation": defect_norm(P, lhs - rhs, _scale(lhs)),
        "nested": nested,
        "lhs": lhs,
        "rhs": rhs,
        "provenance": {"deviation": "||(g o f)(T) - g(f(T))||_P"},
    }
