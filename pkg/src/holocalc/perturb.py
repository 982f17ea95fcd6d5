"""f(T + S) as a Taylor series in a commuting perturbation S."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calib import Calibration, as_operator, is_quotient_bounded, phat
from .contour import Domain, build_cauchy_contour
from .errors import ConvergenceError, PreconditionError
from .funcalc import _scale, defect_norm, funcalc, taylor_operators
from .holofun import HoloFun
from .spectral import ResolventCache, log_power_norms, spectral_radius

__all__ = ["PerturbationResult", "perturbation_series", "is_quasinilpotent"]


@dataclass
class PerturbationResult:
    value: np.ndarray
    terms_used: int
    tail_estimate: float
    direct_deviation: float
    term_norms: list
    ratio_bound: float
    radius_S: float
    distance: float
    perturbed_spectrum_in_domain: bool
    tol: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        from .io import operator_to_json

        return {
            "value": operator_to_json(self.value),
            "terms_used": self.terms_used,
            "tail_estimate": self.tail_estimate,
            "direct_deviation": self.direct_deviation,
            "term_norms": self.term_norms,
            "ratio_bound": self.ratio_bound,
            "radius_S": self.radius_S,
            "distance_to_complement": self.distance,
            "perturbed_spectrum_in_domain": self.perturbed_spectrum_in_domain,
            "tol": self.tol,
            "provenance": self.provenance,
        }


def perturbation_series(P: Calibration, T, S, f: HoloFun, D: Domain, tol: float = 1e-12,
                        max_order: int = 256, check_direct: bool = True) -> PerturbationResult:
    """sum_{n>=0} f^(n)(T)/n! S^n for S commuting with T.

    Needs the certified radius of S below d = dist(spectrum of T, complement
    of D).  Terms decay at least like (r(S)/d)^n; summation stops when a
    term and its geometric tail are both below tol, or when S^n vanishes.
    """
    T = as_operator(T, P.dim)
    S = as_operator(S, P.dim)
    inf = lambda A: float(np.linalg.norm(A, np.inf))
    comm = inf(T @ S - S @ T)
    if comm > 1e-12 * max(inf(T) * inf(S), 1e-300):
        raise PreconditionError(f"T and S do not commute: ||TS - ST|| = {comm:.3e}")
    f.check_domain(D)
    eigs = np.linalg.eigvals(T)
    if not np.all(D.contains(eigs)):
        raise PreconditionError("spectrum of T is not inside the domain")
    d = float(np.min(D.depth(eigs)))
    r_S = spectral_radius(P, S, 60).certified if np.any(S) else 0.0
    if not r_S < d:
        raise PreconditionError(f"certified radius of S ({r_S:.6g}) is not below distance {d:.6g} to the domain boundary")
    q = r_S / d

    eig_sum = np.linalg.eigvals(T + S)
    in_domain = bool(np.all(D.contains(eig_sum)))

    contour = build_cauchy_contour(eigs, f.poles(), D)
    cache = ResolventCache(T)
    n = T.shape[0]
    total = np.zeros((n, n), dtype=complex)
    Sn = np.eye(n, dtype=complex)
    norms: list[float] = []
    order = 32
    C, _ = taylor_operators(P, T, f, order, contour, tol, cache)
    k = 0
    tail = math.inf
    while True:
        if k > order:
            if order >= max_order:
                raise ConvergenceError(f"perturbation series not converged after {max_order} terms")
            order = min(2 * order, max_order)
            C, _ = taylor_operators(P, T, f, order, contour, tol, cache)
        if k and not np.any(Sn):
            tail = 0.0
            break
        term = C[k] @ Sn
        total += term
        t = defect_norm(P, term, _scale(term))
        norms.append(t)
        q_obs = q
        if len(norms) >= 4 and norms[-4] > 0 and norms[-1] > 0:
            q_obs = max(q, (norms[-1] / norms[-4]) ** (1 / 3))
        if q_obs < 1:
            tail = t * q_obs / (1 - q_obs)
            if t < tol and tail < tol:
                k += 1
                break
        k += 1
        Sn = Sn @ S

    deviation = math.nan
    if check_direct:
        if not in_domain:
            raise PreconditionError("spectrum of T + S left the domain")
        c2 = build_cauchy_contour(eig_sum, f.poles(), D)
        direct = funcalc(P, T + S, f, c2, tol)
        deviation = defect_norm(P, total - direct, _scale(direct))
    return PerturbationResult(
        total, k, tail, deviation, norms, q, r_S, d, in_domain, tol,
        {
            "value": "sum_n C_n S^n, C_n = contour quadrature of the n-th Taylor coefficient of f",
            "tail_estimate": "last term * q/(1-q), q = max(r(S)/d, observed ratio)",
            "direct_deviation": "||series - f(T+S)||_P, f(T+S) by contour quadrature",
        },
    )


def is_quasinilpotent(P: Calibration, T, n_max: int = 60, threshold: float = 1e-8) -> dict:
    """Radius-zero test by the inf-form estimate, cross-checked against the spectrum."""
    T = as_operator(T, P.dim)
    if not is_quotient_bounded(P, T):
        raise PreconditionError("operator is not quotient bounded for this calibration")
    logs = log_power_norms(P, T, n_max)
    dead = np.all(np.isneginf(logs), axis=0)
    hit = int(np.argmax(dead) + 1) if np.any(dead) else None
    est = spectral_radius(P, T, n_max)
    inf_form = est.certified
    eig = est.by_formula["eigen_oracle"]
    by_radius = inf_form < threshold
    by_spectrum = eig < threshold
    return {
        "quasinilpotent": bool(by_radius and by_spectrum),
        "inf_form": inf_form,
        "zero_power_at": hit,
        "eigen_radius": eig,
        "spectrum_is_zero": bool(by_spectrum),
        "equivalence_consistent": bool(by_radius == by_spectrum),
        "phat_T": [float(phat(p, T)) for p in P],
        "n_max": n_max,
        "provenance": {
            "inf_form": "max_p min_{n<=n_max} p^(T^n)^(1/n)",
            "eigen_radius": "max |eig(T)|",
        },
    }
