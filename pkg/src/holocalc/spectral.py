"""Spectra, spectral radii and resolvents of operators on a calibrated space."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .calib import Calibration, as_operator, is_quotient_bounded, norm_P, phat
from .errors import ConvergenceError, PreconditionError, SingularResolventError

__all__ = [
    "Spectrum",
    "SpectralRadiusEstimate",
    "eigenvalues",
    "eigen_radius",
    "log_power_norms",
    "spectral_radius",
    "resolvent_direct",
    "ResolventCache",
    "neumann_resolvent",
    "neumann_terms_unbounded",
    "verify_resolvent_identities",
    "fd_weights",
    "TOL_SING",
]

TOL_SING = 1e-12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residuals: np.ndarray

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def __len__(self):
        return self.eigenvalues.size

    def to_dict(self):
        return {
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues],
            "radius": self.radius,
            "residuals": {"max": float(np.max(self.residuals)), "per_eigenvalue": self.residuals.tolist()},
            "provenance": "eigen_oracle:lapack_geev+svd_residual",
        }


def eigenvalues(T) -> Spectrum:
    """Eigenvalues with a backward-error certificate.

    For each eigenvalue the smallest singular value of T - lambda I is the
    residual ||Tv - lambda v|| of the best recovered unit eigenvector v.
    """
    T = as_operator(T)
    lam = np.linalg.eigvals(T)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    n = T.shape[0]
    scale = max(1.0, float(np.linalg.norm(T, 2)))
    res = np.empty(n)
    for k, z in enumerate(lam):
        res[k] = np.linalg.svd(T - z * np.eye(n), compute_uv=False)[-1]
    if np.any(res > 1e-9 * scale):
        raise ConvergenceError(f"eigenvalue residual {res.max():.3e} exceeds 1e-9 * {scale:.3e}")
    return Spectrum(lam, res)


def eigen_radius(T) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(as_operator(T)))))


def log_power_norms(P: Calibration, T, n_max: int) -> np.ndarray:
    """log p^(T^n) for every member p and n = 1..n_max, shape (len(P), n_max).

    Powers are renormalised at each step and the scale kept as a log, so
    n_max in the hundreds cannot overflow.  -inf marks p^(T^n) = 0.
    """
    T = as_operator(T, P.dim)
    out = np.full((len(P), n_max), -np.inf)
    if P.weighted:
        # kernel invariance passes from T to its powers exactly, so test once
        # and then use the weighted row sums directly
        if not is_quotient_bounded(P, T):
            raise PreconditionError("operator is not quotient bounded for this calibration")
        masks = [(p.weights > 0, p.weights) for p in P]

        def value(k, M):
            pos, w = masks[k]
            if not np.any(pos):
                return 0.0
            return float(np.max(w[pos] * (np.abs(M[np.ix_(pos, pos)]) / w[pos]).sum(axis=1)))
    else:
        def value(k, M):
            return float(phat(P[k], M))
    M = np.eye(T.shape[0], dtype=complex)
    logscale = 0.0
    for n in range(1, n_max + 1):
        M = M @ T
        s = float(np.max(np.abs(M)))
        if s == 0.0:
            break
        M = M / s
        logscale += math.log(s)
        for k in range(len(P)):
            v = value(k, M)
            if math.isinf(v):
                raise PreconditionError("operator is not quotient bounded for this calibration")
            out[k, n - 1] = logscale + math.log(v) if v > 0 else -np.inf
    return out


@dataclass(frozen=True)
class SpectralRadiusEstimate:
    by_formula: dict
    n_max: int
    converged: bool
    inf_sequence: list = field(default_factory=list, repr=False)

    @property
    def certified(self) -> float:
        return self.by_formula["inf_over_n"]

    def to_dict(self):
        return {
            "radius": dict(self.by_formula),
            "n_max": self.n_max,
            "converged": self.converged,
            "provenance": {
                "inf_over_n": "max_p min_{n<=n_max} p^(T^n)^(1/n)",
                "limsup_sup": "max_p exp(slope of log p^(T^n) over n in [n_max/2, n_max])",
                "eigen_oracle": "max |eig(T)|",
            },
        }


def spectral_radius(P: Calibration, T, n_max: int = 60) -> SpectralRadiusEstimate:
    """r_P(T) three ways.

    ``inf_over_n`` is the certified upper value: nonincreasing in n_max and
    never below the eigenvalue radius.  ``limsup_sup`` is a tail-slope
    estimate of sup_p lim p^(T^n)^(1/n) and is advisory only.
    """
    if n_max < 2:
        raise PreconditionError("n_max must be >= 2")
    T = as_operator(T, P.dim)
    if not is_quotient_bounded(P, T):
        raise PreconditionError("operator is not quotient bounded for this calibration")
    logs = log_power_norms(P, T, n_max)
    ns = np.arange(1, n_max + 1)
    with np.errstate(invalid="ignore"):
        roots = np.exp(logs / ns)  # exp(-inf) -> 0
    running = np.minimum.accumulate(roots, axis=1)
    inf_seq = np.max(running, axis=0)
    inf_form = float(inf_seq[-1])

    lo = n_max // 2
    slopes = []
    for row in logs:
        if np.isneginf(row[-1]):
            slopes.append(0.0)
        else:
            slopes.append(math.exp((row[-1] - row[lo - 1]) / (n_max - lo)))
    limsup = float(max(slopes))
    eig = eigen_radius(T)
    tail = inf_seq[int(0.9 * n_max) - 1]
    converged = bool(inf_form == 0.0 or abs(tail - inf_form) <= 1e-3 * inf_form)
    return SpectralRadiusEstimate(
        {"inf_over_n": inf_form, "limsup_sup": limsup, "eigen_oracle": eig},
        n_max, converged, inf_seq.tolist(),
    )


def _sing_scale(T: np.ndarray, lam: complex) -> float:
    return TOL_SING * max(abs(lam), float(np.linalg.norm(T, np.inf)), 1e-300)


def _check_regular(T: np.ndarray, lam: complex, eigs: np.ndarray | None = None):
    if eigs is None:
        eigs = np.linalg.eigvals(T)
    d = float(np.min(np.abs(eigs - lam)))
    if d <= _sing_scale(T, lam):
        raise SingularResolventError(f"lambda={lam} is within {d:.3e} of the spectrum")


def resolvent_direct(T, lam: complex) -> np.ndarray:
    """R(lambda, T) = (lambda I - T)^-1 by LU with partial pivoting."""
    T = as_operator(T)
    lam = complex(lam)
    _check_regular(T, lam)
    n = T.shape[0]
    A = lam * np.eye(n) - T
    lu, piv = sla.lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= _sing_scale(T, lam) * 1e-4:
        raise SingularResolventError(f"zero pivot in LU of lambda I - T at lambda={lam}")
    return sla.lu_solve((lu, piv), np.eye(n, dtype=complex), check_finite=False)


class ResolventCache:
    """Resolvents of one operator at batches of nodes, memoised by node set.

    Contour quadratures over the same circles (projections for every subset
    of clusters, Taylor-coefficient operators of every order) reuse the same
    solves.
    """

    def __init__(self, T):
        self.T = as_operator(T)
        self.n = self.T.shape[0]
        self.eigs = np.linalg.eigvals(self.T)
        self._memo: dict[bytes, np.ndarray] = {}

    def at(self, nodes: np.ndarray) -> np.ndarray:
        nodes = np.ascontiguousarray(nodes, dtype=complex)
        key = nodes.tobytes()
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        dist = np.min(np.abs(nodes[:, None] - self.eigs[None, :]), axis=1)
        scale = TOL_SING * np.maximum(np.maximum(np.abs(nodes), np.linalg.norm(self.T, np.inf)), 1e-300)
        if np.any(dist <= scale):
            bad = nodes[np.argmin(dist - scale)]
            raise SingularResolventError(f"quadrature node {bad} lies on the spectrum")
        A = nodes[:, None, None] * np.eye(self.n) - self.T[None]
        R = np.linalg.solve(A, np.broadcast_to(np.eye(self.n, dtype=complex), A.shape))
        self._memo[key] = R
        return R


def neumann_resolvent(P: Calibration, T, lam: complex, tol: float = 1e-12,
                      max_terms: int = 100_000, radius: float | None = None):
    """R(lambda, T) as sum_{n>=0} T^n / lambda^(n+1).

    Requires |lambda| above the certified radius.  Summation stops once the
    current term, inflated by the geometric tail factor 1/(1-q), is below
    tol; returns (R, terms_used).
    """
    T = as_operator(T, P.dim)
    lam = complex(lam)
    if radius is None:
        radius = spectral_radius(P, T, 60).certified
    if not abs(lam) > radius:
        raise PreconditionError(f"|lambda|={abs(lam):.6g} does not exceed certified radius {radius:.6g}")
    q_cert = radius / abs(lam)
    n = T.shape[0]
    term = np.eye(n, dtype=complex) / lam
    total = term.copy()
    norms = [norm_P(P, term)]
    for k in range(1, max_terms + 1):
        term = term @ T / lam
        t = norm_P(P, term)
        if t == 0.0:
            return total, k
        total += term
        norms.append(t)
        q = q_cert
        if k >= 5 and norms[-6] > 0:
            q = max(q, (norms[-1] / norms[-6]) ** 0.2)
        if q < 1 and t / (1 - q) < tol:
            return total, k + 1
    raise ConvergenceError(f"Neumann series did not reach tol={tol} in {max_terms} terms; radius estimate too small?")


def neumann_terms_unbounded(P: Calibration, T, lam: complex, n_max: int = 200, bound: float = 1e6):
    """Divergence side: first n <= n_max with max_p p^(T^n / lambda^n) > bound, else None."""
    logs = log_power_norms(P, T, n_max)
    per_n = np.max(logs, axis=0) - np.arange(1, n_max + 1) * math.log(abs(lam))
    hits = np.nonzero(per_n > math.log(bound))[0]
    return int(hits[0] + 1) if hits.size else None


def fd_weights(order: int, accuracy: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Central finite-difference stencil (offsets, weights) for d^order/dx^order."""
    m = (2 * ((order + 1) // 2) - 1 + accuracy) // 2
    offsets = np.arange(-m, m + 1)
    V = np.vander(offsets, increasing=True).T.astype(float)
    rhs = np.zeros(offsets.size)
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(V, rhs)


def verify_resolvent_identities(T, lam: complex, mu: complex, n: int = 1) -> dict:
    """Deviations of the first resolvent equation, the derivative formula
    d^n/dlambda^n R = (-1)^n n! R^(n+1) against a 4th-order central
    difference, and the large-|lambda| limit lambda R -> I."""
    if not 1 <= n <= 4:
        raise PreconditionError("derivative order must be in 1..4")
    T = as_operator(T)
    lam, mu = complex(lam), complex(mu)
    eigs = np.linalg.eigvals(T)
    _check_regular(T, lam, eigs)
    _check_regular(T, mu, eigs)
    Rl, Rm = resolvent_direct(T, lam), resolvent_direct(T, mu)
    inf = lambda A: float(np.linalg.norm(A, np.inf))

    first = inf(Rl - Rm - (mu - lam) * Rl @ Rm)

    dist = float(np.min(np.abs(eigs - lam)))
    h = 1e-3 * dist
    offsets, w = fd_weights(n)
    fd = sum(wk * resolvent_direct(T, lam + k * h) for k, wk in zip(offsets, w)) / h ** n
    exact = (-1) ** n * math.factorial(n) * np.linalg.matrix_power(Rl, n + 1)
    deriv_rel = inf(fd - exact) / inf(exact)

    tn = inf(T)
    big = 1e6 * max(tn, 1.0)
    limit = inf(big * resolvent_direct(T, big) - np.eye(T.shape[0]))
    return {
        "first_resolvent_equation": first,
        "derivative_order": n,
        "derivative_fd_relative": deriv_rel,
        "fd_step": h,
        "limit_probe_lambda": big,
        "limit_deviation": limit,
        "limit_bound": 3 * tn / big,
        "provenance": {
            "first_resolvent_equation": "||R(l)-R(m)-(m-l)R(l)R(m)||_inf",
            "derivative_fd_relative": "4th-order central difference vs (-1)^n n! R^(n+1)",
            "limit_deviation": "||lR(l)-I||_inf at |l| = 1e6 max(||T||,1)",
        },
    }
