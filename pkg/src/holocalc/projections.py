"""Riesz projections onto spectral sets, and resolvent bounds off the spectrum."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calib import Calibration, as_operator, is_universally_bounded, norm_P, phat
from .contour import Contour, build_cauchy_contour, cluster_spectrum
from .errors import PreconditionError
from .funcalc import _scale, apply_funcalc, defect_norm
from .holofun import Poly
from .spectral import ResolventCache, eigenvalues, resolvent_direct

__all__ = [
    "SpectralSet",
    "ProjectionReport",
    "spectral_projection",
    "projection_algebra_check",
    "verify_resolvent_power_bound",
    "resolvent_lower_bound_check",
]

_ONE = Poly([1.0])


@dataclass(frozen=True)
class SpectralSet:
    """A union of eigenvalue clusters, named by cluster index."""

    members: frozenset
    gap: float

    @classmethod
    def of(cls, members, gap: float) -> "SpectralSet":
        return cls(frozenset(int(m) for m in members), float(gap))


@dataclass
class ProjectionReport:
    projector: np.ndarray
    idempotency_defect: float
    commutation_defect: float
    trace: complex
    multiplicity: int
    set: SpectralSet
    clusters: list
    contour: Contour | None
    tol: float
    provenance: dict = field(default_factory=dict)

    @property
    def trace_defect(self) -> float:
        return abs(self.trace - self.multiplicity)

    def to_dict(self):
        from .io import complex_list, operator_to_json

        return {
            "projector": operator_to_json(self.projector),
            "idempotency_defect": self.idempotency_defect,
            "commutation_defect": self.commutation_defect,
            "trace": {"re": self.trace.real, "im": self.trace.imag},
            "multiplicity": self.multiplicity,
            "trace_defect": self.trace_defect,
            "set": sorted(self.set.members),
            "gap": self.set.gap,
            "clusters": [complex_list(c) for c in self.clusters],
            "contour": self.contour.to_dict() if self.contour else None,
            "tol": self.tol,
            "provenance": self.provenance,
        }


def _clusters(T: np.ndarray, gap: float):
    eigs = eigenvalues(T).eigenvalues
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if not gap > 1e-8 * scale:
        raise PreconditionError(f"gap {gap:g} is below numerical resolution; refusing to split clusters")
    idx = cluster_spectrum(eigs, gap)
    return eigs, [eigs[c] for c in idx]


def spectral_projection(P: Calibration, T, H, gap: float, tol: float = 1e-12,
                        cache: ResolventCache | None = None) -> ProjectionReport:
    """T_H = (1/2 pi i) * integral of R(l, T) over circles around the clusters in H.

    ``H`` is a collection of cluster indices into the single-linkage
    clustering of the spectrum at hop threshold ``gap``.
    """
    T = as_operator(T, P.dim)
    eigs, clusters = _clusters(T, gap)
    H = H if isinstance(H, SpectralSet) else SpectralSet.of(H, gap)
    bad = [m for m in H.members if not 0 <= m < len(clusters)]
    if bad:
        raise PreconditionError(f"cluster indices {bad} do not name clusters (have {len(clusters)})")
    n = T.shape[0]
    prov = {
        "projector": "trapezoid sum of R(l,T) over circles around H",
        "idempotency_defect": "||T_H^2 - T_H||_P",
        "commutation_defect": "||T_H T - T T_H||_P",
        "trace": "trace(T_H) vs algebraic multiplicity from the eigen oracle",
    }
    if not H.members:
        return ProjectionReport(np.zeros((n, n), complex), 0.0, 0.0, 0j, 0, H, clusters, None, tol, prov)
    K = np.concatenate([clusters[m] for m in sorted(H.members)])
    rest = [clusters[m] for m in range(len(clusters)) if m not in H.members]
    excluded = np.concatenate(rest) if rest else np.zeros(0, complex)
    contour = build_cauchy_contour(K, excluded, gap=gap)
    cache = cache or ResolventCache(T)
    Q = apply_funcalc(P, T, _ONE, contour, tol, cache).value
    s = _scale(Q)
    return ProjectionReport(
        Q,
        defect_norm(P, Q @ Q - Q, s * s),
        defect_norm(P, Q @ T - T @ Q, s * _scale(T)),
        complex(np.trace(Q)),
        int(K.size),
        H, clusters, contour, tol, prov,
    )


def projection_algebra_check(P: Calibration, T, H, K, gap: float, tol: float = 1e-12) -> dict:
    """Deviations of T_{H & K} = T_H T_K and, for disjoint H, K, T_{H | K} = T_H + T_K."""
    T = as_operator(T, P.dim)
    cache = ResolventCache(T)
    H, K = frozenset(H), frozenset(K)
    TH = spectral_projection(P, T, H, gap, tol, cache).projector
    TK = spectral_projection(P, T, K, gap, tol, cache).projector
    Tint = spectral_projection(P, T, H & K, gap, tol, cache).projector
    s = _scale(TH, TK)
    out = {
        "intersection_deviation": defect_norm(P, Tint - TH @ TK, s * s),
        "union_deviation": None,
        "tol": tol,
        "provenance": {
            "intersection_deviation": "||T_{H&K} - T_H T_K||_P",
            "union_deviation": "||T_{H|K} - T_H - T_K||_P (disjoint H, K only)",
        },
    }
    if not H & K:
        Tuni = spectral_projection(P, T, H | K, gap, tol, cache).projector
        out["union_deviation"] = defect_norm(P, Tuni - TH - TK, s)
        out["union_projector"] = Tuni
    return out


def verify_resolvent_power_bound(P: Calibration, T, samples, eps0: float, n_max: int = 40) -> dict:
    """Envelope sup_lambda eps0^n p^(R(lambda, T)^n) per member, n = 1..n_max.

    The envelope stays bounded in n whenever every sample keeps distance
    more than eps0 from the spectrum; ``bounded`` reports whether its tail
    stays under the running maximum of the first three quarters.
    """
    T = as_operator(T, P.dim)
    if not eps0 > 0:
        raise PreconditionError("eps0 must be positive")
    eigs = np.linalg.eigvals(T)
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    dists = np.array([float(np.min(np.abs(eigs - z))) for z in samples])
    if np.any(dists <= eps0):
        z = samples[np.argmin(dists - eps0)]
        raise PreconditionError(f"sample {z} is within eps0={eps0:g} of the spectrum")
    env = np.zeros((len(P), n_max))
    for z in samples:
        M = eps0 * resolvent_direct(T, z)
        Mn = np.eye(T.shape[0], dtype=complex)
        for n in range(n_max):
            Mn = Mn @ M
            s = float(np.max(np.abs(Mn)))
            for k, p in enumerate(P):
                env[k, n] = max(env[k, n], float(phat(p, Mn, atol=1e-13 * max(s, 1e-300))))
    burn = (3 * n_max) // 4
    head = env[:, :burn].max(axis=1)
    tail = env[:, burn:].max(axis=1) if burn < n_max else head
    return {
        "envelope": env.tolist(),
        "r_p": env.max(axis=1).tolist(),
        "bounded": bool(np.all(tail <= head * (1 + 1e-9))),
        "min_distance": float(dists.min()),
        "eps0": eps0,
        "n_max": n_max,
        "provenance": {"envelope": "max over samples of eps0^n p^(R(l,T)^n)"},
    }


def resolvent_lower_bound_check(T, lam: complex, calibrations) -> dict:
    """||R(lambda, T)||_P >= 1/dist(lambda, spectrum) for each calibration."""
    T = as_operator(T)
    eigs = np.linalg.eigvals(T)
    d = float(np.min(np.abs(eigs - lam)))
    R = resolvent_direct(T, lam)
    s = _scale(R)
    rows = []
    for P in calibrations:
        okT, _ = is_universally_bounded(P, T)
        okR, _ = is_universally_bounded(P, R, atol=1e-13 * s)
        if not (okT and okR):
            raise PreconditionError("T and R(lambda, T) must be universally bounded for every calibration")
        nr = norm_P(P, R, atol=1e-13 * s)
        rows.append({"norm_R": nr, "lower_bound": 1 / d, "holds": nr >= 1 / d - 1e-12})
    return {
        "lambda": {"re": complex(lam).real, "im": complex(lam).imag},
        "distance": d,
        "per_calibration": rows,
        "all_hold": all(r["holds"] for r in rows),
        "provenance": {"norm_R": "max_p p^(R(l,T))", "lower_bound": "1/dist(l, eig T)"},
    }
