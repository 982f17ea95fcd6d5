"""Seeded random instances and the invariant suites run by ``verify``.

Each suite returns a report with per-check maxima, the threshold each one
is held to, and an overall pass flag.  Instances are drawn from
``numpy.random.default_rng([seed, index])`` so reports are reproducible
and independent of the worker count.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .calib import Calibration, norm_P
from .contour import Domain
from .errors import PreconditionError
from .funcalc import (
    _scale,
    apply_funcalc,
    composition_check,
    defect_norm,
    funcalc_power_series,
    matched_distance,
)
from .holofun import Exp, Poly, Rational
from .perturb import perturbation_series
from .projections import resolvent_lower_bound_check, spectral_projection, verify_resolvent_power_bound
from .renorm import classify_spectrum, renorm_bounded, renorm_spectral, spectrum_coincidence
from .spectral import (
    ResolventCache,
    eigen_radius,
    neumann_resolvent,
    neumann_terms_unbounded,
    resolvent_direct,
    spectral_radius,
    verify_resolvent_identities,
)

__all__ = ["Instance", "random_instance", "jordan_block", "SUITES", "run_suite", "worker_count"]


@dataclass
class Instance:
    T: np.ndarray
    V: np.ndarray
    eigs: np.ndarray
    P: Calibration
    seed: tuple

    def oracle(self, f) -> np.ndarray:
        """V f(Lambda) V^-1."""
        return self.V @ np.diag(f(self.eigs)) @ np.linalg.inv(self.V)


def _spread_points(rng, n: int, radius: float, gap: float) -> np.ndarray:
    pts: list[complex] = []
    while len(pts) < n:
        z = radius * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - w) >= gap for w in pts):
            pts.append(z)
    return np.array(pts)


def _unitary(rng, n: int) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_instance(seed: int, index: int, n_range=(2, 8), radius: float = 2.0, gap: float = 0.1,
                    normal: bool = False, members: int | None = None) -> Instance:
    """Diagonalizable T = V Lambda V^-1 with well-conditioned V and a
    positive-weight calibration."""
    rng = np.random.default_rng([seed, index])
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    eigs = _spread_points(rng, n, radius, gap)
    V = _unitary(rng, n)
    if not normal:
        V = V * np.exp(rng.uniform(-0.5, 0.5, n))[None, :]
    T = V @ np.diag(eigs) @ np.linalg.inv(V)
    k = members or int(rng.integers(1, 4))
    P = Calibration.from_weights(rng.uniform(0.5, 2.0, (k, n)))
    return Instance(T, V, eigs, P, (seed, index))


def jordan_block(lam: complex, k: int) -> np.ndarray:
    return lam * np.eye(k, dtype=complex) + np.diag(np.ones(k - 1), 1)


def worker_count() -> int:
    env = os.environ.get("HOLOCALC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def _map(fn, items):
    if worker_count() == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(worker_count()) as pool:
        return list(pool.map(fn, items))


class _Checks:
    """Running maxima of named defects against fixed thresholds."""

    def __init__(self, thresholds: dict):
        self.thresholds = thresholds
        self.maxima = {k: 0.0 for k in thresholds}
        self.flags: dict[str, bool] = {}
        self.notes: list[str] = []

    def record(self, name: str, value: float):
        v = float(value)
        if not v <= self.maxima[name]:
            self.maxima[name] = v if not math.isnan(v) else math.inf

    def flag(self, name: str, ok: bool):
        self.flags[name] = self.flags.get(name, True) and bool(ok)

    def merge(self, other: "_Checks"):
        for k, v in other.maxima.items():
            self.record(k, v)
        for k, v in other.flags.items():
            self.flag(k, v)
        self.notes.extend(other.notes)

    def report(self, suite: str, seed: int, count: int, extra=None) -> dict:
        checks = {k: {"max": self.maxima[k], "threshold": t, "pass": self.maxima[k] <= t}
                  for k, t in self.thresholds.items()}
        flags = {k: {"pass": v} for k, v in self.flags.items()}
        out = {
            "suite": suite,
            "seed": seed,
            "instances": count,
            "checks": checks,
            "flags": flags,
            "passed": all(c["pass"] for c in checks.values()) and all(self.flags.values()),
            "notes": self.notes,
        }
        if extra:
            out.update(extra)
        return out


def _run(suite: str, seed: int, count: int, thresholds: dict, per_instance, extra=None) -> dict:
    def one(i):
        c = _Checks(thresholds)
        per_instance(c, i)
        return c

    total = _Checks(thresholds)
    for c in _map(one, range(count)):
        total.merge(c)
    return total.report(suite, seed, count, extra)


# ------------------------------------------------------------ calculus ----

_EXP = Exp()
_SQ = Poly([0, 0, 1])
_RAT = Rational([1.0], [-5.0, 1.0])
_CUBIC = Poly([0.5, -1.0, 0.25, 0.1])


def _rel(P, A, B):
    return defect_norm(P, A - B, _scale(B)) / max(norm_P(P, B), 1e-300)


def suite_calculus(seed: int = 0, count: int = 100, tol: float = 1e-12) -> dict:
    """F(1) = I, F(id) = T, F(fg) = F(f)F(g), F(poly) = Horner."""
    th = {"unit": 1e-8, "identity": 1e-8, "multiplicative": 1e-8, "polynomial": 1e-8, "nodes": 1024}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        T, P = I.T, I.P
        cache = ResolventCache(T)
        n = T.shape[0]

        def F(f):
            r = apply_funcalc(P, T, f, tol=tol, cache=cache)
            c.record("nodes", r.nodes_per_circle)
            return r.value

        c.record("unit", defect_norm(P, F(Poly([1.0])) - np.eye(n)))
        c.record("identity", defect_norm(P, F(Poly([0, 1.0])) - T, _scale(T)))
        Fe, Fr = F(_EXP), F(_RAT)
        prod = F(_EXP * _RAT)
        c.record("multiplicative", defect_norm(P, prod - Fe @ Fr, _scale(prod)))
        c.record("polynomial", defect_norm(P, F(_CUBIC) - _CUBIC.horner(T), _scale(T) ** 3))

    return _run("calculus", seed, count, th, inst, {"tol": tol})


def suite_oracle(seed: int = 0, count: int = 100, tol: float = 1e-12) -> dict:
    """Contour route against V f(Lambda) V^-1 and against power series."""
    th = {"oracle_relative": 1e-8, "power_series_relative": 1e-8}
    series = {
        "exp": (lambda k: 1 / math.factorial(k), math.inf),
        "square": ([0, 0, 1], math.inf),
        "rational": (lambda k: -(5.0 ** -(k + 1)), 5.0),
    }
    funcs = {"exp": _EXP, "square": _SQ, "rational": _RAT}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        cache = ResolventCache(I.T)
        for name, f in funcs.items():
            F = apply_funcalc(I.P, I.T, f, tol=tol, cache=cache).value
            c.record("oracle_relative", _rel(I.P, F, I.oracle(f)))
            coeffs, radius = series[name]
            S, _ = funcalc_power_series(I.P, I.T, coeffs, radius, tol=1e-15, max_terms=2000)
            c.record("power_series_relative", _rel(I.P, F, S))

    return _run("oracle", seed, count, th, inst, {"tol": tol})


def suite_mapping(seed: int = 0, count: int = 100, tol: float = 1e-12) -> dict:
    """eig f(T) = f(eig T) as multisets; (g o f)(T) = g(f(T))."""
    th = {"spectral_mapping": 1e-8, "composition": 1e-7}
    pairs = [(_RAT, _EXP), (_EXP, _SQ)]

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        cache = ResolventCache(I.T)
        for f in (_EXP, _SQ, _RAT):
            F = apply_funcalc(I.P, I.T, f, tol=tol, cache=cache).value
            c.record("spectral_mapping", matched_distance(np.linalg.eigvals(F), f(I.eigs)))
        for f, g in pairs:
            rep = composition_check(I.P, I.T, f, g, tol)
            c.record("composition", rep["deviation"] / max(norm_P(I.P, rep["rhs"]), 1.0))

    return _run("mapping", seed, count, th, inst, {"tol": tol})


# --------------------------------------------------------- projections ----

def suite_projections(seed: int = 0, count: int = 20, tol: float = 1e-12) -> dict:
    """Every clopen bipartition {H, K} of a gap-separated spectrum."""
    th = {"idempotency": 1e-8, "sum_identity": 1e-8, "product_zero": 1e-8, "trace": 1e-6}

    def inst(c: _Checks, i):
        I = random_instance(seed, i, n_range=(2, 6))
        T, P = I.T, I.P
        n = T.shape[0]
        gap = 0.05
        cache = ResolventCache(T)
        k = n  # singleton clusters: eigenvalue gaps are at least 0.1
        for r in range(0, k):
            for H in itertools.combinations(range(1, k), r):
                H = (0,) + H
                K = tuple(j for j in range(k) if j not in H)
                rh = spectral_projection(P, T, H, gap, tol, cache)
                rk = spectral_projection(P, T, K, gap, tol, cache)
                s = _scale(rh.projector, rk.projector)
                c.record("idempotency", max(rh.idempotency_defect, rk.idempotency_defect))
                c.record("sum_identity", defect_norm(P, rh.projector + rk.projector - np.eye(n), s))
                c.record("product_zero", defect_norm(P, rh.projector @ rk.projector, s * s))
                c.record("trace", max(rh.trace_defect, rk.trace_defect))

    return _run("projections", seed, count, th, inst, {"tol": tol, "gap": 0.05})


# -------------------------------------------------------------- radius ----

def suite_radius(seed: int = 0, count: int = 100, n_max: int = 60) -> dict:
    """Inf-form estimate against the eigenvalue radius, and its scaling laws."""
    th = {"below_eigen_radius": 0.0, "normal_relative": 0.02, "scaling": 1e-9, "power": 1e-9}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        N = random_instance(seed + 1_000_003, i, normal=True)
        for J in (I, N):
            est = spectral_radius(J.P, J.T, n_max)
            r = est.by_formula["eigen_oracle"]
            c.record("below_eigen_radius", max(0.0, (r - est.certified) / r - 1e-12))
        est = spectral_radius(N.P, N.T, n_max)
        r = est.by_formula["eigen_oracle"]
        c.record("normal_relative", (est.certified - r) / r)
        rng = np.random.default_rng([seed, i, 7])
        lam = complex(rng.standard_normal(), rng.standard_normal())
        r0 = eigen_radius(I.T)
        c.record("scaling", abs(eigen_radius(lam * I.T) - abs(lam) * r0) / (abs(lam) * r0))
        for k in (2, 3, 5):
            rk = eigen_radius(np.linalg.matrix_power(I.T, k))
            c.record("power", abs(rk - r0 ** k) / r0 ** k)

    return _run("radius", seed, count, th, inst, {"n_max": n_max})


def jordan_radius_table(moduli=(0.5, 1.0, 2.0, 5.0, 10.0), sizes=(1, 2, 3, 4), n_max: int = 60) -> list:
    """Relative overshoot of the inf-form estimate on single Jordan blocks."""
    rows = []
    for k in sizes:
        for m in moduli:
            J = jordan_block(m * np.exp(0.3j), k)
            est = spectral_radius(Calibration.uniform(k), J, n_max)
            rows.append({"size": k, "modulus": m, "estimate": est.certified,
                         "relative": est.certified / m - 1})
    return rows


# ------------------------------------------------------------- neumann ----

def suite_neumann(seed: int = 0, count: int = 50, tol: float = 1e-12) -> dict:
    """Ladder of 20 lambdas per instance, half above the certified radius
    (series converges and matches the direct solve), half below the
    eigenvalue radius (terms blow up)."""
    th = {"agreement": 10 * tol}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        P, T = I.P, I.T
        rc = spectral_radius(P, T, 60).certified
        r = eigen_radius(T)
        rng = np.random.default_rng([seed, i, 11])
        for j in range(1, 11):
            lam = rc * (1 + 0.1 * j) * np.exp(2j * np.pi * rng.uniform())
            R, _ = neumann_resolvent(P, T, lam, tol, radius=rc)
            D = resolvent_direct(T, lam)
            c.record("agreement", defect_norm(P, R - D, _scale(D)))
            c.flag("converges_above", True)
        for j in range(1, 11):
            mod = r * (1 - 0.09 * j)
            lam = mod * np.exp(2j * np.pi * rng.uniform())
            try:
                neumann_resolvent(P, T, lam, tol, radius=rc)
                refused = False
            except PreconditionError:
                refused = True
            c.flag("refused_below", refused)
            c.flag("divergence_detected", neumann_terms_unbounded(P, T, lam, n_max=400) is not None)

    return _run("neumann", seed, count, th, inst, {"tol": tol})


# ------------------------------------------------------- perturbation ----

def suite_perturbation(seed: int = 0, count: int = 50, tol: float = 1e-12) -> dict:
    """S a polynomial in T with r(S) < d/2; nilpotent S stops at its index."""
    th = {"direct_deviation": 1e-7, "tail": tol}
    D = Domain.disk(0, 3.0)

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        P, T = I.P, I.T
        rng = np.random.default_rng([seed, i, 13])
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        S0 = a[0] * np.eye(T.shape[0]) + a[1] * T + a[2] * T @ T
        d = float(np.min(D.depth(I.eigs)))
        rS = spectral_radius(P, S0, 60).certified
        S = S0 * (0.45 * d / rS)
        f = _EXP if i % 2 == 0 else _RAT
        res = perturbation_series(P, T, S, f, D, tol)
        c.record("direct_deviation", res.direct_deviation / max(norm_P(P, res.value), 1.0))
        c.record("tail", res.tail_estimate)
        # nilpotent perturbation of a Jordan block
        k = int(rng.integers(2, 5))
        lam = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        J = jordan_block(lam, k)
        Nil = J - lam * np.eye(k)
        j = int(rng.integers(1, k))
        Sn = 0.3 * np.linalg.matrix_power(Nil, j)
        index = -(-k // j)
        r2 = perturbation_series(Calibration.uniform(k), J, Sn, _EXP, D, tol)
        c.flag("nilpotent_terms_exact", r2.terms_used == index)
        c.record("direct_deviation", r2.direct_deviation / max(norm_P(Calibration.uniform(k), r2.value), 1.0))

    return _run("perturbation", seed, count, th, inst, {"tol": tol})


# -------------------------------------------------------------- renorm ----

def suite_renorm(seed: int = 0, count: int = 20, samples: int = 10_000) -> dict:
    """gi2 at mu = 1.05 r on sampled vectors; lb1 bound in closed form."""
    th = {"contraction_ratio": 1 + 1e-12}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        P, T = I.P, I.T
        mu = 1.05 * eigen_radius(T)
        rc = renorm_spectral(P, T, mu, samples=samples, seed=i)
        v = rc.verification
        c.flag("p_le_pprime", v["p_le_pprime"])
        c.flag("pprime_le_M_p", v["pprime_le_M_p"])
        c.record("contraction_ratio", max(v["max_contraction_ratio"]))
        # lb1 on a calibration with zero weights and a kernel-respecting T
        rng = np.random.default_rng([seed, i, 17])
        n = T.shape[0]
        W = rng.uniform(0.5, 2.0, (2, n))
        W[0, n // 2:] = 0.0
        Tu = np.triu(rng.standard_normal((n, n)))
        Tu[: n // 2, n // 2:] = 0.0  # keep ker of member 0 invariant
        Q = Calibration.from_weights(W)
        rb = renorm_bounded(Q, Tu)
        c.flag("lb1_bound", rb.verification["bounded_ok"])
        c.flag("lb1_finite", math.isfinite(rb.verification["norm_T"]))

    return _run("renorm", seed, count, th, inst, {"samples": samples})


# ----------------------------------------------------------- resolvent ----

def suite_resolvent(seed: int = 0, count: int = 20) -> dict:
    """Resolvent identities, the 1/dist lower bound, and power envelopes."""
    th = {"first_resolvent_equation": 1e-10, "derivative_fd_relative": 1e-5}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        T, P = I.T, I.P
        rng = np.random.default_rng([seed, i, 19])
        probes = []
        while len(probes) < 5:
            z = complex(*rng.uniform(-3, 3, 2))
            if np.min(np.abs(I.eigs - z)) > 0.2:
                probes.append(z)
        for z in probes:
            w = z + 0.3 * np.exp(2j * np.pi * rng.uniform())
            if np.min(np.abs(I.eigs - w)) <= 0.1:
                continue
            for order in (1, 2, 3):
                rep = verify_resolvent_identities(T, z, w, order)
                s = max(1.0, float(np.linalg.norm(resolvent_direct(T, z), np.inf)) ** 2)
                c.record("first_resolvent_equation", rep["first_resolvent_equation"] / s)
                c.record("derivative_fd_relative", rep["derivative_fd_relative"])
            lb = resolvent_lower_bound_check(T, z, [P, Calibration.uniform(T.shape[0])])
            c.flag("norm_R_ge_inverse_distance", lb["all_hold"])
        env = verify_resolvent_power_bound(P, T, probes, eps0=0.1, n_max=40)
        c.flag("power_envelope_bounded", env["bounded"])

    return _run("resolvent", seed, count, th, inst)


# ------------------------------------------------------------- spectra ----

def suite_spectra(seed: int = 0, count: int = 100) -> dict:
    """Three spectrum pathways agree; every eigenvalue has a witness."""
    th = {"oracle_vs_qp": 1e-9, "oracle_vs_renormed": 1e-9, "qp_vs_renormed": 1e-9, "witness_ratio": 1e-12}

    def inst(c: _Checks, i):
        I = random_instance(seed, i)
        rep = spectrum_coincidence(I.P, I.T)
        c.record("oracle_vs_qp", rep["d_oracle_qp"])
        c.record("oracle_vs_renormed", rep["d_oracle_renormed"])
        c.record("qp_vs_renormed", rep["d_qp_renormed"])
        cl = classify_spectrum(I.P, I.T, ring_radii=())
        c.flag("point_subset_approximate", len(cl.point) <= len(cl.approximate) and all(
            any(a["lambda"] == p["lambda"] for a in cl.approximate) for p in cl.point))
        c.flag("point_count", sum(p["algebraic_multiplicity"] for p in cl.point) == I.T.shape[0])
        scale = max(1.0, float(np.linalg.norm(I.T, 2)))
        for a in cl.approximate:
            c.record("witness_ratio", a["ratio"] / scale)

    return _run("spectra", seed, count, th, inst)


SUITES = {
    "calculus": suite_calculus,
    "oracle": suite_oracle,
    "mapping": suite_mapping,
    "projections": suite_projections,
    "radius": suite_radius,
    "neumann": suite_neumann,
    "perturbation": suite_perturbation,
    "renorm": suite_renorm,
    "resolvent": suite_resolvent,
    "spectra": suite_spectra,
}


def run_suite(name: str, seed: int = 0, **kw) -> dict:
    if name not in SUITES:
        raise PreconditionError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](seed, **kw)
