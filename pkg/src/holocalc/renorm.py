"""Renormings that make an operator universally bounded, and spectral classes.

Two constructions:

* ``renorm_bounded``: for a locally bounded T with witness p0, replace each
  q by ``q'(x) = max(q(x), m_{p0 q}(T) p0(x))``.  For weighted-sup inputs
  the result is again weighted-sup (pointwise max of weights).
* ``renorm_spectral``: ``p'(x) = max_{n <= N} p(T^n x) / mu^n`` for mu above
  the spectral radius; p <= p' <= M_p p and p'(Tx) <= mu p'(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .calib import (
    Calibration,
    DerivedSeminorm,
    WeightedSup,
    as_operator,
    is_quotient_bounded,
    is_universally_bounded,
    mixed_seminorm,
    mixed_seminorm_estimate,
    norm_P,
    phat,
    principal_closure,
)
from .contour import cluster_spectrum
from .errors import ConvergenceError, PreconditionError
from .funcalc import matched_distance
from .spectral import eigen_radius, eigenvalues, log_power_norms, resolvent_direct

__all__ = [
    "RenormedCalibration",
    "SpectrumClassification",
    "renorm_bounded",
    "renorm_spectral",
    "joint_renorm_commuting",
    "lb_radius",
    "classify_spectrum",
    "spectrum_intersection_check",
    "spectrum_coincidence",
    "N_SUP_CAP",
]

N_SUP_CAP = 400
STABLE_RUN = 25
TAIL_RATIO = 1e-12


@dataclass
class RenormedCalibration:
    base: Calibration
    derived: Calibration
    params: dict
    equivalence_constants: list
    verification: dict = field(default_factory=dict)

    def to_dict(self):
        from .io import calibration_to_json

        out = {
            "params": self.params,
            "equivalence_constants": self.equivalence_constants,
            "verification": self.verification,
        }
        if self.derived.weighted:
            out["derived"] = calibration_to_json(self.derived)
        else:
            out["derived"] = {"members": len(self.derived), "functionals_per_member":
                              [p.functionals.shape[0] for p in self.derived]}
        return out


def _sample(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, count)) + 1j * rng.standard_normal((n, count))
    return np.hstack([np.eye(n, dtype=complex), X])


# ---------------------------------------------------------------- lb1 ----

def renorm_bounded(P: Calibration, T, p0: int | None = None) -> RenormedCalibration:
    """Make a locally bounded T universally bounded, keeping the topology.

    ``p0`` indexes the witness member (all m_{p0 q}(T) finite); when omitted
    the first member that works is used.
    """
    T = as_operator(T, P.dim)
    if not P.weighted:
        raise PreconditionError("renorm_bounded needs a weighted-sup calibration")
    candidates = [p0] if p0 is not None else range(len(P))
    chosen = None
    for i in candidates:
        if not 0 <= i < len(P):
            raise PreconditionError(f"p0={i} is not a member index")
        ms = [mixed_seminorm(P[i], q, T) for q in P]
        if all(m.is_finite for m in ms):
            chosen, m = i, [v.value for v in ms]
            break
    if chosen is None:
        raise PreconditionError("no witness p0 with every m_{p0 q}(T) finite: T is not locally bounded here")
    w0 = P[chosen].weights
    new = [np.maximum(q.weights, mq * w0) for q, mq in zip(P, m)]
    Pp = Calibration.from_weights(new)
    c0 = max(1.0, float(phat(P[chosen], T)))
    bound = c0 * max(m)
    normT = norm_P(Pp, T)

    # q' <= c_q q1 for a member q1 dominating both p0 and q
    pool = P if P.is_directed() else principal_closure(P)
    consts = []
    for qi, (q, mq) in enumerate(zip(P, m)):
        top = np.maximum(q.weights, w0)
        q1 = next((j for j, r in enumerate(pool) if np.all(r.weights >= top)), None)
        consts.append({"member": qi, "m": 1.0, "M": max(1.0, mq), "dominating_member": q1,
                       "dominating_in_closure": pool is not P})
    return RenormedCalibration(
        P, Pp,
        {"mode": "lb1", "p0": chosen, "m_p0q": m, "c0": c0},
        consts,
        {
            "norm_T": normT,
            "bound": bound,
            "bounded_ok": normT <= bound * (1 + 1e-12),
            "provenance": {
                "norm_T": "max_q' q'^(T), closed form",
                "bound": "max(1, p0^(T)) * max_q m_{p0 q}(T)",
            },
        },
    )


# ---------------------------------------------------------------- gi2 ----

def _truncation(log_a: np.ndarray, cap: int) -> tuple[int, bool]:
    """Pick N from log a_n (index n = 0..cap+1).

    Stop at the first N with a_{N+1} < 1e-12 * head, or once the head max has
    been unchanged for STABLE_RUN steps and a_{N+1} <= 1.  The second flag
    says whether the tail is negligible.
    """
    head = log_a[0]
    since = 0
    for N in range(1, cap + 1):
        if log_a[N] > head:
            head = log_a[N]
            since = 0
        else:
            since += 1
        nxt = log_a[N + 1]
        if nxt < head + math.log(TAIL_RATIO):
            return N, True
        if since >= STABLE_RUN and nxt <= 0.0:
            return N, False
        if head > 700:
            break
    raise PreconditionError("derived seminorm head does not stabilise: mu is not above the spectral radius")


def _functional_rows(p, powers) -> np.ndarray:
    F = p.functionals
    if isinstance(p, WeightedSup):
        F = F[p.weights > 0]
    rows = np.vstack([F @ M for M in powers])
    keep = np.any(rows != 0, axis=1)
    return rows[keep] if np.any(keep) else rows[:1]


def renorm_spectral(P: Calibration, T, mu: float, n_sup: int | None = None, samples: int = 1000,
                    seed: int = 0, cap: int = N_SUP_CAP) -> RenormedCalibration:
    """p'(x) = max_{0 <= n <= N} p(T^n x)/mu^n for every member p."""
    T = as_operator(T, P.dim)
    if not mu > 0:
        raise PreconditionError("mu must be positive")
    if not is_quotient_bounded(P, T):
        raise PreconditionError("operator is not quotient bounded; its radius is infinite")
    r = eigen_radius(T)
    if not mu > r:
        raise PreconditionError(f"mu={mu:g} does not exceed the spectral radius {r:g}")
    depth = (n_sup if n_sup is not None else cap) + 1
    logs = log_power_norms(P, T, depth)
    ns = np.arange(1, depth + 1)
    members, consts, per_member = [], [], []
    n = T.shape[0]
    for k, p in enumerate(P):
        log_a = np.concatenate([[0.0], logs[k] - ns * math.log(mu)])
        if n_sup is None:
            N, negligible = _truncation(log_a, cap)
        else:
            N, negligible = n_sup, bool(log_a[n_sup + 1] < log_a[: n_sup + 1].max() + math.log(TAIL_RATIO))
            if log_a[n_sup + 1] > 0:
                raise PreconditionError(f"n_sup={n_sup} too small: p^(T^(N+1))/mu^(N+1) > 1")
        Mp = float(np.exp(log_a[: N + 1].max()))
        powers = [np.eye(n, dtype=complex)]
        for _ in range(N):
            powers.append(powers[-1] @ T / mu)
        members.append(DerivedSeminorm(_functional_rows(p, powers),
                                       {"mode": "gi2", "base_member": k, "mu": mu, "n_sup": N}))
        consts.append({"member": k, "m": 1.0, "M": Mp})
        per_member.append({"n_sup": N, "tail_negligible": negligible,
                           "tail_ratio": float(np.exp(log_a[N + 1] - log_a[: N + 1].max()))})
    Pp = Calibration(tuple(members))
    ver = _verify_domination(P, Pp, consts, [(T, mu)], samples, seed)
    return RenormedCalibration(P, Pp, {"mode": "gi2", "mu": mu, "per_member": per_member}, consts, ver)


def _verify_domination(P, Pp, consts, contractions, samples: int, seed: int) -> dict:
    X = _sample(P.dim, samples, seed)
    lower_ok, upper_ok = True, True
    worst_upper = 0.0
    contraction_worst = [0.0] * len(contractions)
    for p, pp, c in zip(P, Pp, consts):
        a, b = p(X), pp(X)
        lower_ok &= bool(np.all(a <= b * (1 + 1e-12) + 1e-300))
        upper_ok &= bool(np.all(b <= c["M"] * a * (1 + 1e-12) + 1e-300))
        with np.errstate(divide="ignore", invalid="ignore"):
            worst_upper = max(worst_upper, float(np.nanmax(np.where(a > 0, b / a, 0.0))))
        for j, (A, mu) in enumerate(contractions):
            img = pp(A @ X)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(b > 0, img / (mu * b), np.where(img > 0, np.inf, 0.0))
            contraction_worst[j] = max(contraction_worst[j], float(np.max(ratio)))
    return {
        "samples": int(X.shape[1]),
        "p_le_pprime": lower_ok,
        "pprime_le_M_p": upper_ok,
        "max_pprime_over_p": worst_upper,
        "max_contraction_ratio": contraction_worst,
        "contraction_ok": all(w <= 1 + 1e-12 for w in contraction_worst),
        "provenance": {"max_contraction_ratio": "max over samples of p'(Ax)/(mu p'(x))"},
    }


def joint_renorm_commuting(P: Calibration, A, B, muA: float, muB: float, n_sup: int | None = None,
                           samples: int = 1000, seed: int = 0, cap: int = 200) -> RenormedCalibration:
    """p'(x) = max_{n, m <= N} p(A^n B^m x) / (muA^n muB^m) for commuting A, B."""
    A = as_operator(A, P.dim)
    B = as_operator(B, P.dim)
    inf = lambda M: float(np.linalg.norm(M, np.inf))
    comm = inf(A @ B - B @ A)
    if comm > 1e-10 * max(inf(A) * inf(B), 1e-300):
        raise PreconditionError(f"A and B do not commute: ||AB - BA|| = {comm:.3e}")
    for name, M, mu in (("A", A, muA), ("B", B, muB)):
        if not is_quotient_bounded(P, M, atol=1e-13 * max(1.0, float(np.max(np.abs(M))))):
            raise PreconditionError(f"{name} is not quotient bounded")
        if not mu > eigen_radius(M):
            raise PreconditionError(f"mu{name}={mu:g} does not exceed the spectral radius of {name}")
    n = P.dim
    Ap = [np.eye(n, dtype=complex)]
    Bp = [np.eye(n, dtype=complex)]
    memo: dict = {}

    def power(lst, M, mu, k):
        while len(lst) <= k:
            lst.append(lst[-1] @ M / mu)
        return lst[k]

    def a(pi, i, j):
        key = (pi, i, j)
        if key not in memo:
            X = power(Ap, A, muA, i) @ power(Bp, B, muB, j)
            s = float(np.max(np.abs(X))) if X.size else 0.0
            memo[key] = float(phat(P[pi], X, atol=1e-13 * max(s, 1e-300)))
        return memo[key]

    members, consts, Ns = [], [], []
    for pi, p in enumerate(P):
        head = 1.0
        since = 0
        chosen = None
        for N in range(1, cap + 1):
            new_head = max([head] + [a(pi, N, j) for j in range(N + 1)] + [a(pi, i, N) for i in range(N)])
            since = since + 1 if new_head <= head else 0
            head = new_head
            border = max([a(pi, N + 1, j) for j in range(N + 2)] + [a(pi, i, N + 1) for i in range(N + 1)])
            if n_sup is not None:
                if N == n_sup:
                    if border > 1:
                        raise PreconditionError(f"n_sup={n_sup} too small for the joint sup")
                    chosen = N
                    break
                continue
            if border < TAIL_RATIO * head or (since >= STABLE_RUN and border <= 1):
                chosen = N
                break
        if chosen is None:
            raise ConvergenceError("joint derived seminorm did not stabilise")
        prods = [power(Ap, A, muA, i) @ power(Bp, B, muB, j)
                 for i in range(chosen + 1) for j in range(chosen + 1)]
        members.append(DerivedSeminorm(_functional_rows(p, prods),
                                       {"mode": "joint", "base_member": pi, "muA": muA, "muB": muB,
                                        "n_sup": chosen}))
        consts.append({"member": pi, "m": 1.0, "M": head})
        Ns.append(chosen)
    Pp = Calibration(tuple(members))
    ver = _verify_domination(P, Pp, consts, [(A, muA), (B, muB)], samples, seed)
    return RenormedCalibration(P, Pp, {"mode": "joint", "muA": muA, "muB": muB, "n_sup": Ns}, consts, ver)


def lb_radius(P: Calibration, T, n_max: int = 60, samples: int = 2000) -> float:
    """min_{n <= n_max} ||T^n||_P^(1/n).

    Exact for weighted-sup calibrations; for derived calibrations ||T^n||_P
    is a sampled lower bound.
    """
    T = as_operator(T, P.dim)
    if P.weighted:
        ok, _ = is_universally_bounded(P, T)
        if not ok:
            raise PreconditionError("T is not universally bounded; renorm first")
        logs = log_power_norms(P, T, n_max).max(axis=0)
        with np.errstate(invalid="ignore"):
            return float(np.min(np.exp(logs / np.arange(1, n_max + 1))))
    best = math.inf
    M = np.eye(P.dim, dtype=complex)
    for n in range(1, n_max + 1):
        M = M @ T
        v = max(mixed_seminorm_estimate(p, p, M, samples, seed=n) for p in P)
        if not math.isfinite(v):
            raise PreconditionError("||T^n||_P is infinite")
        best = min(best, v ** (1 / n))
        if best == 0:
            break
    return best


# ------------------------------------------------------- classification ----

@dataclass
class SpectrumClassification:
    point: list
    approximate: list
    continuous: list
    residual: list
    probes: list
    note: str
    tol: float

    def to_dict(self):
        return {
            "point": self.point,
            "approximate": self.approximate,
            "continuous": self.continuous,
            "residual": self.residual,
            "probes": self.probes,
            "note": self.note,
            "tol": self.tol,
            "provenance": {
                "point": "null vectors of lambda I - T from the SVD",
                "approximate": "eigenvector witnesses p((lambda I - T)x)/p(x)",
                "probes.certified_lower_bound": "1/p^(R(lambda,T)) = inf_x p((lambda I-T)x)/p(x)",
                "probes.min_ratio_found": "sampling minimizer with local refinement",
            },
        }


_FINITE_NOTE = ("finite dimension: lambda I - T injective implies surjective (rank-nullity), "
                "so the continuous and residual spectra are empty and the spectrum equals the point spectrum")
LADDER = (1e-2, 1e-4, 1e-6)


def _cplx(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _min_ratio(p, A: np.ndarray, rng: np.random.Generator, budget: int = 2000, refine: int = 40) -> tuple[float, np.ndarray]:
    """Sampling minimizer of p(Ax)/p(x) over the p-unit sphere."""
    n = A.shape[0]
    X = np.hstack([np.eye(n, dtype=complex),
                   rng.standard_normal((n, budget)) + 1j * rng.standard_normal((n, budget))])
    px = p(X)
    keep = px > 0
    X, px = X[:, keep], px[keep]
    ratio = p(A @ X) / px
    order = np.argsort(ratio)[:5]
    best_r, best_x = float(ratio[order[0]]), X[:, order[0]]
    for idx in order:
        x, r = X[:, idx] / px[idx], float(ratio[idx])
        step = 0.5
        for _ in range(refine):
            cand = x[:, None] + step * (rng.standard_normal((n, 16)) + 1j * rng.standard_normal((n, 16)))
            pc = p(cand)
            ok = pc > 0
            if not np.any(ok):
                step *= 0.5
                continue
            rc = p(A @ cand[:, ok]) / pc[ok]
            j = int(np.argmin(rc))
            if rc[j] < r:
                r, x = float(rc[j]), cand[:, ok][:, j] / pc[ok][j]
            else:
                step *= 0.5
        if r < best_r:
            best_r, best_x = r, x
    return best_r, best_x


def classify_spectrum(P: Calibration, T, tol: float = 1e-9, ring_radii=(0.1, 0.25), ring_points: int = 8,
                      seed: int = 0, budget: int = 2000) -> SpectrumClassification:
    """Point and approximate-point spectrum with explicit witnesses.

    Witness search can only certify membership; a probe with no witness is
    reported as not-found-at-budget, never as proof of absence.
    """
    T = as_operator(T, P.dim)
    spec = eigenvalues(T)
    eigs = spec.eigenvalues
    n = T.shape[0]
    scale = max(1.0, float(np.linalg.norm(T, 2)))
    groups = cluster_spectrum(eigs, max(1e-7 * scale, 1e-12))
    point, approx = [], []
    for g in groups:
        lam = complex(np.mean(eigs[g]))
        U, s, Vh = np.linalg.svd(lam * np.eye(n) - T)
        null_dim = int(np.sum(s <= 1e-9 * scale))
        x = Vh[-1].conj()
        resid = abs(float(s[-1]))
        point.append({"lambda": _cplx(lam), "algebraic_multiplicity": len(g),
                      "geometric_multiplicity": max(null_dim, 1), "witness": _cplx_list(x),
                      "residual": resid, "ok": resid <= tol * scale})
        # pick the member that sees x best
        vals = [p(x) for p in P]
        k = int(np.argmax(vals))
        ratio = P[k](lam * x - T @ x) / vals[k]
        approx.append({"lambda": _cplx(lam), "member": k, "witness": _cplx_list(x), "ratio": float(ratio),
                       "source": "eigenvector"})
    probes = []
    for gi, g in enumerate(groups):
        lam0 = complex(np.mean(eigs[g]))
        for rho in ring_radii:
            for t in range(ring_points):
                lam = lam0 + rho * np.exp(2j * np.pi * (t + 0.5) / ring_points)
                dist = float(np.min(np.abs(eigs - lam)))
                if dist < 1e-12:
                    continue
                R = resolvent_direct(T, lam)
                A = lam * np.eye(n) - T
                rng = np.random.default_rng([seed, gi, int(rho * 1e6), t])
                for k, p in enumerate(P):
                    ph = float(phat(p, R, atol=1e-13 * max(1.0, float(np.max(np.abs(R))))))
                    c0 = 1.0 / ph if ph > 0 else math.inf
                    found, _ = _min_ratio(p, A, rng, budget)
                    probes.append({"lambda": _cplx(lam), "distance": dist, "member": k,
                                   "certified_lower_bound": c0, "min_ratio_found": found,
                                   "witness_at": {f"{c:g}": bool(found < c) for c in LADDER}})
    for pr in probes:
        if all(pr["witness_at"].values()):
            approx.append({"lambda": pr["lambda"], "member": pr["member"], "ratio": pr["min_ratio_found"],
                           "source": "probe"})
    return SpectrumClassification(point, approx, [], [], probes, _FINITE_NOTE, tol)


def _cplx_list(x):
    return [[float(z.real), float(z.imag)] for z in x]


# -------------------------------------------------- spectrum pathways ----

def spectrum_intersection_check(P: Calibration, T, lambdas, mu_factor: float = 1.5,
                                samples: int = 500, seed: int = 0) -> dict:
    """For each lambda off the spectrum, build a calibration for which both T
    and R(lambda, T) are universally bounded."""
    T = as_operator(T, P.dim)
    eigs = np.linalg.eigvals(T)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    for lam in lambdas:
        if float(np.min(np.abs(eigs - lam))) <= 1e-9 * scale:
            raise PreconditionError(f"lambda={lam} lies in the spectrum")
    rT = eigen_radius(T)
    muA = mu_factor * rT if rT > 1e-12 else 1.0
    rows = []
    for i, lam in enumerate(lambdas):
        R = resolvent_direct(T, lam)
        dist = float(np.min(np.abs(eigs - lam)))
        muB = mu_factor / dist
        row = {"lambda": _cplx(lam), "distance": dist, "muA": muA, "muB": muB}
        try:
            rc = joint_renorm_commuting(P, T, R, muA, muB, samples=samples, seed=seed + i)
        except (PreconditionError, ConvergenceError) as exc:
            row.update(success=False, error=str(exc))
        else:
            v = rc.verification
            est = max(mixed_seminorm_estimate(p, p, R, 2000, seed) for p in rc.derived)
            row.update(success=bool(v["contraction_ok"] and v["p_le_pprime"] and v["pprime_le_M_p"]),
                       norm_R_estimate=est, norm_R_bound=muB, norm_T_bound=muA,
                       n_sup=rc.params["n_sup"])
        rows.append(row)
    return {"samples": rows, "all_witnessed": all(r["success"] for r in rows),
            "provenance": {"norm_R_estimate": "sampled max_p' p'(Rx)/p'(x)",
                           "norm_R_bound": "muB, contraction built into the joint sup"}}


def spectrum_coincidence(P: Calibration, T) -> dict:
    """Spectrum three ways: eigen oracle, Q_P invertibility, renormed B_P' invertibility."""
    T = as_operator(T, P.dim)
    n = T.shape[0]
    scale = max(1.0, float(np.linalg.norm(T, 2)))
    oracle = eigenvalues(T).eigenvalues

    def singular(M, lam):
        return np.linalg.svd(lam * np.eye(n) - M, compute_uv=False)[-1] <= 1e-9 * scale

    # Q_P pathway: Schur-form candidates, kept when lambda I - T is singular
    # and nearby resolvents are quotient bounded
    Tschur, _ = sla.schur(T, output="complex")
    qp = []
    for lam in np.diag(Tschur):
        if not singular(T, lam):
            continue
        probe = lam + 1e-3 * scale
        if float(np.min(np.abs(oracle - probe))) > 1e-6:
            R = resolvent_direct(T, probe)
            if not is_quotient_bounded(P, R, atol=1e-12 * max(1.0, float(np.max(np.abs(R))))):
                continue
        qp.append(lam)
    qp = np.array(qp)

    # B_P' pathway: renorm so T is universally bounded, then read the spectrum
    # off the diagonally rescaled operator D T D^-1 (D from the renormed weights)
    W, source = np.ones(n), "unit weights (no lb1 renorming available)"
    if P.weighted:
        try:
            rb = renorm_bounded(P, T)
        except PreconditionError:
            pass
        else:
            W = np.max([p.weights for p in rb.derived], axis=0)
            source = "Schur of D T D^-1 with D from lb1-renormed weights"
    Ts = (W[:, None] * T) / W[None, :]
    Tschur2, _ = sla.schur(Ts, output="complex")
    bp = np.array([lam for lam in np.diag(Tschur2) if singular(T, lam)])

    def dist(a, b):
        return matched_distance(a, b) if a.size == b.size else math.inf

    return {
        "oracle": [_cplx(z) for z in oracle],
        "qp": [_cplx(z) for z in qp],
        "renormed": [_cplx(z) for z in bp],
        "d_oracle_qp": dist(oracle, qp),
        "d_oracle_renormed": dist(oracle, bp),
        "d_qp_renormed": dist(qp, bp),
        "provenance": {
            "oracle": "LAPACK geev",
            "qp": "complex Schur diagonal, singularity + quotient-bounded resolvent test",
            "renormed": source,
        },
    }
