"""Calibrated spaces at desk scale.

A calibration is a finite, separating family of seminorms on C^n.  The
workhorse seminorm is the weighted sup ``p(x) = max_i w_i |x_i|`` with
nonnegative weights; zero weights give genuine kernels, which is what makes
quotient boundedness differ from universal boundedness.  Derived seminorms
(produced by the renorming constructions) are suprema of finitely many
``|a_k . x|`` and can only be evaluated, not inverted in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimensionError, PreconditionError

__all__ = [
    "WeightedSup",
    "DerivedSeminorm",
    "Calibration",
    "MixedSeminormValue",
    "as_operator",
    "as_vector",
    "seminorm_eval",
    "mixed_seminorm",
    "mixed_seminorm_estimate",
    "phat",
    "norm_P",
    "is_quotient_bounded",
    "is_universally_bounded",
    "principal_closure",
    "q_equivalent",
]


def as_operator(T, dim: int | None = None) -> np.ndarray:
    A = np.asarray(T, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"operator must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise PreconditionError("operator has non-finite entries")
    if dim is not None and A.shape[0] != dim:
        raise DimensionError(f"operator has dim {A.shape[0]}, expected {dim}")
    return A


def as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"vector must be 1-d and nonempty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise PreconditionError("vector has non-finite entries")
    if dim is not None and v.size != dim:
        raise DimensionError(f"vector has length {v.size}, expected {dim}")
    return v


@dataclass(frozen=True, eq=False)
class WeightedSup:
    """p(x) = max_i w_i |x_i|."""

    weights: np.ndarray
    kind: str = field(default="weighted_sup", init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise DimensionError("weights must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise PreconditionError("weights must be finite and nonnegative")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size

    @property
    def functionals(self) -> np.ndarray:
        return np.diag(self.weights)

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate on a vector (n,) or on the columns of an (n, m) array."""
        x = np.asarray(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"seminorm dim {self.dim} vs vector dim {x.shape[0]}")
        if x.ndim == 1:
            return float(np.max(self.weights * np.abs(x)))
        return np.max(self.weights[:, None] * np.abs(x), axis=0)

    def dominates(self, other: "WeightedSup") -> bool:
        return bool(np.all(self.weights >= other.weights))

    def __eq__(self, other):
        return isinstance(other, WeightedSup) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(("weighted_sup", self.weights.tobytes()))

    def __repr__(self):
        return f"WeightedSup({self.weights.tolist()})"


@dataclass(frozen=True, eq=False)
class DerivedSeminorm:
    """p'(x) = max_k |a_k . x| for a stack of functionals a_k.

    ``meta`` records how the functionals were built (base weights, operator
    powers, scale mu, truncation depth) so reports can say where p' came from.
    """

    functionals: np.ndarray
    meta: dict = field(default_factory=dict)
    kind: str = field(default="derived", init=False)

    def __post_init__(self):
        A = np.asarray(self.functionals, dtype=complex)
        if A.ndim != 2 or A.shape[0] == 0:
            raise DimensionError("functionals must be a nonempty 2-d array")
        if not np.all(np.isfinite(A)):
            raise PreconditionError("derived seminorm has non-finite functionals")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "functionals", A)

    @property
    def dim(self) -> int:
        return self.functionals.shape[1]

    def __call__(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"seminorm dim {self.dim} vs vector dim {x.shape[0]}")
        vals = np.abs(self.functionals @ x)
        if x.ndim == 1:
            return float(np.max(vals))
        return np.max(vals, axis=0)


def seminorm_eval(p, x) -> float:
    x = as_vector(x)
    return p(x)


@dataclass(frozen=True, eq=False)
class Calibration:
    """A finite separating family of seminorms.

    ``principal`` asserts the family is directed (any two members are
    dominated by a third); it is verified for weighted-sup families.
    """

    seminorms: tuple
    principal: bool = False

    def __post_init__(self):
        sems = tuple(self.seminorms)
        if not sems:
            raise PreconditionError("calibration needs at least one seminorm")
        dims = {p.dim for p in sems}
        if len(dims) != 1:
            raise DimensionError(f"seminorms disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "seminorms", sems)
        stacked = np.vstack([p.functionals for p in sems])
        if np.linalg.matrix_rank(stacked) < self.dim:
            raise PreconditionError("calibration is not separating (some vector has every seminorm zero)")
        if self.principal and not self.is_directed():
            raise PreconditionError("calibration flagged principal but is not directed")

    @classmethod
    def from_weights(cls, weights, principal: bool | None = None) -> "Calibration":
        sems = tuple(WeightedSup(w) for w in weights)
        if principal is None:
            principal = _directed(sems)
        return cls(sems, principal)

    @classmethod
    def uniform(cls, n: int) -> "Calibration":
        return cls((WeightedSup(np.ones(n)),), True)

    @property
    def dim(self) -> int:
        return self.seminorms[0].dim

    @property
    def weighted(self) -> bool:
        return all(isinstance(p, WeightedSup) for p in self.seminorms)

    def __len__(self):
        return len(self.seminorms)

    def __iter__(self):
        return iter(self.seminorms)

    def __getitem__(self, i):
        return self.seminorms[i]

    def is_directed(self) -> bool:
        if not self.weighted:
            return False
        return _directed(self.seminorms)

    def evaluate(self, x) -> np.ndarray:
        """Vector of p(x) for every member."""
        return np.array([p(x) for p in self.seminorms])


def _directed(sems) -> bool:
    if not all(isinstance(p, WeightedSup) for p in sems):
        return False
    for a, b in combinations(sems, 2):
        top = np.maximum(a.weights, b.weights)
        if not any(np.all(c.weights >= top) for c in sems):
            return False
    return True


@dataclass(frozen=True)
class MixedSeminormValue:
    """A value in [0, +inf]; ``value is None`` encodes +inf."""

    value: float | None
    estimated: bool = False

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def __float__(self):
        return math.inf if self.value is None else float(self.value)

    def to_json(self):
        return "inf" if self.value is None else self.value


INF = MixedSeminormValue(None)


def _closed_form(w: np.ndarray, v: np.ndarray, T: np.ndarray, atol: float) -> float:
    # w: domain weights (p), v: codomain weights (q)
    absT = np.abs(T)
    rows = v > 0
    pos = w > 0
    # atol only relaxes the kernel-invariance test
    if np.any(absT[np.ix_(rows, ~pos)] > atol):
        return math.inf
    if not np.any(rows) or not np.any(pos):
        return 0.0
    scaled = absT[np.ix_(rows, pos)] / w[pos]
    return float(np.max(v[rows] * scaled.sum(axis=1)))


def mixed_seminorm(p, q, T, atol: float = 0.0, samples: int = 10_000, seed: int = 0) -> MixedSeminormValue:
    """m_pq(T) = sup_{p(x) <= 1} q(Tx).

    Exact for weighted-sup p and q: +inf when T maps ker p outside ker q,
    otherwise a weighted max row sum.  Entries with |T_ij| <= atol count as
    zero.  Derived seminorms fall back to the sampling lower bound.
    """
    T = as_operator(T, p.dim)
    if q.dim != p.dim:
        raise DimensionError("p and q live on different spaces")
    if isinstance(p, WeightedSup) and isinstance(q, WeightedSup):
        val = _closed_form(p.weights, q.weights, T, atol)
        return INF if math.isinf(val) else MixedSeminormValue(val)
    return MixedSeminormValue(mixed_seminorm_estimate(p, q, T, samples, seed), estimated=True)


def _sample_vectors(p, n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    cols = [np.eye(n, dtype=complex)]
    if isinstance(p, WeightedSup):
        # extreme points of the p-unit polydisc, random magnitudes along ker p
        w = p.weights
        phases = np.exp(2j * np.pi * rng.random((n, samples // 2)))
        inv = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), 0.0)
        vert = phases * inv[:, None]
        kern = (w == 0)
        if np.any(kern):
            vert[kern] = (rng.standard_normal((kern.sum(), samples // 2))
                          + 1j * rng.standard_normal((kern.sum(), samples // 2)))
        cols.append(vert)
    m = samples - sum(c.shape[1] for c in cols)
    if m > 0:
        cols.append(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)))
    return np.hstack(cols)


def mixed_seminorm_estimate(p, q, T, samples: int = 10_000, seed: int = 0) -> float:
    """Lower bound on m_pq(T): max of q(Tx)/p(x) over sampled x with p(x) > 0."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    T = as_operator(T, p.dim)
    rng = np.random.default_rng(seed)
    X = _sample_vectors(p, p.dim, samples, rng)
    px = p(X)
    keep = px > 1e-300
    if not np.any(keep):
        return 0.0
    ratio = q(T @ X[:, keep]) / px[keep]
    return float(np.max(ratio))


def phat(p, T, atol: float = 0.0) -> MixedSeminormValue:
    """p^(T) = m_pp(T), submultiplicative on Q_P."""
    return mixed_seminorm(p, p, T, atol=atol)


def norm_P(P: Calibration, T, atol: float = 0.0) -> float:
    """||T||_P = max_p p^(T); math.inf when T is not universally bounded."""
    return max(float(phat(p, T, atol)) for p in P)


def is_quotient_bounded(P: Calibration, T, atol: float = 0.0) -> bool:
    return all(phat(p, T, atol).is_finite for p in P)


def is_universally_bounded(P: Calibration, T, cap: float = 1e12, atol: float = 0.0):
    """(True, ||T||_P) when every p^(T) is finite (and below ``cap`` for
    estimated values), else (False, None)."""
    vals = [phat(p, T, atol) for p in P]
    if not all(v.is_finite for v in vals):
        return False, None
    bound = max(v.value for v in vals)
    if any(v.estimated for v in vals) and bound > cap:
        return False, None
    return True, bound


def principal_closure(P: Calibration) -> Calibration:
    """Close a weighted-sup calibration under pointwise max of weights."""
    if not P.weighted:
        raise PreconditionError("principal closure is defined for weighted-sup calibrations")
    members = []
    seen = set()
    for p in P:
        key = p.weights.tobytes()
        if key not in seen:
            seen.add(key)
            members.append(p.weights)
    frontier = list(members)
    while frontier:
        new = []
        for a in frontier:
            for b in list(members):
                m = np.maximum(a, b)
                key = m.tobytes()
                if key not in seen:
                    seen.add(key)
                    new.append(m)
        members.extend(new)
        frontier = new
    # keep original members first so indices into P stay valid
    return Calibration(tuple(WeightedSup(w) for w in members), True)


def q_equivalent(P1: Calibration, P2: Calibration, samples: int = 2000, seed: int = 0) -> bool:
    """Each member of one family is equivalent (p < q and q < p) to some
    member of the other.

    For weighted-sup members this is exact: p and q are equivalent iff
    their weights vanish on the same coordinates.  Otherwise mutual
    domination is checked on a vector sample that includes kernel vectors.
    """
    if P1.dim != P2.dim:
        raise DimensionError("calibrations live on different spaces")
    if P1.weighted and P2.weighted:
        s1 = {tuple(p.weights > 0) for p in P1}
        s2 = {tuple(p.weights > 0) for p in P2}
        return s1 == s2
    n = P1.dim
    rng = np.random.default_rng(seed)
    X = np.hstack([np.eye(n), rng.standard_normal((n, samples)) + 1j * rng.standard_normal((n, samples))])
    extra = []
    for P in (P1, P2):
        for p in P:
            if isinstance(p, WeightedSup) and np.any(p.weights == 0):
                k = (p.weights == 0).astype(complex)
                extra.append(k * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
    if extra:
        X = np.hstack([X, np.array(extra).T])
    vals1 = [p(X) for p in P1]
    vals2 = [p(X) for p in P2]

    def below(a, b) -> bool:
        # a <= r b for some r: a must vanish wherever b does
        zero = b <= 1e-13 * max(1.0, float(np.max(b)))
        return not np.any(a[zero] > 1e-10 * max(1.0, float(np.max(a))))

    def covered(A, B) -> bool:
        return all(any(below(a, b) and below(b, a) for b in B) for a in A)

    return covered(vals1, vals2) and covered(vals2, vals1)
