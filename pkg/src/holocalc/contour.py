"""Cauchy contours made of circles, and trapezoidal quadrature on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContourError, PreconditionError

__all__ = [
    "Domain",
    "Circle",
    "Contour",
    "cluster_spectrum",
    "build_cauchy_contour",
    "winding_number",
    "quadrature_nodes",
    "DEFAULT_NODES",
    "MIN_SEPARATION",
]

DEFAULT_NODES = 128
MIN_SEPARATION = 1e-8


@dataclass(frozen=True)
class Domain:
    """Union of open disks, given as (center, radius) pairs."""

    disks: tuple

    def __post_init__(self):
        disks = tuple((complex(c), float(r)) for c, r in self.disks)
        if not disks:
            raise PreconditionError("domain needs at least one disk")
        for _, r in disks:
            if not (r > 0 and math.isfinite(r)):
                raise PreconditionError(f"disk radius must be positive and finite, got {r}")
        object.__setattr__(self, "disks", disks)

    @classmethod
    def disk(cls, center: complex, radius: float) -> "Domain":
        return cls(((center, radius),))

    def depth(self, z) -> np.ndarray:
        """Lower bound on dist(z, complement of D); negative outside D."""
        z = np.asarray(z, dtype=complex)
        return np.max([r - np.abs(z - c) for c, r in self.disks], axis=0)

    def contains(self, z) -> np.ndarray:
        return self.depth(z) > 0

    def to_dict(self):
        return {"disks": [{"c": [c.real, c.imag], "r": r} for c, r in self.disks]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple((complex(*disk["c"]), disk["r"]) for disk in d["disks"]))


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float
    orientation: int = 1
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("circle radius must be positive")
        if self.orientation not in (1, -1):
            raise PreconditionError("orientation must be +1 or -1")
        if self.nodes < 2:
            raise PreconditionError("need at least 2 nodes per circle")


@dataclass(frozen=True)
class Contour:
    circles: tuple
    separation: float
    enclosed: tuple = field(default=(), compare=False)
    excluded: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "circles", tuple(self.circles))
        if not self.separation > 0:
            raise ContourError("contour separation must be positive")
        cs = self.circles
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                d = abs(cs[i].center - cs[j].center)
                if d <= cs[i].radius + cs[j].radius and d >= abs(cs[i].radius - cs[j].radius):
                    raise ContourError("contour circles intersect")

    @property
    def length(self) -> float:
        return sum(2 * math.pi * c.radius for c in self.circles)

    @property
    def total_nodes(self) -> int:
        return sum(c.nodes for c in self.circles)

    def with_nodes(self, nodes: int) -> "Contour":
        return replace(self, circles=tuple(replace(c, nodes=nodes) for c in self.circles))

    def to_dict(self):
        return {
            "circles": [
                {"c": [c.center.real, c.center.imag], "r": c.radius, "orient": c.orientation, "nodes": c.nodes}
                for c in self.circles
            ],
            "separation": self.separation,
        }

    @classmethod
    def from_dict(cls, d):
        circles = tuple(
            Circle(complex(*c["c"]), float(c["r"]), int(c.get("orient", 1)), int(c.get("nodes", DEFAULT_NODES)))
            for c in d["circles"]
        )
        return cls(circles, float(d["separation"]))


def cluster_spectrum(points, gap: float) -> list[list[int]]:
    """Single-linkage clusters of ``points`` (as index lists).

    Two points share a cluster iff a chain of hops shorter than ``gap``
    joins them.  Clusters come back sorted by their leftmost member.
    """
    if not gap > 0:
        raise PreconditionError("gap must be positive")
    z = np.asarray(points, dtype=complex).ravel()
    n = z.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < gap:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = list(groups.values())
    clusters.sort(key=lambda c: (min(z[i].real for i in c), min(z[i].imag for i in c)))
    return clusters


def _hull(pts: np.ndarray) -> tuple[complex, float]:
    c = complex((pts.real.min() + pts.real.max()) / 2, (pts.imag.min() + pts.imag.max()) / 2)
    return c, float(np.max(np.abs(pts - c)))


def _circles_for(K: np.ndarray, clusters, excluded: np.ndarray, domain: Domain | None,
                 nodes: int, min_sep: float):
    hulls = [_hull(K[c]) for c in clusters]
    circles = []
    for i, (c, e) in enumerate(hulls):
        limits = []
        for j, (c2, e2) in enumerate(hulls):
            if j != i:
                limits.append((abs(c - c2) - e - e2) / 3)
        if excluded.size:
            limits.append((float(np.min(np.abs(excluded - c))) - e) / 2)
        if domain is not None:
            limits.append((float(domain.depth(c)) - e) / 2)
        margin = min(limits) if limits else max(e / 2, 0.5)
        if not margin >= min_sep:
            raise ContourError(
                f"cluster at {c:.6g} admits margin {margin:.3e} < required separation {min_sep:.1e}"
            )
        circles.append(Circle(c, e + margin, 1, nodes))
    return circles


def build_cauchy_contour(K, excluded=(), domain: Domain | None = None, gap: float | None = None,
                         nodes: int = DEFAULT_NODES, min_sep: float = MIN_SEPARATION) -> Contour:
    """Positively oriented circles enclosing K, avoiding ``excluded``, inside D.

    Each single-linkage cluster of K (hop threshold ``gap``) gets one circle
    of radius extent + margin, the margin being the smallest of a third of
    the hull gap to other clusters and half the room to the nearest excluded
    point or to the complement of D.  With ``gap=None`` every single-linkage
    level is tried and the one with the largest clearance relative to the
    circle radius wins (ties go to the coarser level).
    """
    K = np.atleast_1d(np.asarray(K, dtype=complex)).ravel()
    excluded = np.atleast_1d(np.asarray(excluded, dtype=complex)).ravel()
    if K.size == 0:
        raise PreconditionError("enclosed set K must be nonempty")
    if domain is not None and not np.all(domain.contains(K)):
        raise ContourError("K is not contained in the domain")
    if excluded.size and float(np.min(np.abs(K[:, None] - excluded[None, :]))) < min_sep:
        raise ContourError("K meets the excluded set")

    if gap is not None:
        attempts = [cluster_spectrum(K, gap)]
    else:
        # thresholds from the single-linkage merge heights, coarsest first
        d = np.abs(K[:, None] - K[None, :])
        heights = sorted({float(x) for x in d[np.triu_indices(K.size, 1)] if x > 0}, reverse=True)
        attempts = [[list(range(K.size))]]
        seen = {1}
        for h in heights:
            cl = cluster_spectrum(K, h)
            if len(cl) not in seen:
                seen.add(len(cl))
                attempts.append(cl)
    err = None
    best, best_q = None, -1.0
    for clusters in attempts:
        try:
            circles = _circles_for(K, clusters, excluded, domain, nodes, min_sep)
        except ContourError as exc:
            err = exc
            continue
        contour = _certify(circles, K, excluded, domain, min_sep)
        if contour is None:
            err = ContourError("circles fail the winding-number certificate")
            continue
        # trapezoid error decays like (1 - sep/radius)^N, so keep the
        # clustering with the largest relative clearance
        q = contour.separation / max(c.radius for c in contour.circles)
        if q > best_q * (1 + 1e-9):
            best, best_q = contour, q
    if best is None:
        raise err
    return best


def _certify(circles, K, excluded, domain, min_sep) -> Contour | None:
    seps = []
    for circ in circles:
        seps.append(float(np.min(np.abs(np.abs(K - circ.center) - circ.radius))))
        if excluded.size:
            seps.append(float(np.min(np.abs(np.abs(excluded - circ.center) - circ.radius))))
        if domain is not None:
            seps.append(float(domain.depth(circ.center)) - circ.radius)
    sep = min(seps)
    if not sep >= min_sep:
        return None
    try:
        contour = Contour(tuple(circles), sep, tuple(K.tolist()), tuple(excluded.tolist()))
    except ContourError:
        return None
    if any(winding_number(contour, z) != 1 for z in K):
        return None
    if any(winding_number(contour, z) != 0 for z in excluded):
        return None
    return contour


def winding_number(contour: Contour, z: complex) -> int:
    """Exact winding number of a union of circles around z."""
    z = complex(z)
    total = 0
    for c in contour.circles:
        d = abs(z - c.center)
        if abs(d - c.radius) <= 1e-12 * max(1.0, c.radius):
            raise PreconditionError(f"point {z} lies on the contour")
        if d < c.radius:
            total += c.orientation
    return total


def quadrature_nodes(contour: Contour) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal nodes and weights with 1/(2 pi i) and d(lambda) folded in.

    sum_j w_j g(lambda_j) approximates (1/2 pi i) * integral of g over the
    contour; it is exact for 1/(lambda - c) at the center of each circle.
    """
    lams, ws = [], []
    for c in contour.circles:
        if c.nodes < 2:
            raise PreconditionError("need at least 2 nodes per circle")
        e = np.exp(2j * np.pi * np.arange(c.nodes) / c.nodes)
        lams.append(c.center + c.radius * e)
        ws.append(c.orientation * c.radius * e / c.nodes)
    return np.concatenate(lams), np.concatenate(ws)
