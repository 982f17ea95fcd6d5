"""Holomorphic function objects with exact Taylor coefficients.

Every function knows its Taylor coefficients at any point to any order,
so n-th derivatives are closed-form (``n! * c_n``).  Singularity metadata
(poles, convergence radius) drives the analyticity checks against contours
and domains; nothing is detected numerically.

Mini-language accepted by :func:`parse_function`::

    poly:1,0,2            1 + 2 z^2          (ascending coefficients)
    exp / exp:3           e^z / e^(3z)
    rat:1/-5,1            1 / (z - 5)        (ascending num / den)
    series:r=2:c0,c1,...  power series about 0 with radius 2
    compose:OUTER|INNER   OUTER(INNER(z))
    id, one               z and 1
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError

__all__ = [
    "HoloFun",
    "Poly",
    "Rational",
    "Exp",
    "PowerSeries",
    "Compose",
    "Product",
    "parse_function",
]

_CURVE_SAMPLES = 2048


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product along axis 0."""
    out = np.zeros_like(a, dtype=complex)
    for k in range(a.shape[0]):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def _poly_taylor(coeffs: np.ndarray, z: np.ndarray, order: int) -> np.ndarray:
    # repeated synthetic division: the k-th quotient evaluated at z is c_k
    out = np.zeros((order + 1,) + z.shape, dtype=complex)
    b = np.broadcast_to(coeffs.reshape((-1,) + (1,) * z.ndim), (coeffs.size,) + z.shape).astype(complex)
    for k in range(min(order + 1, coeffs.size)):
        m = b.shape[0]
        q = np.empty((m - 1,) + z.shape, dtype=complex)
        acc = b[m - 1]
        for j in range(m - 2, -1, -1):
            q[j] = acc
            acc = b[j] + z * acc
        out[k] = acc
        b = q
    return out


class HoloFun:
    """Base class; subclasses implement ``taylor`` and ``_check_curves``."""

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return self.taylor(z, 0)[0]

    def taylor(self, z, order: int) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, z, n: int):
        z = np.asarray(z, dtype=complex)
        return math.factorial(n) * self.taylor(z, n)[n]

    def poles(self) -> np.ndarray:
        return np.zeros(0, dtype=complex)

    # -- analyticity -----------------------------------------------------
    def _check_curves(self, curves, strict: bool) -> None:
        """Raise unless analytic on the region bounded by closed curves.

        ``curves`` is a list of (samples, orientation); the region is the set
        with nonzero total winding number.
        """

    def check_contour(self, contour) -> None:
        curves = []
        for c in contour.circles:
            t = np.exp(2j * np.pi * np.arange(_CURVE_SAMPLES) / _CURVE_SAMPLES)
            curves.append((c.center + c.radius * t, c.orientation))
        self._check_curves(curves, strict=True)

    def check_domain(self, domain) -> None:
        curves = []
        for c, r in domain.disks:
            t = np.exp(2j * np.pi * np.arange(_CURVE_SAMPLES) / _CURVE_SAMPLES)
            curves.append((c + r * t, 1))
        for curve in curves:
            self._check_curves([curve], strict=False)

    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()!r})"

    def __mul__(self, other: "HoloFun") -> "HoloFun":
        return Product(self, other)


def _winding(curve: np.ndarray, p: complex) -> float:
    d = curve - p
    ang = np.angle(np.roll(d, -1) / d)
    return float(np.sum(ang) / (2 * np.pi))


def _check_poles(poles, curves, strict: bool, what: str):
    for p in poles:
        total = 0.0
        for samples, orient in curves:
            dmin = float(np.min(np.abs(samples - p)))
            if strict and dmin <= 1e-10 * max(1.0, abs(p)):
                raise PreconditionError(f"{what} singularity {p} lies on the contour")
            if dmin > 0:
                total += orient * _winding(samples, p)
        if abs(total) > 0.5:
            raise PreconditionError(f"{what} singularity {p} lies inside the integration region")


class Poly(HoloFun):
    def __init__(self, coeffs: Sequence[complex]):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        self.coeffs = c

    def taylor(self, z, order):
        return _poly_taylor(self.coeffs, np.asarray(z, dtype=complex), order)

    def horner(self, T: np.ndarray) -> np.ndarray:
        """p(T) by Horner's rule."""
        n = T.shape[0]
        acc = self.coeffs[-1] * np.eye(n, dtype=complex)
        for a in self.coeffs[-2::-1]:
            acc = acc @ T + a * np.eye(n)
        return acc

    def spec(self):
        return "poly:" + ",".join(_fmt(c) for c in self.coeffs)


class Rational(HoloFun):
    """num(z) / den(z), ascending coefficients."""

    def __init__(self, num: Sequence[complex], den: Sequence[complex]):
        self.num = Poly(num)
        self.den = Poly(den)
        if not np.any(self.den.coeffs != 0):
            raise PreconditionError("denominator is identically zero")

    def poles(self):
        d = np.trim_zeros(self.den.coeffs, "b")
        if d.size <= 1:
            return np.zeros(0, dtype=complex)
        return np.roots(d[::-1])

    def taylor(self, z, order):
        z = np.asarray(z, dtype=complex)
        a = self.num.taylor(z, order)
        b = self.den.taylor(z, order)
        if np.any(b[0] == 0):
            raise PreconditionError("evaluation at a pole")
        c = np.zeros_like(a)
        for k in range(order + 1):
            s = a[k] - (np.sum(b[1 : k + 1] * c[k - 1 :: -1][:k], axis=0) if k else 0)
            c[k] = s / b[0]
        return c

    def _check_curves(self, curves, strict):
        _check_poles(self.poles(), curves, strict, "pole")

    def spec(self):
        return ("rat:" + ",".join(_fmt(c) for c in self.num.coeffs)
                + "/" + ",".join(_fmt(c) for c in self.den.coeffs))


class Exp(HoloFun):
    """exp(scale * z)."""

    def __init__(self, scale: complex = 1.0):
        self.scale = complex(scale)

    def taylor(self, z, order):
        z = np.asarray(z, dtype=complex)
        out = np.empty((order + 1,) + z.shape, dtype=complex)
        out[0] = np.exp(self.scale * z)
        for k in range(1, order + 1):
            out[k] = out[k - 1] * self.scale / k
        return out

    def spec(self):
        return "exp" if self.scale == 1 else f"exp:{_fmt(self.scale)}"


class PowerSeries(HoloFun):
    """sum_k a_k z^k with convergence radius ``radius`` about 0.

    ``coeffs`` is a finite sequence or a callable k -> a_k; callables are
    truncated where (|z|/radius)^k falls below 1e-18.
    """

    def __init__(self, coeffs: Sequence[complex] | Callable[[int], complex], radius: float):
        if not radius > 0:
            raise PreconditionError("radius must be positive")
        self.radius = float(radius)
        self._fn = coeffs if callable(coeffs) else None
        self.coeffs = None if callable(coeffs) else np.asarray(coeffs, dtype=complex)

    def coefficient_array(self, count: int) -> np.ndarray:
        if self._fn is None:
            out = np.zeros(max(count, 1), dtype=complex)
            m = min(count, self.coeffs.size)
            out[:m] = self.coeffs[:m]
            return out
        return np.array([complex(self._fn(k)) for k in range(count)])

    def _terms_for(self, zmax: float, order: int) -> int:
        if self._fn is None:
            return self.coeffs.size
        q = zmax / self.radius
        if q <= 0:
            return order + 1
        k = math.ceil(math.log(1e-18) / math.log(q)) if q < 1 else 5000
        return min(5000, k + 2 * order + 10)

    def taylor(self, z, order):
        z = np.asarray(z, dtype=complex)
        zmax = float(np.max(np.abs(z))) if z.size else 0.0
        if zmax >= self.radius * (1 - 1e-9):
            raise PreconditionError(f"|z|={zmax:.6g} outside convergence radius {self.radius:.6g}")
        a = self.coefficient_array(self._terms_for(zmax, order))
        return _poly_taylor(a, z, order)

    def _check_curves(self, curves, strict):
        for samples, _ in curves:
            m = float(np.max(np.abs(samples)))
            limit = self.radius * (1 - 1e-9) if strict else self.radius * (1 + 1e-12)
            if m > limit:
                raise PreconditionError(f"region reaches |z|={m:.6g} beyond convergence radius {self.radius:.6g}")

    def spec(self):
        if self._fn is not None:
            return f"series:r={self.radius:g}:<callable>"
        return f"series:r={self.radius:g}:" + ",".join(_fmt(c) for c in self.coeffs)


class Compose(HoloFun):
    """outer(inner(z))."""

    def __init__(self, outer: HoloFun, inner: HoloFun):
        self.outer = outer
        self.inner = inner

    def poles(self):
        return self.inner.poles()

    def taylor(self, z, order):
        g = self.inner.taylor(z, order)
        o = self.outer.taylor(g[0], order)
        h = g.copy()
        h[0] = 0
        r = np.zeros_like(o)
        r[0] = o[order]
        for j in range(order - 1, -1, -1):
            r = _series_mul(h, r)
            r[0] += o[j]
        return r

    def _check_curves(self, curves, strict):
        self.inner._check_curves(curves, strict)
        image = [(self.inner(samples), orient) for samples, orient in curves]
        self.outer._check_curves(image, strict)

    def spec(self):
        return f"compose:{self.outer.spec()}|{self.inner.spec()}"


class Product(HoloFun):
    def __init__(self, f: HoloFun, g: HoloFun):
        self.f = f
        self.g = g

    def poles(self):
        return np.concatenate([self.f.poles(), self.g.poles()])

    def taylor(self, z, order):
        return _series_mul(self.f.taylor(z, order), self.g.taylor(z, order))

    def _check_curves(self, curves, strict):
        self.f._check_curves(curves, strict)
        self.g._check_curves(curves, strict)

    def spec(self):
        return f"product({self.f.spec()};{self.g.spec()})"


def _fmt(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real) if c.real != int(c.real) else str(int(c.real))
    return str(c).strip("()")


def _nums(text: str) -> list[complex]:
    return [complex(t.strip().replace(" ", "")) for t in text.split(",") if t.strip()]


def parse_function(text: str) -> HoloFun:
    text = text.strip().replace("\u2212", "-")  # accept the typographic minus
    head, _, rest = text.partition(":")
    try:
        if head == "id":
            return Poly([0, 1])
        if head == "one":
            return Poly([1])
        if head == "poly":
            return Poly(_nums(rest))
        if head == "exp":
            return Exp(complex(rest) if rest else 1.0)
        if head == "rat":
            num, sep, den = rest.partition("/")
            if not sep:
                raise ValueError("rat needs NUM/DEN")
            return Rational(_nums(num), _nums(den))
        if head == "series":
            rpart, _, cs = rest.partition(":")
            if not rpart.startswith("r="):
                raise ValueError("series needs r=RADIUS")
            return PowerSeries(_nums(cs), float(rpart[2:]))
        if head == "compose":
            outer, sep, inner = rest.partition("|")
            if not sep:
                raise ValueError("compose needs OUTER|INNER")
            return Compose(parse_function(outer), parse_function(inner))
    except ValueError as exc:
        raise PreconditionError(f"bad function spec {text!r}: {exc}") from None
    raise PreconditionError(f"unknown function spec {text!r}")
