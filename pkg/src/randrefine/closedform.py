"""Closed-form test functions: exact values, transforms, antiderivatives.

Three primitive shapes, each of unit peak height and each closed under the
affine substitution ``t -> l*t - m``:

* ``Indicator(a, b)`` -- 1 on the half-open interval [a, b), 0 elsewhere
* ``Triangle(center, halfwidth)`` -- tent peaking at 1
* ``Gaussian(mean, stddev)`` -- ``exp(-(t-mean)^2 / (2 stddev^2))``

A :class:`ClosedFormFn` is a finite linear combination of primitives, so
pointwise values, the transform ``fhat(x) = int exp(i t x) f(t) dt`` (no
normalization factor; the inverse in the spectrum module carries 1/(2 pi)),
the running integral ``int_{-inf}^x f`` and the L1 bound are all available
in closed form, without quadrature error.

The half-open indicator convention makes halving identities such as
``chi_[0,1) == chi_[0,1/2) + chi_[1/2,1)`` hold pointwise everywhere, not
just almost everywhere.  Reflections (negative scale) still move the closed
endpoint, so probe grids elsewhere in the package avoid indicator jump
points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erf

_SQRT2PI = math.sqrt(2.0 * math.pi)

#: Effective support of a Gaussian, in standard deviations.
GAUSSIAN_SUPPORT_SIGMAS = 10.0


@dataclass(frozen=True)
class Indicator:
    a: float
    b: float

    kind = "indicator"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"Indicator needs a < b, got [{self.a}, {self.b})")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return ((t >= self.a) & (t < self.b)).astype(float)

    def transform(self, x):
        # (e^{ibx} - e^{iax}) / (ix), written via sinc so x = 0 is exact.
        x = np.asarray(x, dtype=float)
        width = self.b - self.a
        mid = 0.5 * (self.a + self.b)
        return width * np.sinc(width * x / (2.0 * np.pi)) * np.exp(1j * mid * x)

    def integral_to(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(x - self.a, 0.0, self.b - self.a)

    def mass(self) -> float:
        return self.b - self.a

    def support(self) -> tuple[float, float]:
        return self.a, self.b

    def jumps(self) -> tuple[float, ...]:
        return (self.a, self.b)

    def affine_image(self, l: float, m: float) -> tuple[float, "Indicator"]:
        lo, hi = sorted(((self.a + m) / l, (self.b + m) / l))
        return abs(l), Indicator(lo, hi)

    def params(self) -> list[float]:
        return [self.a, self.b]


@dataclass(frozen=True)
class Triangle:
    center: float
    halfwidth: float

    kind = "triangle"

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError("Triangle needs halfwidth > 0")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(t - self.center) / self.halfwidth)

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        w = self.halfwidth
        core = w * np.sinc(w * x / (2.0 * np.pi)) ** 2
        return core * np.exp(1j * self.center * x)

    def integral_to(self, x):
        x = np.asarray(x, dtype=float)
        w = self.halfwidth
        u = np.clip(x - self.center, -w, w)
        rising = 0.5 * (u + w) ** 2 / w
        falling = w - 0.5 * (w - u) ** 2 / w
        return np.where(u <= 0.0, rising, falling)

    def mass(self) -> float:
        return self.halfwidth

    def support(self) -> tuple[float, float]:
        return self.center - self.halfwidth, self.center + self.halfwidth

    def jumps(self) -> tuple[float, ...]:
        return ()

    def affine_image(self, l: float, m: float) -> tuple[float, "Triangle"]:
        return abs(l), Triangle((self.center + m) / l, self.halfwidth / abs(l))

    def params(self) -> list[float]:
        return [self.center, self.halfwidth]


@dataclass(frozen=True)
class Gaussian:
    mean: float
    stddev: float

    kind = "gaussian"

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError("Gaussian needs stddev > 0")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        z = (t - self.mean) / self.stddev
        return np.exp(-0.5 * z * z)

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        s = self.stddev
        return s * _SQRT2PI * np.exp(1j * self.mean * x - 0.5 * (s * x) ** 2)

    def integral_to(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mean) / (self.stddev * math.sqrt(2.0))
        return self.stddev * _SQRT2PI * 0.5 * (1.0 + erf(z))

    def mass(self) -> float:
        return self.stddev * _SQRT2PI

    def support(self) -> tuple[float, float]:
        pad = GAUSSIAN_SUPPORT_SIGMAS * self.stddev
        return self.mean - pad, self.mean + pad

    def jumps(self) -> tuple[float, ...]:
        return ()

    def affine_image(self, l: float, m: float) -> tuple[float, "Gaussian"]:
        return abs(l), Gaussian((self.mean + m) / l, self.stddev / abs(l))

    def params(self) -> list[float]:
        return [self.mean, self.stddev]


Primitive = Union[Indicator, Triangle, Gaussian]

_KINDS = {"indicator": Indicator, "triangle": Triangle, "gaussian": Gaussian}


@dataclass(frozen=True)
class ClosedFormFn:
    """Linear combination of primitives.  Immutable value type.

    Supports ``+``, ``-`` and scalar ``*`` so fixtures read like formulas:
    ``indicator(0, 1) - 2.0 * gaussian(3, 1)``.
    """

    terms: tuple[tuple[float, Primitive], ...]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for c, prim in self.terms:
            out += c * prim.value(t)
        return out if out.shape else float(out)

    def fourier(self, x):
        """Transform ``int exp(i t x) f(t) dt``, exact per primitive."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for c, prim in self.terms:
            out += c * prim.transform(x)
        return out if out.shape else complex(out)

    def antiderivative(self, x):
        """Running integral from -infinity; bounded, 0 at the far left."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for c, prim in self.terms:
            out += c * prim.integral_to(x)
        return out if out.shape else float(out)

    def mass(self) -> float:
        return math.fsum(c * prim.mass() for c, prim in self.terms)

    def l1_upper_bound(self) -> float:
        return math.fsum(abs(c) * prim.mass() for c, prim in self.terms)

    def support(self) -> tuple[float, float]:
        """Hull of the terms' effective supports (Gaussians padded)."""
        if not self.terms:
            return 0.0, 0.0
        lows, highs = zip(*(prim.support() for _, prim in self.terms))
        return min(lows), max(highs)

    def jump_points(self) -> tuple[float, ...]:
        pts = set()
        for _, prim in self.terms:
            pts.update(prim.jumps())
        return tuple(sorted(pts))

    def simplify(self, drop_tol: float = 0.0) -> "ClosedFormFn":
        """Merge identical primitives; drop coefficients with |c| <= drop_tol."""
        merged: dict[Primitive, float] = {}
        for c, prim in self.terms:
            merged[prim] = merged.get(prim, 0.0) + c
        kept = tuple(
            (c, prim) for prim, c in merged.items() if abs(c) > drop_tol
        )
        return ClosedFormFn(kept)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "ClosedFormFn") -> "ClosedFormFn":
        return ClosedFormFn(self.terms + other.terms)

    def __sub__(self, other: "ClosedFormFn") -> "ClosedFormFn":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "ClosedFormFn":
        return ClosedFormFn(tuple((scalar * c, prim) for c, prim in self.terms))

    def __mul__(self, scalar: float) -> "ClosedFormFn":
        return self.__rmul__(scalar)

    def __neg__(self) -> "ClosedFormFn":
        return (-1.0) * self

    # -- serialization --------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            [
                {"coef": c, "kind": prim.kind, "params": prim.params()}
                for c, prim in self.terms
            ]
        )


def fn_from_json(text: str) -> ClosedFormFn:
    """Parse ``[{"coef":..,"kind":..,"params":[..]}, ...]``."""
    raw = json.loads(text)
    terms = []
    for item in raw:
        cls = _KINDS[item["kind"]]
        terms.append((float(item["coef"]), cls(*item["params"])))
    return ClosedFormFn(tuple(terms))


# convenience constructors ----------------------------------------------------

def indicator(a: float, b: float) -> ClosedFormFn:
    return ClosedFormFn(((1.0, Indicator(a, b)),))


def triangle(center: float, halfwidth: float) -> ClosedFormFn:
    return ClosedFormFn(((1.0, Triangle(center, halfwidth)),))


def gaussian(mean: float, stddev: float) -> ClosedFormFn:
    return ClosedFormFn(((1.0, Gaussian(mean, stddev)),))


def zero_fn() -> ClosedFormFn:
    return ClosedFormFn(())


# operations ------------------------------------------------------------------

def zero_mean_check(fn: ClosedFormFn, tol: float = 1e-12) -> bool:
    """True when the total integral vanishes, the admissibility gate for a
    forcing term."""
    return abs(fn.fourier(0.0)) <= tol


def affine_image(fn: ClosedFormFn, l: float, m: float) -> ClosedFormFn:
    """Closed form of ``|l| * f(l*t - m)``.

    Mass is preserved term by term.  For negative ``l`` an indicator image
    differs from the true substitution at its two endpoints (the closed end
    flips); all identities hold away from those points.
    """
    if l == 0.0:
        raise ValueError("affine image needs l != 0")
    terms = []
    for c, prim in fn.terms:
        factor, image = prim.affine_image(l, m)
        terms.append((c * factor, image))
    return ClosedFormFn(tuple(terms))


def manufacture_inhomogeneity(measure, f: ClosedFormFn) -> ClosedFormFn:
    """Forcing term that makes ``f`` an exact solution for ``measure``.

    Rearranges the refinement identity:  g = f - sum_i p_i |l_i| f(l_i x - m_i).
    Because each weighted image preserves mass and the weights sum to 1, the
    result always has zero total integral.
    """
    g = f
    for l, m, p in measure.atoms:
        g = g - p * affine_image(f, l, m)
    return g.simplify()
