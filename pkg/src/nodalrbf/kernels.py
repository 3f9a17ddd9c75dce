"""Compactly supported Wendland kernels built in exact rational arithmetic.

The basic family is ``I^q (1 - r)_+^p`` where ``I f(r) = int_r^inf f(t) t dt``;
each application of ``I`` raises the smoothness by two. Coefficients are kept
as :class:`fractions.Fraction` during construction and converted to floats
once. Evaluation uses the factored form ``(1 - r)^m * c(r)`` with a low-degree
core polynomial ``c``, which avoids the cancellation that the expanded
monomial form suffers close to the edge of the support.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np


MAX_Q = 8


def _trim(coeffs):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        coeffs = [Fraction(0)]
    return tuple(Fraction(c) for c in coeffs)


@dataclass(frozen=True)
class Polynomial:
    """Exact polynomial in ``r`` with ascending rational coefficients.

    Calling it evaluates on the support ``[0, 1]`` and returns 0 outside.
    """

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @classmethod
    def one_minus_r_power(cls, p):
        return cls([Fraction(comb(p, k) * (-1) ** k) for k in range(p + 1)])

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return self.coeffs == (Fraction(0),)

    def value(self, r):
        """Exact value at a rational point (no support cut-off)."""
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * r + c
        return acc

    def as_float(self):
        return np.array([float(c) for c in self.coeffs])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.polynomial.polynomial.polyval(np.clip(r, 0.0, 1.0), self.as_float())
        return np.where((r >= 0) & (r <= 1), out, 0.0)

    def derivative(self):
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:] or [0])

    def times_r(self):
        return Polynomial((Fraction(0),) + self.coeffs)

    def scale(self, s):
        return Polynomial([c * s for c in self.coeffs])

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Polynomial([x + y for x, y in zip(a, b)])

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(out)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def divide_one_minus_r(self):
        """Exact quotient by ``(1 - r)``; raises if ``r = 1`` is not a root."""
        if self.value(1) != 0:
            raise ValueError("polynomial does not vanish at r = 1")
        # synthetic division by (r - 1), then flip the sign
        coeffs = self.coeffs
        q = [Fraction(0)] * (len(coeffs) - 1)
        carry = Fraction(0)
        for k in range(len(coeffs) - 1, 0, -1):
            carry = coeffs[k] + carry
            q[k - 1] = carry
        return Polynomial([-c for c in q])


def apply_operator_I(f):
    """Exact ``r -> int_r^1 f(t) t dt`` for ``f`` supported on ``[0, 1]``."""
    g = f.times_r()
    antider = Polynomial([Fraction(0)] + [c / (k + 1) for k, c in enumerate(g.coeffs)])
    return Polynomial([antider.value(1)]) - antider


def _factor_at_one(poly):
    m = 0
    core = poly
    while not core.is_zero() and core.value(1) == 0:
        core = core.divide_one_minus_r()
        m += 1
    return m, core


@dataclass(frozen=True)
class RadialKernel:
    """Normalized Wendland-type kernel ``I^q (1 - r)^p / (I^q (1 - r)^p)(0)``.

    ``raw`` is the un-normalized ``I^q (1 - r)^p``; ``poly`` and ``dpoly`` are
    the normalized kernel and its radial derivative on ``[0, 1]``.
    """

    p: int
    q: int
    raw: Polynomial
    poly: Polynomial
    dpoly: Polynomial
    name: str = ""
    support: float = 1.0
    _factored: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m, core = _factor_at_one(self.poly)
        # d/dr[(1-r)^m c] = (1-r)^(m-1) [(1-r) c' - m c]
        one_minus_r = Polynomial([1, -1])
        dcore = one_minus_r * core.derivative() - core.scale(m) if m else core.derivative()
        object.__setattr__(self, "_factored", (m, core.as_float(), max(m - 1, 0), dcore.as_float()))

    @property
    def smoothness_k(self):
        return 2 * self.q

    def values(self, r):
        """Kernel values for an array of non-negative radii."""
        r = np.asarray(r, dtype=float)
        m, core, _, _ = self._factored
        rc = np.clip(r, 0.0, 1.0)
        out = (1.0 - rc) ** m * np.polynomial.polynomial.polyval(rc, core)
        return np.where(r <= 1.0, out, 0.0)

    def derivatives(self, r):
        """Radial derivative ``d_r phi`` for an array of non-negative radii."""
        r = np.asarray(r, dtype=float)
        m, _, md, dcore = self._factored
        rc = np.clip(r, 0.0, 1.0)
        out = (1.0 - rc) ** md * np.polynomial.polynomial.polyval(rc, dcore)
        return np.where(r <= 1.0, out, 0.0)


class GaussianKernel:
    """``exp(-r^2)``; globally supported, only used to show Runge oscillations."""

    name = "gaussian"
    support = np.inf
    q = None

    def values(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(-r * r)

    def derivatives(self, r):
        r = np.asarray(r, dtype=float)
        return -2.0 * r * np.exp(-r * r)


def build_wendland(p, q):
    """``I^q (1 - r)_+^p`` normalized to 1 at the origin."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0 <= q <= MAX_Q:
        raise ValueError(f"q must lie in [0, {MAX_Q}]")
    raw = Polynomial.one_minus_r_power(p)
    for _ in range(q):
        raw = apply_operator_I(raw)
    poly = raw.scale(1 / raw.value(0))
    return RadialKernel(p=p, q=q, raw=raw, poly=poly, dpoly=poly.derivative(),
                        name=f"I^{q}(1-r)^{p}")


def wendland(d, k):
    """Wendland's ``phi_{d,k}``: positive definite in R^d, C^{2k} smooth.

    This is ``build_wendland(d // 2 + k + 1, k)``; for ``d = 3, k = 1`` it is
    ``(1 - r)^4 (4r + 1)``.
    """
    kern = build_wendland(d // 2 + k + 1, k)
    return RadialKernel(p=kern.p, q=kern.q, raw=kern.raw, poly=kern.poly,
                        dpoly=kern.dpoly, name=f"wendland({d},{k})")


def make_kernel(family, p=3, q=4):
    """Kernel factory used by the configuration layer.

    ``family`` is ``"wendland"`` (``phi_{p,q}`` of :func:`wendland`, the
    default), ``"literal"`` (``I^q (1-r)^p`` of :func:`build_wendland`) or
    ``"gaussian"``.
    """
    if family == "wendland":
        return wendland(p, q)
    if family == "literal":
        return build_wendland(p, q)
    if family == "gaussian":
        return GaussianKernel()
    raise ValueError(f"unknown kernel family {family!r}")


def eval_kernel(kernel, r):
    """Return ``(phi(r), d_r phi(r))`` for a scalar radius ``r >= 0``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    return float(kernel.values(r)), float(kernel.derivatives(r))
