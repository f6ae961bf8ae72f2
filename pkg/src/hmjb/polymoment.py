"""Dense univariate polynomials and their moments under a distribution.

A distribution enters only through its raw-moment sequence
``m_0 = 1, m_1, ..., m_L``.  With that sequence the expectation of any
polynomial of degree at most ``L`` is a finite weighted sum of moments, and
variances/covariances of polynomials of degree at most ``L / 2`` follow from
expectations of products.  This is how the asymptotic variances of
moment-based statistics are computed exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InconsistentMoments, InvalidParam, OrderExceeded

__all__ = [
    "Polynomial",
    "MomentSequence",
    "monomial",
    "poly_eval",
    "poly_add",
    "poly_scale",
    "poly_mul",
    "expect",
    "variance",
    "covariance",
]

logger = logging.getLogger(__name__)

# variances below -VARIANCE_RTOL * (1 + |E p^2|) are an error, above it clamped to 0
VARIANCE_RTOL = 1e-9


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial ``sum_j coeffs[j] * x**j``.

    Trailing zero coefficients are dropped, so the zero polynomial has an
    empty coefficient tuple and ``degree == -1``.  Supports ``+``, ``-`` and
    ``*`` with other polynomials or with real scalars, and calling on a float
    or a numpy array.
    """

    coeffs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x):
        return poly_eval(self, x)

    def __add__(self, other):
        if isinstance(other, Polynomial):
            return poly_add(self, other)
        return poly_add(self, Polynomial((float(other),)))

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return poly_scale(self, -1.0)

    def __sub__(self, other):
        if isinstance(other, Polynomial):
            return poly_add(self, -other)
        return self + (-float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return poly_scale(self, float(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        if self.is_zero():
            return "Polynomial(0)"
        terms = []
        for j, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            if j == 0:
                terms.append(f"{c:g}")
            elif j == 1:
                terms.append(f"{c:g}*x")
            else:
                terms.append(f"{c:g}*x^{j}")
        return "Polynomial(" + " + ".join(terms) + ")"


def monomial(ell: int, coeff: float = 1.0) -> Polynomial:
    """``coeff * x**ell``."""
    if ell < 0:
        raise InvalidParam("monomial degree must be nonnegative")
    return Polynomial((0.0,) * ell + (float(coeff),))


def poly_eval(p: Polynomial, x):
    """Horner evaluation; ``x`` may be a scalar or a numpy array."""
    if p.is_zero():
        return 0.0 * x if isinstance(x, np.ndarray) else 0.0
    acc = p.coeffs[-1]
    for c in reversed(p.coeffs[:-1]):
        acc = acc * x + c
    if isinstance(x, np.ndarray):
        return acc * np.ones_like(x, dtype=float) if np.ndim(acc) == 0 else acc
    return float(acc)


def poly_add(a: Polynomial, b: Polynomial) -> Polynomial:
    n = max(len(a.coeffs), len(b.coeffs))
    ca = a.coeffs + (0.0,) * (n - len(a.coeffs))
    cb = b.coeffs + (0.0,) * (n - len(b.coeffs))
    return Polynomial(tuple(x + y for x, y in zip(ca, cb)))


def poly_scale(a: Polynomial, c: float) -> Polynomial:
    return Polynomial(tuple(c * v for v in a.coeffs))


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    if a.is_zero() or b.is_zero():
        return Polynomial()
    out = [0.0] * (len(a.coeffs) + len(b.coeffs) - 1)
    for i, x in enumerate(a.coeffs):
        if x == 0.0:
            continue
        for j, y in enumerate(b.coeffs):
            out[i + j] += x * y
    return Polynomial(tuple(out))


@dataclass(frozen=True)
class MomentSequence:
    """Raw moments ``raw[l] = E(X**l)`` for ``l = 0..max_order``."""

    raw: tuple[float, ...]

    def __post_init__(self) -> None:
        raw = tuple(float(v) for v in self.raw)
        if len(raw) < 3:
            raise InvalidParam("a moment sequence needs at least orders 0..2")
        if raw[0] != 1.0:
            raise InvalidParam(f"raw[0] must be 1, got {raw[0]!r}")
        if not all(math.isfinite(v) for v in raw):
            raise InvalidParam("moments must be finite")
        if not raw[2] - raw[1] ** 2 > 0.0:
            raise InvalidParam("moment sequence has nonpositive variance")
        object.__setattr__(self, "raw", raw)

    @property
    def max_order(self) -> int:
        return len(self.raw) - 1

    def __getitem__(self, ell: int) -> float:
        if ell > self.max_order:
            raise OrderExceeded(f"moment of order {ell} requested, max order is {self.max_order}")
        return self.raw[ell]


def _check_order(degree: int, M: MomentSequence) -> None:
    if degree > M.max_order:
        raise OrderExceeded(
            f"polynomial of degree {degree} needs moments up to order {degree}, "
            f"only {M.max_order} available"
        )


def expect(p: Polynomial, M: MomentSequence) -> float:
    """``E p(X)`` given the raw moments of ``X``, summed with ``math.fsum``."""
    _check_order(p.degree, M)
    return math.fsum(c * M.raw[j] for j, c in enumerate(p.coeffs))


def covariance(p: Polynomial, q: Polynomial, M: MomentSequence) -> float:
    if p.is_zero() or q.is_zero():
        return 0.0
    _check_order(p.degree + q.degree, M)
    return expect(p * q, M) - expect(p, M) * expect(q, M)


def variance(p: Polynomial, M: MomentSequence) -> float:
    """``Var p(X)``; tiny negative round-off is clamped to zero.

    Raises
    ------
    InconsistentMoments
        If the result is negative beyond round-off, which means ``M`` is not
        the moment sequence of any distribution.
    """
    if p.is_zero():
        return 0.0
    _check_order(2 * p.degree, M)
    second = expect(p * p, M)
    mean = expect(p, M)
    v = second - mean * mean
    if v < 0.0:
        tol = VARIANCE_RTOL * (1.0 + abs(second))
        if v < -tol:
            raise InconsistentMoments(f"negative variance {v!r} (tolerance {tol!r})")
        logger.info("clamping variance %r to zero", v)
        v = 0.0
    return v
