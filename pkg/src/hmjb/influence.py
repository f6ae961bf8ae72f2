"""Influence polynomials of the normalized centered moments and of T_n.

Each estimator used by the tests (centered empirical moments, the NCEMs
``b_{n,p}``/``a_{n,p}`` and the smooth combination ``T_n``) is, to first
order, the sample mean of a polynomial in the data.  The polynomials are
built here in coefficient space so that their variances under a hypothesized
model are exact functions of its moments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    InvalidParam,
    OrderExceeded,
    PluginVarianceWarning,
    SingularCovariance,
)
from .families import FunctionFamily
from .moments import MomentModel, theoretical_ncem
from .polymoment import Polynomial, covariance, variance

__all__ = [
    "InfluenceSet",
    "ChiSquareCoeffs",
    "build_A",
    "build_B",
    "build_C",
    "build_D",
    "build_influence",
    "jb_coefficients",
    "plugin_sigma2",
    "PLUGIN_WARNING",
    "SINGULAR_RTOL",
]

SINGULAR_RTOL = 1e-12

PLUGIN_WARNING = (
    "variance estimated from the data (plug-in); this estimate can be far "
    "above or below the exact variance, making the test unreliable"
)


def _need(model: MomentModel, order: int, what: str) -> None:
    if order > model.max_order:
        raise OrderExceeded(
            f"{what} needs moments up to order {order}, model {model.describe()} "
            f"has {model.max_order}"
        )


def build_A(ell: int, model: MomentModel) -> Polynomial:
    """Influence polynomial of the centered empirical moment of order ``ell``.

    ``sqrt(n) (mu_{n,l} - mu_l)`` is asymptotically the empirical process at
    ``A(l) = h_l + sum_{p<l} C(l,p) (-1)**(l-p)
    (m_1**(l-p) h_p + (l-p) m_1**(l-p-1) m_p h_1)``, up to an additive
    constant which does not affect any variance.
    """
    if ell < 1:
        raise InvalidParam(f"A(l) is defined for l >= 1, got {ell}")
    _need(model, ell, f"A({ell})")
    m = model.raw_moments.raw
    m1 = m[1]
    coeffs = [0.0] * (ell + 1)
    coeffs[ell] = 1.0
    h1_terms = []
    for p in range(ell):
        c = math.comb(ell, p) * (-1.0) ** (ell - p)
        coeffs[p] += c * m1 ** (ell - p)
        h1_terms.append(c * (ell - p) * m1 ** (ell - p - 1) * m[p])
    coeffs[1] += math.fsum(h1_terms)
    return Polynomial(tuple(coeffs))


def build_B(p: int, model: MomentModel) -> Polynomial:
    """Influence polynomial of ``b_{n,p}`` (odd order ``2p - 1``)."""
    if p < 2:
        raise InvalidParam(f"B(p) is defined for p >= 2, got {p}")
    _need(model, 2 * p - 1, f"B({p})")
    s2 = model.sigma2
    mu = model.central[2 * p - 1]
    inner = build_A(2 * p - 1, model) - build_A(2, model) * (0.5 * (2 * p - 1) * mu / s2)
    return inner * s2 ** (-(2 * p - 1) / 2)


def build_C(p: int, model: MomentModel) -> Polynomial:
    """Influence polynomial of ``a_{n,p}`` (even order ``2p``)."""
    if p < 2:
        raise InvalidParam(f"C(p) is defined for p >= 2, got {p}")
    _need(model, 2 * p, f"C({p})")
    s2 = model.sigma2
    mu = model.central[2 * p]
    inner = build_A(2 * p, model) - build_A(2, model) * (p * mu / s2)
    return inner * s2 ** (-p)


@dataclass(frozen=True, eq=False)
class InfluenceSet:
    """All influence polynomials for a test of order ``k`` under ``model``.

    ``A[l]``, ``B[p]`` and ``C[p]`` are dicts keyed by order; ``D`` is the
    influence polynomial of ``T_n`` and ``sigma2`` its exact variance.
    """

    k: int
    model: MomentModel
    family: FunctionFamily
    A: dict[int, Polynomial]
    B: dict[int, Polynomial]
    C: dict[int, Polynomial]
    D: Polynomial
    sigma2: float


def build_D(k: int, family: FunctionFamily, model: MomentModel) -> Polynomial:
    """``D_k = sum_p f_p'(b_p) B(p) + g_p'(a_p) C(p)``, without its variance."""
    if k < 2:
        raise InvalidParam(f"k must be >= 2, got {k}")
    _need(model, 2 * k, f"D_{k}")
    D = Polynomial()
    for p in range(2, k + 1):
        nc = theoretical_ncem(model, p)
        wb = family.fprime(p, nc.b)
        wa = family.gprime(p, nc.a)
        if wb != 0.0:
            D = D + build_B(p, model) * wb
        if wa != 0.0:
            D = D + build_C(p, model) * wa
    return D


def build_influence(k: int, family: FunctionFamily, model: MomentModel) -> InfluenceSet:
    """Build every influence polynomial and the asymptotic variance of ``T_n``."""
    if k < 2:
        raise InvalidParam(f"k must be >= 2, got {k}")
    _need(model, 4 * k, f"the variance of T_n for k={k}")
    A = {ell: build_A(ell, model) for ell in range(2, 2 * k + 1)}
    B = {p: build_B(p, model) for p in range(2, k + 1)}
    C = {p: build_C(p, model) for p in range(2, k + 1)}
    D = build_D(k, family, model)
    return InfluenceSet(k, model, family, A, B, C, D, variance(D, model.raw_moments))


@dataclass(frozen=True)
class ChiSquareCoeffs:
    """Asymptotic covariance of ``sqrt(n) (b_{n,p} - b_p, a_{n,p} - a_p)``.

    ``bj`` and ``aj`` are the variances, ``abj`` the covariance and ``delta``
    the determinant ``aj * bj - abj**2``.
    """

    p: int
    bj: float
    aj: float
    abj: float
    delta: float

    @property
    def singular(self) -> bool:
        return self.delta <= SINGULAR_RTOL * self.aj * self.bj


def jb_coefficients(p: int, model: MomentModel, check_singular: bool = True) -> ChiSquareCoeffs:
    """Variances and covariance of ``B(p)`` and ``C(p)`` under ``model``.

    Raises
    ------
    SingularCovariance
        When the determinant is at most ``1e-12 * aj * bj`` (and
        ``check_singular`` is true).
    """
    if p < 2:
        raise InvalidParam(f"p must be >= 2, got {p}")
    _need(model, 4 * p, f"chi-square coefficients of order {p}")
    B = build_B(p, model)
    C = build_C(p, model)
    M = model.raw_moments
    bj = variance(B, M)
    aj = variance(C, M)
    abj = covariance(B, C, M)
    out = ChiSquareCoeffs(p, bj, aj, abj, aj * bj - abj * abj)
    if check_singular and out.singular:
        raise SingularCovariance(
            f"covariance of order {p} is singular under {model.describe()}: "
            f"aj={aj:g}, bj={bj:g}, abj={abj:g}"
        )
    return out


def plugin_sigma2(k: int, family: FunctionFamily, model: MomentModel, sample) -> float:
    """Empirical variance of ``D_k`` (built from ``model``) over the sample.

    Always emits :class:`PluginVarianceWarning`.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateSample("plug-in variance needs a nonempty sample")
    D = build_D(k, family, model)
    warnings.warn(PLUGIN_WARNING, PluginVarianceWarning, stacklevel=2)
    return float(np.var(D(x)))
