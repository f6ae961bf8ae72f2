"""Sample statistics and the goodness-of-fit tests built on them.

All statistic formulas are written once, vectorized over leading axes, so
that the single-sample tests below and the Monte Carlo harness (which works
on a ``(replications, n)`` matrix) share the same arithmetic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateSample,
    InvalidParam,
    NoCdf,
    NotSymmetric,
    PluginVarianceWarning,
    SmallSampleWarning,
)
from .families import FunctionFamily, exact_T
from .influence import (
    PLUGIN_WARNING,
    ChiSquareCoeffs,
    build_influence,
    jb_coefficients,
    plugin_sigma2,
)
from .moments import MomentModel, NcemPair, sample_central_moments, theoretical_ncem

__all__ = [
    "TestReport",
    "as_sample",
    "min_sample_size",
    "empirical_central_moment",
    "sample_ncem",
    "ncem_arrays",
    "statistic_T",
    "general_test",
    "chi2_symmetric",
    "chi2_general",
    "classical_jb",
    "ks_test",
    "ks_distance",
    "chi2_upper_tail",
    "normal_upper_tail",
    "kolmogorov_sf",
    "TAILS",
]

SMALL_SAMPLE_N = 30
TAILS = ("two_sided_abs", "one_sided_abs")


# ---------------------------------------------------------------- tail functions


def normal_upper_tail(x):
    """``P(N(0,1) >= x)`` through the complementary error function."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    from scipy.special import ndtr

    return ndtr(-np.asarray(x, dtype=float))


def chi2_upper_tail(x, dof: int = 2):
    """Upper tail of the chi-square law; closed form ``exp(-x/2)`` for 2 dof."""
    if dof != 2:
        from scipy.stats import chi2

        return chi2.sf(x, dof)
    if np.ndim(x) == 0:
        return math.exp(-max(float(x), 0.0) / 2.0)
    return np.exp(-np.maximum(np.asarray(x, dtype=float), 0.0) / 2.0)


def kolmogorov_sf(t: float) -> float:
    """``P(K > t)`` for the limiting Kolmogorov distribution.

    Uses ``2 sum_j (-1)**(j-1) exp(-2 j**2 t**2)``, truncated once a term drops
    below 1e-12.  Below ``t = 0.6`` that series converges slowly and with
    cancellation, so the equivalent Jacobi-theta form of the CDF is summed
    instead.
    """
    t = float(t)
    if t <= 0.0:
        return 1.0
    if t < 0.6:
        c = math.pi**2 / (8.0 * t * t)
        s = 0.0
        j = 1
        while True:
            term = math.exp(-((2 * j - 1) ** 2) * c)
            s += term
            if term < 1e-16:
                break
            j += 1
        return 1.0 - math.sqrt(2.0 * math.pi) / t * s
    s = 0.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * t * t)
        s += term if j % 2 else -term
        if term < 1e-12:
            break
        j += 1
    return min(1.0, max(0.0, 2.0 * s))


# ---------------------------------------------------------------- samples


def min_sample_size(k: int) -> int:
    """Smallest sample accepted by a test that uses moments up to order ``2k``."""
    return max(8, 2 * k + 2)


def as_sample(values, k: int = 2, min_n: Optional[int] = None) -> np.ndarray:
    """Validate a 1-D sample for a test of order ``k``.

    Raises
    ------
    DegenerateSample
        If the sample is too small, contains non-finite values or has zero
        variance.
    """
    x = np.asarray(values, dtype=float).ravel()
    floor = min_sample_size(k) if min_n is None else min_n
    if x.size < floor:
        raise DegenerateSample(f"sample of size {x.size} is below the minimum {floor} for k={k}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSample("sample contains non-finite values")
    if np.all(x == x[0]):
        raise DegenerateSample("sample has zero variance")
    return x


def _small_sample_note(n: int) -> list[str]:
    if n < SMALL_SAMPLE_N:
        msg = f"small sample (n={n} < {SMALL_SAMPLE_N}): asymptotic p-values are rough"
        warnings.warn(msg, SmallSampleWarning, stacklevel=3)
        return [msg]
    return []


# ---------------------------------------------------------------- moments


def empirical_central_moment(s, ell: int) -> float:
    """``(1/n) sum (X_i - mean)**ell``, computed two-pass."""
    if ell < 1:
        raise InvalidParam(f"order must be >= 1, got {ell}")
    x = np.asarray(s, dtype=float).ravel()
    return float(sample_central_moments(x, max(ell, 2))[ell])


def ncem_arrays(x, k: int) -> tuple[np.ndarray, np.ndarray]:
    """NCEMs of orders ``p = 0..k`` along the last axis of ``x``.

    Returns ``(b, a)`` of shape ``x.shape[:-1] + (k + 1,)``; only entries
    ``p >= 2`` are meaningful.
    """
    mu = sample_central_moments(x, 2 * k)
    mu2 = mu[..., 2]
    if np.any(mu2 <= 0.0):
        raise DegenerateSample("sample has zero variance")
    b = np.zeros(mu.shape[:-1] + (k + 1,))
    a = np.zeros_like(b)
    for p in range(2, k + 1):
        b[..., p] = mu[..., 2 * p - 1] / mu2 ** ((2 * p - 1) / 2)
        a[..., p] = mu[..., 2 * p] / mu2**p
    return b, a


def sample_ncem(s, p: int) -> NcemPair:
    """Sample versions ``(b_{n,p}, a_{n,p})``; ``p = 2`` is skewness/kurtosis."""
    if p < 2:
        raise InvalidParam(f"p must be >= 2, got {p}")
    x = np.asarray(s, dtype=float).ravel()
    if x.size < 2 or np.all(x == x[0]):
        raise DegenerateSample("sample has zero variance")
    b, a = ncem_arrays(x, p)
    return NcemPair(p, float(b[p]), float(a[p]))


def _T_from_ncems(b, a, family: FunctionFamily, k: int):
    total = 0.0
    for p in range(2, k + 1):
        total = total + family.f(p, b[..., p]) + family.g(p, a[..., p])
    return total


def statistic_T(s, family: FunctionFamily, k: int) -> float:
    """``T_n = sum_{p=2..k} f_p(b_{n,p}) + g_p(a_{n,p})``."""
    if k < 2:
        raise InvalidParam(f"k must be >= 2, got {k}")
    x = np.asarray(s, dtype=float).ravel()
    if x.size < 2 or np.all(x == x[0]):
        raise DegenerateSample("sample has zero variance")
    b, a = ncem_arrays(x, k)
    return float(_T_from_ncems(b, a, family, k))


# ---------------------------------------------------------------- reports


@dataclass
class TestReport:
    """Outcome of one test on one sample.

    ``standardized``, ``variance_source``, ``sigma2_used`` and ``family`` are
    only set for the general test; ``p`` only for the chi-square tests.
    ``warnings`` is kept out of :meth:`to_dict` because the JSON report
    collects warnings at top level.
    """

    __test__ = False  # not a pytest class

    test_kind: str
    statistic: float
    standardized: Optional[float]
    p_value: float
    p_value_convention: str
    variance_source: Optional[str] = None
    sigma2_used: Optional[float] = None
    k: Optional[int] = None
    p: Optional[int] = None
    family: Optional[str] = None
    model: Optional[str] = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("warnings")
        return d

    def to_text(self) -> str:
        d = self.to_dict()
        width = max(len(key) for key in d)
        lines = []
        for key, v in d.items():
            if v is None:
                continue
            if isinstance(v, float):
                v = f"{v:.6g}"
            lines.append(f"{key:<{width}}  {v}")
        return "\n".join(lines)


def _p_from_standardized(t, tail: str):
    one = normal_upper_tail(np.abs(t))
    if tail == "two_sided_abs":
        return np.minimum(1.0, 2.0 * one)
    if tail == "one_sided_abs":
        return one
    raise InvalidParam(f"tail must be one of {TAILS}, got {tail!r}")


# ---------------------------------------------------------------- tests


def general_test(
    s,
    model: MomentModel,
    family: FunctionFamily,
    k: int,
    variance_source: str = "exact",
    tail: str = "two_sided_abs",
    min_n: Optional[int] = None,
) -> TestReport:
    """Standardized ``sqrt(n) (T_n - T) / sigma_k`` against ``model``.

    ``variance_source="exact"`` uses the model variance of the influence
    polynomial ``D_k``; ``"plugin"`` uses its empirical variance over the
    sample and attaches a warning.
    """
    if tail not in TAILS:
        raise InvalidParam(f"tail must be one of {TAILS}, got {tail!r}")
    x = as_sample(s, k, min_n)
    n = x.size
    notes = _small_sample_note(n)
    T = exact_T(family, k, model)
    if variance_source == "exact":
        sigma2 = build_influence(k, family, model).sigma2
    elif variance_source == "plugin":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PluginVarianceWarning)
            sigma2 = plugin_sigma2(k, family, model, x)
        notes.append(PLUGIN_WARNING)
        warnings.warn(PLUGIN_WARNING, PluginVarianceWarning, stacklevel=2)
    else:
        raise InvalidParam(f"variance_source must be 'exact' or 'plugin', got {variance_source!r}")
    if not sigma2 > 0.0:
        raise DegenerateSample(f"asymptotic variance is {sigma2!r}; the test is undefined")
    Tn = statistic_T(x, family, k)
    t = math.sqrt(n) * (Tn - T) / math.sqrt(sigma2)
    return TestReport(
        "general_normal", Tn, t, float(_p_from_standardized(t, tail)), tail,
        variance_source, sigma2, k, None, family.describe(), model.describe(), notes,
    )


def _chi2_sym_stat(n, db, da, bj: float, aj: float):
    return n * (db**2 / bj + da**2 / aj)


def _chi2_gen_stat(n, db, da, c: ChiSquareCoeffs):
    return (n / c.delta) * (c.aj * db**2 + c.bj * da**2 - 2.0 * c.abj * db * da)


def _ncem_deltas(x, model: MomentModel, p: int):
    b, a = ncem_arrays(x, p)
    nc = theoretical_ncem(model, p)
    return b[..., p] - nc.b, a[..., p] - nc.a


def chi2_symmetric(s, model: MomentModel, p: int = 2, min_n: Optional[int] = None) -> TestReport:
    """``n (db**2 / bj(p) + da**2 / aj(p))`` against a symmetric model, chi-square(2)."""
    if not model.is_symmetric:
        raise NotSymmetric(f"{model.describe()} has nonzero odd central moments")
    c = jb_coefficients(p, model, check_singular=False)
    x = as_sample(s, p, min_n)
    notes = _small_sample_note(x.size)
    db, da = _ncem_deltas(x, model, p)
    stat = float(_chi2_sym_stat(x.size, db, da, c.bj, c.aj))
    return TestReport(
        "chi2_symmetric", stat, None, float(chi2_upper_tail(stat)), "upper_tail",
        p=p, model=model.describe(), warnings=notes,
    )


def chi2_general(s, model: MomentModel, p: int = 2, min_n: Optional[int] = None) -> TestReport:
    """Quadratic form ``n v' Sigma_p^{-1} v`` with ``v = (db, da)``, chi-square(2)."""
    c = jb_coefficients(p, model)
    x = as_sample(s, p, min_n)
    notes = _small_sample_note(x.size)
    db, da = _ncem_deltas(x, model, p)
    stat = float(_chi2_gen_stat(x.size, db, da, c))
    return TestReport(
        "chi2_general", stat, None, float(chi2_upper_tail(stat)), "upper_tail",
        p=p, model=model.describe(), warnings=notes,
    )


def _jb_stat(n, b, a):
    return n * (b**2 / 6.0 + (a - 3.0) ** 2 / 24.0)


def classical_jb(s, min_n: Optional[int] = None) -> TestReport:
    """Classical Jarque-Bera ``n (b**2 / 6 + (a - 3)**2 / 24)``."""
    x = as_sample(s, 2, min_n)
    notes = _small_sample_note(x.size)
    b, a = ncem_arrays(x, 2)
    stat = float(_jb_stat(x.size, b[2], a[2]))
    return TestReport(
        "classical_jb", stat, None, float(chi2_upper_tail(stat)), "upper_tail",
        p=2, model="normal", warnings=notes,
    )


def ks_distance(x, cdf) -> np.ndarray:
    """``sup |F_n - F|`` along the last axis of ``x``."""
    xs = np.sort(np.asarray(x, dtype=float), axis=-1)
    n = xs.shape[-1]
    F = cdf(xs)
    i = np.arange(1, n + 1)
    return np.maximum(i / n - F, F - (i - 1) / n).max(axis=-1)


def ks_test(s, model: MomentModel) -> TestReport:
    """One-sample Kolmogorov-Smirnov test; the statistic is ``sqrt(n) D_n``."""
    if model.cdf is None:
        raise NoCdf(f"{model.describe()} has no distribution function")
    x = np.asarray(s, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateSample("empty sample")
    stat = math.sqrt(x.size) * float(ks_distance(x, model.cdf))
    return TestReport(
        "ks", stat, None, kolmogorov_sf(stat), "upper_tail", model=model.describe(),
    )
