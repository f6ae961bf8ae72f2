"""Moment providers for the hypothesized models.

Every model is built once with moments up to a fixed order and never
changes afterwards.  Raw moments feed the polynomial moment functional;
central moments are kept alongside because they are known in closed form for
the parametric laws (or computed two-pass for data) and recovering them from
raw moments loses precision when the mean is far from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.special import gammainc, ndtr

from .errors import DegenerateSample, GrammarError, InvalidParam, OrderExceeded
from .polymoment import MomentSequence

__all__ = [
    "DEFAULT_MAX_ORDER",
    "MomentModel",
    "NcemPair",
    "normal_moments",
    "laplace_moments",
    "double_gamma_moments",
    "empirical_moments",
    "sample_central_moments",
    "central_from_raw",
    "theoretical_ncem",
    "double_factorial_odd",
    "normal_cdf",
    "parse_model",
]

# enough for tests of order k <= 6 (4k = 24) with headroom
DEFAULT_MAX_ORDER = 26


@dataclass(frozen=True, eq=False)
class MomentModel:
    """A hypothesized distribution described by its moments.

    Attributes
    ----------
    name : str
        ``"normal"``, ``"dexp"``, ``"dgamma"`` or ``"empirical"``.
    params : tuple of float
        Model parameters in the order of the model grammar.
    raw_moments : MomentSequence
        ``E X**l`` for ``l = 0..max_order``.
    central : tuple of float
        ``E (X - m)**l`` for ``l = 0..max_order``.
    cdf : callable or None
        Vectorized distribution function; ``None`` for empirical models.
    sample : ndarray or None
        The data behind an empirical model.
    """

    name: str
    params: tuple[float, ...]
    raw_moments: MomentSequence
    central: tuple[float, ...]
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    sample: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def max_order(self) -> int:
        return self.raw_moments.max_order

    @property
    def mean(self) -> float:
        return self.raw_moments.raw[1]

    @property
    def sigma2(self) -> float:
        return self.central[2]

    @property
    def is_symmetric(self) -> bool:
        """All odd central moments vanish (up to round-off relative to scale)."""
        s = math.sqrt(self.sigma2)
        return all(
            abs(self.central[j]) <= 1e-12 * s**j for j in range(3, self.max_order + 1, 2)
        )

    @property
    def sampleable(self) -> bool:
        return self.name != "empirical"

    def describe(self) -> str:
        if self.name == "empirical":
            return f"empirical(n={len(self.sample)})"
        return f"{self.name}(" + ",".join(f"{v:g}" for v in self.params) + ")"


@dataclass(frozen=True)
class NcemPair:
    """Normalized centered moments of orders ``2p - 1`` (``b``) and ``2p`` (``a``)."""

    p: int
    b: float
    a: float


def double_factorial_odd(k: int) -> int:
    """``(2k)! / (2**k k!) = 1 * 3 * ... * (2k - 1)``, with the empty product for k = 0."""
    return math.prod(range(1, 2 * k, 2))


def _raw_from_central(mean: float, central: list[float]) -> tuple[float, ...]:
    L = len(central) - 1
    return tuple(
        math.fsum(math.comb(ell, j) * mean ** (ell - j) * central[j] for j in range(ell + 1))
        for ell in range(L + 1)
    )


def _check_order_arg(L: int) -> None:
    if L < 2:
        raise InvalidParam(f"max order must be at least 2, got {L}")


def normal_cdf(x):
    return ndtr(np.asarray(x, dtype=float))


# module-level CDFs (bound with functools.partial) keep models picklable


def _normal_cdf(m, sigma, x):
    return normal_cdf((np.asarray(x, dtype=float) - m) / sigma)


def _laplace_cdf(lam, x):
    x = np.asarray(x, dtype=float)
    half = 0.5 * np.exp(-lam * np.abs(x))
    return np.where(x < 0, half, 1.0 - half)


def _double_gamma_cdf(a, b, x):
    x = np.asarray(x, dtype=float)
    return 0.5 + 0.5 * np.sign(x) * gammainc(a, b * np.abs(x))


def normal_moments(m: float, sigma: float, L: int = DEFAULT_MAX_ORDER) -> MomentModel:
    if not sigma > 0:
        raise InvalidParam(f"normal sigma must be positive, got {sigma}")
    _check_order_arg(L)
    central = [
        0.0 if ell % 2 else double_factorial_odd(ell // 2) * sigma**ell for ell in range(L + 1)
    ]
    return MomentModel(
        "normal", (float(m), float(sigma)),
        MomentSequence(_raw_from_central(m, central)), tuple(central),
        partial(_normal_cdf, float(m), float(sigma)),
    )


def laplace_moments(lam: float, L: int = DEFAULT_MAX_ORDER) -> MomentModel:
    """Double-exponential law with density ``(lam / 2) exp(-lam |x|)``."""
    if not lam > 0:
        raise InvalidParam(f"double-exponential rate must be positive, got {lam}")
    _check_order_arg(L)
    central = [0.0 if ell % 2 else math.factorial(ell) / lam**ell for ell in range(L + 1)]
    return MomentModel(
        "dexp", (float(lam),), MomentSequence(tuple(central)), tuple(central),
        partial(_laplace_cdf, float(lam)),
    )


def double_gamma_moments(a: float, b: float, L: int = DEFAULT_MAX_ORDER) -> MomentModel:
    """Double-gamma law with density ``b**a / (2 Gamma(a)) |x|**(a-1) exp(-b |x|)``."""
    if not (a > 0 and b > 0):
        raise InvalidParam(f"double-gamma shape and rate must be positive, got {a}, {b}")
    _check_order_arg(L)
    central = [1.0]
    rising = 1.0
    for ell in range(1, L + 1):
        rising *= a + ell - 1
        central.append(0.0 if ell % 2 else rising / b**ell)
    return MomentModel(
        "dgamma", (float(a), float(b)), MomentSequence(tuple(central)), tuple(central),
        partial(_double_gamma_cdf, float(a), float(b)),
    )


def sample_central_moments(x: np.ndarray, L: int) -> np.ndarray:
    """Two-pass centered moments ``mu_{n,l}``, ``l = 0..L``, along the last axis.

    Works row-wise on 2-D arrays (one replication per row).  Entry 1 is set to
    exactly 0.
    """
    x = np.asarray(x, dtype=float)
    d = x - x.mean(axis=-1, keepdims=True)
    out = np.empty(x.shape[:-1] + (L + 1,))
    out[..., 0] = 1.0
    out[..., 1] = 0.0
    dp = d.copy()
    for ell in range(2, L + 1):
        dp *= d
        out[..., ell] = dp.mean(axis=-1)
    return out


def empirical_moments(sample, L: int = DEFAULT_MAX_ORDER) -> MomentModel:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSample("an empirical model needs at least 2 observations")
    _check_order_arg(L)
    if np.all(x == x[0]):
        raise DegenerateSample("all observations are equal")
    raw = [1.0]
    xp = np.ones_like(x)
    for _ in range(L):
        xp = xp * x
        raw.append(float(np.mean(xp)))
    central = tuple(float(v) for v in sample_central_moments(x, L))
    return MomentModel(
        "empirical", (), MomentSequence(tuple(raw)), central, None, x.copy()
    )


def central_from_raw(M: MomentSequence, ell: int) -> float:
    """``mu_l = sum_p C(l, p) (-m_1)**(l - p) m_p``."""
    if ell > M.max_order:
        raise OrderExceeded(f"central moment of order {ell} needs raw order {ell}")
    if ell == 1:
        return 0.0
    m1 = M.raw[1]
    return math.fsum(
        math.comb(ell, p) * (-m1) ** (ell - p) * M.raw[p] for p in range(ell + 1)
    )


def theoretical_ncem(model: MomentModel, p: int) -> NcemPair:
    """``(mu_{2p-1} / sigma**(2p-1), mu_{2p} / sigma**(2p))`` of the model."""
    if p < 2:
        raise InvalidParam(f"NCEM order must be >= 2, got {p}")
    if 2 * p > model.max_order:
        raise OrderExceeded(f"NCEM of order {p} needs moments up to {2 * p}")
    mu2 = model.central[2]
    b = model.central[2 * p - 1] / mu2 ** ((2 * p - 1) / 2)
    a = model.central[2 * p] / mu2**p
    return NcemPair(p, b, a)


def _floats(text: str, count: int, grammar: str) -> list[float]:
    parts = [t for t in text.split(",") if t.strip()]
    if len(parts) != count:
        raise GrammarError(f"expected {grammar}")
    try:
        return [float(t) for t in parts]
    except ValueError:
        raise GrammarError(f"expected {grammar}") from None


MODEL_GRAMMAR = "normal:m,sigma | dexp:lambda | dgamma:a,b | empirical:<path>"


def parse_model(text: str, L: int = DEFAULT_MAX_ORDER) -> MomentModel:
    """Build a model from ``normal:m,sigma``, ``dexp:lambda``, ``dgamma:a,b``
    or ``empirical:<path>``."""
    name, sep, rest = text.partition(":")
    name = name.strip().lower()
    if not sep:
        raise GrammarError(f"bad model {text!r}; grammar: {MODEL_GRAMMAR}")
    if name == "normal":
        m, s = _floats(rest, 2, "normal:m,sigma")
        return normal_moments(m, s, L)
    if name in ("dexp", "laplace"):
        (lam,) = _floats(rest, 1, "dexp:lambda")
        return laplace_moments(lam, L)
    if name == "dgamma":
        a, b = _floats(rest, 2, "dgamma:a,b")
        return double_gamma_moments(a, b, L)
    if name == "empirical":
        from .dataio import load_csv

        return empirical_moments(load_csv(Path(rest)), L)
    raise GrammarError(f"unknown model {name!r}; grammar: {MODEL_GRAMMAR}")
