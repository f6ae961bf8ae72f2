"""Smooth transforms applied to the normalized moments, with derivatives.

The statistic sums ``f_p(b_{n,p}) + g_p(a_{n,p})`` over ``p = 2..k``.  A
family bundles the ``f_p``/``g_p`` and their first derivatives; the
derivatives weight the influence polynomials in the asymptotic variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import GrammarError, InvalidParam
from .moments import MomentModel, theoretical_ncem

__all__ = [
    "FunctionFamily",
    "square_family",
    "theta_power_family",
    "custom_family",
    "parse_family",
    "exact_T",
]

Fn = Callable[[float], float]


@dataclass(frozen=True)
class FunctionFamily:
    """The pair ``(f_p, g_p)`` for every order ``p``.

    For the ``square`` and ``theta_power`` kinds the same function is used for
    both ``f_p`` and ``g_p`` and for every ``p``.  The ``custom`` kind carries
    a table ``p -> (f, f', g, g')``.
    """

    kind: str
    params: tuple[float, ...] = ()
    table: Mapping[int, tuple[Fn, Fn, Fn, Fn]] = field(default_factory=dict, compare=False)

    def eval(self, u: float) -> float:
        if self.kind == "square":
            return u * u
        if self.kind == "theta_power":
            theta, power = self.params
            r = int(power)
            return theta * u + (1.0 + u**r) ** r
        raise InvalidParam(f"{self.kind} family has no uniform eval; use f()/g()")

    def deriv(self, u: float) -> float:
        if self.kind == "square":
            return 2.0 * u
        if self.kind == "theta_power":
            theta, power = self.params
            r = int(power)
            return theta + r * r * u ** (r - 1) * (1.0 + u**r) ** (r - 1)
        raise InvalidParam(f"{self.kind} family has no uniform deriv; use fprime()/gprime()")

    def f(self, p: int, u: float) -> float:
        return self.table[p][0](u) if self.kind == "custom" else self.eval(u)

    def fprime(self, p: int, u: float) -> float:
        return self.table[p][1](u) if self.kind == "custom" else self.deriv(u)

    def g(self, p: int, u: float) -> float:
        return self.table[p][2](u) if self.kind == "custom" else self.eval(u)

    def gprime(self, p: int, u: float) -> float:
        return self.table[p][3](u) if self.kind == "custom" else self.deriv(u)

    def describe(self) -> str:
        if self.kind == "square":
            return "square"
        if self.kind == "theta_power":
            theta, power = self.params
            return f"theta:{theta:g},{int(power)}"
        return "custom"


def square_family() -> FunctionFamily:
    return FunctionFamily("square")


def theta_power_family(theta: float, power: int) -> FunctionFamily:
    """``u -> theta*u + (1 + u**power)**power`` for an even ``power >= 2``."""
    if int(power) != power or power < 2 or power % 2:
        raise InvalidParam(f"power must be an even integer >= 2, got {power}")
    return FunctionFamily("theta_power", (float(theta), int(power)))


def custom_family(table: Mapping[int, tuple[Fn, Fn, Fn, Fn]]) -> FunctionFamily:
    return FunctionFamily("custom", (), dict(table))


def parse_family(text: str) -> FunctionFamily:
    """``square`` or ``theta:<theta>,<power>``."""
    text = text.strip().lower()
    if text == "square":
        return square_family()
    name, _, rest = text.partition(":")
    if name == "theta":
        try:
            theta, power = rest.split(",")
            return theta_power_family(float(theta), int(power))
        except ValueError:
            pass
    raise GrammarError(f"bad family {text!r}; grammar: square | theta:<theta>,<even power>")


def exact_T(family: FunctionFamily, k: int, model: MomentModel) -> float:
    """Limit ``sum_{p=2..k} f_p(b_p) + g_p(a_p)`` at the model's NCEMs."""
    total = 0.0
    for p in range(2, k + 1):
        nc = theoretical_ncem(model, p)
        total += family.f(p, nc.b) + family.g(p, nc.a)
    return total
