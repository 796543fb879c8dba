"""Linear, Curado-Tsallis, and TMP expectation values with escort weight.

Three ways of averaging an observable A against a density p:

    linear   <A>   = int p A
    CT       <A>_q = int p^q A          (un-normalized for q != 1)
    TMP      <A>_q = int (p^q / X_q) A  with X_q = int p^q

mean_tmp reuses the same quadrature configuration for numerator and
normalizer, so the ratio identity TMP = CT / X_q holds exactly at the
evaluation level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import NonIntegrableError, QuadratureError
from .qkernel import QIndex, SupportInterval, as_qindex
from .quadrature import QuadratureSpec, integrate

__all__ = [
    "Observable",
    "EscortWeight",
    "SupportedDensity",
    "mean_linear",
    "escort_norm",
    "mean_ct",
    "mean_tmp",
]


@dataclass(frozen=True)
class Observable:
    """A labelled measurable quantity A(x)."""

    evaluator: Callable[[float], float]
    label: str = "A"

    @classmethod
    def identity(cls) -> "Observable":
        return cls(lambda x: x, "x")

    @classmethod
    def square(cls) -> "Observable":
        return cls(lambda x: x * x, "x^2")

    def value(self, x: float) -> float:
        return self.evaluator(x)


@dataclass(frozen=True)
class EscortWeight:
    """Escort normalizer X_q = int p(x)^q dx."""

    q: QIndex
    x_q: float

    def __post_init__(self):
        if not (math.isfinite(self.x_q) and self.x_q > 0.0):
            raise NonIntegrableError(f"escort normalizer must be positive and "
                                     f"finite, got {self.x_q!r}")


@dataclass(frozen=True)
class SupportedDensity:
    """Adapter pairing a bare evaluator with its support interval."""

    evaluator: Callable[[float], float]
    support: SupportInterval

    def density(self, x: float) -> float:
        return self.evaluator(x) if self.support.contains(x) else 0.0


def mean_linear(p, a: Observable, quad: QuadratureSpec) -> float:
    """Ordinary expectation int p A over the density's support."""
    return integrate(lambda x: p.density(x) * a.value(x), p.support, quad)


def escort_norm(p, q: QIndex | float, quad: QuadratureSpec) -> EscortWeight:
    """Escort normalizer X_q = int p^q; equals 1 at q = 1."""
    qi = as_qindex(q)
    try:
        x_q = integrate(lambda x: p.density(x) ** qi.q, p.support, quad)
    except QuadratureError as exc:
        raise NonIntegrableError(
            f"escort integral did not converge for q = {qi.q!r}: {exc}") from exc
    if not (math.isfinite(x_q) and x_q > 0.0):
        raise NonIntegrableError(f"escort integral evaluated to {x_q!r}")
    return EscortWeight(q=qi, x_q=x_q)


def mean_ct(p, a: Observable, q: QIndex | float, quad: QuadratureSpec) -> float:
    """Curado-Tsallis weighted expectation int p^q A (un-normalized:
    its value at A = 1 is X_q, not 1)."""
    qi = as_qindex(q)
    return integrate(lambda x: p.density(x) ** qi.q * a.value(x), p.support, quad)


def mean_tmp(p, a: Observable, q: QIndex | float, quad: QuadratureSpec) -> float:
    """TMP (escort-normalized) expectation: mean_ct / X_q on shared nodes."""
    qi = as_qindex(q)
    numerator = mean_ct(p, a, qi, quad)
    weight = escort_norm(p, qi, quad)
    return numerator / weight.x_q
