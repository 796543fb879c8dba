"""Cutoff-aware q-deformed exponential and logarithm.

The deformed exponential is e_q(z) = [1 + (1-q) z]^{1/(1-q)} with the
standard cutoff convention for q < 1 (zero wherever the bracket is not
positive) and a hard pole at z = 1/(q-1) for q > 1.  Everything else in
the package is built on these two evaluators and the derivative identity
d e_q(z)/dz = e_q(z)^q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, DomainError

__all__ = [
    "QIndex",
    "SupportInterval",
    "as_qindex",
    "q_exp",
    "q_log",
    "q_exp_deriv",
]


@dataclass(frozen=True)
class QIndex:
    """Entropic index q with guard thresholds near q = 1 and q = 2.

    Inside |q - 1| < eps_q1 evaluation routes to the classical exp/log
    branch (the raw power form loses all precision there).  Inside
    |q - 2| < eps_q2 the change-of-variables machinery refuses to run
    instead of silently returning ~1/eps magnitudes.
    """

    q: float
    eps_q1: float = 1e-9
    eps_q2: float = 1e-6

    def __post_init__(self):
        if not math.isfinite(self.q):
            raise ConfigurationError(f"entropic index must be finite, got {self.q!r}")
        if not (self.eps_q1 > 0.0 and self.eps_q2 > 0.0):
            raise ConfigurationError("guard thresholds eps_q1, eps_q2 must be positive")

    def is_classical(self) -> bool:
        return abs(self.q - 1.0) < self.eps_q1

    def is_singular_for_transform(self) -> bool:
        return abs(self.q - 2.0) < self.eps_q2


def as_qindex(q: QIndex | float) -> QIndex:
    """Coerce a bare float into a QIndex with default guard thresholds."""
    if isinstance(q, QIndex):
        return q
    return QIndex(float(q))


@dataclass(frozen=True)
class SupportInterval:
    """Interval of the real line, with per-end closedness.

    Finite cutoff edges (where a density vanishes) are open; plain domain
    endpoints are closed.  Infinite ends are always open.
    """

    lower: float
    upper: float
    closed_lower: bool = True
    closed_upper: bool = True

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigurationError(
                f"empty interval: lower={self.lower!r} upper={self.upper!r}")

    def contains(self, x: float) -> bool:
        if x < self.lower or x > self.upper:
            return False
        if x == self.lower:
            return self.closed_lower and math.isfinite(self.lower)
        if x == self.upper:
            return self.closed_upper and math.isfinite(self.upper)
        return True

    def intersect(self, other: "SupportInterval") -> "SupportInterval":
        if self.lower > other.lower:
            lo, clo = self.lower, self.closed_lower
        elif self.lower < other.lower:
            lo, clo = other.lower, other.closed_lower
        else:
            lo, clo = self.lower, self.closed_lower and other.closed_lower
        if self.upper < other.upper:
            hi, chi = self.upper, self.closed_upper
        elif self.upper > other.upper:
            hi, chi = other.upper, other.closed_upper
        else:
            hi, chi = self.upper, self.closed_upper and other.closed_upper
        return SupportInterval(lo, hi, closed_lower=clo, closed_upper=chi)

    def is_bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)


def q_exp(z: float, q: QIndex | float) -> float:
    """Deformed exponential e_q(z) = [1 + (1-q) z]^{1/(1-q)}.

    Returns exp(z) on the classical branch, 0 beyond the q < 1 cutoff,
    and raises DomainError at or past the q > 1 pole z = 1/(q-1).
    Evaluated as exp(log1p((1-q) z)/(1-q)) for stability near the cutoff.
    """
    qi = as_qindex(q)
    if not math.isfinite(z):
        raise DomainError(f"q_exp argument must be finite, got {z!r}")
    if qi.is_classical():
        return math.exp(z)
    one_minus_q = 1.0 - qi.q
    if 1.0 + one_minus_q * z <= 0.0:
        if qi.q < 1.0:
            return 0.0
        raise DomainError(
            f"q_exp diverges at the pole z = {1.0 / (qi.q - 1.0)!r} for "
            f"q = {qi.q!r}; got z = {z!r}")
    return math.exp(math.log1p(one_minus_q * z) / one_minus_q)


def q_log(y: float, q: QIndex | float) -> float:
    """Deformed logarithm (y^{1-q} - 1)/(1-q), the functional inverse of q_exp."""
    qi = as_qindex(q)
    if not y > 0.0:
        raise DomainError(f"q_log requires a positive argument, got {y!r}")
    if qi.is_classical():
        return math.log(y)
    one_minus_q = 1.0 - qi.q
    return math.expm1(one_minus_q * math.log(y)) / one_minus_q


def q_exp_deriv(z: float, q: QIndex | float) -> float:
    """Derivative of the deformed exponential: e_q(z)^q."""
    qi = as_qindex(q)
    value = q_exp(z, qi)
    if value == 0.0:
        # beyond the q < 1 cutoff: 0^q = 0 for positive q
        if qi.q > 0.0:
            return 0.0
        raise DomainError(
            f"derivative undefined beyond the cutoff for q = {qi.q!r} <= 0")
    return value ** qi.q
