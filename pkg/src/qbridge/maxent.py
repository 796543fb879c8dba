"""Shannon and Tsallis MaxEnt solutions and the transport check between them.

The Shannon solver fits multipliers to moment targets by damped Newton
(bisection fallback for a single constraint).  The Tsallis solution keeps
the same multipliers and only renormalizes: the transformation carries
them over unchanged.  `verify_transport` compares both normalized
densities pointwise through the change of variables, and
`solve_ode_numeric` is an independent fixed-step oracle for the
closed-form inverse Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import (
    ConfigurationError,
    FeasibilityError,
    InstabilityError,
    NonNormalizableError,
    QuadratureError,
    SolverError,
    UnsupportedRegimeError,
)
from .qkernel import QIndex, SupportInterval, as_qindex, q_exp
from .quadrature import QuadratureSpec, integrate
from .transform import ConstraintFn, ConstraintSet, TransformMap, qexp_support

__all__ = [
    "QuadratureSpec",
    "integrate",
    "ShannonSolution",
    "TsallisSolution",
    "LinearODE",
    "TransportReport",
    "solve_shannon",
    "normalize_tsallis",
    "verify_transport",
    "solve_ode_numeric",
    "sample_and_test",
    "check_square_integrable",
]

_EXP_ARG_MAX = 700.0  # beyond this exp() overflows a double


def _exp_or_inf(arg: float) -> float:
    return math.exp(arg) if arg < _EXP_ARG_MAX else math.inf


@dataclass(frozen=True)
class ShannonSolution:
    """Exponential-family density exp(-mu - dot(lam, h(u))) on `domain`."""

    mu: float
    cs: ConstraintSet
    domain: SupportInterval

    @property
    def support(self) -> SupportInterval:
        return self.domain

    def density(self, u: float) -> float:
        if not self.domain.contains(u):
            return 0.0
        return _exp_or_inf(-self.mu - self.cs.potential(u))


@dataclass(frozen=True)
class TsallisSolution:
    """q-exponential density C e_q(-dot(lam, h(x))) on `support`."""

    C: float
    q: QIndex
    cs: ConstraintSet
    support: SupportInterval

    def density(self, x: float) -> float:
        if not self.support.contains(x):
            return 0.0
        margin = 1.0 - (1.0 - self.q.q) * self.cs.potential(x)
        if margin <= 0.0:
            # only reachable inside the root-finding shell of a support edge
            return 0.0
        return self.C * q_exp(-self.cs.potential(x), self.q)


@dataclass(frozen=True)
class LinearODE:
    """g' + P(x) g = Q(x) with initial condition (x0, g0)."""

    P: Callable[[float], float]
    Q: Callable[[float], float]
    x0: float
    g0: float


@dataclass(frozen=True)
class TransportReport:
    """Pointwise comparison of the two densities through the map."""

    grid: tuple[float, ...]
    max_abs_residual: float
    profile: tuple[tuple[float, float], ...]
    passed: bool
    factor_max_residual: float | None = None


def _moment_functions(constraints: tuple[ConstraintFn, ...],
                      domain: SupportInterval, quad: QuadratureSpec):
    """Return moments(lams) -> (normalized moments, partition integral)."""

    def moments(lams: Sequence[float]) -> tuple[np.ndarray, float]:
        def weight(u: float) -> float:
            arg = -sum(l * c.value(u) for l, c in zip(lams, constraints))
            return _exp_or_inf(arg)

        z = integrate(weight, domain, quad)
        if not (math.isfinite(z) and z > 0.0):
            raise QuadratureError(f"partition integral is not finite: {z!r}")
        m = np.array([integrate(lambda u, c=c: weight(u) * c.value(u), domain, quad)
                      for c in constraints]) / z
        return m, z

    return moments


def _bisection_fallback(constraint: ConstraintFn, target: float,
                        domain: SupportInterval, quad: QuadratureSpec,
                        trace: list) -> float:
    """Single-multiplier solve by automatic bracketing + bisection.

    The normalized moment is strictly decreasing in the multiplier, so a
    sign change of moment - target brackets the root.
    """
    moments = _moment_functions((constraint,), domain, quad)

    def gap(lam: float) -> float:
        return float(moments([lam])[0][0]) - target

    lo = hi = 1.0
    gap_lo = gap_hi = None
    for _ in range(60):
        try:
            gap_hi = gap(hi)
        except (QuadratureError, OverflowError):
            gap_hi = None
        if gap_hi is not None and gap_hi < 0.0:
            break
        hi *= 2.0
    else:
        raise FeasibilityError(
            f"target {target!r} is below every attainable moment on the domain",
            trace=trace)
    for _ in range(60):
        try:
            gap_lo = gap(lo)
        except (QuadratureError, OverflowError):
            gap_lo = None
        if gap_lo is not None and gap_lo > 0.0:
            break
        if gap_lo is None:
            # divergent trial: moment is effectively +inf, valid upper bracket
            lo *= 1.0 + 1e-3
            break
        lo /= 2.0
    else:
        raise FeasibilityError(
            f"target {target!r} is above every attainable moment on the domain",
            trace=trace)
    return bisect(gap, lo, hi, xtol=1e-14, maxiter=200)


def solve_shannon(cs: ConstraintSet, domain: SupportInterval,
                  quad: QuadratureSpec) -> ShannonSolution:
    """Fit multipliers so the exponential-family moments hit the targets.

    Damped Newton with a finite-difference moment Jacobian; single-
    constraint problems fall back to bracketed bisection when Newton
    stalls.  mu is then fixed by normalization.
    """
    if cs.targets is None:
        raise ConfigurationError("solve_shannon requires targets on the ConstraintSet")
    m = cs.size
    if m > 3:
        raise ConfigurationError("bundled solver handles at most 3 constraints")
    for c, k in zip(cs.constraints, cs.targets):
        if c.kind == "square" and k <= 0.0:
            raise FeasibilityError(
                f"square observable cannot average to non-positive target {k!r}")

    targets = np.array(cs.targets)
    moments = _moment_functions(cs.constraints, domain, quad)
    lams = np.array([1.0 / (1.0 + abs(k)) for k in cs.targets])
    trace: list = []
    converged = False

    try:
        gap, _ = moments(lams)
        gap = gap - targets
    except (QuadratureError, OverflowError):
        gap = None

    for _ in range(60):
        if gap is None:
            break
        norm = float(np.max(np.abs(gap)))
        trace.append((tuple(lams), norm))
        if norm < 1e-11:
            converged = True
            break
        jac = np.empty((m, m))
        try:
            for j in range(m):
                delta = 1e-6 * max(1.0, abs(lams[j]))
                up = lams.copy()
                up[j] += delta
                down = lams.copy()
                down[j] -= delta
                jac[:, j] = (moments(up)[0] - moments(down)[0]) / (2.0 * delta)
            step = np.linalg.solve(jac, -gap)
        except (QuadratureError, OverflowError, np.linalg.LinAlgError):
            break
        accepted = False
        damping = 1.0
        while damping >= 1.0 / 1024.0:
            trial = lams + damping * step
            try:
                trial_gap = moments(trial)[0] - targets
            except (QuadratureError, OverflowError):
                damping /= 2.0
                continue
            if float(np.max(np.abs(trial_gap))) < norm:
                lams, gap, accepted = trial, trial_gap, True
                break
            damping /= 2.0
        if not accepted:
            break

    if not converged:
        if m == 1:
            lam = _bisection_fallback(cs.constraints[0], float(targets[0]),
                                      domain, quad, trace)
            lams = np.array([lam])
        else:
            raise SolverError("Newton stagnated on the moment conditions",
                              trace=trace)

    _, z = moments(lams)
    mu = math.log(z)
    fitted = ConstraintSet(cs.constraints, tuple(float(v) for v in lams),
                           targets=cs.targets)
    solution = ShannonSolution(mu=mu, cs=fitted, domain=domain)
    _check_shannon_invariants(solution, quad)
    return solution


def _check_shannon_invariants(s: ShannonSolution, quad: QuadratureSpec) -> None:
    tol = 10.0 * quad.rel_tol
    total = integrate(s.density, s.domain, quad)
    if abs(total - 1.0) > tol:
        raise SolverError(f"normalization check failed: integral {total!r}")
    for c, k in zip(s.cs.constraints, s.cs.targets):
        moment = integrate(lambda u: s.density(u) * c.value(u), s.domain, quad)
        if abs(moment - k) > tol * max(1.0, abs(k)):
            raise SolverError(f"moment check failed: got {moment!r}, want {k!r}")


def _tail_feasibility(qi: QIndex, cs: ConstraintSet,
                      support: SupportInterval) -> None:
    """Analytic divergence screen for unbounded support sides."""
    coeffs = cs.combined_coefficients()
    degree = len(coeffs) - 1
    lead = coeffs[-1]
    for side, unbounded in (("+inf", math.isinf(support.upper)),
                            ("-inf", math.isinf(support.lower))):
        if not unbounded:
            continue
        if degree == 0:
            raise NonNormalizableError(
                "constant observable gives a non-decaying density on an "
                "unbounded domain")
        # sign of dot(lam, h) at that side
        grows = lead > 0.0 if side == "+inf" else lead * (-1.0) ** degree > 0.0
        if qi.is_classical():
            if not grows:
                raise NonNormalizableError(
                    f"density grows toward {side}: observable tends to -inf there")
        elif qi.q < 1.0:
            raise NonNormalizableError(
                f"q = {qi.q!r} < 1 density cannot decay on an unbounded side "
                f"({side}); the cutoff never engages there")
        else:
            if not grows:
                raise NonNormalizableError(
                    f"q-exponential has a pole toward {side}")
            alpha = degree / (qi.q - 1.0)
            if alpha <= 1.0:
                raise NonNormalizableError(
                    f"power-law tail exponent {alpha!r} <= 1 toward {side}: "
                    f"normalization integral diverges", tail_exponent=alpha)


def normalize_tsallis(q: QIndex | float, cs: ConstraintSet,
                      quad: QuadratureSpec,
                      domain: SupportInterval | None = None,
                      anchor: float = 0.0) -> TsallisSolution:
    """Normalize C e_q(-dot(lam, h(x))) on the cutoff support.

    Multipliers are taken verbatim from `cs`; only the normalization
    constant is computed.  `domain` optionally restricts the support
    (e.g. a half-line for mean constraints).
    """
    qi = as_qindex(q)
    support = qexp_support(qi, cs, anchor=anchor)
    if domain is not None:
        support = support.intersect(domain)
    _tail_feasibility(qi, cs, support)
    if qi.q > 1.0 and not qi.is_classical():
        for endpoint in (support.lower, support.upper):
            if math.isfinite(endpoint) and qi.q <= 2.0 and \
                    1.0 - (1.0 - qi.q) * cs.potential(endpoint) <= 1e-12:
                raise NonNormalizableError(
                    f"pole-side edge at x = {endpoint!r} with exponent "
                    f"{1.0 / (qi.q - 1.0)!r} >= 1: integral diverges",
                    tail_exponent=1.0 / (qi.q - 1.0))

    def shape(x: float) -> float:
        margin = 1.0 - (1.0 - qi.q) * cs.potential(x)
        if margin <= 0.0 and qi.q > 1.0:
            return 0.0  # root-finding shell of the edge
        return q_exp(-cs.potential(x), qi)

    z = integrate(shape, support, quad)
    if not (math.isfinite(z) and z > 0.0):
        raise NonNormalizableError(f"normalization integral evaluated to {z!r}")
    return TsallisSolution(C=1.0 / z, q=qi, cs=cs, support=support)


def _same_constraints(a: ConstraintSet, b: ConstraintSet) -> bool:
    return (len(a.constraints) == len(b.constraints)
            and all(ca.coefficients == cb.coefficients
                    for ca, cb in zip(a.constraints, b.constraints))
            and a.multipliers == b.multipliers)


def verify_transport(s: ShannonSolution, t: TsallisSolution, map_: TransformMap,
                     grid: Sequence[float], tol: float) -> TransportReport:
    """Pointwise residual of C e_q(-lam.h(x)) = e^{-mu} e^{-lam.h(u(x))} |J(x)|.

    For a pure mean constraint anchored at (0, 0) the closed identity
    e^{-lam u(x)} / g(x) = (2-q) e_q(-lam x) is checked as well.
    """
    if not (_same_constraints(s.cs, t.cs)
            and _same_constraints(s.cs, map_.spec.cs)):
        raise ConfigurationError(
            "transport check requires identical constraint sets on the "
            "Shannon solution, Tsallis solution, and map")
    profile = []
    for x in grid:
        lhs = t.C * q_exp(-t.cs.potential(x), t.q)
        u = map_.u(x)
        rhs = _exp_or_inf(-s.mu - s.cs.potential(u)) * abs(map_.J(x))
        profile.append((float(x), abs(lhs - rhs)))
    max_residual = max(res for _, res in profile)

    factor_max = None
    lam = t.cs.linear_coefficient()
    if (lam is not None and map_.spec.anchor_x == 0.0
            and map_.spec.anchor_u == 0.0 and map_.spec.c == 0.0):
        two_minus_q = 2.0 - t.q.q
        factor_max = max(
            abs(math.exp(-lam * map_.u(x)) / map_.g(x)
                - two_minus_q * q_exp(-lam * x, t.q))
            for x in grid)

    return TransportReport(grid=tuple(float(x) for x in grid),
                           max_abs_residual=max_residual,
                           profile=tuple(profile),
                           passed=max_residual < tol,
                           factor_max_residual=factor_max)


def solve_ode_numeric(ode: LinearODE, x_end: float,
                      steps: int) -> list[tuple[float, float]]:
    """Fixed-step 4th-order integration of g' + P g = Q from (x0, g0).

    Used solely as an independent oracle against the closed-form inverse
    Jacobian; raises InstabilityError if |g| exceeds 1e12.
    """
    if steps < 100:
        raise ConfigurationError("use at least 100 steps for the oracle")
    h = (x_end - ode.x0) / steps
    x = float(ode.x0)
    g = float(ode.g0)
    out = [(x, g)]

    def rhs(xv: float, gv: float) -> float:
        return ode.Q(xv) - ode.P(xv) * gv

    for i in range(steps):
        k1 = rhs(x, g)
        k2 = rhs(x + 0.5 * h, g + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h, g + 0.5 * h * k2)
        k4 = rhs(x + h, g + h * k3)
        g += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        x = ode.x0 + (i + 1) * h
        if abs(g) > 1e12:
            raise InstabilityError(f"solution blew up at x = {x!r}: |g| > 1e12")
        out.append((x, g))
    return out


def sample_and_test(t: TsallisSolution, map_: TransformMap, n: int,
                    seed: int) -> tuple[np.ndarray, float]:
    """Draw exponential variates, push them through x(u), and KS-test them.

    The generator is numpy's default PCG64 stream seeded with `seed`;
    draws use inverse-CDF sampling, and the statistic is the exact
    one-sample Kolmogorov-Smirnov distance against the closed-form CDF
    F(x) = 1 - e_q(-lam x)^{2-q}.
    """
    qi = t.q
    if not (0.0 < qi.q < 2.0):
        raise UnsupportedRegimeError(
            f"sampling confirmation supports 0 < q < 2, got {qi.q!r}")
    if t.cs.size != 1 or t.cs.constraints[0].kind != "identity":
        raise ConfigurationError("sampling requires a single mean constraint")
    lam = t.cs.multipliers[0]
    if lam <= 0.0:
        raise ConfigurationError("sampling requires a positive multiplier")
    if n < 1000:
        raise ConfigurationError("use at least 1000 samples")
    spec = map_.spec
    if spec.anchor_x != 0.0 or spec.anchor_u != 0.0 or spec.c != 0.0:
        raise ConfigurationError(
            "sampling assumes the canonical map anchored at (0, 0)")

    rng = np.random.default_rng(seed)
    u = -np.log1p(-rng.random(n)) / lam
    if qi.is_classical():
        x = u
    else:
        one_minus_q = 1.0 - qi.q
        x = (1.0 - np.exp(-(one_minus_q * lam / (2.0 - qi.q)) * u)) \
            / (one_minus_q * lam)

    xs = np.sort(x)
    if qi.is_classical():
        cdf = -np.expm1(-lam * xs)
    else:
        margin = np.maximum(1.0 - (1.0 - qi.q) * lam * xs, 0.0)
        cdf = 1.0 - margin ** ((2.0 - qi.q) / (1.0 - qi.q))
    ranks = np.arange(1, n + 1, dtype=float)
    ks = max(float(np.max(ranks / n - cdf)),
             float(np.max(cdf - (ranks - 1.0) / n)))
    return x, ks


def check_square_integrable(h: ConstraintFn, density: Callable[[float], float],
                            support: SupportInterval,
                            quad: QuadratureSpec) -> bool:
    """Numerical L2 check of an observable against a density."""
    try:
        value = integrate(lambda x: density(x) * h.value(x) ** 2, support, quad)
    except QuadratureError:
        return False
    return math.isfinite(value)
