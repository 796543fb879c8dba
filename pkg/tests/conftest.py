import math

import numpy as np
import pytest

import qbridge as qb

HALF_LINE = qb.SupportInterval(0.0, math.inf)
REAL_LINE = qb.SupportInterval(-math.inf, math.inf)


@pytest.fixture
def quad():
    return qb.QuadratureSpec()


def identity_cs(lam=1.0, target=None):
    targets = None if target is None else (target,)
    return qb.ConstraintSet((qb.ConstraintFn.identity(),), (lam,), targets=targets)


def square_cs(lam=1.0, target=None):
    targets = None if target is None else (target,)
    return qb.ConstraintSet((qb.ConstraintFn.square(),), (lam,), targets=targets)


def interior_grid(q, cs, n=100, clip=5.0, margin=0.02):
    """n points strictly inside the q-exponential support, within +-clip."""
    support = qb.qexp_support(q, cs)
    lo = max(support.lower, -clip)
    hi = min(support.upper, clip)
    span = hi - lo
    return np.linspace(lo + margin * span, hi - margin * span, n)


def matched_solutions(q, cs, domain, quadspec):
    """Tsallis solution plus the Shannon solution on the image domain."""
    tsallis = qb.normalize_tsallis(q, cs, quadspec, domain=domain)
    spec = qb.TransformSpec(qb.QIndex(q), cs)
    map_ = qb.TransformMap.from_spec(spec)
    u_lo, u_hi = qb.u_image(spec, tsallis.support)
    image = qb.SupportInterval(u_lo, u_hi, closed_lower=False, closed_upper=False)
    z = qb.integrate(lambda u: math.exp(-cs.potential(u)), image, quadspec)
    shannon = qb.ShannonSolution(mu=math.log(z), cs=cs, domain=image)
    return tsallis, shannon, map_
