"""Random parameter sets for the test suite.

Sets are drawn in the derived coordinates (sigma, eta*, gamma*) and mapped
back to rates, so regimes can be targeted directly.
"""
import numpy as np

from coinfect.params import ParamSet, ScaledParamSet, validate

P0 = dict(r=1.0, alpha=(2.0, 1.0, 0.5), mu=(1.0, 1.0, 1.0), eta=(3.0, 1.2), gamma=(0.2, 0.1))


def p0(**overrides):
    return validate(ParamSet(**{**P0, **overrides}))


def _rates(rng):
    r = rng.uniform(0.5, 2.0)
    s1 = rng.uniform(0.2, 1.0)
    s2 = s1 * rng.uniform(1.2, 3.0)
    s3 = s2 * rng.uniform(1.2, 3.0)
    alpha = rng.uniform(0.5, 3.0, 3)
    sigma = np.array([s1, s2, s3])
    return r, alpha, sigma


def _A(r, alpha, sigma):
    a1, a2, a3 = alpha
    s1, s2, s3 = sigma
    return a1 * a3 * (s3 - s1) / r, a2 * a3 * (s3 - s2) / r, a1 * a2 * (s2 - s1) / r


def from_stars(rng, eta_star, gamma_star, gamma2_star=None):
    """Validated set with prescribed ``eta*`` and ``gamma*`` (``gamma2 = gamma2_star * A3``)."""
    r, alpha, sigma = _rates(rng)
    A1, A2, A3 = _A(r, alpha, sigma)
    if gamma2_star is None:
        gamma2_star = rng.uniform(0.0, 1.0)
    return validate(ParamSet(
        r=r, alpha=tuple(alpha), mu=tuple(sigma * alpha),
        eta=(eta_star[0] * A1, eta_star[1] * A2),
        gamma=(gamma_star * A3, gamma2_star * A3)))


def uniqueness_regime(rng):
    """``0 < eta1* < max(1, eta2*)`` (scenario i or ii) with ``gamma* < 1``."""
    if rng.random() < 0.5:
        stars = (rng.uniform(0.05, 0.95), rng.uniform(0.05, 3.0))
    else:
        e1 = rng.uniform(1.05, 4.0)
        stars = (e1, e1 * rng.uniform(1.05, 3.0))
    return from_stars(rng, stars, rng.uniform(0.0, 0.95))


def any_regime(rng):
    """Broad draw: ``eta*`` in (0.05, 4), ``gamma*`` in (0, 3)."""
    return from_stars(rng, rng.uniform(0.05, 4.0, 2), rng.uniform(0.0, 3.0))


def zero_gamma(rng):
    r, alpha, sigma = _rates(rng)
    eta = tuple(rng.uniform(0.1, 5.0, 2))
    return validate(ParamSet(r=r, alpha=tuple(alpha), mu=tuple(sigma * alpha), eta=eta,
                             gamma=(0.0, 0.0)))


def k0_regime(rng):
    """``eta2* < eta1*``, ``eta1* > 1`` and ``Delta_alpha + alpha3 gamma2 > 0`` so K0 exists."""
    while True:
        e1 = rng.uniform(1.1, 4.0)
        p = from_stars(rng, (e1, e1 * rng.uniform(0.1, 0.9)), rng.uniform(0.0, 0.95))
        dalpha = p.eta[0] * p.alpha[1] - p.eta[1] * p.alpha[0]
        if dalpha + p.alpha[2] * p.gamma[1] > 1e-3:
            return p


def scaled(rng):
    """Scale-free set; about a quarter have ``s1 >= 1``."""
    r = rng.uniform(0.5, 2.0)
    s1 = rng.uniform(0.1, 1.3)
    s2 = s1 * rng.uniform(1.2, 2.5)
    s3 = s2 * rng.uniform(1.2, 2.5)
    a = rng.uniform(0.5, 3.0, 3)
    sigma = np.array([s1, s2, s3])
    B1, B2, B3 = _A(r, a, sigma)
    e1 = rng.uniform(0.3, 6.0)
    if rng.random() < 0.7:
        e2 = e1 * rng.uniform(1.05, 3.0)
    else:
        e2 = rng.uniform(0.3, 6.0)
    return ScaledParamSet(r=r, a=tuple(a), mu=tuple(sigma * a), eta=(e1 * B1, e2 * B2),
                          gamma=(rng.uniform(0.0, 0.95) * B3, rng.uniform(0.0, 1.0) * B3))
