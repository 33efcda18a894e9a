"""Right-hand sides and Jacobian of the coinfection model.

State ordering is ``(S, I1, I2, I12)`` for the reduced system and
``(S, I1, I2, I12, R)`` for the full one.
"""
import numpy as np

LABELS = ("S", "I1", "I2", "I12")


def rhs_reduced(p, K, y):
    """Time derivative of ``(S, I1, I2, I12)``."""
    S, I1, I2, I12 = y
    a1, a2, a3 = p.alpha
    m1, m2, m3 = p.mu
    e1, e2 = p.eta
    g1, g2 = p.gamma
    return np.array([
        (p.r * (1.0 - S / K) - a1 * I1 - a2 * I2 - a3 * I12) * S,
        (a1 * S - e1 * I12 - g1 * I2 - m1) * I1,
        (a2 * S - e2 * I12 - g2 * I1 - m2) * I2,
        (a3 * S + e1 * I1 + e2 * I2 - m3) * I12 + (g1 + g2) * I1 * I2,
    ])


def rhs_full(p, K, y):
    """Time derivative of ``(S, I1, I2, I12, R)``; R never feeds back."""
    out = np.empty(5)
    out[:4] = rhs_reduced(p, K, y[:4])
    rho = p.rho
    out[4] = rho[0] * y[1] + rho[1] * y[2] + rho[2] * y[3] - p.d[4] * y[4]
    return out


def jacobian_reduced(p, K, y):
    """Exact 4x4 Jacobian of :func:`rhs_reduced` at ``y``."""
    S, I1, I2, I12 = y
    r = p.r
    a1, a2, a3 = p.alpha
    m1, m2, m3 = p.mu
    e1, e2 = p.eta
    g1, g2 = p.gamma
    gb = g1 + g2
    return np.array([
        [r * (1.0 - 2.0 * S / K) - a1 * I1 - a2 * I2 - a3 * I12, -a1 * S, -a2 * S, -a3 * S],
        [a1 * I1, a1 * S - e1 * I12 - g1 * I2 - m1, -g1 * I1, -e1 * I1],
        [a2 * I2, -g2 * I2, a2 * S - e2 * I12 - g2 * I1 - m2, -e2 * I2],
        [a3 * I12, e1 * I12 + gb * I2, e2 * I12 + gb * I1, a3 * S + e1 * I1 + e2 * I2 - m3],
    ])


def total_population_rate(p, K, y):
    """``N'`` from the closed-form balance law (births minus deaths)."""
    S, I1, I2, I12, R = y
    d = p.d
    return p.r * (1.0 - S / K) * S - d[1] * I1 - d[2] * I2 - d[3] * I12 - d[4] * R
