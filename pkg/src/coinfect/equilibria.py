"""Equilibrium candidates G1..G8 of the reduced model.

Boundary equilibria (at least one infected class zero) come from closed
forms or, for G6/G7, from the linear three-variable subsystem left after
setting ``I2 = 0`` (resp. ``I1 = 0``).  Coexistence points G8 are the real
roots of the quadratic ``P(S)``, the determinant of the 4x4 matrix whose
null vector is ``(I1, I2, I12, 1)``, back-solved for the infected classes.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import IllConditionedSystem
from .model import jacobian_reduced, rhs_reduced
from .params import ValidatedParamSet

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
#: relative slack when deciding that a coordinate is non-negative
ADMISSIBLE_TOL = 1e-12
#: relative band around the a-priori window for G8 roots that touch a boundary
BOUNDARY_BAND = 1e-9
MAX_CONDITION = 1e12

LABEL_ORDER = ("G1", "G2", "G3", "G4", "G5", "G6", "G7", "G8")


@dataclass(frozen=True)
class EquilibriumPoint:
    """An equilibrium with coordinates ``(S, I1, I2, I12)``.

    ``stable`` is only filled in by :func:`single_strain` (the two-variable
    verdict); ``warning`` marks G8 roots touching the boundary window and
    ``sufficient`` records whether ``gamma1, gamma2 < Delta_alpha/alpha3``.
    """

    label: str
    coords: Tuple[float, float, float, float]
    admissible: bool
    residual: float
    stable: Optional[bool] = None
    warning: Optional[str] = None
    sufficient: Optional[bool] = None

    @property
    def S(self):
        return self.coords[0]

    def as_array(self):
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class CoexistencePolynomial:
    """``P(S) = p2 S^2 + p1 S + p0``."""

    p2: float
    p1: float
    p0: float

    def __call__(self, S):
        return (self.p2 * S + self.p1) * S + self.p0

    @property
    def coefficients(self):
        return np.array([self.p2, self.p1, self.p0])

    def real_roots(self, scale=1.0):
        """Real roots in increasing order; a near-vanishing ``p2`` degrades to linear."""
        p2, p1, p0 = self.p2, self.p1, self.p0
        size = abs(p2) * scale * scale + abs(p1) * scale + abs(p0)
        if size == 0.0:
            return []
        if abs(p2) * scale * scale <= 1e-14 * size:
            if abs(p1) * scale <= 1e-14 * size:
                return []
            return [-p0 / p1]
        disc = p1 * p1 - 4.0 * p2 * p0
        if disc < 0.0:
            if disc >= -1e-14 * p1 * p1:
                return [-p1 / (2.0 * p2)]
            return []
        sq = np.sqrt(disc)
        q = -0.5 * (p1 + np.copysign(sq, p1))
        roots = [q / p2]
        if q != 0.0:
            roots.append(p0 / q)
        return sorted(roots)


def _point(p, K, label, coords, **extra):
    y = np.asarray(coords, dtype=float)
    scale = 1.0 + np.max(np.abs(y))
    admissible = bool(np.all(y >= -ADMISSIBLE_TOL * scale))
    return EquilibriumPoint(
        label=label,
        coords=tuple(float(v) for v in y),
        admissible=admissible,
        residual=residual(p, K, y),
        **extra,
    )


def residual(p: ValidatedParamSet, K: float, y) -> float:
    """Max-norm of the equilibrium equations at ``y``."""
    return float(np.max(np.abs(rhs_reduced(p, K, y))))


def residual_ok(point: EquilibriumPoint) -> bool:
    return point.residual <= RESIDUAL_TOL * (1.0 + max(abs(v) for v in point.coords))


def single_strain(p: ValidatedParamSet, K: float, i: int) -> List[EquilibriumPoint]:
    """Equilibria E1, E2 (and E3 when ``K > sigma_i``) of the one-strain submodel.

    ``i = 3`` is the coinfected-only submodel.  Points are embedded in the
    four-dimensional state with the other infected classes at zero, and each
    carries the two-dimensional stability verdict in ``stable``.
    """
    if i not in (1, 2, 3):
        raise ValueError(f"strain index must be 1, 2 or 3, got {i}")
    sigma = p.sigma[i - 1]
    alpha = p.alpha[i - 1]
    out = [
        _point(p, K, "E1", (0.0, 0.0, 0.0, 0.0), stable=False),
        _point(p, K, "E2", (K, 0.0, 0.0, 0.0), stable=K < sigma),
    ]
    if K > sigma:
        y = [sigma, 0.0, 0.0, 0.0]
        y[i] = p.r / alpha * (1.0 - sigma / K)
        out.append(_point(p, K, "E3", y, stable=True))
    return out


def _solve_face(p, K, i):
    """G6 (i=1) or G7 (i=2): solve the linear subsystem for (S, I_i, I12).

    With the other single-infected class at zero the three remaining
    equilibrium conditions are linear:
        alpha_i S - eta_i I12 = mu_i
        alpha_3 S + eta_i I_i = mu_3
        (r/K) S + alpha_i I_i + alpha_3 I12 = r
    """
    a, a3 = p.alpha[i - 1], p.alpha[2]
    m, m3 = p.mu[i - 1], p.mu[2]
    e = p.eta[i - 1]
    M = np.array([[a, 0.0, -e], [a3, e, 0.0], [p.r / K, a, a3]])
    rhs = np.array([m, m3, p.r])
    if e == 0.0 or np.linalg.cond(M) > MAX_CONDITION:
        return None
    S, Ii, I12 = np.linalg.solve(M, rhs)
    y = [S, 0.0, 0.0, I12]
    y[i] = Ii
    return y


def boundary_equilibria(p: ValidatedParamSet, K: float) -> List[EquilibriumPoint]:
    """G1..G7; every point is returned with its admissibility flag.

    G6/G7 are omitted only when their subsystem is singular (``eta_i = 0``).
    """
    r = p.r
    s1, s2, s3 = p.sigma
    a1, a2, a3 = p.alpha
    pts = [
        _point(p, K, "G1", (0.0, 0.0, 0.0, 0.0)),
        _point(p, K, "G2", (K, 0.0, 0.0, 0.0)),
        _point(p, K, "G3", (s1, r / a1 * (1.0 - s1 / K), 0.0, 0.0)),
        _point(p, K, "G4", (s2, 0.0, r / a2 * (1.0 - s2 / K), 0.0)),
        _point(p, K, "G5", (s3, 0.0, 0.0, r / a3 * (1.0 - s3 / K))),
    ]
    for label, i in (("G6", 1), ("G7", 2)):
        y = _solve_face(p, K, i)
        if y is not None:
            pts.append(_point(p, K, label, y))
    return pts


def coexistence_matrix(p: ValidatedParamSet, K: float, S: float) -> np.ndarray:
    """4x4 matrix annihilating ``(I1, I2, I12, 1)`` at an interior equilibrium."""
    r = p.r
    a1, a2, a3 = p.alpha
    m1, m2, m3 = p.mu
    e1, e2 = p.eta
    g1, g2 = p.gamma
    return np.array([
        [m1, m2, m3, r / K * (S - K) * S],
        [a1, a2, a3, r / K * (S - K)],
        [0.0, g1, e1, m1 - a1 * S],
        [g2, 0.0, e2, m2 - a2 * S],
    ])


def coexistence_polynomial(p: ValidatedParamSet, K: float) -> CoexistencePolynomial:
    """Coefficients of ``P(S)`` by exact quadratic interpolation of the determinant.

    The determinant is sampled at ``S = 0, sigma2, sigma3``.
    """
    nodes = np.array([0.0, p.sigma[1], p.sigma[2]])
    values = np.array([np.linalg.det(coexistence_matrix(p, K, S)) for S in nodes])
    V = np.vander(nodes, 3)
    p2, p1, p0 = np.linalg.solve(V, values)
    return CoexistencePolynomial(float(p2), float(p1), float(p0))


def _back_solve(p, K, S):
    M = coexistence_matrix(p, K, S)
    best = None
    for rows in itertools.combinations(range(4), 3):
        sub = M[list(rows)]
        c = np.linalg.cond(sub[:, :3])
        if best is None or c < best[0]:
            best = (c, sub)
    cond, sub = best
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedSystem(
            f"back-solve for the coexistence point at S={S!r} is ill-conditioned (cond={cond:.3g})"
        )
    return np.linalg.solve(sub[:, :3], -sub[:, 3])


def _polish(p, K, y, steps=3):
    # Newton on the full equilibrium system; keeps the iterate only if it helps
    best, best_res = y, residual(p, K, y)
    for _ in range(steps):
        J = jacobian_reduced(p, K, best)
        try:
            step = np.linalg.solve(J, -rhs_reduced(p, K, best))
        except np.linalg.LinAlgError:
            break
        cand = best + step
        res = residual(p, K, cand)
        if not res < best_res:
            break
        best, best_res = cand, res
    return best


def coexistence_points(p: ValidatedParamSet, K: float) -> List[EquilibriumPoint]:
    """Admissible interior equilibria G8 (zero, one or two points).

    Roots of ``P`` outside ``sigma1 < S < min(K, sigma3)`` are discarded;
    roots within a relative ``1e-9`` of that window are kept with
    ``warning='boundary'`` since they coincide with a boundary equilibrium.

    Raises
    ------
    IllConditionedSystem
        If no three rows of the linear system are well conditioned.
    """
    s1, s3 = p.sigma[0], p.sigma[2]
    lo, hi = s1, min(K, s3)
    if hi <= lo * (1.0 - BOUNDARY_BAND):
        return []
    poly = coexistence_polynomial(p, K)
    d = _delta_alpha(p)
    sufficient = bool(max(p.gamma) < d / p.alpha[2]) if d > 0 else False

    out = []
    for S in poly.real_roots(scale=s3):
        if S < lo * (1.0 - BOUNDARY_BAND) or S > hi * (1.0 + BOUNDARY_BAND):
            continue
        touching = S <= lo * (1.0 + BOUNDARY_BAND) or S >= hi * (1.0 - BOUNDARY_BAND)
        I = _back_solve(p, K, S)
        y = _polish(p, K, np.concatenate(([S], I)))
        point = _point(p, K, "G8", y, warning="boundary" if touching else None,
                       sufficient=sufficient)
        if not residual_ok(point):
            logger.warning("dropping coexistence root S=%r: residual %.3g", S, point.residual)
            continue
        if touching:
            if point.admissible:
                out.append(point)
        elif np.all(y[1:] > 0.0):
            out.append(point)
    return out


def _delta_alpha(p):
    return p.eta[0] * p.alpha[1] - p.eta[1] * p.alpha[0]


def all_equilibria(p: ValidatedParamSet, K: float) -> List[EquilibriumPoint]:
    """Boundary points G1..G7 followed by admissible coexistence points."""
    return boundary_equilibria(p, K) + coexistence_points(p, K)


def equilibrium_by_label(p: ValidatedParamSet, K: float, label: str) -> Optional[EquilibriumPoint]:
    """The (first) candidate with ``label`` at ``K``, or ``None``."""
    for pt in all_equilibria(p, K) if label == "G8" else boundary_equilibria(p, K):
        if pt.label == label:
            return pt
    return None


TABLE_COLUMNS = ("label", "S", "I1", "I2", "I12", "admissible", "residual")


def equilibrium_table(points, fmt=".17g") -> str:
    """Delimited text with one row per equilibrium."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for pt in points:
        w.writerow([pt.label] + [format(v, fmt) for v in pt.coords]
                   + [str(pt.admissible).lower(), format(pt.residual, fmt)])
    return buf.getvalue()
