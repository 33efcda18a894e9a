"""Local stability of equilibria.

Two independent routes are provided: numerical eigenvalues of the exact
Jacobian (:func:`eigen_classify`) and the closed-form stability windows in
``K`` for G2..G6 (:func:`closed_form_verdict`).  G1, G7 and G8 have no
closed form here and are judged by eigenvalues only.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import matrix_balance

from .equilibria import EquilibriumPoint, all_equilibria
from .exceptions import EigenSolverFailure, MultipleStable, NoneStable
from .model import jacobian_reduced
from .params import DerivedQuantities, ValidatedParamSet, derive

logger = logging.getLogger(__name__)

STABLE = "Stable"
UNSTABLE = "Unstable"
MARGINAL = "Marginal"
NOT_APPLICABLE = "NotApplicable"

EPS_MARGIN = 1e-8

CLOSED_FORM_LABELS = ("G2", "G3", "G4", "G5", "G6")


@dataclass(frozen=True)
class StabilityVerdict:
    max_real_part: float
    margin: float
    classification: str
    eigenvalues: Tuple[complex, ...] = ()
    closed_form: Optional[str] = None
    agreement: Optional[bool] = None


def jacobian(p: ValidatedParamSet, K: float, Y) -> np.ndarray:
    """Analytic Jacobian of the reduced system at ``Y = (S, I1, I2, I12)``."""
    return jacobian_reduced(p, K, np.asarray(Y, dtype=float))


def eigenvalues(J) -> np.ndarray:
    """Spectrum of ``J`` computed on the balanced matrix."""
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise EigenSolverFailure("Jacobian has non-finite entries")
    try:
        B, _ = matrix_balance(J, permute=False)
        ev = np.linalg.eigvals(B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverFailure(f"eigenvalue computation failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise EigenSolverFailure("eigenvalue computation returned non-finite values")
    return ev


def eigen_classify(J, eps_margin: float = EPS_MARGIN) -> StabilityVerdict:
    """Classify by the largest real part of the spectrum.

    Stable if it is below ``-eps_margin``, Marginal within the band,
    Unstable otherwise.
    """
    ev = eigenvalues(J)
    mrp = float(np.max(ev.real))
    if mrp < -eps_margin:
        cls = STABLE
    elif mrp <= eps_margin:
        cls = MARGINAL
    else:
        cls = UNSTABLE
    order = np.lexsort((ev.imag, -ev.real))
    return StabilityVerdict(max_real_part=mrp, margin=abs(mrp), classification=cls,
                            eigenvalues=tuple(complex(v) for v in ev[order]))


def g6_case(p: ValidatedParamSet) -> str:
    """Which branch of the G6 analysis applies: sign of ``Delta_alpha + alpha3*gamma2``."""
    d = derive(p)
    denom = d.delta_alpha + p.alpha[2] * p.gamma[1]
    if d.S_hat1 is None:
        return "zero"
    return "negative" if denom < 0 else "positive"


def _window(lo, K, hi=None):
    inside = K > lo and (hi is None or K < hi)
    return STABLE if inside else UNSTABLE


def closed_form_verdict(p: ValidatedParamSet, K: float, label: str,
                        d: Optional[DerivedQuantities] = None) -> str:
    """Closed-form "stable and non-negative" verdict for G2..G6.

    Returns ``NotApplicable`` for the other labels.
    """
    if label not in CLOSED_FORM_LABELS:
        return NOT_APPLICABLE
    d = d or derive(p)
    s1, s2, s3 = d.sigma
    e1s, e2s = d.eta_star

    if label == "G2":
        return STABLE if 0 < K < s1 else UNSTABLE

    if label == "G3":
        if e1s <= 1:
            return _window(s1, K)
        return _window(s1, K, d.K1)

    if label == "G4":
        # needs gamma1 I2* > alpha1 (sigma2 - sigma1) and, when eta2* > 1, K < K3
        gs = d.gamma_star
        if gs <= 1:
            return UNSTABLE
        lower = s2 * gs / (gs - 1)
        return _window(lower, K, d.K3 if e2s > 1 else None)

    if label == "G5":
        eta = min(e1s, e2s)
        if eta <= 1:
            return UNSTABLE
        return _window(s3 * eta / (eta - 1), K)

    # G6: non-negative iff K1 < K < K2; then stable iff S* (Delta_alpha + alpha3 gamma2)
    # < Delta_mu + gamma2 mu3
    if e1s <= 1 or not (d.K1 < K < d.K2):
        return UNSTABLE
    case = g6_case(p)
    if case in ("zero", "negative"):
        return STABLE
    return STABLE if K < d.K0 else UNSTABLE


def g6_window(d: DerivedQuantities):
    """Stability window ``(K1, Q K1 / sigma1)`` of G6, or ``None`` if eta1* <= 1."""
    if d.K1 is None or d.Q is None:
        return None
    return d.K1, d.Q / d.sigma[0] * d.K1


def assess(p: ValidatedParamSet, K: float, point: EquilibriumPoint,
           d: Optional[DerivedQuantities] = None, eps_margin: float = EPS_MARGIN) -> StabilityVerdict:
    """Eigenvalue verdict at ``point`` together with the closed-form comparison.

    ``agreement`` compares the closed form against "eigen-stable and
    admissible"; it is ``None`` when no closed form applies.
    """
    v = eigen_classify(jacobian(p, K, point.coords), eps_margin)
    cf = closed_form_verdict(p, K, point.label, d)
    agreement = None
    if cf != NOT_APPLICABLE:
        agreement = (cf == STABLE) == (v.classification == STABLE and point.admissible)
    return StabilityVerdict(max_real_part=v.max_real_part, margin=v.margin,
                            classification=v.classification, eigenvalues=v.eigenvalues,
                            closed_form=cf, agreement=agreement)


def classify_candidates(p: ValidatedParamSet, K: float,
                        eps_margin: float = EPS_MARGIN) -> List[Tuple[EquilibriumPoint, StabilityVerdict]]:
    """Every admissible equilibrium at ``K`` with its verdict."""
    d = derive(p)
    return [(pt, assess(p, K, pt, d, eps_margin)) for pt in all_equilibria(p, K) if pt.admissible]


def in_uniqueness_regime(d: DerivedQuantities) -> bool:
    e1, e2 = d.eta_star
    return 0 < e1 < max(1.0, e2)


def stable_equilibrium(p: ValidatedParamSet, K: float, eps_margin: float = EPS_MARGIN) -> EquilibriumPoint:
    """The unique locally stable non-negative equilibrium at ``K``.

    Raises
    ------
    MultipleStable
        More than one candidate is stable; ``.points`` lists them.
    NoneStable
        No candidate is stable; ``.nearest`` holds the ``(point, verdict)``
        pair closest to the stability boundary.
    """
    ranked = classify_candidates(p, K, eps_margin)
    stable = [(pt, v) for pt, v in ranked if v.classification == STABLE]
    if len(stable) == 1:
        return stable[0][0]
    if len(stable) > 1:
        labels = ", ".join(pt.label for pt, _ in stable)
        regime = "inside" if in_uniqueness_regime(derive(p)) else "outside"
        raise MultipleStable(f"K={K!r}: several stable equilibria ({labels}); parameters {regime} "
                             f"the uniqueness regime", points=[pt for pt, _ in stable])
    nearest = min(ranked, key=lambda pv: pv[1].max_real_part) if ranked else None
    msg = f"K={K!r}: no locally stable equilibrium (possible oscillatory regime)"
    if nearest is not None:
        msg += f"; nearest {nearest[0].label} with max real part {nearest[1].max_real_part:.3g}"
    raise NoneStable(msg, nearest=nearest)


VERDICT_COLUMNS = ("label", "K", "max_real_part", "classification", "closed_form", "agreement")


def verdict_table(rows, K, fmt=".17g") -> str:
    """Delimited text from ``(point, verdict)`` pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VERDICT_COLUMNS)
    for pt, v in rows:
        agreement = "" if v.agreement is None else str(v.agreement).lower()
        w.writerow([pt.label, format(K, fmt), format(v.max_real_part, fmt), v.classification,
                    v.closed_form or NOT_APPLICABLE, agreement])
    return buf.getvalue()
