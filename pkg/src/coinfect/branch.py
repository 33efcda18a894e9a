"""Carrying-capacity thresholds and transition diagrams.

A transition diagram partitions ``(0, K_max]`` into intervals on which the
locally stable equilibrium keeps its type, e.g. ``G2 -> G3 -> G6 -> G5``.
Closed-form thresholds are used where known; elsewhere label changes are
located by bisection on the stable label.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .equilibria import boundary_equilibria, coexistence_points
from .exceptions import DiscontinuousBranch, LabelChangeInsideInterval, NoneStable
from .params import (
    DerivedQuantities,
    ScaledParamSet,
    ValidatedParamSet,
    derive,
    materialize_scaled,
)
from .stability import (
    CLOSED_FORM_LABELS,
    STABLE,
    classify_candidates,
    closed_form_verdict,
    stable_equilibrium,
)

logger = logging.getLogger(__name__)

NONE_STABLE = "none"
DEFAULT_GRID = 64
REFINE_RTOL = 1e-8
#: samples closer than this (relative) to a threshold are skipped
THRESHOLD_GUARD = 1e-6


class Threshold(NamedTuple):
    K: float
    event: str


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    label: str
    evidence: str


@dataclass
class TransitionDiagram:
    segments: List[Segment]
    scenario: str
    thresholds: List[Threshold] = field(default_factory=list)
    K_max: float = math.nan

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.segments]

    def label_at(self, K: float) -> str:
        for s in self.segments:
            if s.lo < K <= s.hi:
                return s.label
        raise ValueError(f"K={K} outside (0, {self.K_max}]")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "K_max": self.K_max,
            "thresholds": [{"K": t.K, "event": t.event} for t in self.thresholds],
            "segments": [asdict(s) for s in self.segments],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TransitionDiagram":
        return cls(
            segments=[Segment(float(s["lo"]), float(s["hi"]), s["label"], s["evidence"])
                      for s in doc["segments"]],
            scenario=doc["scenario"],
            thresholds=[Threshold(float(t["K"]), t["event"]) for t in doc["thresholds"]],
            K_max=float(doc["K_max"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TransitionDiagram":
        return cls.from_dict(json.loads(text))


def scenario_classify(d: DerivedQuantities) -> str:
    """``'i'``, ``'ii'``, ``'iii/iv'`` or ``'outside'`` from the normalized coinfection rates.

    Boundary equalities (``eta1* = 0``, ``eta1* = 1``, ``eta1* = eta2*``)
    are ``'outside'``.
    """
    e1, e2 = d.eta_star
    if not e1 > 0:
        return "outside"
    if e1 < 1:
        return "i"
    if e1 == 1 or e1 == e2:
        return "outside"
    if e1 < e2:
        return "ii"
    return "iii/iv"


def thresholds(d: DerivedQuantities) -> List[Threshold]:
    """Closed-form thresholds in increasing order; ``sigma1`` is always present."""
    out = [Threshold(d.sigma[0], "G2->G3")]
    if d.K1 is not None:
        out.append(Threshold(d.K1, "G3->G6"))
        if d.eta_star[1] >= d.eta_star[0]:
            out.append(Threshold(d.K2, "G6->G5"))
        elif d.K0 is not None:
            out.append(Threshold(d.K0, "G6 loses stability (det J6 = 0)"))
    return out


def stable_label(p: ValidatedParamSet, K: float) -> str:
    """Label of the stable equilibrium at ``K``, or ``'none'``."""
    try:
        return stable_equilibrium(p, K).label
    except NoneStable:
        return NONE_STABLE


def refine_threshold(label_fn, K_lo: float, K_hi: float, rtol: float = REFINE_RTOL) -> float:
    """Bisect between ``K_lo`` and ``K_hi`` where ``label_fn`` changes value."""
    left = label_fn(K_lo)
    if label_fn(K_hi) == left:
        raise ValueError("label does not change on the bracket")
    lo, hi = K_lo, K_hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if label_fn(mid) == left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _samples(lo, hi, grid, closed):
    a = hi * 1e-3 if lo == 0 else lo * (1 + THRESHOLD_GUARD)
    b = hi if closed else hi * (1 - THRESHOLD_GUARD)
    ks = np.geomspace(a, b, grid) if grid > 0 else np.array([])
    return np.unique(np.concatenate((ks, [0.5 * (lo + hi)])))


def _evidence(p, K, label, d):
    if label not in CLOSED_FORM_LABELS:
        return "Eigenvalue"
    if closed_form_verdict(p, K, label, d) == STABLE:
        return "Both"
    logger.warning("closed form disagrees with eigenvalues for %s at K=%r", label, K)
    return "Eigenvalue"


def transition_diagram(p: Union[ValidatedParamSet, ScaledParamSet], K_max: float,
                       grid: int = DEFAULT_GRID) -> TransitionDiagram:
    """Stable-equilibrium labels over ``(0, K_max]``.

    Each interval between consecutive closed-form thresholds is checked at
    its midpoint and on ``grid`` log-spaced interior points.  In scenarios
    i and ii a label change inside an interval raises
    :class:`LabelChangeInsideInterval`; elsewhere it is located by bisection
    and becomes an eigenvalue-only threshold.

    For a :class:`ScaledParamSet` the label is K-independent and the diagram
    is a single segment.
    """
    if isinstance(p, ScaledParamSet):
        return _scaled_diagram(p, K_max, grid)

    d = derive(p)
    scen = scenario_classify(d)
    thr = thresholds(d)
    if not K_max > thr[-1].K:
        raise ValueError(f"K_max={K_max} must exceed the largest threshold {thr[-1].K}")
    strict = scen in ("i", "ii")
    fn = lambda K: stable_label(p, K)  # noqa: E731

    bounds = [0.0] + [t.K for t in thr] + [float(K_max)]
    all_thr = list(thr)
    segments: List[Segment] = []
    for j in range(len(bounds) - 1):
        lo, hi = bounds[j], bounds[j + 1]
        ks = _samples(lo, hi, grid, closed=(j == len(bounds) - 2))
        labels = [fn(K) for K in ks]
        start = lo
        for n in range(1, len(ks)):
            if labels[n] == labels[n - 1]:
                continue
            Kc = refine_threshold(fn, ks[n - 1], ks[n])
            if strict:
                raise LabelChangeInsideInterval(
                    f"stable label changes {labels[n - 1]}->{labels[n]} near K={Kc!r} inside "
                    f"({lo}, {hi}): a threshold was missed", K_change=Kc)
            segments.append(Segment(start, Kc, labels[n - 1], "Eigenvalue"))
            all_thr.append(Threshold(Kc, f"{labels[n - 1]}->{labels[n]}"))
            start = Kc
        mid_K = ks[len(ks) // 2] if start == lo else 0.5 * (start + hi)
        segments.append(Segment(start, hi, labels[-1], _evidence(p, mid_K, labels[-1], d)))

    segments = _merge(segments)
    all_thr.sort()
    kept = {s.lo for s in segments[1:]}
    all_thr = [t for t in all_thr if t.K in kept]
    if scen == "iii/iv":
        scen = _resolve_iii_iv([s.label for s in segments])
    return TransitionDiagram(segments=segments, scenario=scen, thresholds=all_thr, K_max=float(K_max))


def _merge(segments):
    out = []
    for s in segments:
        if out and out[-1].label == s.label:
            prev = out.pop()
            evidence = prev.evidence if prev.evidence == s.evidence else "Eigenvalue"
            s = Segment(prev.lo, s.hi, s.label, evidence)
        out.append(s)
    return out


def _resolve_iii_iv(labels):
    if "G8" in labels:
        after = labels[labels.index("G8") + 1:]
        if "G7" in after or "G5" in after:
            return "iii"
    return "iv"


def scaled_case_label(sp: ScaledParamSet) -> Optional[str]:
    """Stable label predicted for scale-free rates, or ``None`` when not covered.

    Cases: ``s1 >= 1`` gives G2; ``eta1* <= 1/(1-s1)`` gives G3; for
    ``eta2* > eta1* > 1/(1-s1)`` it is G6 unless ``s3 < 1`` and
    ``eta1* > 1/(1-s3)``, which gives G5.
    """
    s1, _, s3 = sp.s
    e1, e2 = derive(materialize_scaled(sp, 1.0)).eta_star
    if s1 >= 1:
        return "G2"
    if e1 <= 1 / (1 - s1):
        return "G3"
    if e2 > e1:
        if s3 >= 1 or e1 < 1 / (1 - s3):
            return "G6"
        if e1 > 1 / (1 - s3):
            return "G5"
    return None


def _scaled_diagram(sp, K_max, grid):
    ks = np.geomspace(K_max * 1e-4, K_max, max(grid, 2))
    labels = [stable_label(materialize_scaled(sp, K), K) for K in ks]
    for n in range(1, len(ks)):
        if labels[n] != labels[0]:
            raise LabelChangeInsideInterval(
                f"scale-free parameters changed stable label {labels[0]}->{labels[n]} at "
                f"K={ks[n]!r}", K_change=float(ks[n]))
    d = derive(materialize_scaled(sp, 1.0))
    scen = scenario_classify(d)
    label = labels[0]
    pred = scaled_case_label(sp)
    evidence = "Both" if pred == label else "Eigenvalue"
    if scen == "iii/iv":
        scen = _resolve_iii_iv([label])
    return TransitionDiagram(segments=[Segment(0.0, float(K_max), label, evidence)],
                             scenario=scen, thresholds=[], K_max=float(K_max))


# --- continuity --------------------------------------------------------------

class ContinuityEntry(NamedTuple):
    K: float
    left: str
    right: str
    left_coords: Tuple[float, ...]
    right_coords: Tuple[float, ...]
    gap: float


def _coords_at(p, K, label, side, reference=None):
    if label != "G8":
        for pt in boundary_equilibria(p, K):
            if pt.label == label:
                return np.asarray(pt.coords)
        return None
    # G8 meets the boundary at its threshold; approach from inside the segment
    Kside = K * (1.0 + side * 1e-10)
    pts = coexistence_points(p, Kside)
    if not pts:
        return None
    if reference is None or len(pts) == 1:
        return np.asarray(pts[0].coords)
    return min((np.asarray(pt.coords) for pt in pts), key=lambda y: np.max(np.abs(y - reference)))


def continuity_check(diagram: TransitionDiagram, p: ValidatedParamSet, tol: float = 1e-8) -> List[ContinuityEntry]:
    """Verify that adjacent stable equilibria coincide at each interior threshold.

    Transitions into or out of ``'none'`` segments are skipped.

    Raises
    ------
    DiscontinuousBranch
        If the two adjacent equilibria differ by more than ``tol`` (max-norm).
    """
    report = []
    for left, right in zip(diagram.segments, diagram.segments[1:]):
        K = left.hi
        if NONE_STABLE in (left.label, right.label):
            continue
        yl = _coords_at(p, K, left.label, -1)
        yr = _coords_at(p, K, right.label, +1, reference=yl)
        if yl is None or yr is None:
            raise DiscontinuousBranch(
                f"no {left.label if yl is None else right.label} point at threshold K={K!r}",
                threshold=K)
        gap = float(np.max(np.abs(yl - yr)))
        entry = ContinuityEntry(K, left.label, right.label, tuple(map(float, yl)),
                                tuple(map(float, yr)), gap)
        if gap > tol:
            raise DiscontinuousBranch(
                f"{left.label} and {right.label} differ by {gap:.3g} at K={K!r}", threshold=K)
        report.append(entry)
    return report


# --- sweep table --------------------------------------------------------------

SWEEP_COLUMNS = ("K", "stable_label", "S", "I1", "I2", "I12", "max_real_part")


def sweep_row(p: Union[ValidatedParamSet, ScaledParamSet], K: float):
    """``(K, label, coords or None, max_real_part)`` for one carrying capacity."""
    q = materialize_scaled(p, K) if isinstance(p, ScaledParamSet) else p
    ranked = classify_candidates(q, K)
    stable = [(pt, v) for pt, v in ranked if v.classification == STABLE]
    if len(stable) == 1:
        pt, v = stable[0]
        return K, pt.label, pt.coords, v.max_real_part
    if not stable:
        nearest = min(ranked, key=lambda pv: pv[1].max_real_part)
        return K, NONE_STABLE, None, nearest[1].max_real_part
    # defer to stable_equilibrium for the error
    stable_equilibrium(q, K)


def sweep_table(rows, fmt=".17g") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for K, label, coords, mrp in rows:
        cells = [format(v, fmt) for v in coords] if coords is not None else ["", "", "", ""]
        w.writerow([format(K, fmt), label] + cells + [format(mrp, fmt)])
    return buf.getvalue()


def segments_table(diagram: TransitionDiagram, fmt=".17g") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("K_lo", "K_hi", "stable_label", "evidence"))
    for s in diagram.segments:
        w.writerow([format(s.lo, fmt), format(s.hi, fmt), s.label, s.evidence])
    return buf.getvalue()
