"""Time integration of the full (S, I1, I2, I12, R) and reduced models.

The integrator is an embedded Dormand-Prince 5(4) pair with FSAL and
standard error-per-step control.  Steps that undershoot below ``-atol`` in
any compartment are rejected and halved; smaller undershoots are clamped to
zero and logged as events.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from .equilibria import residual
from .exceptions import InvalidInitialState, StepSizeUnderflow
from .model import jacobian_reduced, rhs_full, rhs_reduced, total_population_rate
from .params import ValidatedParamSet

logger = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
HORIZON = 1e4
CONVERGE_EPS = 1e-8
CONVERGE_WINDOW = 50.0
BLOWUP = 1e12
#: cap on h * |J|_inf; keeps steps away from the explicit stability boundary so that
#: trajectories settle onto equilibria instead of ringing at tolerance level
STIFFNESS_CAP = 2.0

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B = np.append(_A[6], 0.0)
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class State(NamedTuple):
    S: float
    I1: float
    I2: float
    I12: float
    R: float = 0.0
    t: float = 0.0


class Termination(NamedTuple):
    kind: str  # Converged | HorizonReached | Blowup | Oscillatory
    point: Optional[np.ndarray] = None
    norm: Optional[float] = None


class ClampEvent(NamedTuple):
    t: float
    component: int
    value: float


@dataclass
class Trajectory:
    """Accepted integration steps.

    ``deriv_ratio[k]`` is ``|f(y_k)| / (1 + |y_k|)`` over the monitored
    components (all of them, or the disease classes only when the recovered
    class does not decay).
    """

    t: np.ndarray
    y: np.ndarray
    h: np.ndarray
    err: np.ndarray
    deriv_ratio: np.ndarray
    termination: Termination
    K: float
    system: str
    rtol: float
    atol: float
    rejected: int = 0
    negative_rejections: int = 0
    clamps: List[ClampEvent] = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]

    def state(self, k: int = -1) -> State:
        y = self.y[k]
        R = y[4] if len(y) > 4 else 0.0
        return State(*[float(v) for v in y[:4]], float(R), float(self.t[k]))


def _as_array(y0, system):
    n = 5 if system == "full" else 4
    if isinstance(y0, State):
        t0 = y0.t
        y = np.array(y0[:n], dtype=float)
    else:
        t0 = 0.0
        y = np.asarray(y0, dtype=float).ravel()
        if system == "full" and len(y) == 4:
            y = np.append(y, 0.0)
        if len(y) != n:
            raise InvalidInitialState(f"initial state must have {n} components, got {len(y)}")
    if not np.all(np.isfinite(y)):
        raise InvalidInitialState("initial state has non-finite entries")
    if not y[0] > 0:
        raise InvalidInitialState(f"S(0) must be positive, got {y[0]}")
    if np.any(y[1:] < 0):
        raise InvalidInitialState(f"infected and recovered classes must be non-negative, got {y[1:]}")
    return y, float(t0)


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / len(v))


def _initial_step(f, y, f0, rtol, atol, horizon):
    sc = atol + rtol * np.abs(y)
    d0, d1 = _rms(y / sc), _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + h0 * f0
    d2 = _rms((f(y1) - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, horizon)


def integrate(p: ValidatedParamSet, y0, horizon: float = HORIZON, rtol: float = RTOL,
              atol: float = ATOL, K: Optional[float] = None, system: str = "full",
              converge_eps: Optional[float] = CONVERGE_EPS,
              converge_window: float = CONVERGE_WINDOW, max_step: Optional[float] = None,
              max_steps: int = 2_000_000) -> Trajectory:
    """Integrate from ``y0`` up to ``horizon`` time units.

    ``system`` is ``"full"`` (five compartments) or ``"reduced"`` (four).
    The run stops early once the scaled derivative stays below
    ``converge_eps`` for ``converge_window`` time units; pass
    ``converge_eps=None`` to always run to the horizon.  Without an explicit
    ``max_step`` the step is capped at ``2 / |J(y)|_inf`` of the local
    Jacobian.

    Raises
    ------
    InvalidInitialState
        ``S(0) <= 0`` or a negative class.
    StepSizeUnderflow
        The step size collapsed (stiffness or blow-up).
    """
    if system not in ("full", "reduced"):
        raise ValueError(f"system must be 'full' or 'reduced', got {system!r}")
    K = p.K if K is None else float(K)
    if K is None or not K > 0:
        raise ValueError("a positive carrying capacity K is required")
    y, t = _as_array(y0, system)
    t_end = t + float(horizon)

    rhs = rhs_full if system == "full" else rhs_reduced
    f = lambda v: rhs(p, K, v)  # noqa: E731
    # a non-decaying recovered class grows without bound; monitor the disease classes
    nmon = 5 if (system == "full" and p.d[4] > 0) else 4

    def cap(v):
        if max_step is not None:
            return max_step
        norm = np.max(np.sum(np.abs(jacobian_reduced(p, K, v[:4])), axis=1))
        if system == "full":
            norm = max(norm, p.d[4] + sum(p.rho))
        return STIFFNESS_CAP / norm if norm > 0 else np.inf

    def ratio(v, fv):
        return float(np.linalg.norm(fv[:nmon]) / (1.0 + np.linalg.norm(v[:nmon])))

    k = np.empty((7, len(y)))
    k[0] = f(y)
    h = min(_initial_step(f, y, k[0], rtol, atol, horizon), cap(y))

    ts, ys, hs, errs, ratios = [t], [y.copy()], [0.0], [0.0], [ratio(y, k[0])]
    clamps: List[ClampEvent] = []
    rejected = neg_rejected = 0
    calm_since = t if ratios[0] < (converge_eps or -1) else None
    termination = None

    for _ in range(max_steps):
        if t >= t_end:
            break
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size underflow at t={t!r} (h={h!r})")
        for s in range(1, 7):
            k[s] = f(y + h * (_A[s, :s] @ k[:s]))
        y_new = y + h * (_B @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(h * (_E @ k) / sc)
        if err > 1.0 or not np.isfinite(err):
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2) if np.isfinite(err) else 0.2
            continue
        if np.any(y_new < -atol):
            neg_rejected += 1
            h *= 0.5
            continue
        t_new = t + h
        neg = np.nonzero(y_new < 0)[0]
        if len(neg):
            for i in neg:
                clamps.append(ClampEvent(t_new, int(i), float(y_new[i])))
            y_new[neg] = 0.0
            k[0] = f(y_new)
        else:
            k[0] = k[6]  # FSAL
        t, y = t_new, y_new
        rt = ratio(y, k[0])
        ts.append(t)
        ys.append(y.copy())
        hs.append(h)
        errs.append(err)
        ratios.append(rt)
        h *= min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else 5.0
        h = min(h, cap(y))

        if np.max(np.abs(y)) > BLOWUP:
            termination = Termination("Blowup", y.copy(), float(np.max(np.abs(y))))
            break
        if converge_eps is not None:
            if rt < converge_eps:
                if calm_since is None:
                    calm_since = t
                elif t - calm_since >= converge_window:
                    termination = Termination("Converged", y.copy(), rt)
                    break
            else:
                calm_since = None
    else:
        logger.warning("integration stopped after max_steps=%d at t=%r", max_steps, t)

    traj = Trajectory(t=np.array(ts), y=np.array(ys), h=np.array(hs), err=np.array(errs),
                      deriv_ratio=np.array(ratios), termination=Termination("HorizonReached"),
                      K=K, system=system, rtol=rtol, atol=atol, rejected=rejected,
                      negative_rejections=neg_rejected, clamps=clamps)
    if termination is None:
        termination = _classify_end(traj, converge_eps)
    traj.termination = termination
    return traj


def _classify_end(traj, converge_eps, fraction=0.2):
    eps = CONVERGE_EPS if converge_eps is None else converge_eps
    if traj.deriv_ratio[-1] < eps:
        return Termination("Converged", traj.final.copy(), float(traj.deriv_ratio[-1]))
    if detect_oscillation(traj, fraction):
        return Termination("Oscillatory", traj.final.copy(), float(traj.deriv_ratio[-1]))
    return Termination("HorizonReached", traj.final.copy(), float(traj.deriv_ratio[-1]))


def detect_oscillation(traj: Trajectory, fraction: float = 0.2, min_extrema: int = 4) -> bool:
    """Sustained bounded oscillation of S over the trailing ``fraction`` of the run."""
    t0 = traj.t[0] + (1.0 - fraction) * (traj.t[-1] - traj.t[0])
    S = traj.y[traj.t >= t0, 0]
    if len(S) < 3 or not np.all(np.isfinite(S)) or np.max(np.abs(S)) > BLOWUP:
        return False
    amplitude = np.max(S) - np.min(S)
    if amplitude <= 1e-6 * (1.0 + np.max(np.abs(S))):
        return False
    dS = np.diff(S)
    extrema = np.count_nonzero(np.sign(dS[1:]) * np.sign(dS[:-1]) < 0)
    return extrema >= min_extrema


def converged_state(traj: Trajectory, window: float = CONVERGE_WINDOW,
                    eps: float = CONVERGE_EPS) -> Optional[State]:
    """Terminal state if the scaled derivative stayed below ``eps`` over the trailing window."""
    if traj.t[-1] - traj.t[0] < window:
        return None
    tail = traj.t >= traj.t[-1] - window
    if np.all(traj.deriv_ratio[tail] < eps):
        return traj.state(-1)
    return None


@dataclass
class InvariantReport:
    min_value: float
    max_S: float
    S_bound: float
    balance_error: Optional[float]
    limit_residual: Optional[float]
    law_errors: Optional[tuple]
    violations: List[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def invariant_report(traj: Trajectory, p: ValidatedParamSet, tol: Optional[float] = None,
                     limit_tol: float = 1e-6) -> InvariantReport:
    """Check positivity, the bound on S, the population balance and, at convergence,
    the equilibrium identities at the limit point.  Violations are listed, not raised."""
    K = traj.K
    tol = 10 * traj.atol if tol is None else tol
    violations = []
    y = traj.y
    min_value = float(np.min(y))
    if min_value < -traj.atol:
        violations.append(f"negative compartment value {min_value:.3g}")
    S_bound = max(float(y[0, 0]), K) + tol + traj.rtol * K
    max_S = float(np.max(y[:, 0]))
    if max_S > S_bound:
        violations.append(f"S exceeded max(S0, K): {max_S!r} > {S_bound!r}")

    balance = None
    if traj.system == "full":
        balance = 0.0
        for row in y:
            diff = abs(total_population_rate(p, K, row) - float(np.sum(rhs_full(p, K, row))))
            balance = max(balance, diff)
        if balance > tol:
            violations.append(f"N' balance off by {balance:.3g}")

    limit_res = laws = None
    if traj.termination.kind == "Converged":
        Y = traj.final[:4]
        limit_res = residual(p, K, Y)
        if limit_res > limit_tol:
            violations.append(f"limit point residual {limit_res:.3g}")
        S, I = Y[0], Y[1:]
        if S > 0:
            law1 = float(np.dot(p.alpha, I) - p.r * (K - S) / K)
            law2 = float(np.dot(p.mu, I) - p.r * (K - S) * S / K)
            laws = (law1, law2)
            if max(abs(law1), abs(law2)) > limit_tol:
                violations.append(f"equilibrium balance laws off by {max(abs(law1), abs(law2)):.3g}")
    return InvariantReport(min_value, max_S, S_bound, balance, limit_res, laws, violations)


def logistic_solution(t, S0, r, K):
    """Closed-form solution of ``S' = r (1 - S/K) S``."""
    t = np.asarray(t, dtype=float)
    return K / (1.0 + (K / S0 - 1.0) * np.exp(-r * t))


TRAJECTORY_COLUMNS = ("t", "S", "I1", "I2", "I12", "R", "N")


def trajectory_table(traj: Trajectory, stride: int = 1, fmt=".17g") -> str:
    """Delimited text (t, S, I1, I2, I12, R, N); the last sample is always included."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    idx = list(range(0, len(traj.t), stride))
    if idx[-1] != len(traj.t) - 1:
        idx.append(len(traj.t) - 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for k in idx:
        row = traj.y[k]
        R = row[4] if len(row) > 4 else 0.0
        vals = [traj.t[k], *row[:4], R, float(np.sum(row[:4])) + R]
        w.writerow([format(float(v), fmt) for v in vals])
    return buf.getvalue()


def random_initial_states(p: ValidatedParamSet, K: float, n: int, rng, floor: float = 1e-3) -> List[np.ndarray]:
    """``n`` positive states inside the a-priori block ``0 < S <= K, 0 < I_i <= r/alpha_i``."""
    out = []
    for _ in range(n):
        S = rng.uniform(floor, 1.0) * K
        I = [rng.uniform(floor, 1.0) * p.r / a for a in p.alpha]
        out.append(np.array([S, *I, 0.0]))
    return out
