"""Model parameters, validation and derived thresholds.

The reduced model is driven by the rates ``r, alpha[1..3], mu[1..3],
eta[1..2], gamma[1..2]`` and the carrying capacity ``K``.  Strains are
always relabelled so that ``sigma_1 < sigma_2`` (strain 1 is the primary
disease); :attr:`ValidatedParamSet.swapped` records whether that happened.

Thresholds that do not exist for a parameter set (for instance ``K1`` when
``eta1* <= 1``) are ``None``.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from .exceptions import (
    ConfigParseError,
    DegenerateDelta,
    EqualSigmas,
    InconsistentRates,
    NonPositiveK,
    NonPositiveRate,
    SigmaOrderViolation,
)

logger = logging.getLogger(__name__)

#: relative tolerance for treating two quantities as equal (degenerate input)
DEGENERACY_TOL = 1e-12
#: tolerance for mu = rho + d when both are supplied
CONSISTENCY_TOL = 1e-12

Vec2 = Tuple[float, float]
Vec3 = Tuple[float, float, float]


def _vec(values, n, name):
    try:
        out = tuple(float(v) for v in values)
    except TypeError:
        raise NonPositiveRate(f"{name} must be a sequence of {n} numbers") from None
    if len(out) != n:
        raise NonPositiveRate(f"{name} must have {n} entries, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise NonPositiveRate(f"{name} has non-finite entries: {out}")
    return out


@dataclass(frozen=True)
class ParamSet:
    """Raw, user-labelled parameters.

    Either ``mu`` or the pair ``rho``/``d`` must be given (or both, in
    which case they must agree).  ``d`` holds the five death rates
    ``d0..d4``; ``d0`` only enters through ``r = b - d0`` and ``d4`` is the
    decay rate of the recovered class.
    """

    r: float
    alpha: Vec3
    eta: Vec2
    gamma: Vec2
    mu: Optional[Vec3] = None
    K: Optional[float] = None
    rho: Optional[Vec3] = None
    d: Optional[Tuple[float, float, float, float, float]] = None


@dataclass(frozen=True)
class ValidatedParamSet:
    """Parameters that passed :func:`validate`; indices satisfy sigma1 < sigma2 < sigma3."""

    r: float
    alpha: Vec3
    mu: Vec3
    eta: Vec2
    gamma: Vec2
    rho: Vec3
    d: Tuple[float, float, float, float, float]
    K: Optional[float] = None
    swapped: bool = False

    @property
    def gamma_bar(self) -> float:
        return self.gamma[0] + self.gamma[1]

    @property
    def sigma(self) -> Vec3:
        return tuple(m / a for m, a in zip(self.mu, self.alpha))

    def with_K(self, K: float) -> "ValidatedParamSet":
        return replace(self, K=_check_K(K))


@dataclass(frozen=True)
class ScaledParamSet:
    """Parameters whose contact rates scale like ``1/K``.

    ``a`` are the scale-free transmission coefficients, ``alpha_i(K) =
    a_i / K``.  The coinfection rates ``eta`` and ``gamma`` are given in the
    same scale-free units (``eta_i(K) = eta[i] / K``), which keeps ``eta_i*``
    and ``gamma*`` independent of ``K``.
    """

    r: float
    a: Vec3
    mu: Vec3
    eta: Vec2
    gamma: Vec2
    rho: Optional[Vec3] = None
    d: Optional[Tuple[float, float, float, float, float]] = None

    @property
    def s(self) -> Vec3:
        return tuple(m / a for m, a in zip(self.mu, self.a))

    @property
    def B(self) -> Vec3:
        """``K * A_i`` (dimensionless, independent of K)."""
        r, a, s = self.r, self.a, self.s
        return (
            a[0] * a[2] * (s[2] - s[0]) / r,
            a[1] * a[2] * (s[2] - s[1]) / r,
            a[0] * a[1] * (s[1] - s[0]) / r,
        )


@dataclass(frozen=True)
class DerivedQuantities:
    """Derived constants; thresholds that do not exist are ``None``."""

    sigma: Vec3
    A: Vec3
    eta_star: Vec2
    gamma_star: float
    delta_alpha: float
    delta_mu: float
    K1: Optional[float]
    K2: Optional[float]
    K3: Optional[float]
    K4: Optional[float]
    S_hat1: Optional[float]
    K0: Optional[float]
    Q: Optional[float]
    R0: Optional[float] = None
    delta_mu_alt: float = field(default=float("nan"), repr=False)


def _check_K(K):
    if K is None:
        return None
    K = float(K)
    if not (K > 0 and math.isfinite(K)):
        raise NonPositiveK(f"carrying capacity must be positive, got K={K}")
    return K


def _resolve_removal(raw: ParamSet):
    mu, rho, d = raw.mu, raw.rho, raw.d
    if d is not None:
        d = _vec(d, 5, "d")
        if any(v < 0 for v in d):
            raise NonPositiveRate(f"death rates must be non-negative, got d={d}")
    if rho is not None:
        rho = _vec(rho, 3, "rho")
        if any(v < 0 for v in rho):
            raise NonPositiveRate(f"recovery rates must be non-negative, got rho={rho}")

    if mu is None:
        if rho is None or d is None:
            raise NonPositiveRate("either mu or both rho and d must be supplied")
        mu = tuple(rho[i] + d[i + 1] for i in range(3))
        return mu, rho, d

    mu = _vec(mu, 3, "mu")
    if rho is not None and d is not None:
        for i in range(3):
            if abs(rho[i] + d[i + 1] - mu[i]) > CONSISTENCY_TOL * max(1.0, abs(mu[i])):
                raise InconsistentRates(
                    f"mu{i + 1}={mu[i]} differs from rho{i + 1}+d{i + 1}={rho[i] + d[i + 1]}"
                )
    elif rho is not None:
        d = (0.0,) + tuple(mu[i] - rho[i] for i in range(3)) + (0.0,)
    elif d is not None:
        rho = tuple(mu[i] - d[i + 1] for i in range(3))
    else:
        # all removal counted as recovery; recovered class does not decay
        rho = mu
        d = (0.0, 0.0, 0.0, 0.0, 0.0)
    if any(v < -CONSISTENCY_TOL for v in rho) or any(v < -CONSISTENCY_TOL for v in d):
        raise InconsistentRates(f"mu, rho and d imply negative rates: rho={rho}, d={d}")
    return mu, rho, d


def validate(raw: ParamSet) -> ValidatedParamSet:
    """Check a raw parameter set and relabel strains so that sigma1 < sigma2.

    Raises
    ------
    NonPositiveRate
        r, alpha_i, mu_i not strictly positive or eta_i, gamma_i negative.
    EqualSigmas
        sigma1 and sigma2 coincide (to relative 1e-12).
    SigmaOrderViolation
        sigma3 <= sigma2 after relabelling.
    DegenerateDelta
        ``eta1*alpha2 - eta2*alpha1`` vanishes (to relative 1e-12).
    NonPositiveK
        K supplied and not positive.
    """
    r = float(raw.r)
    alpha = _vec(raw.alpha, 3, "alpha")
    eta = _vec(raw.eta, 2, "eta")
    gamma = _vec(raw.gamma, 2, "gamma")
    if not (r > 0 and math.isfinite(r)):
        raise NonPositiveRate(f"intrinsic growth rate must be positive, got r={r}")
    if any(v <= 0 for v in alpha):
        raise NonPositiveRate(f"transmission rates must be positive, got alpha={alpha}")
    if any(v < 0 for v in eta) or any(v < 0 for v in gamma):
        raise NonPositiveRate(f"eta and gamma must be non-negative, got eta={eta}, gamma={gamma}")
    mu, rho, d = _resolve_removal(raw)
    if any(v <= 0 for v in mu):
        raise NonPositiveRate(f"removal rates must be positive, got mu={mu}")
    K = _check_K(raw.K)

    sigma = [mu[i] / alpha[i] for i in range(3)]
    if abs(sigma[0] - sigma[1]) < DEGENERACY_TOL * max(sigma[0], sigma[1]):
        raise EqualSigmas(f"strains 1 and 2 are indistinguishable: sigma1=sigma2={sigma[0]}")

    swapped = sigma[0] > sigma[1]
    if swapped:
        alpha = (alpha[1], alpha[0], alpha[2])
        mu = (mu[1], mu[0], mu[2])
        rho = (rho[1], rho[0], rho[2])
        d = (d[0], d[2], d[1], d[3], d[4])
        eta = (eta[1], eta[0])
        gamma = (gamma[1], gamma[0])
        sigma = [sigma[1], sigma[0], sigma[2]]
        logger.debug("strain labels 1 and 2 swapped so that sigma1 < sigma2")

    if sigma[2] <= sigma[1] * (1 + DEGENERACY_TOL):
        raise SigmaOrderViolation(
            f"coinfection must have the largest sigma: sigma=({sigma[0]}, {sigma[1]}, {sigma[2]})"
        )

    delta_alpha = eta[0] * alpha[1] - eta[1] * alpha[0]
    if abs(delta_alpha) <= DEGENERACY_TOL * (eta[0] * alpha[1] + eta[1] * alpha[0]):
        raise DegenerateDelta(
            f"eta1*alpha2 - eta2*alpha1 = {delta_alpha} is degenerate (strains share coinfection rates)"
        )

    return ValidatedParamSet(r=r, alpha=alpha, mu=mu, eta=eta, gamma=gamma, rho=rho, d=d,
                             K=K, swapped=swapped)


def _threshold(sigma, star):
    # sigma * x / (x - 1), defined only for x > 1
    if star > 1:
        return sigma * star / (star - 1)
    return None


def derive(p: ValidatedParamSet) -> DerivedQuantities:
    """All derived constants and carrying-capacity thresholds of ``p``."""
    r = p.r
    a1, a2, a3 = p.alpha
    m1, m2, m3 = p.mu
    e1, e2 = p.eta
    g1, g2 = p.gamma
    s1, s2, s3 = p.sigma

    A1 = a1 * a3 * (s3 - s1) / r
    A2 = a2 * a3 * (s3 - s2) / r
    A3 = a1 * a2 * (s2 - s1) / r
    eta_star = (e1 / A1, e2 / A2)
    gamma_star = g1 / A3
    delta_alpha = e1 * a2 - e2 * a1
    delta_mu = e1 * r * A3 / a1 + s1 * delta_alpha
    delta_mu_alt = e2 * r * A3 / a2 + s2 * delta_alpha
    if abs(delta_mu - delta_mu_alt) > 1e-10 * max(abs(delta_mu), abs(delta_mu_alt), 1e-300):
        logger.warning("Delta_mu forms disagree: %r vs %r", delta_mu, delta_mu_alt)

    K1 = _threshold(s1, eta_star[0])
    K3 = _threshold(s2, eta_star[1])
    K2 = s3 / s1 * K1 if K1 is not None else None
    K4 = s3 / s2 * K3 if K3 is not None else None

    denom = delta_alpha + a3 * g2
    if abs(denom) > DEGENERACY_TOL * (abs(e1 * a2) + abs(e2 * a1) + a3 * g2):
        S_hat1 = (delta_mu + m3 * g2) / denom
    else:
        S_hat1 = None
    K0 = S_hat1 * eta_star[0] / (eta_star[0] - 1) if (S_hat1 is not None and eta_star[0] > 1) else None
    Q = s3 if eta_star[1] >= eta_star[0] else S_hat1

    return DerivedQuantities(
        sigma=(s1, s2, s3),
        A=(A1, A2, A3),
        eta_star=eta_star,
        gamma_star=gamma_star,
        delta_alpha=delta_alpha,
        delta_mu=delta_mu,
        K1=K1,
        K2=K2,
        K3=K3,
        K4=K4,
        S_hat1=S_hat1,
        K0=K0,
        Q=Q,
        R0=p.K / s1 if p.K is not None else None,
        delta_mu_alt=delta_mu_alt,
    )


def materialize_scaled(sp: ScaledParamSet, K: float) -> ValidatedParamSet:
    """Concrete parameters at carrying capacity ``K`` for a scale-free set."""
    K = float(K)
    if not (K > 0 and math.isfinite(K)):
        raise NonPositiveK(f"carrying capacity must be positive, got K={K}")
    raw = ParamSet(
        r=sp.r,
        alpha=tuple(v / K for v in sp.a),
        mu=sp.mu,
        eta=tuple(v / K for v in sp.eta),
        gamma=tuple(v / K for v in sp.gamma),
        K=K,
        rho=sp.rho,
        d=sp.d,
    )
    return validate(raw)


# --- parameter files -------------------------------------------------------

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*?)\s*$")


def parse_param_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = m.group(1), m.group(2)
        if key in values:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _number(values, key):
    try:
        return float(values[key])
    except ValueError:
        raise ConfigParseError(f"{key}: not a number: {values[key]!r}") from None


def _group(values, prefix, indices, required=True):
    keys = [f"{prefix}{i}" for i in indices]
    present = [k in values for k in keys]
    if not any(present):
        if required:
            raise ConfigParseError(f"missing keys {', '.join(keys)}")
        return None
    if not all(present):
        missing = [k for k, ok in zip(keys, present) if not ok]
        raise ConfigParseError(f"incomplete group {prefix}: missing {', '.join(missing)}")
    return tuple(_number(values, k) for k in keys)


_KNOWN = {"r", "K", "mode"} | {f"{p}{i}" for p in ("alpha", "a", "mu", "rho") for i in (1, 2, 3)} \
    | {f"{p}{i}" for p in ("eta", "gamma") for i in (1, 2)} | {f"d{i}" for i in range(5)}


def params_from_mapping(values: dict, scaled: Optional[bool] = None):
    """Build a validated (or scaled) parameter set from parsed key/values.

    ``scaled=None`` defers to the ``mode`` key (``mode = scaled``).
    """
    unknown = sorted(set(values) - _KNOWN)
    if unknown:
        raise ConfigParseError(f"unknown keys: {', '.join(unknown)}")
    mode = str(values.get("mode", "absolute")).strip().lower()
    if mode not in ("absolute", "scaled"):
        raise ConfigParseError(f"mode must be 'absolute' or 'scaled', got {mode!r}")
    if scaled is None:
        scaled = mode == "scaled"
    if "r" not in values:
        raise ConfigParseError("missing key r")
    r = _number(values, "r")
    mu = _group(values, "mu", (1, 2, 3), required=False)
    rho = _group(values, "rho", (1, 2, 3), required=False)
    d = _group(values, "d", range(5), required=False)
    eta = _group(values, "eta", (1, 2))
    gamma = _group(values, "gamma", (1, 2))
    if mu is None and (rho is None or d is None):
        raise ConfigParseError("supply mu1..3 or both rho1..3 and d0..4")

    if scaled:
        a = _group(values, "a", (1, 2, 3))
        if mu is None:
            mu = tuple(rho[i] + d[i + 1] for i in range(3))
        sp = ScaledParamSet(r=r, a=a, mu=mu, eta=eta, gamma=gamma, rho=rho, d=d)
        validate_scaled(sp)
        return sp
    alpha = _group(values, "alpha", (1, 2, 3))
    K = _number(values, "K") if "K" in values else None
    return validate(ParamSet(r=r, alpha=alpha, mu=mu, eta=eta, gamma=gamma, K=K, rho=rho, d=d))


def validate_scaled(sp: ScaledParamSet) -> ScaledParamSet:
    """Validate a scale-free set by materializing it at K = 1.

    Strain relabelling is not applied to scaled sets; supply them ordered.
    """
    p = materialize_scaled(sp, 1.0)
    if p.swapped:
        raise SigmaOrderViolation("scaled sets must be supplied with s1 < s2")
    return sp


def load_params(path, scaled: Optional[bool] = None):
    """Read a parameter file (see :func:`parse_param_text`)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read parameter file {path}: {exc}") from None
    return params_from_mapping(parse_param_text(text), scaled=scaled)


def dump_params(p) -> str:
    """Inverse of :func:`load_params` for either parameter flavour."""
    lines = []
    if isinstance(p, ScaledParamSet):
        lines.append("mode = scaled")
        lines.append(f"r = {float(p.r)!r}")
        lines += [f"a{i + 1} = {float(v)!r}" for i, v in enumerate(p.a)]
    else:
        lines.append(f"r = {float(p.r)!r}")
        if p.K is not None:
            lines.append(f"K = {float(p.K)!r}")
        lines += [f"alpha{i + 1} = {float(v)!r}" for i, v in enumerate(p.alpha)]
    lines += [f"mu{i + 1} = {float(v)!r}" for i, v in enumerate(p.mu)]
    lines += [f"eta{i + 1} = {float(v)!r}" for i, v in enumerate(p.eta)]
    lines += [f"gamma{i + 1} = {float(v)!r}" for i, v in enumerate(p.gamma)]
    if p.rho is not None and p.d is not None:
        lines += [f"rho{i + 1} = {float(v)!r}" for i, v in enumerate(p.rho)]
        lines += [f"d{i} = {float(v)!r}" for i, v in enumerate(p.d)]
    return "\n".join(lines) + "\n"
