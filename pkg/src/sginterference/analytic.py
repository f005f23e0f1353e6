"""Closed-form interference statistics for Poisson cellular networks.

All distances handled here are dimensionless: physical ranges are divided by
a reference distance (by default the mean cell radius ``1/sqrt(pi*chi)``)
before they reach :func:`q_factor`.  Densities and fading rates stay in
physical units; the products that appear in the formulas
(``lambda * (s/beta)**(2/alpha)`` and ``lambda/sqrt(beta)``) are invariant
under that rescaling, so no other conversion is needed.

Every function is pure and safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

#: erfc^-1(0.5), the constant tying the median to the Levy scale.
ERFCINV_HALF = float(special.erfcinv(0.5))

#: Default gradient threshold, as a fraction of :func:`gradient_scale`.
DEFAULT_RELATIVE_GRADIENT = 0.01

#: Upper bound (normalized) searched by the observation-zone solver.
DEFAULT_MAX_RADIUS = 100.0


class DegenerateZoneError(ValueError):
    """Raised when an observation zone has zero Q-factor."""


@dataclass(frozen=True)
class PathlossParams:
    exponent: float = 4.0
    constant: float = 1e-4

    def __post_init__(self):
        if not self.exponent > 2:
            raise ValueError(f"pathloss exponent must exceed 2, got {self.exponent}")
        if not self.constant > 0:
            raise ValueError(f"pathloss constant must be positive, got {self.constant}")


@dataclass(frozen=True)
class TierSpec:
    """One tier of transmitters.

    ``beta`` is the rate of the exponential composite gain ``G = H*P*Lambda``
    and is always derived from ``tx_power`` and ``pathloss_constant``.
    """

    active_density: float
    tx_power: float
    pathloss_constant: float = 1e-4

    def __post_init__(self):
        if self.active_density < 0:
            raise ValueError("active density must be non-negative")
        if not self.tx_power > 0:
            raise ValueError("transmit power must be positive")
        if not self.pathloss_constant > 0:
            raise ValueError("pathloss constant must be positive")

    @property
    def beta(self) -> float:
        return 1.0 / (self.tx_power * self.pathloss_constant)


@dataclass(frozen=True)
class NetworkModel:
    tiers: tuple[TierSpec, ...]
    pathloss: PathlossParams
    deployed_density: tuple[float, ...]
    sir_threshold: float = 10 ** (-0.6)

    def __post_init__(self):
        if not self.tiers:
            raise ValueError("a network needs at least one tier")
        if len(self.deployed_density) != len(self.tiers):
            raise ValueError("one deployed density per tier is required")
        for tier, chi in zip(self.tiers, self.deployed_density):
            if tier.active_density > chi:
                raise ValueError(
                    f"active density {tier.active_density} exceeds deployed density {chi}")
            if tier.pathloss_constant != self.pathloss.constant:
                raise ValueError("tier pathloss constant disagrees with the network")

    @property
    def aggregate_density(self) -> float:
        return aggregate_density(self.tiers)


@dataclass(frozen=True)
class ZoneSpec:
    """Annulus ``serving_range <= v <= zone_radius`` in normalized distance."""

    serving_range: float
    zone_radius: float

    def __post_init__(self):
        if not 0 <= self.serving_range <= self.zone_radius:
            raise ValueError(
                f"need 0 <= r <= R, got r={self.serving_range}, R={self.zone_radius}")


def mean_cell_radius(density: float) -> float:
    """Radius of a disc holding one cell on average, ``1/sqrt(pi*density)``."""
    if not density > 0:
        raise ValueError("density must be positive")
    return 1.0 / math.sqrt(math.pi * density)


def aggregate_density(tiers: Sequence[TierSpec]) -> float:
    """Sum of ``lambda_k / sqrt(beta_k)`` over tiers."""
    if not tiers:
        raise ValueError("at least one tier is required")
    return math.fsum(t.active_density / math.sqrt(t.beta) for t in tiers)


def q_factor(zone: ZoneSpec, alpha: float = 4.0) -> float:
    """Integral of ``1/(1 + u**(alpha/2))`` over ``[r, R]``."""
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2 for a finite interference field, got {alpha}")
    r, R = zone.serving_range, zone.zone_radius
    if r == R:
        return 0.0
    if alpha == 4:
        return max(math.atan(R) - math.atan(r), 0.0)
    half = alpha / 2.0
    value, _ = integrate.quad(lambda u: 1.0 / (1.0 + u ** half), r, R,
                              epsabs=0.0, epsrel=1e-13, limit=200)
    return value


def mgf(s: float, zone: ZoneSpec, tiers: Sequence[TierSpec], alpha: float = 4.0) -> float:
    """Laplace transform ``E[exp(-s I)]`` of the truncated interference."""
    if s < 0:
        raise ValueError("mgf is defined for s >= 0")
    if not tiers:
        raise ValueError("at least one tier is required")
    if s == 0:
        return 1.0
    q = q_factor(zone, alpha)
    exponent = math.fsum(
        math.pi * t.active_density * (s / t.beta) ** (2.0 / alpha) * q for t in tiers)
    return math.exp(-exponent)


def _levy_scale(zone: ZoneSpec, agg: float) -> float:
    # pi*Q*agg, the quantity every alpha=4 closed form is built from
    return math.pi * q_factor(zone, 4.0) * agg


def interference_pdf(x, zone: ZoneSpec, agg: float):
    """Density of the aggregate interference for ``alpha = 4``.

    Accepts a scalar or an array of powers; all must be strictly positive.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("interference pdf is defined for positive power only")
    a = _levy_scale(zone, agg)
    out = (a / (2.0 * math.sqrt(math.pi))) * x ** -1.5 * np.exp(-a * a / (4.0 * x))
    return float(out) if out.ndim == 0 else out


def interference_cdf(zeta, zone: ZoneSpec, agg: float):
    """``P(I <= zeta) = erfc(pi*Q*agg / (2*sqrt(zeta)))``; zero at ``zeta = 0``."""
    z = np.asarray(zeta, dtype=float)
    if np.any(z < 0):
        raise ValueError("zeta must be non-negative")
    a = _levy_scale(zone, agg)
    with np.errstate(divide="ignore"):
        arg = np.where(z > 0, a / (2.0 * np.sqrt(np.where(z > 0, z, 1.0))), np.inf)
    out = special.erfc(arg)
    return float(out) if out.ndim == 0 else out


def median_interference(zone: ZoneSpec, agg: float) -> float:
    """Median aggregate interference, ``[pi*Q*agg / (2*erfcinv(0.5))]**2``."""
    if agg < 0:
        raise ValueError("aggregate density must be non-negative")
    return (_levy_scale(zone, agg) / (2.0 * ERFCINV_HALF)) ** 2


def mean_interference_truncated(zone: ZoneSpec, agg: float) -> float:
    """First moment of the interference density restricted to powers below R.

    The upper power limit is the zone radius itself, exactly as the closed
    form is stated; the result equals ``integral_0^R w*pdf(w) dw``.
    """
    R = zone.zone_radius
    if not R > 0:
        raise ValueError("zone radius must be positive")
    if not math.isfinite(R):
        return math.inf
    a = _levy_scale(zone, agg)
    first = math.sqrt(math.pi * R) * q_factor(zone, 4.0) * agg * math.exp(-a * a / (4.0 * R))
    second = 0.5 * a * a * math.erfc(a / (2.0 * math.sqrt(R)))
    return first - second


def gradient_scale(agg: float) -> float:
    """``C**2`` with ``C = pi*agg/(2*erfcinv(0.5))``; the median is ``C**2 * Q**2``."""
    return (math.pi * agg / (2.0 * ERFCINV_HALF)) ** 2


def median_gradient(zone: ZoneSpec, agg: float) -> float:
    """Analytic ``dE/dR`` of :func:`median_interference` (alpha = 4)."""
    R = zone.zone_radius
    return 2.0 * gradient_scale(agg) * q_factor(zone, 4.0) / (1.0 + R * R)


def _shape_gradient(r, R):
    # d(Q^2)/dR for alpha = 4; unimodal in R with its peak where 2*R*Q = 1
    return 2.0 * (np.arctan(R) - np.arctan(r)) / (1.0 + R * R)


def _peak_radius(r, r_max, tol):
    lo = np.asarray(r, dtype=float).copy()
    hi = np.full_like(lo, r_max)
    # 2*R*Q(r,R) - 1 is increasing in R
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        up = 2.0 * mid * (np.arctan(mid) - np.arctan(r)) < 1.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return 0.5 * (lo + hi)


def solve_observation_radius(r, agg: float = 1.0, phi: float | None = None, *,
                             relative: float = DEFAULT_RELATIVE_GRADIENT,
                             r_max: float = DEFAULT_MAX_RADIUS, tol: float = 1e-6):
    """Smallest zone radius at which the median stops growing faster than ``phi``.

    ``dE/dR`` is zero at ``R = r``, rises to a single peak, then decays like
    ``R**-2``.  The returned radius is the first point on the decaying side
    where ``dE/dR <= phi``, located by bisection on the analytic gradient.

    Parameters
    ----------
    r : float or array_like
        Normalized serving range(s).
    agg : float
        Aggregate density ``sum(lambda_k / sqrt(beta_k))``.  Only used when
        ``phi`` is given in absolute units.
    phi : float, optional
        Absolute gradient threshold (power per unit normalized radius).  When
        omitted, ``relative * gradient_scale(agg)`` is used, which makes the
        radius independent of density and power.
    relative : float
        Threshold as a fraction of :func:`gradient_scale`.
    r_max, tol
        Search bound and bisection tolerance, both normalized.

    Returns
    -------
    float or ndarray
        ``r`` itself if the whole curve is already below ``phi``; ``r_max`` if
        the gradient is still above ``phi`` there.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("serving range must be non-negative")
    if phi is None:
        if not relative > 0:
            raise ValueError("relative threshold must be positive")
        target = float(relative)
    else:
        if not phi > 0:
            raise ValueError("gradient threshold must be positive")
        scale = gradient_scale(agg)
        if scale == 0:
            return float(r_arr) if r_arr.ndim == 0 else r_arr.copy()
        target = phi / scale

    r_flat = np.atleast_1d(r_arr)
    peak = _peak_radius(r_flat, r_max, tol * 1e-3)
    g_peak = _shape_gradient(r_flat, peak)
    g_end = _shape_gradient(r_flat, np.full_like(r_flat, r_max))

    lo, hi = peak.copy(), np.full_like(r_flat, r_max)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        above = _shape_gradient(r_flat, mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out = hi
    out = np.where(g_peak <= target, r_flat, out)
    out = np.where((g_peak > target) & (g_end > target), r_max, out)
    out = np.where(r_flat >= r_max, r_flat, out)
    return float(out[0]) if r_arr.ndim == 0 else out.reshape(r_arr.shape)


def infer_density(measured_power: float, zone_at_d: ZoneSpec, beta: float | None = None) -> float:
    """Invert the median formula for the active density seen at the measurement point.

    With ``beta`` the single-tier density ``lambda'`` is returned; without it
    only the aggregate ``sum(lambda_k / sqrt(beta_k))`` is identifiable.
    """
    if measured_power < 0:
        raise ValueError("measured power must be non-negative")
    q = q_factor(zone_at_d, 4.0)
    if q == 0:
        raise DegenerateZoneError("measurement zone has zero Q-factor")
    if measured_power == 0:
        return 0.0
    scale = beta if beta is not None else 1.0
    return 2.0 * math.sqrt(scale * measured_power) * ERFCINV_HALF / (math.pi * q)


def estimate_interference_at(measured_at_d, target: ZoneSpec | None, measurement: ZoneSpec, *,
                             target_q=None):
    """Scale a measurement taken at ``d`` to a receiver at range ``r``.

    ``E(I_r) = E(I_d) * [Q(r, R_r) / Q(d, R_d)]**2``; the same expression
    holds for one tier and for open-access multi-tier networks.  ``target_q``
    may be passed instead of ``target`` to evaluate many receivers at once.
    """
    if np.any(np.asarray(measured_at_d) < 0):
        raise ValueError("measured power must be non-negative")
    q_d = q_factor(measurement, 4.0)
    if q_d == 0:
        raise DegenerateZoneError("measurement zone has zero Q-factor")
    q_r = q_factor(target, 4.0) if target_q is None else np.asarray(target_q, dtype=float)
    return measured_at_d * (q_r / q_d) ** 2


def q_factor_array(r, R):
    """Vectorized alpha=4 Q-factor."""
    return np.arctan(np.asarray(R, dtype=float)) - np.arctan(np.asarray(r, dtype=float))
