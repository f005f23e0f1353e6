"""Monte Carlo realization of Poisson cellular networks.

Positions are in metres and powers in watts.  Received power from a station
``i`` at range ``v`` is ``h * P_i * Lambda * v**-alpha`` with ``h ~ Exp(1)``
(Rayleigh fading).  These routines are the brute-force reference against
which the closed forms in :mod:`sginterference.analytic` are checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import analytic, rng as rngmod
from .analytic import PathlossParams, TierSpec, ZoneSpec

#: Default height of the measurement antenna below the BS (metres).
DEFAULT_MEASUREMENT_RANGE = 10.0

_CHUNK_ELEMENTS = 2_000_000


class SingularityError(ValueError):
    """Receiver sits on top of a transmitter."""


@dataclass(frozen=True)
class TierDeployment:
    deployed_density: float  # stations per m^2
    tx_power: float  # W
    activity: float = 1.0  # fraction of deployed stations active per RRB

    def __post_init__(self):
        if self.deployed_density < 0:
            raise ValueError("deployed density must be non-negative")
        if not self.tx_power > 0:
            raise ValueError("transmit power must be positive")
        if not 0 <= self.activity <= 1:
            raise ValueError("activity must lie in [0, 1]")

    @property
    def active_density(self) -> float:
        return self.deployed_density * self.activity


@dataclass(frozen=True)
class Deployment:
    """Everything needed to draw and evaluate a network realization."""

    tiers: tuple[TierDeployment, ...]
    area_radius: float
    pathloss: PathlossParams = field(default_factory=PathlossParams)
    guard_radius: float = 0.0

    def __post_init__(self):
        if not self.tiers:
            raise ValueError("at least one tier is required")
        if not self.area_radius > 0:
            raise ValueError("simulation area must have positive radius")
        if not 0 <= self.guard_radius < self.area_radius:
            raise ValueError("guard ring must be narrower than the area radius")

    @property
    def total_density(self) -> float:
        return math.fsum(t.deployed_density for t in self.tiers)

    @property
    def reference_distance(self) -> float:
        return analytic.mean_cell_radius(self.total_density)

    @property
    def inner_radius(self) -> float:
        return self.area_radius - self.guard_radius

    def tier_specs(self) -> list[TierSpec]:
        return [TierSpec(t.active_density, t.tx_power, self.pathloss.constant)
                for t in self.tiers]

    def aggregate_density(self) -> float:
        return analytic.aggregate_density(self.tier_specs())

    def with_activity(self, activity: float) -> "Deployment":
        tiers = tuple(TierDeployment(t.deployed_density, t.tx_power, activity) for t in self.tiers)
        return Deployment(tiers, self.area_radius, self.pathloss, self.guard_radius)


@dataclass(frozen=True, eq=False)
class Drop:
    positions: np.ndarray  # (n, 2) metres
    tier: np.ndarray  # (n,) tier index
    area_radius: float
    guard_radius: float
    seed: int
    index: int = 0

    def __len__(self):
        return len(self.tier)

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self.tier))

    def powers(self, deployment: Deployment) -> np.ndarray:
        p = np.array([t.tx_power for t in deployment.tiers])
        return p[self.tier]

    def activity_probability(self, deployment: Deployment) -> np.ndarray:
        a = np.array([t.activity for t in deployment.tiers])
        return a[self.tier]

    def central_station(self) -> int:
        if len(self) == 0:
            raise ValueError("empty drop has no central station")
        return int(np.argmin(np.hypot(self.positions[:, 0], self.positions[:, 1])))


@dataclass(frozen=True)
class SpectrumMeasurement:
    station: int
    rrb: int
    n_samples: int
    mean_power: float
    median_power: float
    measurement_range: float

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("a measurement needs at least one sample")
        if self.mean_power < 0 or self.median_power < 0:
            raise ValueError("measured power must be non-negative")


@dataclass(frozen=True)
class UserEquipment:
    position: tuple[float, float]
    serving: int
    serving_range: float


def uniform_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """``n`` points uniform on the disc of ``radius`` centred at the origin."""
    rad = radius * np.sqrt(rng.random(n))
    ang = rng.random(n) * (2.0 * math.pi)
    return np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))


def generate_drop(deployment: Deployment, seed: int, index: int = 0) -> Drop:
    """Draw an independent Poisson network per tier on the simulation disc."""
    g = rngmod.stream(seed, rngmod.DROP, index)
    area = math.pi * deployment.area_radius ** 2
    pos, tier = [], []
    for k, t in enumerate(deployment.tiers):
        n = int(g.poisson(t.deployed_density * area))
        pos.append(uniform_disc(g, n, deployment.area_radius))
        tier.append(np.full(n, k, dtype=np.int64))
    return Drop(np.concatenate(pos) if pos else np.empty((0, 2)),
                np.concatenate(tier) if tier else np.empty(0, dtype=np.int64),
                deployment.area_radius, deployment.guard_radius, seed, index)


def draw_activity(drop: Drop, deployment: Deployment, n_rrb: int,
                  g: np.random.Generator) -> np.ndarray:
    """Boolean mask ``(station, rrb)``; independent Bernoulli(activity) entries."""
    p = drop.activity_probability(deployment)
    return g.random((len(drop), n_rrb)) < p[:, None]


def received_gain(point, drop: Drop, deployment: Deployment) -> tuple[np.ndarray, np.ndarray]:
    """Mean received power ``P*Lambda*v**-alpha`` from every station, and the ranges."""
    point = np.asarray(point, dtype=float)
    v = np.hypot(drop.positions[:, 0] - point[0], drop.positions[:, 1] - point[1])
    alpha = deployment.pathloss.exponent
    with np.errstate(divide="ignore"):
        gain = drop.powers(deployment) * deployment.pathloss.constant * v ** -alpha
    return gain, v


def aggregate_interference(point, drop: Drop, deployment: Deployment, active=None,
                           fading=None, exclude=None, max_range: float | None = None) -> float:
    """Sum of faded received powers over active stations other than ``exclude``.

    ``active`` and ``fading`` are per-station vectors (default: all active,
    unit gain).  Stations farther than ``max_range`` are ignored.
    """
    gain, v = received_gain(point, drop, deployment)
    use = np.ones(len(drop), dtype=bool) if active is None else np.asarray(active, dtype=bool).copy()
    if exclude is not None:
        use[exclude] = False
    if max_range is not None:
        use &= v <= max_range
    if np.any(use & (v == 0)):
        raise SingularityError("receiver coincides with an interfering station")
    h = np.ones(len(drop)) if fading is None else np.asarray(fading, dtype=float)
    return math.fsum((h * gain)[use])


def associate(point, drop: Drop, deployment: Deployment) -> UserEquipment:
    """Attach a receiver to the station with the strongest mean received power."""
    if len(drop) == 0:
        raise ValueError("no station to associate with")
    gain, v = received_gain(point, drop, deployment)
    s = int(np.argmax(gain))
    return UserEquipment((float(point[0]), float(point[1])), s, float(v[s]))


def interference_samples(point, drop: Drop, deployment: Deployment, n_samples: int,
                         g: np.random.Generator, exclude=None,
                         max_range: float | None = None) -> np.ndarray:
    """``n_samples`` interference draws at a fixed point with positions frozen.

    Each sample redraws both the activity of every station and its fading.
    """
    gain, v = received_gain(point, drop, deployment)
    keep = np.ones(len(drop), dtype=bool)
    if exclude is not None:
        keep[exclude] = False
    if max_range is not None:
        keep &= v <= max_range
    if np.any(keep & (v == 0)):
        raise SingularityError("receiver coincides with an interfering station")
    gain = gain[keep]
    p = drop.activity_probability(deployment)[keep]
    out = np.empty(n_samples)
    n = len(gain)
    if n == 0:
        out[:] = 0.0
        return out
    rows = max(1, _CHUNK_ELEMENTS // n)
    for start in range(0, n_samples, rows):
        m = min(rows, n_samples - start)
        act = g.random((m, n)) < p
        h = g.exponential(size=(m, n))
        out[start:start + m] = (np.where(act, h, 0.0)) @ gain
    return out


def _measurement_point(station_pos, d, g):
    ang = g.random() * 2.0 * math.pi
    return np.array([station_pos[0] + d * math.cos(ang), station_pos[1] + d * math.sin(ang)])


def measure_at_base(station: int, drop: Drop, deployment: Deployment, n_samples: int, *,
                    rrb: int = 0, d: float = DEFAULT_MEASUREMENT_RANGE,
                    seed: int | None = None) -> SpectrumMeasurement:
    """Spectrum-analyser reading at range ``d`` from ``station``.

    The station's own transmission is excluded.  Positions stay frozen for
    the quasi-static period; activity and fading are redrawn per sample from
    a stream keyed by ``(drop, station, rrb)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    g = rngmod.stream(drop.seed if seed is None else seed, rngmod.MEASURE,
                      drop.index, station, rrb)
    point = _measurement_point(drop.positions[station], d, g)
    samples = interference_samples(point, drop, deployment, n_samples, g, exclude=station)
    return SpectrumMeasurement(station, rrb, n_samples, math.fsum(samples) / n_samples,
                               float(np.median(samples)), d)


def measure_resampled(deployment: Deployment, n_samples: int, seed: int, key: Sequence[int],
                      *, d: float = DEFAULT_MEASUREMENT_RANGE) -> SpectrumMeasurement:
    """Spectrum reading where every sample sees a fresh Poisson network.

    A station sits at the origin and measures at range ``d``; each sample
    redraws the other stations over ``deployment.area_radius`` together with
    their activity and fading.  This is the ensemble the closed forms
    describe.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    g = rngmod.stream(seed, rngmod.MEASURE, *key)
    point = np.array([d, 0.0])
    total = np.zeros(n_samples)
    area = math.pi * deployment.area_radius ** 2
    alpha, lam = deployment.pathloss.exponent, deployment.pathloss.constant
    for t in deployment.tiers:
        counts = g.poisson(t.deployed_density * area, n_samples)
        n = int(counts.sum())
        pos = uniform_disc(g, n, deployment.area_radius)
        v = np.hypot(pos[:, 0] - point[0], pos[:, 1] - point[1])
        if np.any(v == 0):
            raise SingularityError("receiver coincides with an interfering station")
        contrib = np.where(g.random(n) < t.activity, g.exponential(size=n), 0.0)
        contrib *= t.tx_power * lam * v ** -alpha
        total += np.bincount(np.repeat(np.arange(n_samples), counts), weights=contrib,
                             minlength=n_samples)
    return SpectrumMeasurement(0, 0, n_samples, math.fsum(total) / n_samples,
                               float(np.median(total)), d)


def interference_at_range(deployment: Deployment, r: float, n_drops: int, seed: int, *,
                          radii: Sequence[float] | None = None, serving_tier: int = 0,
                          stream_index: int = 0, max_chunk: int = 4096) -> np.ndarray:
    """Interference at a receiver whose serving station lies at range ``r``.

    The receiver is at the origin and a station of ``serving_tier`` is placed
    at range ``r`` (the Palm view of a Poisson drop seen from a point at that
    range from a station).  The other stations of every tier form independent
    Poisson processes on the disc of ``deployment.area_radius``.  Drops in
    which another station would be received more strongly than the serving
    one are rejected, so the serving station is the strongest-power cell.
    The serving station is always active; the others follow their tier
    activity.

    Returns an array ``(n_drops, len(radii))`` holding the interference from
    stations within each truncation radius (metres), or ``(n_drops,)`` when
    ``radii`` is omitted (no truncation beyond the area).
    """
    if r < 0:
        raise ValueError("serving range must be non-negative")
    squeeze = radii is None
    radii_arr = np.array([deployment.area_radius] if radii is None else radii, dtype=float)
    order = np.argsort(radii_arr)
    radii_sorted = radii_arr[order]
    n_bins = len(radii_arr) + 1
    alpha, lam = deployment.pathloss.exponent, deployment.pathloss.constant
    A = deployment.area_radius
    p_serv = deployment.tiers[serving_tier].tx_power
    # A station of power P is received more strongly than the serving one iff
    # it lies inside r * (P / P_serv)^(1/alpha).  Disjoint regions of a PPP are
    # independent, so the void test is drawn first and only accepted drops
    # get their annulus populated.  This is the same law as brute rejection.
    excl = [min(A, r * (t.tx_power / p_serv) ** (1.0 / alpha)) for t in deployment.tiers]
    expected = sum(t.deployed_density * math.pi * A * A for t in deployment.tiers)
    m_cap = int(min(max_chunk, max(16, _CHUNK_ELEMENTS // max(1.0, expected))))

    accepted: list[np.ndarray] = []
    have = 0
    chunk = 0
    while have < n_drops:
        g = rngmod.stream(seed, rngmod.GEOMETRY, stream_index, chunk)
        m = min(m_cap, max(16, int(1.5 * (n_drops - have)) + 16))
        ok = np.ones(m, dtype=bool)
        for t, e in zip(deployment.tiers, excl):
            ok &= g.poisson(t.deployed_density * math.pi * e * e, m) == 0
        k = int(ok.sum())
        hist = np.zeros((k, n_bins))
        for t, e in zip(deployment.tiers, excl):
            counts = g.poisson(t.deployed_density * math.pi * (A * A - e * e), k)
            n = int(counts.sum())
            v = np.sqrt(e * e + g.random(n) * (A * A - e * e))
            idx = np.repeat(np.arange(k), counts)
            active = g.random(n) < t.activity
            contrib = np.where(active, g.exponential(size=n), 0.0) * (t.tx_power * lam * v ** -alpha)
            b = np.searchsorted(radii_sorted, v, side="left")
            hist += np.bincount(idx * n_bins + b, weights=contrib,
                                minlength=k * n_bins).reshape(k, n_bins)
        block = np.empty((k, len(radii_arr)))
        block[:, order] = np.cumsum(hist[:, :-1], axis=1)
        accepted.append(block)
        have += k
        chunk += 1
        if chunk > 100_000:
            raise RuntimeError("rejection sampler is not accepting drops; r too large?")
    out = np.concatenate(accepted)[:n_drops]
    return out[:, 0] if squeeze else out


def zone_deployment(deployment: Deployment, zone_radius_norm: float, r_norm: float = 0.0) -> Deployment:
    """Copy of ``deployment`` whose area just covers a zone around a point."""
    rho = deployment.reference_distance
    return Deployment(deployment.tiers, (zone_radius_norm + r_norm) * rho, deployment.pathloss, 0.0)


def _validation_unit(args):
    (chi, n_samples, drop_idx, seed, activity, tx_power, pathloss, d, geometry, relative) = args
    rho = analytic.mean_cell_radius(chi)
    d_n = d / rho
    R_d = analytic.solve_observation_radius(d_n, relative=relative)
    area_radius = R_d * rho + d
    dep = Deployment((TierDeployment(chi, tx_power, activity),), area_radius, pathloss)
    key = (int(round(chi * 1e12)), n_samples, drop_idx)
    if geometry == "resampled":
        meas = measure_resampled(dep, n_samples, seed, key, d=d)
    elif geometry == "frozen":
        drop = generate_drop(dep, seed, index=drop_idx)
        if len(drop) < 2:
            return (0.0, 0.0)
        meas = measure_at_base(drop.central_station(), drop, dep, n_samples, d=d)
    else:
        raise ValueError(f"unknown measurement geometry {geometry!r}")
    beta = dep.tier_specs()[0].beta
    zone = ZoneSpec(d_n, R_d)
    return (analytic.infer_density(meas.median_power, zone, beta),
            analytic.infer_density(meas.mean_power, zone, beta))


def run_density_validation(densities: Sequence[float], sample_counts: Sequence[int],
                           n_drops: int, seed: int, *, activity: float = 0.5,
                           tx_power: float = 40.0, pathloss: PathlossParams | None = None,
                           d: float = DEFAULT_MEASUREMENT_RANGE, geometry: str = "resampled",
                           relative: float = analytic.DEFAULT_RELATIVE_GRADIENT,
                           workers: int = 1) -> list[dict]:
    """Infer the active density from single-point measurements.

    For each deployed density (stations per m^2) and sample count, ``n_drops``
    independent measurements are converted to a density estimate through the
    median inversion.  ``accuracy`` is ``1 - |lambda' - lambda| / lambda``
    averaged over drops; the ``*_mean_stat`` columns repeat the inversion with
    the arithmetic mean of the samples instead of their median.
    """
    from .parallel import parallel_map

    pathloss = pathloss or PathlossParams()
    units = [(chi, n, k, seed, activity, tx_power, pathloss, d, geometry, relative)
             for chi in densities for n in sample_counts for k in range(n_drops)]
    results = parallel_map(_validation_unit, units, workers)
    rows = []
    pos = 0
    for chi in densities:
        lam = chi * activity
        for n in sample_counts:
            block = results[pos:pos + n_drops]
            pos += n_drops
            med = np.array([b[0] for b in block])
            mean = np.array([b[1] for b in block])
            rows.append({
                "chi": chi,
                "lambda_true": lam,
                "lambda_inferred_mean": math.fsum(med) / n_drops,
                "accuracy": 1.0 - math.fsum(np.abs(med - lam) / lam) / n_drops,
                "lambda_inferred_mean_stat": math.fsum(mean) / n_drops,
                "accuracy_mean_stat": 1.0 - math.fsum(np.abs(mean - lam) / lam) / n_drops,
                "n_samples": n,
                "n_drops": n_drops,
            })
    return rows
